//! Categorical observation tables.
//!
//! Columns are kept in their original order. Everything downstream works on
//! canonical indices (arity descending, then full conditional entropy
//! ascending, then original index), reached through the `canon_*` accessors.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Read};

use log::warn;

use crate::error::{Error, Result};
use crate::scoring::GroupIndex;
use crate::varset::CAPACITY;

#[derive(Clone, Debug)]
pub struct Dataset {
    names: Vec<String>,
    /// `columns[i][row]` is the state code of original variable `i`.
    columns: Vec<Vec<u32>>,
    arities: Vec<usize>,
    m: usize,
    /// Canonical position -> original index.
    order: Vec<usize>,
    /// Original index -> canonical position.
    rank: Vec<usize>,
    full_cond_entropy: Vec<f64>,
}

/// Options for [`Dataset::load`].
#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// Declared arities by variable name; may only raise the observed count.
    pub arities: Option<HashMap<String, usize>>,
}

impl Dataset {
    /// Builds a dataset from already-encoded columns.
    ///
    /// `arities` defaults to `max code + 1` per column when `None`.
    pub fn from_columns(
        names: Vec<String>,
        columns: Vec<Vec<u32>>,
        arities: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = columns.len();
        if n == 0 || names.len() != n {
            return Err(Error::EmptyTable);
        }
        if n > CAPACITY {
            return Err(Error::TooManyVariables { n, cap: CAPACITY });
        }
        let m = columns[0].len();
        if m == 0 {
            return Err(Error::EmptyTable);
        }
        for (i, col) in columns.iter().enumerate() {
            if col.len() != m {
                return Err(Error::ColumnLength {
                    column: i,
                    found: col.len(),
                    expected: m,
                });
            }
        }
        if m < 2 {
            return Err(Error::TooFewRows(m));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateVariable(name.clone()));
            }
        }

        let observed: Vec<usize> = columns
            .iter()
            .map(|c| c.iter().max().map_or(1, |&x| x as usize + 1))
            .collect();
        let arities = match arities {
            None => observed,
            Some(declared) => {
                assert_eq!(declared.len(), n, "one arity per column");
                for i in 0..n {
                    if declared[i] < observed[i] {
                        return Err(Error::DeclaredArityTooSmall {
                            name: names[i].clone(),
                            declared: declared[i],
                            observed: observed[i],
                        });
                    }
                }
                declared
            }
        };
        for (name, &r) in names.iter().zip(&arities) {
            if r == 1 {
                warn!("variable {name:?} is constant; it cannot gain parents");
            }
        }

        let full_cond_entropy: Vec<f64> = (0..n)
            .map(|i| full_conditional_entropy_of(&columns, &arities, i))
            .collect();
        let order = canonical_order(&arities, &full_cond_entropy);
        let mut rank = vec![0; n];
        for (pos, &orig) in order.iter().enumerate() {
            rank[orig] = pos;
        }

        Ok(Dataset {
            names,
            columns,
            arities,
            m,
            order,
            rank,
            full_cond_entropy,
        })
    }

    /// Reads a header-bearing CSV of categorical tokens.
    ///
    /// State codes are assigned per column in order of first appearance.
    pub fn load<R: Read>(source: R, options: &LoadOptions) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(source);
        let names: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        let n = names.len();
        if n == 0 || names.iter().all(String::is_empty) {
            return Err(Error::EmptyTable);
        }

        let mut codebooks: Vec<HashMap<String, u32>> = vec![HashMap::new(); n];
        let mut columns: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut record = csv::StringRecord::new();
        let mut row = 1u64;
        while reader.read_record(&mut record)? {
            row += 1;
            if record.len() != n {
                return Err(Error::RaggedRow {
                    row,
                    found: record.len(),
                    expected: n,
                });
            }
            for (i, token) in record.iter().enumerate() {
                if token.is_empty() {
                    return Err(Error::MissingValue {
                        row,
                        column: names[i].clone(),
                    });
                }
                let book = &mut codebooks[i];
                let next = book.len() as u32;
                let code = *book.entry(token.to_owned()).or_insert(next);
                columns[i].push(code);
            }
        }
        if columns[0].is_empty() {
            return Err(Error::EmptyTable);
        }

        let arities = match &options.arities {
            None => None,
            Some(declared) => {
                for name in declared.keys() {
                    if !names.contains(name) {
                        return Err(Error::UnknownVariable(name.clone()));
                    }
                }
                Some(
                    names
                        .iter()
                        .zip(&codebooks)
                        .map(|(name, book)| declared.get(name).copied().unwrap_or(book.len().max(1)))
                        .collect(),
                )
            }
        };
        Self::from_columns(names, columns, arities)
    }

    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn column(&self, original: usize) -> &[u32] {
        &self.columns[original]
    }

    /// Canonical position -> original index.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn canonical_position(&self, original: usize) -> usize {
        self.rank[original]
    }

    pub fn original_index(&self, canonical: usize) -> usize {
        self.order[canonical]
    }

    #[inline]
    pub fn canon_column(&self, k: usize) -> &[u32] {
        &self.columns[self.order[k]]
    }

    #[inline]
    pub fn canon_arity(&self, k: usize) -> usize {
        self.arities[self.order[k]]
    }

    #[inline]
    pub fn canon_full_cond_entropy(&self, k: usize) -> f64 {
        self.full_cond_entropy[self.order[k]]
    }

    pub fn canon_name(&self, k: usize) -> &str {
        &self.names[self.order[k]]
    }

    /// `H(X_i | all other variables)` in bits, for original index `i`.
    pub fn full_conditional_entropy(&self, i: usize) -> f64 {
        self.full_cond_entropy[i]
    }

    /// Plain entropy `H(X_i)` in bits, for original index `i`.
    pub fn marginal_entropy(&self, i: usize) -> f64 {
        let mut counts = vec![0usize; self.arities[i]];
        for &x in &self.columns[i] {
            counts[x as usize] += 1;
        }
        let m = self.m as f64;
        -counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / m;
                p * p.log2()
            })
            .sum::<f64>()
    }
}

/// Parses an arity sidecar: one `name,arity` pair per line.
pub fn parse_arity_declarations<R: Read>(source: R) -> Result<HashMap<String, usize>> {
    let mut out = HashMap::new();
    for (idx, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let malformed = || Error::MalformedArity {
            line: idx + 1,
            text: text.to_owned(),
        };
        let (name, arity) = text.rsplit_once(',').ok_or_else(malformed)?;
        let arity: usize = arity.trim().parse().map_err(|_| malformed())?;
        if arity == 0 {
            return Err(malformed());
        }
        out.insert(name.trim().to_owned(), arity);
    }
    Ok(out)
}

/// Canonical variable permutation: position -> original index.
///
/// Sorted by arity descending, then by full conditional entropy ascending,
/// then by original index.
pub fn canonical_order(arities: &[usize], full_cond_entropies: &[f64]) -> Vec<usize> {
    assert_eq!(arities.len(), full_cond_entropies.len());
    let mut order: Vec<usize> = (0..arities.len()).collect();
    order.sort_by(|&a, &b| {
        arities[b]
            .cmp(&arities[a])
            .then(full_cond_entropies[a].total_cmp(&full_cond_entropies[b]))
            .then(a.cmp(&b))
    });
    order
}

fn full_conditional_entropy_of(columns: &[Vec<u32>], arities: &[usize], i: usize) -> f64 {
    let m = columns[i].len();
    let others = (0..columns.len())
        .filter(|&j| j != i)
        .map(|j| (columns[j].as_slice(), arities[j]));
    let groups = GroupIndex::from_columns(m, others);

    let mut joint: HashMap<(u32, u32), u32> = HashMap::new();
    for (&g, &x) in groups.group_of_row.iter().zip(&columns[i]) {
        *joint.entry((g, x)).or_insert(0) += 1;
    }
    let nlogn = |c: u32| {
        let c = c as f64;
        c * c.log2()
    };
    let mut sizes = groups.group_sizes.clone();
    sizes.sort_unstable();
    let marginal: f64 = sizes.into_iter().map(nlogn).sum();
    let mut cells: Vec<u32> = joint.into_values().collect();
    cells.sort_unstable();
    let conditional: f64 = cells.into_iter().map(nlogn).sum();
    ((marginal - conditional) / m as f64).max(0.0)
}
