//! Exhaustive reference for small problems.
//!
//! Scores every parent set of every variable with its own single-target
//! scorer, fills `d` by the subset recursion and reads maximal parent sets
//! straight off the definition. Shares nothing with the engine besides
//! [`Dataset`]; no pruning.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::varset::VarSet;

/// Largest `n` the oracle accepts; tables hold `n * 2^(n-1)` entries.
pub const ORACLE_MAX_VARS: usize = 20;

/// Dense `s` and `d` tables per canonical variable.
///
/// Subsets of the other `n - 1` variables are encoded as masks over
/// [`OracleTables::others`], which lists them in ascending canonical order.
#[derive(Clone, Debug)]
pub struct OracleTables {
    pub s: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    others: Vec<Vec<usize>>,
}

impl OracleTables {
    pub fn build(dataset: &Dataset) -> Result<Self> {
        let n = dataset.n();
        if n > ORACLE_MAX_VARS {
            return Err(Error::OracleTooLarge {
                n,
                cap: ORACLE_MAX_VARS,
            });
        }
        let mut s = Vec::with_capacity(n);
        let mut d = Vec::with_capacity(n);
        let mut others = Vec::with_capacity(n);
        for target in 0..n {
            let rest: Vec<usize> = (0..n).filter(|&j| j != target).collect();
            let size = 1usize << rest.len();
            let mut s_row = vec![0.0; size];
            let mut d_row = vec![0.0; size];
            let mut parents = Vec::with_capacity(rest.len());
            for mask in 0..size {
                parents.clear();
                parents.extend((0..rest.len()).filter(|b| mask >> b & 1 == 1).map(|b| rest[b]));
                s_row[mask] = mdl_score(dataset, target, &parents);
                // Every one-smaller subset has a smaller mask, so it is filled.
                let mut best = s_row[mask];
                for b in 0..rest.len() {
                    if mask >> b & 1 == 1 {
                        best = best.min(d_row[mask ^ 1 << b]);
                    }
                }
                d_row[mask] = best;
            }
            s.push(s_row);
            d.push(d_row);
            others.push(rest);
        }
        Ok(OracleTables { s, d, others })
    }

    /// Canonical variables other than `target`, ascending.
    pub fn others(&self, target: usize) -> &[usize] {
        &self.others[target]
    }

    pub fn mask_of(&self, target: usize, parents: VarSet) -> usize {
        assert!(!parents.contains(target));
        self.others[target]
            .iter()
            .enumerate()
            .filter(|(_, &j)| parents.contains(j))
            .fold(0, |acc, (b, _)| acc | 1 << b)
    }

    pub fn set_of(&self, target: usize, mask: usize) -> VarSet {
        self.others[target]
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .map(|(_, &j)| j)
            .collect()
    }

    pub fn d_of(&self, target: usize, parents: VarSet) -> f64 {
        self.d[target][self.mask_of(target, parents)]
    }

    pub fn s_of(&self, target: usize, parents: VarSet) -> f64 {
        self.s[target][self.mask_of(target, parents)]
    }

    /// Maximal parent sets of `target`: strictly better than every strict
    /// subset, ties going to the subset.
    pub fn maximal_sets(&self, target: usize) -> Vec<(VarSet, f64)> {
        let s = &self.s[target];
        let d = &self.d[target];
        let width = self.others[target].len();
        let mut out = Vec::new();
        for mask in 0..s.len() {
            let best_subset = (0..width)
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| d[mask ^ 1 << b])
                .fold(f64::INFINITY, f64::min);
            if s[mask] < best_subset {
                out.push((self.set_of(target, mask), s[mask]));
            }
        }
        out.sort_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then(a.0.len().cmp(&b.0.len()))
                .then(a.0.cmp(&b.0))
        });
        out
    }
}

/// Maximal parent sets of every canonical variable.
pub fn brute_force(dataset: &Dataset) -> Result<Vec<Vec<(VarSet, f64)>>> {
    let tables = OracleTables::build(dataset)?;
    Ok((0..dataset.n()).map(|i| tables.maximal_sets(i)).collect())
}

/// MDL score of one target and one parent set, computed from a sorted list
/// of `(parent configuration, target value)` pairs.
pub fn mdl_score(dataset: &Dataset, target: usize, parents: &[usize]) -> f64 {
    let m = dataset.m();
    let column = dataset.canon_column(target);
    let arity = dataset.canon_arity(target);

    let mut keys: Vec<(u128, u32)> = (0..m)
        .map(|row| {
            let mut key = 0u128;
            for &p in parents {
                let r = dataset.canon_arity(p) as u128;
                key = key
                    .checked_mul(r)
                    .and_then(|k| k.checked_add(dataset.canon_column(p)[row] as u128))
                    .expect("oracle configuration key overflow");
            }
            (key, column[row])
        })
        .collect();
    keys.sort_unstable();

    let mut log_likelihood = 0.0;
    let mut i = 0;
    while i < m {
        let config = keys[i].0;
        let mut j = i;
        while j < m && keys[j].0 == config {
            j += 1;
        }
        let n_u = (j - i) as f64;
        let mut a = i;
        while a < j {
            let mut b = a;
            while b < j && keys[b].1 == keys[a].1 {
                b += 1;
            }
            let n_ux = (b - a) as f64;
            log_likelihood += n_ux * (n_ux / n_u).log2();
            a = b;
        }
        i = j;
    }

    let q: f64 = parents.iter().map(|&p| dataset.canon_arity(p) as f64).product();
    let nc = 0.5 * (m as f64).log2() * q * (arity as f64 - 1.0);
    -log_likelihood + nc
}
