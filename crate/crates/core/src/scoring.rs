//! MDL scoring of folded lattice nodes.
//!
//! `s(X, U) = m * H(X | U) + NC(X, U)` with
//! `NC(X, U) = 0.5 * log2(m) * q * (r - 1)`, `q` the product of parent
//! arities. All logarithms are base 2, so both terms are in bits.
//!
//! A node's parent set is grouped once and the grouping is reused for every
//! target of the node.

use std::collections::HashMap;
use std::marker::PhantomData;
use std::sync::Arc;

use crate::dataset::Dataset;
use crate::lattice::LatticeNode;
use crate::scalar::Real;
use crate::varset::VarSet;

/// Rows of the data partitioned by their observed configuration of a
/// variable set. Only configurations that actually occur get a group.
#[derive(Clone, Debug, Default)]
pub struct GroupIndex {
    pub group_of_row: Vec<u32>,
    pub group_count: usize,
    pub group_sizes: Vec<u32>,
}

/// Reusable buffers for building a [`GroupIndex`].
#[derive(Default)]
struct GroupScratch {
    remap: Vec<u32>,
    sparse: HashMap<u64, u32>,
}

fn dense_limit(m: usize) -> usize {
    (32 * m).max(1 << 12)
}

impl GroupIndex {
    /// Groups `m` rows by the joint value of the given `(column, arity)` pairs.
    pub fn from_columns<'a, I>(m: usize, columns: I) -> Self
    where
        I: IntoIterator<Item = (&'a [u32], usize)>,
    {
        let mut index = GroupIndex::default();
        index.rebuild(m, columns, &mut GroupScratch::default());
        index
    }

    fn rebuild<'a, I>(&mut self, m: usize, columns: I, scratch: &mut GroupScratch)
    where
        I: IntoIterator<Item = (&'a [u32], usize)>,
    {
        self.group_of_row.clear();
        self.group_of_row.resize(m, 0);
        self.group_count = 1;
        for (column, arity) in columns {
            debug_assert_eq!(column.len(), m);
            if arity > 1 {
                self.refine(column, arity, scratch);
            }
        }
        self.group_sizes.clear();
        self.group_sizes.resize(self.group_count, 0);
        for &g in &self.group_of_row {
            self.group_sizes[g as usize] += 1;
        }
    }

    /// Splits every group by the value of one more column, renumbering groups
    /// in order of first appearance.
    fn refine(&mut self, column: &[u32], arity: usize, scratch: &mut GroupScratch) {
        let m = self.group_of_row.len();
        let cells = self.group_count * arity;
        let mut next = 0u32;
        if cells <= dense_limit(m) {
            let remap = &mut scratch.remap;
            remap.clear();
            remap.resize(cells, u32::MAX);
            for (g, &x) in self.group_of_row.iter_mut().zip(column) {
                let slot = &mut remap[*g as usize * arity + x as usize];
                if *slot == u32::MAX {
                    *slot = next;
                    next += 1;
                }
                *g = *slot;
            }
        } else {
            let map = &mut scratch.sparse;
            map.clear();
            for (g, &x) in self.group_of_row.iter_mut().zip(column) {
                let key = *g as u64 * arity as u64 + x as u64;
                let id = *map.entry(key).or_insert_with(|| {
                    next += 1;
                    next - 1
                });
                *g = id;
            }
        }
        self.group_count = next as usize;
    }
}

/// Groups the rows of `dataset` by the canonical variables in `parents`.
pub fn group_by(dataset: &Dataset, parents: VarSet) -> GroupIndex {
    GroupIndex::from_columns(
        dataset.m(),
        parents
            .iter()
            .map(|k| (dataset.canon_column(k), dataset.canon_arity(k))),
    )
}

/// `0.5 * log2(m) * q * (r - 1)` where `q` is the product of `parent_arities`.
///
/// If `q` overflows `u64` the result is `+inf`.
pub fn network_complexity<S: Real>(
    m: usize,
    arity: usize,
    parent_arities: impl IntoIterator<Item = usize>,
) -> S {
    if arity <= 1 {
        return S::zero();
    }
    let mut q = 1u64;
    for r in parent_arities {
        match q.checked_mul(r as u64) {
            Some(v) => q = v,
            None => return S::infinity(),
        }
    }
    half_log2::<S>(m) * S::from_u64(q).unwrap_or_else(S::infinity) * S::of_usize(arity - 1)
}

#[inline]
fn half_log2<S: Real>(m: usize) -> S {
    S::of_f64(0.5 * (m as f64).log2())
}

/// Score components of one target at one node, all in bits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetScore<S> {
    /// Canonical index of the target.
    pub var: usize,
    pub score: S,
    pub nc: S,
    pub cond_entropy: S,
}

#[derive(Clone, Debug)]
pub struct ScoreResult<S> {
    pub targets: Vec<TargetScore<S>>,
}

impl<S> Default for ScoreResult<S> {
    fn default() -> Self {
        ScoreResult {
            targets: Vec::new(),
        }
    }
}

impl<S: Real> ScoreResult<S> {
    pub fn get(&self, var: usize) -> Option<&TargetScore<S>> {
        self.targets.iter().find(|t| t.var == var)
    }
}

/// `c * log2(c)` for every count up to `m`, shared between scorers.
///
/// Values are stored as fixed-point integers scaled by `2^64`. Every `f64`
/// table value is at least 2 (or exactly 0), so the scaling is lossless and
/// sums over them are exact and independent of summation order. The only
/// rounding is the final conversion back to floating point.
#[derive(Clone, Debug)]
pub struct ScoreTables<S> {
    nlogn: Arc<[i128]>,
    m: usize,
    _scalar: PhantomData<S>,
}

const FIXED_SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64

impl<S: Real> ScoreTables<S> {
    pub fn new(m: usize) -> Self {
        let nlogn: Vec<i128> = (0..=m)
            .map(|c| {
                if c < 2 {
                    0
                } else {
                    let c = c as f64;
                    (c * c.log2() * FIXED_SCALE) as i128
                }
            })
            .collect();
        ScoreTables {
            nlogn: nlogn.into(),
            m,
            _scalar: PhantomData,
        }
    }
}

#[inline]
fn from_fixed<S: Real>(v: i128) -> S {
    S::of_f64(v as f64 / FIXED_SCALE)
}

/// Per-worker scoring state: lookup tables plus reusable buffers.
pub struct Scorer<'d, S> {
    dataset: &'d Dataset,
    tables: ScoreTables<S>,
    half_log2_m: S,
    groups: GroupIndex,
    scratch: GroupScratch,
    counts: Vec<u32>,
    pairs: Vec<u64>,
}

impl<'d, S: Real> Scorer<'d, S> {
    pub fn new(dataset: &'d Dataset) -> Self {
        Self::with_tables(dataset, ScoreTables::new(dataset.m()))
    }

    pub fn with_tables(dataset: &'d Dataset, tables: ScoreTables<S>) -> Self {
        assert_eq!(tables.m, dataset.m());
        Scorer {
            dataset,
            tables,
            half_log2_m: half_log2(dataset.m()),
            groups: GroupIndex::default(),
            scratch: GroupScratch::default(),
            counts: Vec::new(),
            pairs: Vec::new(),
        }
    }

    pub fn dataset(&self) -> &'d Dataset {
        self.dataset
    }

    pub fn score_targets(&mut self, node: &LatticeNode) -> ScoreResult<S> {
        let mut out = ScoreResult::default();
        self.score_into(node, &mut out.targets);
        out
    }

    /// Scores every target of `node`, replacing the contents of `out`.
    pub fn score_into(&mut self, node: &LatticeNode, out: &mut Vec<TargetScore<S>>) {
        debug_assert!(node.targets.intersection(node.parents).is_empty());
        let ds = self.dataset;
        let m = ds.m();
        self.groups.rebuild(
            m,
            node.parents
                .iter()
                .map(|k| (ds.canon_column(k), ds.canon_arity(k))),
            &mut self.scratch,
        );

        let mut q = Some(1u64);
        for k in node.parents {
            q = q.and_then(|q| q.checked_mul(ds.canon_arity(k) as u64));
        }
        let q: S = q.and_then(S::from_u64).unwrap_or_else(S::infinity);
        let m_s = S::of_usize(m);

        out.clear();
        for var in node.targets {
            let arity = ds.canon_arity(var);
            let weighted: S = from_fixed(self.weighted_entropy(ds.canon_column(var), arity).max(0));
            let nc = if arity <= 1 {
                S::zero()
            } else {
                self.half_log2_m * q * S::of_usize(arity - 1)
            };
            out.push(TargetScore {
                var,
                score: weighted + nc,
                nc,
                cond_entropy: weighted / m_s,
            });
        }
    }

    /// `m * H(X | U)` for the current grouping, in table fixed point.
    fn weighted_entropy(&mut self, column: &[u32], arity: usize) -> i128 {
        if arity <= 1 {
            return 0;
        }
        let nlogn = &self.tables.nlogn;
        let groups = &self.groups;
        let m = groups.group_of_row.len();
        let cells = groups.group_count * arity;
        let mut total = 0i128;
        if cells <= dense_limit(m) {
            let counts = &mut self.counts;
            counts.clear();
            counts.resize(cells, 0);
            for (&g, &x) in groups.group_of_row.iter().zip(column) {
                counts[g as usize * arity + x as usize] += 1;
            }
            for (g, row) in counts.chunks_exact(arity).enumerate() {
                let size = groups.group_sizes[g] as usize;
                let mut term = nlogn[size];
                for &c in row {
                    term -= nlogn[c as usize];
                }
                total += term;
            }
        } else {
            let pairs = &mut self.pairs;
            pairs.clear();
            pairs.extend(
                groups
                    .group_of_row
                    .iter()
                    .zip(column)
                    .map(|(&g, &x)| (g as u64) << 32 | x as u64),
            );
            pairs.sort_unstable();
            let mut i = 0;
            while i < pairs.len() {
                let g = pairs[i] >> 32;
                let mut term = nlogn[groups.group_sizes[g as usize] as usize];
                while i < pairs.len() && pairs[i] >> 32 == g {
                    let cell = pairs[i];
                    let start = i;
                    while i < pairs.len() && pairs[i] == cell {
                        i += 1;
                    }
                    term -= nlogn[i - start];
                }
                total += term;
            }
        }
        total
    }
}

/// Scores every target of `node` with a fresh scorer.
pub fn score_targets<S: Real>(dataset: &Dataset, node: &LatticeNode) -> ScoreResult<S> {
    Scorer::new(dataset).score_targets(node)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varset::VarSet;

    fn ds(cols: Vec<Vec<u32>>) -> Dataset {
        let names = (0..cols.len()).map(|i| format!("v{i}")).collect();
        Dataset::from_columns(names, cols, None).unwrap()
    }

    #[test]
    fn group_by_empty_is_one_group() {
        let d = ds(vec![vec![0, 1, 0, 1, 1, 0, 0]]);
        let g = group_by(&d, VarSet::EMPTY);
        assert_eq!(g.group_count, 1);
        assert_eq!(g.group_sizes, vec![7]);
    }

    #[test]
    fn group_by_single_column() {
        let d = ds(vec![vec![0, 1, 0, 1]]);
        let g = group_by(&d, VarSet::singleton(0));
        assert_eq!(g.group_count, 2);
        assert_eq!(g.group_sizes, vec![2, 2]);
        assert_eq!(g.group_of_row, vec![0, 1, 0, 1]);
    }

    #[test]
    fn sparse_refinement_matches_dense() {
        // Arity 5000 forces the hashed path on the second refinement.
        let m = 200;
        let a: Vec<u32> = (0..m as u32).map(|i| i % 7).collect();
        let b: Vec<u32> = (0..m as u32).map(|i| (i * 37) % 5000).collect();
        let sparse = GroupIndex::from_columns(m, [(a.as_slice(), 7), (b.as_slice(), 5000)]);
        let dense = GroupIndex::from_columns(m, [(a.as_slice(), 7), (b.as_slice(), 200 * 37)]);
        assert_eq!(sparse.group_of_row.len(), m);
        assert_eq!(sparse.group_count, dense.group_count);
        assert_eq!(sparse.group_sizes.iter().sum::<u32>() as usize, m);
    }

    #[test]
    fn nc_values() {
        assert_eq!(network_complexity::<f64>(4, 2, []), 1.0);
        let nc: f64 = network_complexity(10_000, 2, [3, 4]);
        // Evaluated independently: 0.5 * log2(10000) * 12 * 1.
        assert!((nc - 79.726_274_277_296_7).abs() < 1e-9);
        assert_eq!(network_complexity::<f64>(100, 1, [4, 4]), 0.0);
        assert_eq!(network_complexity::<f64>(100, 2, [u32::MAX as usize; 4]), f64::INFINITY);
    }

    #[test]
    fn fair_coin() {
        let d = ds(vec![vec![0, 1, 0, 1]]);
        let r = score_targets::<f64>(&d, &LatticeNode::root(1));
        let t = r.get(0).unwrap();
        assert_eq!(t.cond_entropy, 1.0);
        assert_eq!(t.nc, 1.0);
        assert_eq!(t.score, 5.0);
    }

    #[test]
    fn determined_target_scores_nc_only() {
        let d = ds(vec![vec![0, 1, 2, 1, 0, 2], vec![0, 1, 2, 1, 0, 2]]);
        let node = LatticeNode {
            targets: VarSet::singleton(1),
            parents: VarSet::singleton(0),
        };
        let t = score_targets::<f64>(&d, &node).targets[0];
        assert_eq!(t.cond_entropy, 0.0);
        assert_eq!(t.score, t.nc);
    }

    #[test]
    fn f32_agrees_with_f64() {
        let d = ds(vec![vec![0, 1, 0, 1, 1, 1, 0, 2], vec![1, 1, 0, 0, 1, 0, 0, 1]]);
        let node = LatticeNode {
            targets: VarSet::singleton(0),
            parents: VarSet::singleton(1),
        };
        let a = score_targets::<f64>(&d, &node).targets[0];
        let b = score_targets::<f32>(&d, &node).targets[0];
        assert!((a.score - b.score as f64).abs() < 1e-4);
    }
}
