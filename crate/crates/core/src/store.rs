//! Per-variable lists of maximal parent sets.
//!
//! A list is kept in a total order: score ascending, then parent-set size,
//! then raw bitmask. Because the first entry that is a subset of `U` has the
//! smallest score among all such entries, `d(X, U)` is a prefix scan.

use std::cmp::Ordering;

use crate::scalar::Real;
use crate::varset::VarSet;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpsEntry<S> {
    pub parents: VarSet,
    pub score: S,
    /// Found while exploring depth-first; not yet checked against the
    /// entries other tasks produced.
    pub flagged: bool,
}

impl<S: Real> MpsEntry<S> {
    pub fn new(parents: VarSet, score: S) -> Self {
        MpsEntry {
            parents,
            score,
            flagged: false,
        }
    }

    pub fn flagged(parents: VarSet, score: S) -> Self {
        MpsEntry {
            parents,
            score,
            flagged: true,
        }
    }
}

fn canonical_cmp<S: Real>(a: &MpsEntry<S>, b: &MpsEntry<S>) -> Ordering {
    a.score
        .cmp_total(&b.score)
        .then(a.parents.len().cmp(&b.parents.len()))
        .then(a.parents.cmp(&b.parents))
}

/// A batch of new entries: `(canonical target, entry)`.
pub type Delta<S> = (usize, MpsEntry<S>);

#[derive(Clone, Debug, PartialEq)]
pub struct MpsList<S> {
    entries: Vec<MpsEntry<S>>,
}

impl<S> Default for MpsList<S> {
    fn default() -> Self {
        MpsList {
            entries: Vec::new(),
        }
    }
}

impl<S: Real> MpsList<S> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a list from arbitrary entries, deduplicating parent sets.
    pub fn from_entries(entries: impl IntoIterator<Item = MpsEntry<S>>) -> Self {
        let mut list = MpsList {
            entries: entries.into_iter().collect(),
        };
        list.normalize();
        list
    }

    pub fn entries(&self) -> &[MpsEntry<S>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn flagged_count(&self) -> usize {
        self.entries.iter().filter(|e| e.flagged).count()
    }

    /// `d(X, U)`: the smallest score among entries whose parents are a subset
    /// of `parents`, or `+inf` if there is none.
    pub fn query_d(&self, parents: VarSet) -> S {
        self.entries
            .iter()
            .find(|e| e.parents.is_subset(parents))
            .map_or_else(S::infinity, |e| e.score)
    }

    /// Smallest score among entries whose parents are a strict subset of
    /// `parents`, or `+inf`.
    pub fn strict_subset_min(&self, parents: VarSet) -> S {
        self.entries
            .iter()
            .find(|e| e.parents.is_strict_subset(parents))
            .map_or_else(S::infinity, |e| e.score)
    }

    /// Whether `parents` with `score` beats every strict subset in the list.
    /// Equal scores favour the smaller set.
    pub fn maximality_test(&self, parents: VarSet, score: S) -> bool {
        score < self.strict_subset_min(parents)
    }

    /// Adds one entry in order. An existing entry with the same parents is
    /// kept unless it is flagged and the new one is not.
    pub fn insert(&mut self, entry: MpsEntry<S>) {
        if let Some(pos) = self.entries.iter().position(|e| e.parents == entry.parents) {
            if self.entries[pos].flagged && !entry.flagged {
                self.entries[pos].flagged = false;
            }
            return;
        }
        let at = self
            .entries
            .partition_point(|e| canonical_cmp(e, &entry) == Ordering::Less);
        self.entries.insert(at, entry);
    }

    /// Appends a batch, drops duplicate parent sets and restores the order.
    pub fn merge_batch(&mut self, batch: impl IntoIterator<Item = MpsEntry<S>>) {
        let before = self.entries.len();
        self.entries.extend(batch);
        if self.entries.len() != before {
            self.normalize();
        }
    }

    fn normalize(&mut self) {
        // Unflagged copies sort first so dedup keeps them.
        self.entries
            .sort_by(|a, b| a.parents.cmp(&b.parents).then(a.flagged.cmp(&b.flagged)));
        self.entries.dedup_by_key(|e| e.parents);
        self.entries.sort_by(canonical_cmp);
    }

    /// Removes flagged entries dominated by a strict subset with a score no
    /// larger than theirs, and clears the flag on the rest. Returns the
    /// number of entries removed.
    ///
    /// Any dominating entry precedes the entry it dominates in list order,
    /// so one ascending pass against the entries kept so far suffices.
    pub fn verify_flagged(&mut self) -> usize {
        let before = self.entries.len();
        let mut kept: Vec<MpsEntry<S>> = Vec::with_capacity(before);
        for entry in self.entries.drain(..) {
            if entry.flagged {
                let dominated = kept
                    .iter()
                    .any(|k| k.parents.is_strict_subset(entry.parents) && k.score <= entry.score);
                if dominated {
                    continue;
                }
            }
            kept.push(MpsEntry {
                flagged: false,
                ..entry
            });
        }
        self.entries = kept;
        before - self.entries.len()
    }
}

/// Folds worker-local deltas into the global lists.
pub fn merge<S: Real>(global: &mut [MpsList<S>], deltas: impl IntoIterator<Item = Delta<S>>) {
    let mut per_var: Vec<Vec<MpsEntry<S>>> = vec![Vec::new(); global.len()];
    for (var, entry) in deltas {
        per_var[var].push(entry);
    }
    for (list, batch) in global.iter_mut().zip(per_var) {
        list.merge_batch(batch);
    }
}

/// Verifies every list after a depth-first phase. Returns entries removed.
pub fn verify_flagged<S: Real>(lists: &mut [MpsList<S>]) -> usize {
    lists.iter_mut().map(MpsList::verify_flagged).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(xs: &[usize]) -> VarSet {
        xs.iter().copied().collect()
    }

    fn sample() -> MpsList<f64> {
        MpsList::from_entries([
            MpsEntry::new(VarSet::EMPTY, 5.0),
            MpsEntry::new(set(&[2]), 3.0),
        ])
    }

    #[test]
    fn query_d_scans_for_first_subset() {
        let l = sample();
        assert_eq!(l.entries()[0].parents, set(&[2]));
        assert_eq!(l.query_d(set(&[1, 2])), 3.0);
        assert_eq!(l.query_d(set(&[0])), 5.0);
        let only_empty = MpsList::from_entries([MpsEntry::new(VarSet::EMPTY, 5.0)]);
        assert_eq!(only_empty.query_d(set(&[0])), 5.0);
        assert_eq!(MpsList::<f64>::new().query_d(set(&[0])), f64::INFINITY);
    }

    #[test]
    fn maximality_ties_lose() {
        let l = sample();
        assert!(l.maximality_test(set(&[1, 2]), 2.5));
        assert!(!l.maximality_test(set(&[1, 2]), 3.0));
        assert!(MpsList::<f64>::new().maximality_test(VarSet::EMPTY, 100.0));
    }

    #[test]
    fn merge_deduplicates() {
        let mut global = vec![sample()];
        merge(
            &mut global,
            [
                (0, MpsEntry::new(set(&[3]), 4.2)),
                (0, MpsEntry::new(set(&[3]), 4.2)),
            ],
        );
        assert_eq!(global[0].len(), 3);
        let scores: Vec<f64> = global[0].entries().iter().map(|e| e.score).collect();
        assert_eq!(scores, vec![3.0, 4.2, 5.0]);
    }

    #[test]
    fn merge_prefers_unflagged_duplicate() {
        let mut l = sample();
        l.merge_batch([MpsEntry::flagged(set(&[4]), 1.0), MpsEntry::new(set(&[4]), 1.0)]);
        assert_eq!(l.flagged_count(), 0);
        assert_eq!(l.len(), 3);
    }

    #[test]
    fn verify_removes_dominated_flagged() {
        let mut l = MpsList::from_entries([
            MpsEntry::new(VarSet::EMPTY, 9.0),
            MpsEntry::new(set(&[1]), 3.5),
            MpsEntry::flagged(set(&[1, 2]), 4.0),
            MpsEntry::flagged(set(&[0, 3]), 2.0),
        ]);
        assert_eq!(l.verify_flagged(), 1);
        assert_eq!(l.flagged_count(), 0);
        let sets: Vec<VarSet> = l.entries().iter().map(|e| e.parents).collect();
        assert_eq!(sets, vec![set(&[0, 3]), set(&[1]), VarSet::EMPTY]);
    }

    #[test]
    fn verify_tie_removes_superset() {
        let mut l = MpsList::from_entries([
            MpsEntry::new(set(&[1]), 3.0),
            MpsEntry::flagged(set(&[1, 2]), 3.0),
        ]);
        assert_eq!(l.verify_flagged(), 1);
    }

    fn arb_list() -> impl Strategy<Value = Vec<(u128, u32)>> {
        prop::collection::vec((0u128..64, 0u32..20), 0..20)
    }

    proptest! {
        #[test]
        fn merged_lists_stay_sorted_and_unique(a in arb_list(), b in arb_list()) {
            let mut l = MpsList::from_entries(
                a.iter().map(|&(p, s)| MpsEntry::new(VarSet::from_bits(p), s as f64)),
            );
            l.merge_batch(b.iter().map(|&(p, s)| MpsEntry::new(VarSet::from_bits(p), s as f64)));
            let e = l.entries();
            for w in e.windows(2) {
                prop_assert_eq!(canonical_cmp(&w[0], &w[1]), Ordering::Less);
                prop_assert!(w[0].parents != w[1].parents);
            }
            prop_assert!(e.len() <= a.len() + b.len());
        }

        #[test]
        fn query_d_is_min_over_subsets(a in arb_list(), u in 0u128..64) {
            let l = MpsList::from_entries(
                a.iter().map(|&(p, s)| MpsEntry::new(VarSet::from_bits(p), s as f64)),
            );
            let u = VarSet::from_bits(u);
            let brute = l.entries().iter()
                .filter(|e| e.parents.is_subset(u))
                .map(|e| e.score)
                .fold(f64::INFINITY, f64::min);
            prop_assert_eq!(l.query_d(u), brute);
        }
    }
}
