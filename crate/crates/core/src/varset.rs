//! Fixed-capacity variable sets over the canonical variable ordering.

use std::fmt;

/// Largest number of variables a [`VarSet`] can hold.
pub const CAPACITY: usize = 128;

/// A set of canonical variable indices stored as a single 128-bit mask.
///
/// Bit `k` is set iff canonical variable `k` is a member. The derived `Ord`
/// compares the raw masks, which is the tie-break used by the list ordering.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarSet(u128);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    #[inline]
    pub const fn from_bits(bits: u128) -> Self {
        VarSet(bits)
    }

    #[inline]
    pub const fn bits(self) -> u128 {
        self.0
    }

    /// The set `{0, 1, ..., n - 1}`.
    #[inline]
    pub fn full(n: usize) -> Self {
        assert!(n <= CAPACITY, "variable count {n} exceeds capacity {CAPACITY}");
        if n == CAPACITY {
            VarSet(u128::MAX)
        } else {
            VarSet((1u128 << n) - 1)
        }
    }

    #[inline]
    pub fn singleton(k: usize) -> Self {
        debug_assert!(k < CAPACITY);
        VarSet(1u128 << k)
    }

    #[inline]
    pub fn contains(self, k: usize) -> bool {
        k < CAPACITY && self.0 >> k & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, k: usize) {
        debug_assert!(k < CAPACITY);
        self.0 |= 1u128 << k;
    }

    #[inline]
    pub fn remove(&mut self, k: usize) {
        debug_assert!(k < CAPACITY);
        self.0 &= !(1u128 << k);
    }

    #[inline]
    #[must_use]
    pub fn with(self, k: usize) -> Self {
        VarSet(self.0 | 1u128 << k)
    }

    #[inline]
    #[must_use]
    pub fn without(self, k: usize) -> Self {
        VarSet(self.0 & !(1u128 << k))
    }

    #[inline]
    #[must_use]
    pub fn union(self, other: VarSet) -> Self {
        VarSet(self.0 | other.0)
    }

    #[inline]
    #[must_use]
    pub fn intersection(self, other: VarSet) -> Self {
        VarSet(self.0 & other.0)
    }

    #[inline]
    #[must_use]
    pub fn difference(self, other: VarSet) -> Self {
        VarSet(self.0 & !other.0)
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_subset(self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn is_strict_subset(self, other: VarSet) -> bool {
        self.0 != other.0 && self.is_subset(other)
    }

    /// Largest member, or `None` for the empty set.
    #[inline]
    pub fn max_element(self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some(127 - self.0.leading_zeros() as usize)
        }
    }

    /// First canonical index that may be appended under the max-element rule.
    #[inline]
    pub fn successor_start(self) -> usize {
        self.max_element().map_or(0, |j| j + 1)
    }

    pub fn iter(self) -> Iter {
        Iter(self.0)
    }
}

impl FromIterator<usize> for VarSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut set = VarSet::EMPTY;
        for k in iter {
            set.insert(k);
        }
        set
    }
}

impl IntoIterator for VarSet {
    type Item = usize;
    type IntoIter = Iter;

    fn into_iter(self) -> Iter {
        self.iter()
    }
}

/// Ascending iterator over the members of a [`VarSet`].
#[derive(Clone)]
pub struct Iter(u128);

impl Iterator for Iter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let k = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(k)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let len = self.0.count_ones() as usize;
        (len, Some(len))
    }
}

impl ExactSizeIterator for Iter {}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_ops() {
        let a: VarSet = [1, 2].into_iter().collect();
        let b: VarSet = [1, 2, 5].into_iter().collect();
        assert!(a.is_strict_subset(b));
        assert!(!b.is_subset(a));
        assert!(!a.is_strict_subset(a));
        assert_eq!(b.difference(a), VarSet::singleton(5));
        assert_eq!(b.len(), 3);
        assert_eq!(b.max_element(), Some(5));
        assert_eq!(VarSet::EMPTY.max_element(), None);
        assert_eq!(VarSet::EMPTY.successor_start(), 0);
        assert_eq!(b.successor_start(), 6);
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![1, 2, 5]);
    }

    #[test]
    fn full_at_capacity() {
        assert_eq!(VarSet::full(CAPACITY).len(), CAPACITY);
        assert_eq!(VarSet::full(0), VarSet::EMPTY);
        assert_eq!(VarSet::full(4).bits(), 0b1111);
        assert_eq!(VarSet::full(CAPACITY).max_element(), Some(127));
    }

    proptest! {
        #[test]
        fn iter_round_trips(bits in any::<u128>()) {
            let set = VarSet::from_bits(bits);
            let rebuilt: VarSet = set.iter().collect();
            prop_assert_eq!(rebuilt, set);
            prop_assert_eq!(set.iter().len(), set.len());
        }

        #[test]
        fn subset_matches_membership(a in any::<u128>(), b in any::<u128>()) {
            let (a, b) = (VarSet::from_bits(a), VarSet::from_bits(b));
            let by_members = a.iter().all(|k| b.contains(k));
            prop_assert_eq!(a.is_subset(b), by_members);
            prop_assert!(a.intersection(b).is_subset(a.union(b)));
        }
    }
}
