//! The folded subset lattice.
//!
//! A node pairs a candidate parent set with every target variable that still
//! needs that parent set scored. Successors follow the max-element rule: a
//! node only extends its parent set with variables ranked after its current
//! maximum, so every subset has exactly one generating predecessor and no
//! coordination is needed inside a layer.

use std::mem::size_of;

use crate::varset::VarSet;

/// One folded task: score `parents` for every variable in `targets`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeNode {
    pub targets: VarSet,
    pub parents: VarSet,
}

/// Estimated resident size of one materialized frontier node: the two
/// bitmasks plus per-entry bookkeeping in the frontier buffers.
pub const BYTES_PER_NODE: u64 = (2 * size_of::<VarSet>() + NODE_OVERHEAD) as u64;

const NODE_OVERHEAD: usize = 16;

impl LatticeNode {
    /// Layer 0 node: every variable is a target of the empty parent set.
    pub fn root(n: usize) -> Self {
        assert!(n >= 1, "lattice needs at least one variable");
        LatticeNode {
            targets: VarSet::full(n),
            parents: VarSet::EMPTY,
        }
    }

    #[inline]
    pub fn layer(&self) -> usize {
        self.parents.len()
    }

    /// Number of children the max-element rule can produce, ignoring pruning.
    #[inline]
    pub fn successor_bound(&self, n: usize) -> usize {
        n.saturating_sub(self.parents.successor_start())
    }

    /// Children of this node given the targets that survived pruning here.
    ///
    /// Children whose target set would be empty are not emitted.
    pub fn successors(&self, survivors: VarSet, n: usize) -> Successors {
        debug_assert!(survivors.is_subset(self.targets));
        Successors {
            parents: self.parents,
            survivors,
            next: self.parents.successor_start(),
            n,
        }
    }
}

/// Iterator returned by [`LatticeNode::successors`].
pub struct Successors {
    parents: VarSet,
    survivors: VarSet,
    next: usize,
    n: usize,
}

impl Iterator for Successors {
    type Item = LatticeNode;

    fn next(&mut self) -> Option<LatticeNode> {
        if self.survivors.is_empty() {
            return None;
        }
        while self.next < self.n {
            let k = self.next;
            self.next += 1;
            let targets = self.survivors.without(k);
            if !targets.is_empty() {
                return Some(LatticeNode {
                    targets,
                    parents: self.parents.with(k),
                });
            }
        }
        None
    }
}

/// `C(n, l)`: the unpruned size of folded layer `l`.
pub fn layer_node_count(n: usize, l: usize) -> u128 {
    if l > n {
        return 0;
    }
    let l = l.min(n - l);
    // One Pascal row at a time; avoids overflow of the multiplicative form.
    let mut row = vec![0u128; l + 1];
    row[0] = 1;
    for i in 1..=n {
        for j in (1..=l.min(i)).rev() {
            row[j] = row[j].saturating_add(row[j - 1]);
        }
    }
    row[l]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn set(xs: &[usize]) -> VarSet {
        xs.iter().copied().collect()
    }

    #[test]
    fn root_covers_all_variables() {
        let r = LatticeNode::root(4);
        assert_eq!(r.targets, set(&[0, 1, 2, 3]));
        assert_eq!(r.parents, VarSet::EMPTY);
        assert_eq!(r.layer(), 0);
        assert_eq!(LatticeNode::root(1).targets, set(&[0]));
    }

    #[test]
    fn successors_follow_max_element() {
        let node = LatticeNode {
            targets: set(&[0, 2, 3]),
            parents: set(&[1]),
        };
        let kids: Vec<_> = node.successors(node.targets, 4).collect();
        assert_eq!(kids.len(), 2);
        assert_eq!(kids[0].parents, set(&[1, 2]));
        assert_eq!(kids[0].targets, set(&[0, 3]));
        assert_eq!(kids[1].parents, set(&[1, 3]));
        assert_eq!(kids[1].targets, set(&[0, 2]));
    }

    #[test]
    fn max_element_node_has_no_successors() {
        let node = LatticeNode {
            targets: set(&[0, 1, 2]),
            parents: set(&[3]),
        };
        assert_eq!(node.successors(node.targets, 4).count(), 0);
        assert_eq!(node.successor_bound(4), 0);
    }

    #[test]
    fn empty_target_successor_is_dropped() {
        let node = LatticeNode {
            targets: set(&[2, 3]),
            parents: set(&[0]),
        };
        let kids: Vec<_> = node.successors(set(&[2]), 4).collect();
        // k = 1 and k = 3 keep target 2; k = 2 would leave nothing.
        assert_eq!(
            kids.iter().map(|c| c.parents).collect::<Vec<_>>(),
            vec![set(&[0, 1]), set(&[0, 3])]
        );
    }

    #[test]
    fn binomials() {
        assert_eq!(layer_node_count(5, 2), 10);
        assert_eq!(layer_node_count(4, 2) * 5, 30);
        assert_eq!(layer_node_count(4, 0), 1);
        assert_eq!(layer_node_count(37, 2), 666);
        assert_eq!(layer_node_count(3, 4), 0);
        assert_eq!(
            layer_node_count(128, 64),
            23951146041928082866135587776380551750
        );
    }

    #[test]
    fn unpruned_generation_is_unique_and_binomial() {
        for n in 1..=10 {
            let mut layer = vec![LatticeNode::root(n)];
            let mut seen_all = HashSet::new();
            for l in 0..=n {
                let parents: HashSet<_> = layer.iter().map(|v| v.parents).collect();
                assert_eq!(parents.len(), layer.len(), "duplicate parents at n={n} l={l}");
                // Folded count drops the single full-set node, which has no targets.
                let expected = if l == n { 0 } else { layer_node_count(n, l) };
                assert_eq!(layer.len() as u128, expected, "n={n} l={l}");
                for node in &layer {
                    assert_eq!(node.layer(), l);
                    assert!(node.targets.intersection(node.parents).is_empty());
                    assert!(seen_all.insert(node.parents));
                }
                layer = layer
                    .iter()
                    .flat_map(|v| v.successors(v.targets, n))
                    .collect();
            }
            assert!(layer.is_empty());
        }
    }
}
