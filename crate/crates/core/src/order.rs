//! Finite partial orders, derived orders, monotonicity checks and the
//! symbol-merging partitions used by the exact CMC enumeration.
//!
//! A [`Poset`] stores its strict relation transitively closed, so a function
//! is monotone iff it is non-decreasing across every stored pair.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};

/// Default slack for [`is_monotone`] when checking singular-vector witnesses.
pub const DEFAULT_MONOTONE_TOL: f64 = 1e-9;

/// Largest poset accepted by [`enumerate_monotone_boolean`].
pub const MAX_BOOLEAN_ENUMERATION: usize = 16;

/// How the relation of a new poset is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderKind {
    /// Chain following label order; explicit pairs are ignored.
    Total,
    /// No two distinct elements comparable.
    Antichain,
    /// Transitive closure of the given pairs.
    Explicit,
}

/// A finite strict partial order over an indexed, labelled alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poset {
    labels: Vec<String>,
    // row-major `size x size`; below[i * size + j] iff i < j in the order
    below: Vec<bool>,
    pairs: Vec<(usize, usize)>,
}

impl Poset {
    /// Builds a validated, transitively closed poset.
    pub fn from_pairs(labels: Vec<String>, pairs: &[(usize, usize)], kind: OrderKind) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        let n = labels.len();
        let mut below = vec![false; n * n];
        match kind {
            OrderKind::Total => {
                for i in 0..n {
                    for j in i + 1..n {
                        below[i * n + j] = true;
                    }
                }
            }
            OrderKind::Antichain => {}
            OrderKind::Explicit => {
                for &(i, j) in pairs {
                    for index in [i, j] {
                        if index >= n {
                            return Err(Error::IndexOutOfRange { index, size: n });
                        }
                    }
                    if i == j {
                        return Err(Error::CycleDetected(i, j));
                    }
                    below[i * n + j] = true;
                }
                // Warshall closure
                for k in 0..n {
                    for i in 0..n {
                        if !below[i * n + k] {
                            continue;
                        }
                        for j in 0..n {
                            if below[k * n + j] {
                                below[i * n + j] = true;
                            }
                        }
                    }
                }
                for i in 0..n {
                    if below[i * n + i] {
                        let j = (0..n)
                            .find(|&j| j != i && below[i * n + j] && below[j * n + i])
                            .unwrap_or(i);
                        return Err(Error::CycleDetected(i.min(j), i.max(j)));
                    }
                }
            }
        }
        Ok(Self::from_closed(labels, below))
    }

    fn from_closed(labels: Vec<String>, below: Vec<bool>) -> Self {
        let n = labels.len();
        let pairs = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| below[i * n + j])
            .collect();
        Poset { labels, below, pairs }
    }

    pub fn total(labels: Vec<String>) -> Result<Self> {
        Self::from_pairs(labels, &[], OrderKind::Total)
    }

    pub fn antichain(labels: Vec<String>) -> Result<Self> {
        Self::from_pairs(labels, &[], OrderKind::Antichain)
    }

    /// Chain `0 < 1 < ... < n-1` labelled by the indices.
    pub fn chain(n: usize) -> Result<Self> {
        Self::total(index_labels(n))
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Strict pairs `(i, j)` with `i` below `j`, sorted lexicographically.
    pub fn strict_pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn relation_count(&self) -> usize {
        self.pairs.len()
    }

    /// True iff `i` is strictly below `j`.
    pub fn less(&self, i: usize, j: usize) -> bool {
        self.below[i * self.size() + j]
    }

    pub fn comparable(&self, i: usize, j: usize) -> bool {
        self.less(i, j) || self.less(j, i)
    }

    /// The dual order; labels are kept.
    pub fn reverse(&self) -> Poset {
        let n = self.size();
        let mut below = vec![false; n * n];
        for &(i, j) in &self.pairs {
            below[j * n + i] = true;
        }
        Self::from_closed(self.labels.clone(), below)
    }

    /// Componentwise order on `self x other`, element `(i, k)` at index
    /// `i * other.size() + k`.
    pub fn product(&self, other: &Poset) -> Poset {
        let (m, n) = (self.size(), other.size());
        let size = m * n;
        let labels = self
            .labels
            .iter()
            .flat_map(|a| other.labels.iter().map(move |b| format!("({a},{b})")))
            .collect();
        let mut below = vec![false; size * size];
        for i in 0..m {
            for k in 0..n {
                for j in 0..m {
                    for l in 0..n {
                        let first = i == j || self.less(i, j);
                        let second = k == l || other.less(k, l);
                        if first && second && (i, k) != (j, l) {
                            below[(i * n + k) * size + (j * n + l)] = true;
                        }
                    }
                }
            }
        }
        Self::from_closed(labels, below)
    }

    /// Restriction of the (closed) relation to `keep`, renumbered in the
    /// order given.
    pub fn restrict(&self, keep: &[usize]) -> Result<Poset> {
        let n = self.size();
        if keep.is_empty() {
            return Err(Error::EmptyInput);
        }
        for &index in keep {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, size: n });
            }
        }
        let m = keep.len();
        let mut below = vec![false; m * m];
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                below[a * m + b] = self.less(i, j);
            }
        }
        let labels = keep.iter().map(|&i| self.labels[i].clone()).collect();
        Ok(Self::from_closed(labels, below))
    }

    /// True iff every two distinct elements are comparable.
    pub fn is_total(&self) -> bool {
        let n = self.size();
        self.pairs.len() == n * (n - 1) / 2
    }

    /// Elements listed bottom to top, if the order is total.
    pub fn linear_order(&self) -> Option<Vec<usize>> {
        if !self.is_total() {
            return None;
        }
        Some(self.linear_extension())
    }

    /// Some linear extension: elements sorted by the number of elements below them.
    pub fn linear_extension(&self) -> Vec<usize> {
        let n = self.size();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&j| ((0..n).filter(|&i| self.less(i, j)).count(), j));
        order
    }
}

pub(crate) fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// True iff `f[i] <= f[j] + tol` for every strict pair `(i, j)`.
pub fn is_monotone(f: &[f64], order: &Poset, tol: f64) -> Result<bool> {
    if f.len() != order.size() {
        return Err(Error::LengthMismatch {
            expected: order.size(),
            actual: f.len(),
        });
    }
    Ok(order.strict_pairs().iter().all(|&(i, j)| f[i] <= f[j] + tol))
}

/// A subset of a poset's strict pairs whose endpoints are forced equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeSelection {
    pairs: Vec<(usize, usize)>,
}

impl MergeSelection {
    pub fn new(order: &Poset, pairs: &[(usize, usize)]) -> Result<Self> {
        for &(i, j) in pairs {
            if i >= order.size() || j >= order.size() || !order.less(i, j) {
                return Err(Error::NotStrictPair(i, j));
            }
        }
        let pairs: BTreeSet<_> = pairs.iter().copied().collect();
        Ok(MergeSelection {
            pairs: pairs.into_iter().collect(),
        })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

/// Partition of `0..size` into merged symbols, in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
    #[serde(skip)]
    block_of: Vec<usize>,
}

impl BlockPartition {
    pub fn singletons(size: usize) -> Self {
        Self::from_assignment(&(0..size).collect::<Vec<_>>())
    }

    /// Canonical partition from an arbitrary block id per element.
    pub fn from_assignment(assignment: &[usize]) -> Self {
        let mut relabel = std::collections::HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = Vec::with_capacity(assignment.len());
        for (index, id) in assignment.iter().enumerate() {
            let next = blocks.len();
            let b = *relabel.entry(*id).or_insert(next);
            if b == blocks.len() {
                blocks.push(Vec::new());
            }
            blocks[b].push(index);
            block_of.push(b);
        }
        BlockPartition { blocks, block_of }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, index: usize) -> usize {
        self.block_of[index]
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Size of the underlying alphabet.
    pub fn size(&self) -> usize {
        self.block_of.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.blocks.len() == self.block_of.len()
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller index as root
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// Connected components of the graph whose edges are the selected pairs.
pub fn merge_partition(order: &Poset, selection: &MergeSelection) -> BlockPartition {
    let n = order.size();
    let mut sets = DisjointSets::new(n);
    for &(i, j) in selection.pairs() {
        sets.union(i, j);
    }
    let roots: Vec<usize> = (0..n).map(|i| sets.find(i)).collect();
    BlockPartition::from_assignment(&roots)
}

/// Every distinct partition `merge_partition(order, s)` over all subsets `s`
/// of the strict pairs, sorted.
///
/// Pairs are visited in order; a pair whose endpoints already share a block
/// contributes no branch, and (pair index, partition) states are memoised, so
/// the work is bounded by the number of achievable partitions rather than by
/// `2^relations`.
pub fn achievable_partitions(order: &Poset) -> Vec<BlockPartition> {
    let edges = order.strict_pairs();
    let mut seen: HashSet<(usize, Vec<usize>)> = HashSet::new();
    let mut found: BTreeSet<BlockPartition> = BTreeSet::new();
    let mut stack = vec![(0usize, BlockPartition::singletons(order.size()))];
    while let Some((k, partition)) = stack.pop() {
        if !seen.insert((k, partition.block_of.clone())) {
            continue;
        }
        if k == edges.len() {
            found.insert(partition);
            continue;
        }
        let (i, j) = edges[k];
        let (bi, bj) = (partition.block_of(i), partition.block_of(j));
        if bi != bj {
            let merged: Vec<usize> = partition
                .block_of
                .iter()
                .map(|&b| if b == bj { bi } else { b })
                .collect();
            stack.push((k + 1, BlockPartition::from_assignment(&merged)));
        }
        stack.push((k + 1, partition));
    }
    found.into_iter().collect()
}

/// All 0/1 monotone functions (indicators of up-sets) in lexicographic order.
pub fn enumerate_monotone_boolean(order: &Poset) -> Result<Vec<Vec<u8>>> {
    let n = order.size();
    if n > MAX_BOOLEAN_ENUMERATION {
        return Err(Error::SizeTooLarge {
            size: n,
            limit: MAX_BOOLEAN_ENUMERATION,
        });
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    extend_upsets(order, &mut current, &mut out);
    Ok(out)
}

fn extend_upsets(order: &Poset, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    let k = current.len();
    if k == order.size() {
        out.push(current.clone());
        return;
    }
    for bit in [0u8, 1u8] {
        let consistent = (0..k).all(|i| {
            (!order.less(i, k) || current[i] <= bit) && (!order.less(k, i) || bit <= current[i])
        });
        if consistent {
            current.push(bit);
            extend_upsets(order, current, out);
            current.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        index_labels(n)
    }

    #[test]
    fn total_two_chain() {
        let p = Poset::from_pairs(labels(2), &[(1, 0)], OrderKind::Total).unwrap();
        assert_eq!(p.strict_pairs(), &[(0, 1)]);
        assert!(p.is_total());
    }

    #[test]
    fn antichain_has_no_pairs() {
        let p = Poset::from_pairs(labels(3), &[(0, 1)], OrderKind::Antichain).unwrap();
        assert!(p.strict_pairs().is_empty());
        assert!(!p.is_total());
    }

    #[test]
    fn explicit_pairs_are_closed() {
        let p = Poset::from_pairs(labels(3), &[(0, 1), (1, 2)], OrderKind::Explicit).unwrap();
        assert_eq!(p.strict_pairs(), &[(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn construction_errors() {
        let cyc = Poset::from_pairs(labels(3), &[(0, 1), (1, 2), (2, 0)], OrderKind::Explicit);
        assert!(matches!(cyc, Err(Error::CycleDetected(_, _))));
        let dup = Poset::total(vec!["a".into(), "a".into()]);
        assert_eq!(dup, Err(Error::DuplicateLabel("a".into())));
        let oob = Poset::from_pairs(labels(2), &[(0, 5)], OrderKind::Explicit);
        assert!(matches!(oob, Err(Error::IndexOutOfRange { index: 5, .. })));
        assert!(matches!(
            Poset::from_pairs(labels(2), &[(1, 1)], OrderKind::Explicit),
            Err(Error::CycleDetected(1, 1))
        ));
    }

    #[test]
    fn reverse_examples() {
        let chain = Poset::chain(2).unwrap();
        assert_eq!(chain.reverse().strict_pairs(), &[(1, 0)]);
        let anti = Poset::antichain(labels(3)).unwrap();
        assert_eq!(anti.reverse(), anti);
        let three = Poset::from_pairs(labels(3), &[(0, 1), (1, 2)], OrderKind::Explicit).unwrap();
        let expected = Poset::from_pairs(labels(3), &[(2, 1), (1, 0)], OrderKind::Explicit).unwrap();
        assert_eq!(three.reverse(), expected);
    }

    #[test]
    fn product_of_two_chains_is_diamond() {
        let c = Poset::chain(2).unwrap();
        let d = c.product(&c);
        assert_eq!(d.strict_pairs(), &[(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)]);
        assert_eq!(d.labels()[2], "(1,0)");
    }

    #[test]
    fn product_with_reversed_chain_swaps_middle_layer() {
        let c = Poset::chain(2).unwrap();
        let d = c.product(&c.reverse());
        // (0,1) is the bottom, (1,0) the top
        assert_eq!(d.strict_pairs(), &[(0, 2), (1, 0), (1, 2), (1, 3), (3, 2)]);
    }

    #[test]
    fn product_of_antichains() {
        let a = Poset::antichain(labels(2)).unwrap();
        let b = Poset::antichain(labels(3)).unwrap();
        let p = a.product(&b);
        assert_eq!(p.size(), 6);
        assert_eq!(p.relation_count(), 0);
    }

    #[test]
    fn monotone_checks() {
        let c = Poset::chain(2).unwrap();
        assert!(is_monotone(&[0.0, 1.0], &c, 0.0).unwrap());
        assert!(!is_monotone(&[1.0, 0.0], &c, 0.0).unwrap());
        assert!(is_monotone(&[0.5, 0.5], &c, 0.0).unwrap());
        assert!(is_monotone(&[1e-10, 0.0], &c, 1e-9).unwrap());
        assert_eq!(
            is_monotone(&[0.0], &c, 0.0),
            Err(Error::LengthMismatch { expected: 2, actual: 1 })
        );
    }

    #[test]
    fn merge_partition_examples() {
        let p = Poset::chain(3).unwrap();
        let none = MergeSelection::new(&p, &[]).unwrap();
        assert_eq!(merge_partition(&p, &none).blocks(), &[vec![0], vec![1], vec![2]]);
        let one = MergeSelection::new(&p, &[(0, 1)]).unwrap();
        assert_eq!(merge_partition(&p, &one).blocks(), &[vec![0, 1], vec![2]]);
        let two = MergeSelection::new(&p, &[(0, 1), (1, 2)]).unwrap();
        let part = merge_partition(&p, &two);
        assert_eq!(part.blocks(), &[vec![0, 1, 2]]);
        assert_eq!(part.block_of(2), 0);
    }

    #[test]
    fn merge_selection_rejects_non_pairs() {
        let p = Poset::chain(3).unwrap();
        assert_eq!(MergeSelection::new(&p, &[(1, 0)]), Err(Error::NotStrictPair(1, 0)));
    }

    #[test]
    fn canonical_partition_orders_blocks_by_minimum() {
        let part = BlockPartition::from_assignment(&[7, 3, 7, 3, 9]);
        assert_eq!(part.blocks(), &[vec![0, 2], vec![1, 3], vec![4]]);
        assert_eq!(part.block_of(3), 1);
    }

    #[test]
    fn achievable_partitions_match_subset_enumeration() {
        let c = Poset::chain(2).unwrap();
        for p in [Poset::chain(4).unwrap(), c.product(&c), c.product(&c.reverse())] {
            let edges = p.strict_pairs().to_vec();
            let mut brute = BTreeSet::new();
            for mask in 0u32..(1 << edges.len()) {
                let chosen: Vec<_> = (0..edges.len())
                    .filter(|b| mask >> b & 1 == 1)
                    .map(|b| edges[b])
                    .collect();
                let s = MergeSelection::new(&p, &chosen).unwrap();
                brute.insert(merge_partition(&p, &s));
            }
            let fast = achievable_partitions(&p);
            assert_eq!(fast, brute.into_iter().collect::<Vec<_>>());
        }
        // the diamond cannot merge only its incomparable middle pair
        assert_eq!(achievable_partitions(&c.product(&c)).len(), 13);
    }

    #[test]
    fn monotone_boolean_enumeration() {
        let c = Poset::chain(2).unwrap();
        assert_eq!(enumerate_monotone_boolean(&c).unwrap(), vec![vec![0, 0], vec![0, 1], vec![1, 1]]);
        let a = Poset::antichain(labels(2)).unwrap();
        assert_eq!(
            enumerate_monotone_boolean(&a).unwrap(),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        assert_eq!(enumerate_monotone_boolean(&c.product(&c)).unwrap().len(), 6);
        let big = Poset::antichain(labels(17)).unwrap();
        assert!(matches!(enumerate_monotone_boolean(&big), Err(Error::SizeTooLarge { .. })));
    }

    #[test]
    fn restrict_keeps_relations_through_removed_elements() {
        let p = Poset::chain(3).unwrap();
        let r = p.restrict(&[0, 2]).unwrap();
        assert_eq!(r.strict_pairs(), &[(0, 1)]);
        assert_eq!(r.labels(), &["0".to_string(), "2".to_string()]);
    }

    #[test]
    fn linear_order_of_reversed_chain() {
        let p = Poset::chain(3).unwrap().reverse();
        assert_eq!(p.linear_order(), Some(vec![2, 1, 0]));
        assert_eq!(Poset::antichain(labels(2)).unwrap().linear_order(), None);
    }
}
