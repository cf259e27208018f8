//! Union-find that also tracks, per root, its member list and a histogram of
//! ground-truth labels among the members.
//!
//! The histograms let a caller account for the `|A|·|B|` pairs that become
//! intra-cluster on each merge without touching them one by one.

use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeReport {
    /// Sizes of the two roots before the merge.
    pub sizes: (usize, usize),
    /// Newly intra-cluster pairs whose endpoints share a label.
    pub same_label_pairs: u64,
}

impl MergeReport {
    pub fn new_pairs(&self) -> u64 {
        self.sizes.0 as u64 * self.sizes.1 as u64
    }

    pub fn different_label_pairs(&self) -> u64 {
        self.new_pairs() - self.same_label_pairs
    }
}

#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
    labels: Vec<usize>,
    members: Vec<Vec<usize>>,
    histograms: Vec<HashMap<usize, usize>>,
}

impl DisjointSet {
    /// `n` singletons, all sharing label 0.
    pub fn new(n: usize) -> Self {
        Self::with_labels(vec![0; n])
    }

    pub fn with_labels(labels: Vec<usize>) -> Self {
        let n = labels.len();
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
            members: (0..n).map(|i| vec![i]).collect(),
            histograms: labels.iter().map(|&l| HashMap::from([(l, 1)])).collect(),
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`. Returns `None` when they already share
    /// a root.
    pub fn union(&mut self, a: usize, b: usize) -> Option<MergeReport> {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return None;
        }
        let sizes = (self.members[ra].len(), self.members[rb].len());
        let same_label_pairs = {
            let (small, large) = if self.histograms[ra].len() <= self.histograms[rb].len() {
                (&self.histograms[ra], &self.histograms[rb])
            } else {
                (&self.histograms[rb], &self.histograms[ra])
            };
            small
                .iter()
                .map(|(l, &c)| c as u64 * large.get(l).copied().unwrap_or(0) as u64)
                .sum()
        };

        let (root, child) = match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => (rb, ra),
            std::cmp::Ordering::Greater => (ra, rb),
            std::cmp::Ordering::Equal => {
                self.rank[ra] += 1;
                (ra, rb)
            }
        };
        self.parent[child] = root;

        let child_members = std::mem::take(&mut self.members[child]);
        let child_hist = std::mem::take(&mut self.histograms[child]);
        if self.members[root].len() < child_members.len() {
            let mut big = child_members;
            big.append(&mut self.members[root]);
            self.members[root] = big;
        } else {
            self.members[root].extend(child_members);
        }
        if self.histograms[root].len() < child_hist.len() {
            let mut big = child_hist;
            for (l, c) in self.histograms[root].drain() {
                *big.entry(l).or_insert(0) += c;
            }
            self.histograms[root] = big;
        } else {
            for (l, c) in child_hist {
                *self.histograms[root].entry(l).or_insert(0) += c;
            }
        }

        Some(MergeReport {
            sizes,
            same_label_pairs,
        })
    }

    /// Members of the set containing `a`.
    pub fn members(&mut self, a: usize) -> &[usize] {
        let r = self.find(a);
        &self.members[r]
    }

    pub fn histogram(&mut self, a: usize) -> &HashMap<usize, usize> {
        let r = self.find(a);
        &self.histograms[r]
    }

    pub fn label(&self, a: usize) -> usize {
        self.labels[a]
    }

    /// Reference path: same-label pair count between the sets of `a` and `b`
    /// by walking both member lists.
    pub fn same_label_pairs_by_members(&mut self, a: usize, b: usize) -> u64 {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return 0;
        }
        let mut count = 0;
        for &x in &self.members[ra] {
            for &y in &self.members[rb] {
                if self.labels[x] == self.labels[y] {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn roots(&mut self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.find(i) == i).collect()
    }

    /// Component id per element, dense in order of first appearance.
    pub fn component_assignment(&mut self) -> Vec<usize> {
        let roots: Vec<usize> = (0..self.len()).map(|i| self.find(i)).collect();
        crate::types::canonicalize(&roots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_unions() {
        let mut ds = DisjointSet::new(3);
        let r = ds.union(0, 1).unwrap();
        assert_eq!(r.sizes, (1, 1));
        assert_eq!(ds.component_assignment(), vec![0, 0, 1]);
        assert!(ds.union(0, 0).is_none());
        let r = ds.union(1, 2).unwrap();
        assert_eq!(r.sizes, (2, 1));
        assert_eq!(ds.roots().len(), 1);
        assert_eq!(ds.members(2).len(), 3);
    }

    #[test]
    fn same_label_counts() {
        let mut ds = DisjointSet::with_labels(vec![0, 0, 1, 0]);
        ds.union(0, 2);
        assert_eq!(ds.same_label_pairs_by_members(0, 1), 1);
        let r = ds.union(0, 1).unwrap();
        assert_eq!(r.same_label_pairs, 1);
        assert_eq!(r.different_label_pairs(), 1);
    }

    proptest! {
        #[test]
        fn histograms_and_members_stay_consistent(
            labels in prop::collection::vec(0usize..4, 1..25),
            ops in prop::collection::vec((0usize..25, 0usize..25), 0..40),
        ) {
            let n = labels.len();
            let mut ds = DisjointSet::with_labels(labels.clone());
            for (a, b) in ops {
                let (a, b) = (a % n, b % n);
                let reference = ds.same_label_pairs_by_members(a, b);
                if let Some(r) = ds.union(a, b) {
                    prop_assert_eq!(r.same_label_pairs, reference);
                }
            }
            let roots = ds.roots();
            let mut total = 0;
            let mut global: HashMap<usize, usize> = HashMap::new();
            for r in roots {
                let members = ds.members(r).to_vec();
                total += members.len();
                let mut expected: HashMap<usize, usize> = HashMap::new();
                for &m in &members {
                    prop_assert_eq!(ds.find(m), r);
                    *expected.entry(labels[m]).or_insert(0) += 1;
                }
                prop_assert_eq!(ds.histogram(r), &expected);
                for (l, c) in expected {
                    *global.entry(l).or_insert(0) += c;
                }
            }
            prop_assert_eq!(total, n);
            let mut all: HashMap<usize, usize> = HashMap::new();
            for &l in &labels {
                *all.entry(l).or_insert(0) += 1;
            }
            prop_assert_eq!(global, all);
        }
    }
}
