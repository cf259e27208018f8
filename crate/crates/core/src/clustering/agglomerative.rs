//! Bottom-up agglomerative clustering with Lance–Williams updates.
//!
//! Each active cluster slot caches its nearest higher-indexed neighbour, so a
//! merge costs `O(n)` plus a rescan for the rows whose cached neighbour was
//! touched. Ties go to the lexicographically smallest slot pair; the merged
//! cluster keeps the smaller slot.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Clustering, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    Single,
    Complete,
    /// Minimum increase of within-cluster variance.
    Ward,
}

pub fn agglomerative(x: &Dataset, linkage: Linkage, k: usize) -> Result<Clustering> {
    let n = x.n();
    if k < 1 || k > n {
        return Err(Error::invalid(format!("k = {k} must lie in 1..={n}")));
    }
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d2 = x.squared_distance(i, j);
            let d = if linkage == Linkage::Ward { d2 } else { d2.sqrt() };
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let labels = merge_until(&mut dist, n, linkage, k);
    Clustering::new(labels, x.point_ids().to_vec())
}

fn merge_until(dist: &mut [f64], n: usize, linkage: Linkage, k: usize) -> Vec<usize> {
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut owner: Vec<usize> = (0..n).collect();
    let mut nn = vec![usize::MAX; n];
    let mut nn_dist = vec![f64::INFINITY; n];

    let rescan = |i: usize, dist: &[f64], active: &[bool], nn: &mut [usize], nn_dist: &mut [f64]| {
        nn[i] = usize::MAX;
        nn_dist[i] = f64::INFINITY;
        for j in (i + 1)..n {
            if active[j] && dist[i * n + j] < nn_dist[i] {
                nn[i] = j;
                nn_dist[i] = dist[i * n + j];
            }
        }
    };
    for i in 0..n {
        rescan(i, dist, &active, &mut nn, &mut nn_dist);
    }

    let mut remaining = n;
    while remaining > k {
        let mut best = usize::MAX;
        for i in 0..n {
            if active[i] && nn[i] != usize::MAX && (best == usize::MAX || nn_dist[i] < nn_dist[best]) {
                best = i;
            }
        }
        let (a, b) = (best, nn[best]);
        let dab = dist[a * n + b];
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for x in 0..n {
            if !active[x] || x == a || x == b {
                continue;
            }
            let dax = dist[a * n + x];
            let dbx = dist[b * n + x];
            let merged = match linkage {
                Linkage::Single => dax.min(dbx),
                Linkage::Complete => dax.max(dbx),
                Linkage::Ward => {
                    let nx = size[x] as f64;
                    ((na + nx) * dax + (nb + nx) * dbx - nx * dab) / (na + nb + nx)
                }
            };
            dist[a * n + x] = merged;
            dist[x * n + a] = merged;
        }
        active[b] = false;
        size[a] += size[b];
        for o in owner.iter_mut() {
            if *o == b {
                *o = a;
            }
        }
        remaining -= 1;

        rescan(a, dist, &active, &mut nn, &mut nn_dist);
        for x in 0..b {
            if !active[x] || x == a {
                continue;
            }
            if nn[x] == a || nn[x] == b {
                rescan(x, dist, &active, &mut nn, &mut nn_dist);
            } else if x < a {
                let d = dist[x * n + a];
                if d < nn_dist[x] || (d == nn_dist[x] && a < nn[x]) {
                    nn[x] = a;
                    nn_dist[x] = d;
                }
            }
        }
    }
    owner
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::graph::{euclidean_to_graph, single_linkage_threshold_cluster};
    use rand::Rng;

    fn line(xs: &[f64]) -> Dataset {
        Dataset::from_rows(&xs.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn extremes_of_k() {
        let x = line(&[0.0, 1.0, 10.0, 11.0]);
        for linkage in [Linkage::Single, Linkage::Complete, Linkage::Ward] {
            assert_eq!(agglomerative(&x, linkage, 4).unwrap().k(), 4);
            assert_eq!(agglomerative(&x, linkage, 1).unwrap().k(), 1);
            assert_eq!(agglomerative(&x, linkage, 2).unwrap().assignment(), &[0, 0, 1, 1]);
        }
        assert!(agglomerative(&x, Linkage::Single, 0).is_err());
        assert!(agglomerative(&x, Linkage::Single, 5).is_err());
    }

    #[test]
    fn complete_differs_from_single_on_chain() {
        // Single linkage chains 0..3 together; complete linkage does not.
        let x = line(&[0.0, 1.0, 2.0, 3.0, 4.5]);
        assert_eq!(agglomerative(&x, Linkage::Single, 2).unwrap().assignment(), &[0, 0, 0, 0, 1]);
        assert_eq!(agglomerative(&x, Linkage::Complete, 2).unwrap().assignment(), &[0, 0, 1, 1, 1]);
    }

    /// Cut the minimum spanning tree (Prim, O(n²)) at its k−1 heaviest edges.
    fn mst_cut_oracle(x: &Dataset, k: usize) -> Vec<usize> {
        let n = x.n();
        let mut in_tree = vec![false; n];
        let mut best = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        best[0] = 0.0;
        let mut tree_edges = Vec::new();
        for _ in 0..n {
            let u = (0..n)
                .filter(|&i| !in_tree[i])
                .min_by(|&a, &b| best[a].total_cmp(&best[b]))
                .unwrap();
            in_tree[u] = true;
            if parent[u] != usize::MAX {
                tree_edges.push((best[u], parent[u], u));
            }
            for v in 0..n {
                if !in_tree[v] && x.distance(u, v) < best[v] {
                    best[v] = x.distance(u, v);
                    parent[v] = u;
                }
            }
        }
        tree_edges.sort_by(|a, b| a.0.total_cmp(&b.0));
        tree_edges.truncate(n - k);
        let mut ds = crate::dsu::DisjointSet::new(n);
        for (_, u, v) in tree_edges {
            ds.union(u, v);
        }
        ds.component_assignment()
    }

    #[test]
    fn single_linkage_matches_mst_cut_and_threshold() {
        let mut rng = crate::rng::seeded_rng(11);
        for _ in 0..30 {
            let n = rng.random_range(3..25);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
                .collect();
            let x = Dataset::from_rows(&rows).unwrap();
            let k = rng.random_range(1..=n);
            let got = agglomerative(&x, Linkage::Single, k).unwrap();
            assert_eq!(got.assignment(), mst_cut_oracle(&x, k).as_slice());

            // The same partition is a threshold cut of the complete graph.
            if k > 1 {
                let mut inter = f64::INFINITY;
                for i in 0..n {
                    for j in 0..n {
                        if got.assignment()[i] != got.assignment()[j] {
                            inter = inter.min(x.distance(i, j));
                        }
                    }
                }
                let g = euclidean_to_graph(&x).unwrap();
                let cut = single_linkage_threshold_cluster(&g, inter, true).unwrap();
                assert_eq!(cut.assignment(), got.assignment());
            }
        }
    }

    #[test]
    fn ward_merges_by_variance() {
        // Ward prefers joining the two equal pairs before the lone far point.
        let x = line(&[0.0, 1.0, 5.0, 6.0, 30.0]);
        assert_eq!(agglomerative(&x, Linkage::Ward, 2).unwrap().assignment(), &[0, 0, 0, 0, 1]);
    }
}
