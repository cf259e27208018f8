//! Threshold single linkage on weighted graphs.

use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::types::{Clustering, Dataset, Edge, WeightedGraph};

/// Connected components keeping edges with `w <= r` (or `w < r` when
/// `strict`).
pub fn single_linkage_threshold_cluster(g: &WeightedGraph, r: f64, strict: bool) -> Result<Clustering> {
    if !(r >= 0.0) {
        return Err(Error::invalid(format!("threshold must be nonnegative, got {r}")));
    }
    if g.n() == 0 {
        return Err(Error::EmptyInput);
    }
    let mut ds = DisjointSet::new(g.n());
    for e in g.edges() {
        let keep = if strict { e.w < r } else { e.w <= r };
        if keep {
            ds.union(e.u, e.v);
        }
    }
    Clustering::new(ds.component_assignment(), g.vertex_ids().to_vec())
}

/// Complete graph with Euclidean edge weights.
pub fn euclidean_to_graph(x: &Dataset) -> Result<WeightedGraph> {
    let n = x.n();
    if n < 2 {
        return Err(Error::invalid("need at least two points to build a graph"));
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            edges.push(Edge { u, v, w: x.distance(u, v) });
        }
    }
    WeightedGraph::with_ids(x.point_ids().to_vec(), edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path() -> WeightedGraph {
        WeightedGraph::new(3, vec![Edge { u: 0, v: 1, w: 1.0 }, Edge { u: 1, v: 2, w: 3.0 }]).unwrap()
    }

    #[test]
    fn thresholds_on_a_path() {
        let g = path();
        assert_eq!(single_linkage_threshold_cluster(&g, 0.5, false).unwrap().k(), 3);
        assert_eq!(single_linkage_threshold_cluster(&g, 1.0, false).unwrap().assignment(), &[0, 0, 1]);
        assert_eq!(single_linkage_threshold_cluster(&g, 1.0, true).unwrap().k(), 3);
        assert_eq!(single_linkage_threshold_cluster(&g, 3.0, false).unwrap().k(), 1);
        assert!(single_linkage_threshold_cluster(&g, -1.0, false).is_err());
    }

    #[test]
    fn euclidean_graph_shapes() {
        let x = Dataset::from_rows(&[vec![0.0], vec![3.0]]).unwrap();
        let g = euclidean_to_graph(&x).unwrap();
        assert_eq!(g.edges(), &[Edge { u: 0, v: 1, w: 3.0 }]);

        let x = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let w: Vec<f64> = euclidean_to_graph(&x).unwrap().edges().iter().map(|e| e.w).collect();
        assert_eq!(w, vec![1.0, 2.0, 1.0]);

        let x = Dataset::new((0..14).map(f64::from).collect(), 7, 2).unwrap();
        assert_eq!(euclidean_to_graph(&x).unwrap().edges().len(), 21);
        assert!(euclidean_to_graph(&Dataset::from_rows(&[vec![1.0]]).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn threshold_partitions_are_monotone(
            weights in prop::collection::vec(0.0f64..10.0, 28),
            r1 in 0.0f64..10.0,
            dr in 0.0f64..5.0,
        ) {
            // complete graph on 8 vertices
            let mut edges = Vec::new();
            let mut it = weights.into_iter();
            for u in 0..8 {
                for v in (u + 1)..8 {
                    edges.push(Edge { u, v, w: it.next().unwrap() });
                }
            }
            let g = WeightedGraph::new(8, edges).unwrap();
            let fine = single_linkage_threshold_cluster(&g, r1, false).unwrap();
            let coarse = single_linkage_threshold_cluster(&g, r1 + dr, false).unwrap();
            for i in 0..8 {
                for j in 0..8 {
                    if fine.assignment()[i] == fine.assignment()[j] {
                        prop_assert_eq!(coarse.assignment()[i], coarse.assignment()[j]);
                    }
                }
            }
        }
    }
}
