//! Fitting the threshold `r` of single linkage `C_r` over a training set of
//! graphs.
//!
//! All edges of all graphs are sorted once and replayed Kruskal-style. Each
//! graph keeps a running count of point pairs on which `C_r` agrees with its
//! truth; a union changes that count by (same-label pairs) − (different-label
//! pairs) across the two merged components, read off the label histograms.
//! The mean loss is recorded after every block of equal weights.

use serde::{Deserialize, Serialize};

use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::metrics::{choose2, clustering_loss, loss_from_agreement};
use crate::types::{Clustering, WeightedGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub r: f64,
    pub empirical_mean_loss: f64,
    pub candidate_count: usize,
}

impl ThresholdModel {
    /// Recomputes the mean loss of `C_r` on `problems` directly.
    pub fn recheck(&self, problems: &[(WeightedGraph, Clustering)]) -> Result<f64> {
        mean_threshold_loss(problems, self.r)
    }
}

/// Mean loss of `C_r` (non-strict) over the problems, clustering each graph
/// from scratch.
pub fn mean_threshold_loss(problems: &[(WeightedGraph, Clustering)], r: f64) -> Result<f64> {
    if problems.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut total = 0.0;
    for (g, truth) in problems {
        let c = crate::clustering::single_linkage_threshold_cluster(g, r, false)?;
        total += clustering_loss(truth, &c);
    }
    Ok(total / problems.len() as f64)
}

/// One point of the loss curve: threshold and mean loss of `C_r` there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCandidate {
    pub r: f64,
    pub mean_loss: f64,
}

pub fn fit_single_linkage_threshold(problems: &[(WeightedGraph, Clustering)]) -> Result<ThresholdModel> {
    let curve = threshold_loss_curve(problems)?;
    let mut best = curve[0];
    for c in &curve[1..] {
        if c.mean_loss < best.mean_loss {
            best = *c;
        }
    }
    Ok(ThresholdModel {
        r: best.r,
        empirical_mean_loss: best.mean_loss,
        candidate_count: curve.len(),
    })
}

/// Mean loss at every candidate threshold, ascending in `r`. The first
/// entry is the all-singletons state at `w_min / 2`, present when the
/// smallest edge weight is positive; with no edges at all the curve is the
/// single point `r = 0`.
pub fn threshold_loss_curve(problems: &[(WeightedGraph, Clustering)]) -> Result<Vec<ThresholdCandidate>> {
    if problems.is_empty() {
        return Err(Error::EmptyInput);
    }
    let m = problems.len();
    let mut sets = Vec::with_capacity(m);
    let mut pairs = Vec::with_capacity(m);
    let mut agree = Vec::with_capacity(m);
    for (i, (g, truth)) in problems.iter().enumerate() {
        let truth = truth.reordered(g.vertex_ids()).map_err(|_| {
            Error::InvalidClustering(format!("truth of problem {i} does not partition its graph's vertices"))
        })?;
        let p = choose2(g.n() as u64);
        let same: u64 = truth.cluster_sizes().iter().map(|&s| choose2(s as u64)).sum();
        pairs.push(p);
        agree.push(p - same);
        sets.push(DisjointSet::with_labels(truth.assignment().to_vec()));
    }
    let mut losses: Vec<f64> = agree.iter().zip(&pairs).map(|(&a, &p)| loss_from_agreement(a, p)).collect();
    let mean = |losses: &[f64]| losses.iter().sum::<f64>() / m as f64;

    let mut edges: Vec<(f64, usize, usize, usize)> = problems
        .iter()
        .enumerate()
        .flat_map(|(gi, (g, _))| g.edges().iter().map(move |e| (e.w, gi, e.u, e.v)))
        .collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut curve = Vec::new();
    if edges.is_empty() {
        curve.push(ThresholdCandidate { r: 0.0, mean_loss: mean(&losses) });
        return Ok(curve);
    }
    if edges[0].0 > 0.0 {
        curve.push(ThresholdCandidate {
            r: edges[0].0 / 2.0,
            mean_loss: mean(&losses),
        });
    }
    let mut i = 0;
    while i < edges.len() {
        let w = edges[i].0;
        while i < edges.len() && edges[i].0 == w {
            let (_, gi, u, v) = edges[i];
            if let Some(report) = sets[gi].union(u, v) {
                agree[gi] = agree[gi] + report.same_label_pairs - report.different_label_pairs();
                losses[gi] = loss_from_agreement(agree[gi], pairs[gi]);
            }
            i += 1;
        }
        curve.push(ThresholdCandidate { r: w, mean_loss: mean(&losses) });
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Edge;
    use rand::Rng;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> WeightedGraph {
        WeightedGraph::new(n, edges.iter().map(|&(u, v, w)| Edge { u, v, w }).collect()).unwrap()
    }

    fn truth(a: &[usize]) -> Clustering {
        Clustering::from_assignment(a.to_vec()).unwrap()
    }

    #[test]
    fn single_edge_examples() {
        let m = fit_single_linkage_threshold(&[(graph(2, &[(0, 1, 5.0)]), truth(&[0, 0]))]).unwrap();
        assert_eq!((m.r, m.empirical_mean_loss), (5.0, 0.0));
        let m = fit_single_linkage_threshold(&[(graph(2, &[(0, 1, 5.0)]), truth(&[0, 1]))]).unwrap();
        assert_eq!((m.r, m.empirical_mean_loss), (2.5, 0.0));
    }

    #[test]
    fn two_graph_example() {
        let problems = vec![
            (graph(3, &[(0, 1, 1.0), (1, 2, 3.0)]), truth(&[0, 0, 1])),
            (graph(2, &[(0, 1, 2.0)]), truth(&[0, 0])),
        ];
        let curve = threshold_loss_curve(&problems).unwrap();
        let rs: Vec<f64> = curve.iter().map(|c| c.r).collect();
        assert_eq!(rs, vec![0.5, 1.0, 2.0, 3.0]);
        let expected = [2.0 / 3.0, 0.5, 0.0, 1.0 / 3.0];
        for (c, e) in curve.iter().zip(expected) {
            assert!((c.mean_loss - e).abs() < 1e-15);
        }
        let m = fit_single_linkage_threshold(&problems).unwrap();
        assert_eq!((m.r, m.empirical_mean_loss, m.candidate_count), (2.0, 0.0, 4));
        assert_eq!(m.recheck(&problems).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_truth_rejected() {
        let r = fit_single_linkage_threshold(&[(graph(3, &[(0, 1, 1.0)]), truth(&[0, 0]))]);
        assert!(matches!(r, Err(Error::InvalidClustering(_))));
        assert!(fit_single_linkage_threshold(&[]).is_err());
    }

    #[test]
    fn edgeless_and_zero_weight() {
        let m = fit_single_linkage_threshold(&[(graph(2, &[]), truth(&[0, 1]))]).unwrap();
        assert_eq!((m.r, m.empirical_mean_loss, m.candidate_count), (0.0, 0.0, 1));
        let m = fit_single_linkage_threshold(&[(graph(3, &[(0, 1, 0.0), (1, 2, 2.0)]), truth(&[0, 0, 1]))]).unwrap();
        assert_eq!((m.r, m.empirical_mean_loss, m.candidate_count), (0.0, 0.0, 2));
    }

    /// Evaluates `C_r` from scratch at every candidate.
    fn brute_force(problems: &[(WeightedGraph, Clustering)]) -> (f64, f64) {
        let mut ws: Vec<f64> = problems.iter().flat_map(|(g, _)| g.edges().iter().map(|e| e.w)).collect();
        ws.sort_by(f64::total_cmp);
        ws.dedup();
        let mut candidates = vec![ws[0] / 2.0];
        candidates.extend(ws);
        let mut best = (f64::NAN, f64::INFINITY);
        for r in candidates {
            let mut total = 0.0;
            for (g, y) in problems {
                total += clustering_loss(y, &crate::clustering::single_linkage_threshold_cluster(g, r, false).unwrap());
            }
            let loss = total / problems.len() as f64;
            if loss < best.1 {
                best = (r, loss);
            }
        }
        best
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = crate::rng::seeded_rng(21);
        for _ in 0..60 {
            let problems: Vec<_> = (0..rng.random_range(1..=4))
                .map(|_| {
                    let n = rng.random_range(2..=9);
                    let mut edges = Vec::new();
                    for u in 0..n {
                        for v in (u + 1)..n {
                            if rng.random_bool(0.6) {
                                edges.push((u, v, rng.random_range(1..20) as f64 * 0.5));
                            }
                        }
                    }
                    if edges.is_empty() {
                        edges.push((0, 1, 1.0));
                    }
                    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
                    (graph(n, &edges), truth(&labels))
                })
                .collect();
            let m = fit_single_linkage_threshold(&problems).unwrap();
            assert_eq!((m.r, m.empirical_mean_loss), brute_force(&problems));
        }
    }
}
