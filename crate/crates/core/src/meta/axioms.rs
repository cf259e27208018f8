//! A meta-clusterer that satisfies the Kleinberg axioms at the meta level:
//! learn `r` as the smallest distance between differently-labeled points
//! across the training problems, then cut test distance graphs strictly
//! below `r`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::single_linkage_threshold_cluster;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, MetaRng};
use crate::types::{Clustering, Edge, ProblemData, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaAxiomModel {
    pub r: f64,
}

/// Full `n × n` distance matrix of a problem. Graphs must be complete.
fn distance_matrix(data: &ProblemData) -> Result<Vec<f64>> {
    match data {
        ProblemData::Euclidean(x) => Ok(x.distance_matrix()),
        ProblemData::Graph(g) => {
            check_distance_graph(g)?;
            let n = g.n();
            let mut d = vec![0.0; n * n];
            for e in g.edges() {
                d[e.u * n + e.v] = e.w;
                d[e.v * n + e.u] = e.w;
            }
            Ok(d)
        }
    }
}

/// A graph is a distance function when every pair of distinct vertices has
/// a positive edge.
fn check_distance_graph(g: &WeightedGraph) -> Result<()> {
    let n = g.n();
    let expected = n * n.saturating_sub(1) / 2;
    if g.edges().len() != expected {
        return Err(Error::InvalidDistance(format!(
            "graph has {} of the {expected} pairwise distances",
            g.edges().len()
        )));
    }
    if let Some(e) = g.edges().iter().find(|e| !(e.w > 0.0)) {
        return Err(Error::InvalidDistance(format!(
            "d({},{}) = {} for distinct points",
            e.u, e.v, e.w
        )));
    }
    Ok(())
}

pub fn meta_axiom_train(problems: &[(ProblemData, Clustering)]) -> Result<MetaAxiomModel> {
    if problems.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut r = f64::INFINITY;
    for (i, (data, truth)) in problems.iter().enumerate() {
        let truth = truth.reordered(data.point_ids())?;
        if truth.k() < 2 {
            return Err(Error::InvalidClustering(format!(
                "truth of problem {i} has a single cluster, so no inter-cluster distance exists"
            )));
        }
        let n = data.n();
        let dist = distance_matrix(data)?;
        let a = truth.assignment();
        for u in 0..n {
            for v in (u + 1)..n {
                if a[u] != a[v] {
                    r = r.min(dist[u * n + v]);
                }
            }
        }
    }
    if !(r > 0.0) {
        return Err(Error::InvalidDistance("zero distance between points in different clusters".into()));
    }
    Ok(MetaAxiomModel { r })
}

pub fn meta_axiom_cluster(model: &MetaAxiomModel, d: &WeightedGraph) -> Result<Clustering> {
    if !(model.r > 0.0) {
        return Err(Error::invalid(format!("threshold must be positive, got {}", model.r)));
    }
    check_distance_graph(d)?;
    single_linkage_threshold_cluster(d, model.r, true)
}

/// Distances `r/2` inside clusters of `target` and `2r` across them.
pub fn richness_witness(target: &Clustering, r: f64) -> Result<WeightedGraph> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid(format!("r must be positive, got {r}")));
    }
    let a = target.assignment();
    let n = a.len();
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            let w = if a[u] == a[v] { r / 2.0 } else { 2.0 * r };
            edges.push(Edge { u, v, w });
        }
    }
    WeightedGraph::with_ids(target.point_ids().to_vec(), edges)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub trials: usize,
    pub scale_invariance_passed: usize,
    pub consistency_passed: usize,
    pub richness_passed: usize,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.scale_invariance_passed == self.trials
            && self.consistency_passed == self.trials
            && self.richness_passed == self.trials
    }
}

pub const SCALE_FACTORS: [f64; 3] = [0.01, 1.0, 100.0];

/// Complete graph on `n` random points of the plane.
pub fn random_distance_graph(n: usize, rng: &mut MetaRng) -> Result<WeightedGraph> {
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)))
        .collect();
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            let w = ((pts[u].0 - pts[v].0).powi(2) + (pts[u].1 - pts[v].1).powi(2)).sqrt();
            edges.push(Edge { u, v, w: w.max(1e-9) });
        }
    }
    WeightedGraph::new(n, edges)
}

/// Uniform labels in `0..k`, re-drawn until at least two clusters occur.
pub fn random_partition(n: usize, k: usize, rng: &mut MetaRng) -> Result<Clustering> {
    loop {
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let c = Clustering::from_assignment(a)?;
        if c.k() >= 2 || n < 2 || k < 2 {
            return Ok(c);
        }
    }
}

fn random_training_set(rng: &mut MetaRng) -> Result<Vec<(ProblemData, Clustering)>> {
    (0..rng.random_range(1..=4))
        .map(|_| {
            let n = rng.random_range(2..=10);
            let g = random_distance_graph(n, rng)?;
            let k = rng.random_range(2..=n.min(4));
            Ok((ProblemData::Graph(g), random_partition(n, k, rng)?))
        })
        .collect()
}

fn scale_problem(data: &ProblemData, alpha: f64) -> Result<ProblemData> {
    match data {
        ProblemData::Graph(g) => Ok(ProblemData::Graph(g.scaled(alpha)?)),
        ProblemData::Euclidean(x) => Ok(ProblemData::Euclidean(x.map_values(|_, v| v * alpha)?)),
    }
}

/// Randomized checks of meta-scale-invariance, consistency and richness.
/// Trial `t` draws from its own stream, so reports are reproducible.
pub fn run_axiom_trials(trials: usize, seed: u64) -> Result<AxiomReport> {
    let mut report = AxiomReport {
        trials,
        scale_invariance_passed: 0,
        consistency_passed: 0,
        richness_passed: 0,
    };
    for t in 0..trials {
        let mut rng = stream_rng(seed, t as u64);
        let train = random_training_set(&mut rng)?;
        let model = meta_axiom_train(&train)?;
        let test = random_distance_graph(rng.random_range(1..=12), &mut rng)?;

        let base = meta_axiom_cluster(&model, &test)?;
        let mut scale_ok = true;
        for alpha in SCALE_FACTORS {
            let scaled_train = train
                .iter()
                .map(|(d, y)| Ok((scale_problem(d, alpha)?, y.clone())))
                .collect::<Result<Vec<_>>>()?;
            let scaled_model = meta_axiom_train(&scaled_train)?;
            scale_ok &= meta_axiom_cluster(&scaled_model, &test.scaled(alpha)?)? == base;
        }
        report.scale_invariance_passed += scale_ok as usize;

        let a = base.assignment();
        let perturbed: Vec<Edge> = test
            .edges()
            .iter()
            .map(|e| {
                let factor = if a[e.u] == a[e.v] {
                    rng.random_range(0.1..=1.0)
                } else {
                    rng.random_range(1.0..=5.0)
                };
                Edge { w: e.w * factor, ..*e }
            })
            .collect();
        let perturbed = WeightedGraph::with_ids(test.vertex_ids().to_vec(), perturbed)?;
        report.consistency_passed += (meta_axiom_cluster(&model, &perturbed)? == base) as usize;

        let n = rng.random_range(1..=12);
        let k = rng.random_range(1..=n);
        let target = Clustering::from_assignment((0..n).map(|_| rng.random_range(0..k)).collect())?;
        let r = rng.random_range(0.01..100.0);
        let witness = richness_witness(&target, r)?;
        report.richness_passed += (meta_axiom_cluster(&MetaAxiomModel { r }, &witness)? == target) as usize;
    }
    Ok(report)
}
