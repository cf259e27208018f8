//! Lloyd's algorithm with k-means++ seeding and best-of-restarts selection.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, MetaRng};
use crate::types::{squared_euclidean, Clustering, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Stop once no center moves farther than this.
    pub tolerance: f64,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            restarts: 10,
            max_iterations: 300,
            tolerance: 1e-8,
            seed,
        }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub clustering: Clustering,
    /// `k × d`, row `c` is the center of cluster id `c`.
    pub centers: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after each Lloyd iteration of the returned restart.
    pub history: Vec<f64>,
}

pub fn kmeans(x: &Dataset, cfg: &KMeansConfig) -> Result<KMeansResult> {
    if cfg.k < 1 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if cfg.k > x.n() {
        return Err(Error::invalid(format!("k = {} exceeds n = {}", cfg.k, x.n())));
    }
    if cfg.restarts < 1 {
        return Err(Error::invalid("restarts must be at least 1"));
    }
    // Each restart owns its stream, so the parallel argmin equals the
    // sequential one (ties go to the lower restart index).
    let runs: Vec<Restart> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(cfg.seed, r as u64);
            lloyd(x, cfg, &mut rng)
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.inertia < best.inertia { run } else { best })
        .expect("at least one restart");
    finish(x, best)
}

struct Restart {
    assignment: Vec<usize>,
    centers: Vec<Vec<f64>>,
    inertia: f64,
    history: Vec<f64>,
}

fn finish(x: &Dataset, run: Restart) -> Result<KMeansResult> {
    let clustering = Clustering::new(run.assignment.clone(), x.point_ids().to_vec())?;
    // Canonical ids renumber clusters; carry the centers along.
    let mut centers = vec![Vec::new(); clustering.k()];
    for (raw, canon) in run.assignment.iter().zip(clustering.assignment()) {
        if centers[*canon].is_empty() {
            centers[*canon] = run.centers[*raw].clone();
        }
    }
    Ok(KMeansResult {
        clustering,
        centers,
        inertia: run.inertia,
        history: run.history,
    })
}

fn plus_plus_init(x: &Dataset, k: usize, rng: &mut MetaRng) -> Vec<Vec<f64>> {
    let n = x.n();
    let mut centers = Vec::with_capacity(k);
    centers.push(x.row(rng.random_range(0..n)).to_vec());
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| squared_euclidean(x.row(i), &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = x.row(pick).to_vec();
        for (i, best) in nearest.iter_mut().enumerate() {
            *best = best.min(squared_euclidean(x.row(i), &c));
        }
        centers.push(c);
    }
    centers
}

fn nearest_center(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = squared_euclidean(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn lloyd(x: &Dataset, cfg: &KMeansConfig, rng: &mut MetaRng) -> Restart {
    let (n, d, k) = (x.n(), x.d(), cfg.k);
    let mut centers = plus_plus_init(x, k, rng);
    let mut assignment = vec![0; n];
    let mut history = Vec::new();

    for _ in 0..cfg.max_iterations.max(1) {
        let mut dist = vec![0.0; n];
        for i in 0..n {
            let (c, dd) = nearest_center(x.row(i), &centers);
            assignment[i] = c;
            dist[i] = dd;
        }
        refill_empty(&mut assignment, &mut dist, &mut centers, x);

        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assignment[i]] += 1;
            for (s, v) in sums[assignment[i]].iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            let new: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(squared_euclidean(&new, &centers[c]).sqrt());
            centers[c] = new;
        }
        history.push(inertia_of(x, &assignment, &centers));
        if shift <= cfg.tolerance {
            break;
        }
    }
    Restart {
        inertia: *history.last().expect("at least one iteration"),
        assignment,
        centers,
        history,
    }
}

/// Gives every empty cluster the point farthest from its current center,
/// taken from a cluster that can spare it.
fn refill_empty(assignment: &mut [usize], dist: &mut [f64], centers: &mut [Vec<f64>], x: &Dataset) {
    let k = centers.len();
    let mut counts = vec![0usize; k];
    for &c in assignment.iter() {
        counts[c] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut pick: Option<usize> = None;
        for i in 0..assignment.len() {
            if counts[assignment[i]] > 1 && pick.is_none_or(|p| dist[i] > dist[p]) {
                pick = Some(i);
            }
        }
        let p = pick.expect("k <= n guarantees a donor");
        counts[assignment[p]] -= 1;
        counts[empty] += 1;
        assignment[p] = empty;
        dist[p] = 0.0;
        centers[empty] = x.row(p).to_vec();
    }
}

fn inertia_of(x: &Dataset, assignment: &[usize], centers: &[Vec<f64>]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &c)| squared_euclidean(x.row(i), &centers[c]))
        .sum()
}
