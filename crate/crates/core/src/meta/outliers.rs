//! Outlier removal as a learned preprocessing step: drop the fraction θ of
//! points farthest from the mean, cluster the rest, then attach each
//! removed point to the nearest cluster centroid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::AlgorithmSpec;
use crate::error::{Error, Result};
use crate::meta::linear::{fit_linear, LinearModel};
use crate::metrics::{adjusted_rand_index, clustering_loss, silhouette};
use crate::rng::derive_seed;
use crate::types::{squared_euclidean, Clustering, Dataset, MetaRepository};

/// Slack when flooring `θ·n`, so that e.g. `0.07 · 100` counts as 7.
const COUNT_SLACK: f64 = 1e-9;
/// Mean scores closer than this count as tied (the smaller θ wins).
pub const THETA_TIE_TOLERANCE: f64 = 1e-9;
/// Keeps the per-θ fit defined when every silhouette is identical.
const REGRESSION_RIDGE: f64 = 1e-9;

pub fn default_theta_grid() -> Vec<f64> {
    (0..=5).map(|i| i as f64 / 100.0).collect()
}

pub fn outlier_count(theta: f64, n: usize) -> usize {
    (theta * n as f64 + COUNT_SLACK).floor() as usize
}

/// Indices of the `count` points farthest from the mean; equal distances
/// remove the higher index first.
pub fn farthest_from_mean(x: &Dataset, count: usize) -> Vec<usize> {
    let mu = x.mean();
    let mut order: Vec<(f64, usize)> = (0..x.n()).map(|i| (squared_euclidean(x.row(i), &mu), i)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)));
    let mut out: Vec<usize> = order[..count.min(x.n())].iter().map(|&(_, i)| i).collect();
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierResult {
    pub clustering: Clustering,
    /// Silhouette of the clustering of the kept points.
    pub pruned_silhouette: f64,
    pub removed: Vec<usize>,
}

pub fn outlier_pipeline(x: &Dataset, theta: f64, base: &AlgorithmSpec, seed: u64) -> Result<OutlierResult> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::invalid(format!("theta must lie in [0, 1), got {theta}")));
    }
    let count = outlier_count(theta, x.n());
    if count >= x.n() {
        return Err(Error::invalid(format!("theta = {theta} removes all {} points", x.n())));
    }
    let removed = farthest_from_mean(x, count);
    let mut is_removed = vec![false; x.n()];
    for &i in &removed {
        is_removed[i] = true;
    }
    let kept: Vec<usize> = (0..x.n()).filter(|&i| !is_removed[i]).collect();
    let pruned = x.subset(&kept)?;
    let inner = base.run(&pruned, seed)?;
    let pruned_silhouette = silhouette(&pruned, &inner)?;
    if removed.is_empty() {
        return Ok(OutlierResult {
            clustering: inner,
            pruned_silhouette,
            removed,
        });
    }

    let k = inner.k();
    let mut centroids = vec![vec![0.0; x.d()]; k];
    for (pos, &c) in inner.assignment().iter().enumerate() {
        for (acc, v) in centroids[c].iter_mut().zip(pruned.row(pos)) {
            *acc += v;
        }
    }
    for (centroid, &size) in centroids.iter_mut().zip(&inner.cluster_sizes()) {
        centroid.iter_mut().for_each(|v| *v /= size as f64);
    }
    let mut assignment = vec![0; x.n()];
    for (pos, &i) in kept.iter().enumerate() {
        assignment[i] = inner.assignment()[pos];
    }
    for &i in &removed {
        let mut best = (0, f64::INFINITY);
        for (c, centroid) in centroids.iter().enumerate() {
            let d = squared_euclidean(x.row(i), centroid);
            if d < best.1 {
                best = (c, d);
            }
        }
        assignment[i] = best.0;
    }
    Ok(OutlierResult {
        clustering: Clustering::new(assignment, x.point_ids().to_vec())?,
        pruned_silhouette,
        removed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierMode {
    Erm,
    Regression,
}

/// Pipeline scores of one problem at one θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaOutcome {
    pub pruned_silhouette: f64,
    pub ari: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierConfig {
    pub theta_grid: Vec<f64>,
    pub base: AlgorithmSpec,
    /// Replace the base algorithm's k with each problem's true cluster count.
    pub k_from_truth: bool,
}

impl OutlierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.theta_grid.is_empty() {
            return Err(Error::invalid("theta grid must be non-empty"));
        }
        if let Some(t) = self.theta_grid.iter().find(|t| !(0.0..1.0).contains(*t)) {
            return Err(Error::invalid(format!("theta {t} outside [0, 1)")));
        }
        Ok(())
    }

    fn base_for(&self, truth: &Clustering) -> AlgorithmSpec {
        if self.k_from_truth {
            self.base.with_k(truth.k())
        } else {
            self.base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierModel {
    pub theta: f64,
    pub mode: OutlierMode,
    pub config: OutlierConfig,
    /// Per-θ models of full-data ARI from pruned silhouette (regression mode).
    pub regressors: Option<Vec<LinearModel>>,
    pub mean_ari: Vec<f64>,
    pub mean_loss: Vec<f64>,
    /// The score maximized per θ: mean ARI, or mean predicted ARI.
    pub scores: Vec<f64>,
}

/// Pipeline outcomes of one labeled problem at every θ of the grid. A failed
/// pipeline scores ARI 0, loss 1 and silhouette 0.
pub fn theta_outcomes(x: &Dataset, truth: &Clustering, config: &OutlierConfig, seed: u64) -> Vec<ThetaOutcome> {
    let base = config.base_for(truth);
    config
        .theta_grid
        .iter()
        .map(|&theta| {
            let attempt = outlier_pipeline(x, theta, &base, seed).and_then(|r| {
                Ok(ThetaOutcome {
                    pruned_silhouette: r.pruned_silhouette,
                    ari: adjusted_rand_index(truth, &r.clustering)?,
                    loss: clustering_loss(truth, &r.clustering),
                })
            });
            attempt.unwrap_or_else(|err| {
                log::warn!("outlier pipeline failed on '{}' at theta {theta}: {err}", x.name);
                ThetaOutcome {
                    pruned_silhouette: 0.0,
                    ari: 0.0,
                    loss: 1.0,
                }
            })
        })
        .collect()
}

fn argmax_with_tolerance(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] + THETA_TIE_TOLERANCE {
            best = i;
        }
    }
    best
}

pub fn fit_outlier_from_outcomes(
    config: &OutlierConfig,
    mode: OutlierMode,
    outcomes: &[Vec<ThetaOutcome>],
) -> Result<OutlierModel> {
    config.validate()?;
    if outcomes.is_empty() {
        return Err(Error::EmptyInput);
    }
    let g = config.theta_grid.len();
    let m = outcomes.len() as f64;
    let column = |t: usize, f: fn(&ThetaOutcome) -> f64| outcomes.iter().map(|o| f(&o[t])).sum::<f64>() / m;
    let mean_ari: Vec<f64> = (0..g).map(|t| column(t, |o| o.ari)).collect();
    let mean_loss: Vec<f64> = (0..g).map(|t| column(t, |o| o.loss)).collect();
    let (regressors, scores) = match mode {
        OutlierMode::Erm => (None, mean_ari.clone()),
        OutlierMode::Regression => {
            let mut models = Vec::with_capacity(g);
            let mut scores = Vec::with_capacity(g);
            for t in 0..g {
                let features: Vec<Vec<f64>> = outcomes.iter().map(|o| vec![o[t].pruned_silhouette]).collect();
                let targets: Vec<f64> = outcomes.iter().map(|o| o[t].ari).collect();
                let model = fit_linear(&features, &targets, REGRESSION_RIDGE)?;
                let mut total = 0.0;
                for f in &features {
                    total += model.predict(f)?;
                }
                scores.push(total / m);
                models.push(model);
            }
            (Some(models), scores)
        }
    };
    let best = argmax_with_tolerance(&scores);
    Ok(OutlierModel {
        theta: config.theta_grid[best],
        mode,
        config: config.clone(),
        regressors,
        mean_ari,
        mean_loss,
        scores,
    })
}

pub fn fit_outlier_fraction(
    repo: &MetaRepository,
    config: &OutlierConfig,
    mode: OutlierMode,
    seed: u64,
) -> Result<OutlierModel> {
    config.validate()?;
    repo.require_non_empty()?;
    let outcomes = repo
        .problems
        .par_iter()
        .enumerate()
        .map(|(i, p)| Ok(theta_outcomes(p.dataset()?, &p.truth, config, derive_seed(seed, i as u64))))
        .collect::<Result<Vec<_>>>()?;
    fit_outlier_from_outcomes(config, mode, &outcomes)
}
