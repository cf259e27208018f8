//! Per-problem algorithm selection: one regressor per algorithm predicts
//! the ARI of that algorithm's output from problem and clustering features,
//! and the algorithm with the highest prediction is chosen.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::AlgorithmSpec;
use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;
use crate::meta::linear::{fit_linear, LinearModel};
use crate::metrics::{adjusted_rand_index, silhouette_from_distances};
use crate::rng::derive_seed;
use crate::types::{Clustering, Dataset, MetaRepository};

/// `(d, m, σ_min, σ_max, silhouette)` of a dataset and one of its
/// clusterings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemFeatures {
    pub d: usize,
    pub m: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub sil: f64,
}

impl ProblemFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.d as f64, self.m as f64, self.sigma_min, self.sigma_max, self.sil]
    }
}

/// Extreme eigenvalues of the population covariance.
pub fn covariance_extremes(x: &Dataset) -> Result<(f64, f64)> {
    let eig = jacobi_eigen(&x.covariance(), x.d())?;
    Ok((eig.values[0], eig.values[x.d() - 1]))
}

pub fn problem_features(x: &Dataset, c: &Clustering) -> Result<ProblemFeatures> {
    let (sigma_min, sigma_max) = covariance_extremes(x)?;
    let sil = crate::metrics::silhouette(x, c)?;
    Ok(ProblemFeatures {
        d: x.d(),
        m: x.n(),
        sigma_min,
        sigma_max,
        sil,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RegressorKind {
    Ridge { lambda: f64 },
}

impl Default for RegressorKind {
    fn default() -> Self {
        RegressorKind::Ridge { lambda: 1e-3 }
    }
}

impl RegressorKind {
    pub fn fit(&self, features: &[Vec<f64>], targets: &[f64]) -> Result<LinearModel> {
        match *self {
            RegressorKind::Ridge { lambda } => fit_linear(features, targets, lambda),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoSelectModel {
    pub algorithms: Vec<AlgorithmSpec>,
    pub regressors: Vec<LinearModel>,
    pub regressor: RegressorKind,
}

/// What one algorithm produced on one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoOutcome {
    pub clustering: Option<Clustering>,
    pub features: ProblemFeatures,
    /// ARI against the truth when known; 0 for a failed run.
    pub ari: Option<f64>,
}

/// Runs every algorithm on `x`. Algorithm `j` gets a seed derived from
/// `(seed, j)`. A failed run keeps the data features with silhouette 0.
pub fn run_algorithms(
    x: &Dataset,
    truth: Option<&Clustering>,
    algorithms: &[AlgorithmSpec],
    seed: u64,
) -> Result<Vec<AlgoOutcome>> {
    let (sigma_min, sigma_max) = covariance_extremes(x)?;
    let dist = x.distance_matrix();
    let base = ProblemFeatures {
        d: x.d(),
        m: x.n(),
        sigma_min,
        sigma_max,
        sil: 0.0,
    };
    algorithms
        .par_iter()
        .enumerate()
        .map(|(j, spec)| {
            let attempt = spec.run(x, derive_seed(seed, j as u64)).and_then(|c| {
                let sil = silhouette_from_distances(&dist, x.n(), &c)?;
                Ok((c, sil))
            });
            match attempt {
                Ok((c, sil)) => {
                    let ari = truth.map(|y| adjusted_rand_index(y, &c)).transpose()?;
                    Ok(AlgoOutcome {
                        clustering: Some(c),
                        features: ProblemFeatures { sil, ..base },
                        ari,
                    })
                }
                Err(err) => {
                    log::warn!("{} failed on '{}': {err}", spec.label(), x.name);
                    Ok(AlgoOutcome {
                        clustering: None,
                        features: base,
                        ari: truth.map(|_| 0.0),
                    })
                }
            }
        })
        .collect()
}

/// Fits one regressor per algorithm from per-problem outcomes (each inner
/// vector in algorithm order, with ARI filled in).
pub fn fit_algo_select(
    algorithms: &[AlgorithmSpec],
    outcomes: &[Vec<AlgoOutcome>],
    regressor: RegressorKind,
) -> Result<AlgoSelectModel> {
    if algorithms.is_empty() || outcomes.is_empty() {
        return Err(Error::EmptyInput);
    }
    let regressors = (0..algorithms.len())
        .map(|j| {
            let mut features = Vec::with_capacity(outcomes.len());
            let mut targets = Vec::with_capacity(outcomes.len());
            for per_problem in outcomes {
                let o = per_problem.get(j).ok_or(Error::LengthMismatch {
                    left: per_problem.len(),
                    right: algorithms.len(),
                })?;
                features.push(o.features.to_vec());
                targets.push(o.ari.ok_or_else(|| Error::invalid("training outcome without ARI"))?);
            }
            regressor.fit(&features, &targets)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AlgoSelectModel {
        algorithms: algorithms.to_vec(),
        regressors,
        regressor,
    })
}

pub fn algo_select_train(
    repo: &MetaRepository,
    algorithms: &[AlgorithmSpec],
    regressor: RegressorKind,
    seed: u64,
) -> Result<AlgoSelectModel> {
    repo.require_non_empty()?;
    let outcomes = repo
        .problems
        .par_iter()
        .enumerate()
        .map(|(i, p)| run_algorithms(p.dataset()?, Some(&p.truth), algorithms, derive_seed(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    fit_algo_select(algorithms, &outcomes, regressor)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoSelection {
    pub index: usize,
    pub clustering: Clustering,
    /// Predicted ARI per algorithm; `None` where the algorithm failed.
    pub predicted: Vec<Option<f64>>,
}

/// Argmax of predicted ARI over the algorithms that succeeded; ties go to
/// the smallest index.
pub fn select_from_outcomes(model: &AlgoSelectModel, outcomes: &[AlgoOutcome]) -> Result<AlgoSelection> {
    if outcomes.len() != model.regressors.len() {
        return Err(Error::LengthMismatch {
            left: outcomes.len(),
            right: model.regressors.len(),
        });
    }
    let predicted = outcomes
        .iter()
        .zip(&model.regressors)
        .map(|(o, reg)| match o.clustering {
            Some(_) => reg.predict(&o.features.to_vec()).map(Some),
            None => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<usize> = None;
    for (j, p) in predicted.iter().enumerate() {
        if let Some(v) = p {
            if best.is_none_or(|b| *v > predicted[b].expect("chosen entry is present")) {
                best = Some(j);
            }
        }
    }
    let index = best.ok_or(Error::AllAlgorithmsFailed)?;
    Ok(AlgoSelection {
        index,
        clustering: outcomes[index].clustering.clone().expect("chosen algorithm succeeded"),
        predicted,
    })
}

pub fn algo_select_predict(model: &AlgoSelectModel, x: &Dataset, seed: u64) -> Result<AlgoSelection> {
    let outcomes = run_algorithms(x, None, &model.algorithms, seed)?;
    select_from_outcomes(model, &outcomes)
}
