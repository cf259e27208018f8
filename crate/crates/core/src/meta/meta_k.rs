//! Choosing the number of clusters: per-k linear models that map the
//! silhouette of a k-means run to its expected ARI against the truth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{kmeans, KMeansConfig};
use crate::error::{Error, Result};
use crate::meta::linear::{fit_linear, LinearModel};
use crate::metrics::{adjusted_rand_index, silhouette_from_distances};
use crate::rng::derive_seed;
use crate::types::{Clustering, Dataset, MetaRepository};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Every run of every problem is a regression sample.
    #[default]
    AllRuns,
    /// Only the best-silhouette run per problem and k.
    BestRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaKConfig {
    pub k_range: Vec<usize>,
    pub runs_per_k: usize,
    pub pooling: Pooling,
    pub ridge_lambda: f64,
}

impl Default for MetaKConfig {
    fn default() -> Self {
        Self {
            k_range: (2..=10).collect(),
            runs_per_k: 10,
            pooling: Pooling::AllRuns,
            ridge_lambda: 0.0,
        }
    }
}

impl MetaKConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_range.is_empty() {
            return Err(Error::invalid("k_range must be non-empty"));
        }
        if self.k_range.iter().any(|&k| k < 2) {
            return Err(Error::invalid("every k in k_range must be at least 2"));
        }
        if self.k_range.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("k_range must be strictly increasing"));
        }
        if self.runs_per_k < 1 {
            return Err(Error::invalid("runs_per_k must be at least 1"));
        }
        Ok(())
    }

    pub fn max_k(&self) -> usize {
        *self.k_range.last().unwrap_or(&0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaKModel {
    pub config: MetaKConfig,
    /// `models[i]` belongs to `config.k_range[i]`.
    pub models: Vec<LinearModel>,
    /// Training problems skipped because they have fewer points than the
    /// largest k.
    pub skipped: Vec<String>,
}

/// One single-start k-means run and its silhouette.
#[derive(Debug, Clone, PartialEq)]
pub struct KRun {
    pub k: usize,
    pub run: usize,
    pub silhouette: f64,
    pub clustering: Clustering,
}

/// All runs of a problem, grouped by k in `k_range` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemRuns {
    pub per_k: Vec<Vec<KRun>>,
}

impl ProblemRuns {
    pub fn all(&self) -> impl Iterator<Item = &KRun> {
        self.per_k.iter().flatten()
    }

    /// Best silhouette per k; ties go to the lowest run index.
    pub fn best_per_k(&self) -> Vec<&KRun> {
        self.per_k.iter().map(|runs| best_by_silhouette(runs.iter())).collect()
    }
}

fn best_by_silhouette<'a>(runs: impl Iterator<Item = &'a KRun>) -> &'a KRun {
    let mut best: Option<&KRun> = None;
    for r in runs {
        if best.is_none_or(|b| r.silhouette > b.silhouette) {
            best = Some(r);
        }
    }
    best.expect("at least one run")
}

/// `runs_per_k` single-start k-means runs for every k. Run `r` at `k` uses a
/// seed derived from `(seed, k, r)`, so the runs do not depend on the range.
pub fn kmeans_runs(x: &Dataset, config: &MetaKConfig, seed: u64) -> Result<ProblemRuns> {
    config.validate()?;
    if x.n() < config.max_k() {
        return Err(Error::invalid(format!(
            "{} points cannot form {} clusters",
            x.n(),
            config.max_k()
        )));
    }
    let dist = x.distance_matrix();
    let per_k = config
        .k_range
        .par_iter()
        .map(|&k| {
            (0..config.runs_per_k)
                .map(|run| {
                    let run_seed = derive_seed(derive_seed(seed, k as u64), run as u64);
                    let cfg = KMeansConfig::new(k, run_seed).with_restarts(1);
                    let clustering = kmeans(x, &cfg)?.clustering;
                    let silhouette = silhouette_from_distances(&dist, x.n(), &clustering)?;
                    Ok(KRun {
                        k,
                        run,
                        silhouette,
                        clustering,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProblemRuns { per_k })
}

/// Regression samples `(silhouette, ARI)` of one problem, per k.
pub fn training_samples(runs: &ProblemRuns, truth: &Clustering, pooling: Pooling) -> Result<Vec<Vec<(f64, f64)>>> {
    runs.per_k
        .iter()
        .map(|k_runs| {
            let chosen: Vec<&KRun> = match pooling {
                Pooling::AllRuns => k_runs.iter().collect(),
                Pooling::BestRun => vec![best_by_silhouette(k_runs.iter())],
            };
            chosen
                .into_iter()
                .map(|r| Ok((r.silhouette, adjusted_rand_index(truth, &r.clustering)?)))
                .collect()
        })
        .collect()
}

/// Fits one model per k from samples pooled over problems.
pub fn fit_meta_k(
    config: &MetaKConfig,
    samples: &[Vec<Vec<(f64, f64)>>],
    skipped: Vec<String>,
) -> Result<MetaKModel> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::invalid("no usable training problems"));
    }
    let models = (0..config.k_range.len())
        .map(|ki| {
            let (features, targets): (Vec<Vec<f64>>, Vec<f64>) = samples
                .iter()
                .flat_map(|per_k| per_k[ki].iter().map(|&(s, a)| (vec![s], a)))
                .unzip();
            fit_linear(&features, &targets, config.ridge_lambda)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetaKModel {
        config: config.clone(),
        models,
        skipped,
    })
}

pub fn meta_k_train(repo: &MetaRepository, config: &MetaKConfig, seed: u64) -> Result<MetaKModel> {
    config.validate()?;
    repo.require_non_empty()?;
    let per_problem: Vec<Option<Vec<Vec<(f64, f64)>>>> = repo
        .problems
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let x = p.dataset()?;
            if x.n() < config.max_k() {
                return Ok(None);
            }
            let runs = kmeans_runs(x, config, derive_seed(seed, i as u64))?;
            training_samples(&runs, &p.truth, config.pooling).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut skipped = Vec::new();
    let mut samples = Vec::new();
    for (p, s) in repo.problems.iter().zip(per_problem) {
        match s {
            Some(s) => samples.push(s),
            None => {
                log::warn!("skipping '{}': fewer than {} points", p.name(), config.max_k());
                skipped.push(p.name().to_string());
            }
        }
    }
    fit_meta_k(config, &samples, skipped)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KRow {
    pub k: usize,
    pub silhouette: f64,
    pub predicted_ari: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaKPrediction {
    pub k_hat: usize,
    pub clustering: Clustering,
    pub table: Vec<KRow>,
}

/// Picks the k whose best-silhouette run has the highest predicted ARI.
pub fn meta_k_predict_from_runs(model: &MetaKModel, runs: &ProblemRuns) -> Result<MetaKPrediction> {
    if runs.per_k.len() != model.models.len() {
        return Err(Error::LengthMismatch {
            left: runs.per_k.len(),
            right: model.models.len(),
        });
    }
    let best = runs.best_per_k();
    let table = best
        .iter()
        .zip(&model.models)
        .map(|(r, m)| {
            Ok(KRow {
                k: r.k,
                silhouette: r.silhouette,
                predicted_ari: m.predict(&[r.silhouette])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pick = 0;
    for (i, row) in table.iter().enumerate() {
        if row.predicted_ari > table[pick].predicted_ari {
            pick = i;
        }
    }
    Ok(MetaKPrediction {
        k_hat: table[pick].k,
        clustering: best[pick].clustering.clone(),
        table,
    })
}

pub fn meta_k_predict(model: &MetaKModel, x: &Dataset, seed: u64) -> Result<MetaKPrediction> {
    let runs = kmeans_runs(x, &model.config, seed)?;
    meta_k_predict_from_runs(model, &runs)
}

/// The run of globally highest silhouette; ties go to the smaller k, then
/// the lower run index.
pub fn silhouette_baseline_from_runs(runs: &ProblemRuns) -> (usize, Clustering) {
    let best = best_by_silhouette(runs.all());
    (best.k, best.clustering.clone())
}

pub fn silhouette_baseline_k(x: &Dataset, config: &MetaKConfig, seed: u64) -> Result<(usize, Clustering)> {
    let runs = kmeans_runs(x, config, seed)?;
    Ok(silhouette_baseline_from_runs(&runs))
}

/// The k of the run with the highest ARI against the truth (ties: smaller
/// k, lower run index), with that ARI.
pub fn best_ari_k(runs: &ProblemRuns, truth: &Clustering) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for r in runs.all() {
        let ari = adjusted_rand_index(truth, &r.clustering)?;
        if best.is_none_or(|(_, b)| ari > b) {
            best = Some((r.k, ari));
        }
    }
    best.ok_or(Error::EmptyInput)
}
