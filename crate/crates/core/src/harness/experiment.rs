//! Seeded train/test experiments over a repository of labeled problems.
//!
//! Expensive per-problem work (k-means runs, algorithm outcomes, pipeline
//! scores, graphs) is computed once per problem with a seed derived from its
//! position in the full repository, so every split sees the same outcome for
//! the same problem. Each split then only refits the cheap meta-level model.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bsf::pairs::{build_meta_splits, group_labels, majority_baseline, DEFAULT_PAIR_CAP, MAX_DIM};
use crate::bsf::{pair_accuracy, train_bsf, BsfConfig};
use crate::clustering::{euclidean_to_graph, AlgorithmSpec, Family};
use crate::error::{Error, Result};
use crate::meta::algo_select::{fit_algo_select, run_algorithms, select_from_outcomes, AlgoOutcome, RegressorKind};
use crate::meta::erm::{ThresholdLinkage, UnsupervisedAlgorithm};
use crate::meta::meta_k::{
    best_ari_k, fit_meta_k, kmeans_runs, meta_k_predict_from_runs, silhouette_baseline_from_runs, training_samples,
    MetaKConfig, ProblemRuns,
};
use crate::meta::outliers::{
    default_theta_grid, fit_outlier_from_outcomes, theta_outcomes, OutlierConfig, OutlierMode, ThetaOutcome,
};
use crate::meta::threshold::fit_single_linkage_threshold;
use crate::metrics::{adjusted_rand_index, clustering_loss, rmse_k, silhouette};
use crate::rng::{derive_seed, seeded_rng, stream_rng};
use crate::types::{Clustering, LabeledProblem, MetaRepository, ProblemData, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    MetaK,
    AlgoSelect,
    Outliers,
    Threshold,
    Bsf,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::MetaK,
        ExperimentKind::AlgoSelect,
        ExperimentKind::Outliers,
        ExperimentKind::Threshold,
        ExperimentKind::Bsf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::MetaK => "meta_k",
            ExperimentKind::AlgoSelect => "algo_select",
            ExperimentKind::Outliers => "outliers",
            ExperimentKind::Threshold => "threshold",
            ExperimentKind::Bsf => "bsf",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown experiment kind '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgoSelectExperiment {
    pub algorithms: Vec<AlgorithmSpec>,
    pub regressor: RegressorKind,
    /// Run every algorithm with the problem's true cluster count.
    pub k_from_truth: bool,
}

impl Default for AlgoSelectExperiment {
    fn default() -> Self {
        Self {
            algorithms: AlgorithmSpec::default_family(2),
            regressor: RegressorKind::default(),
            k_from_truth: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BsfExperiment {
    pub epochs: usize,
    pub batch_size: usize,
    pub pair_cap: usize,
}

impl Default for BsfExperiment {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 250,
            pair_cap: DEFAULT_PAIR_CAP,
        }
    }
}

pub fn default_outlier_config() -> OutlierConfig {
    OutlierConfig {
        theta_grid: default_theta_grid(),
        base: AlgorithmSpec::new(Family::Kmeans, false, 2),
        k_from_truth: true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub train_fraction: f64,
    pub bootstrap_resamples: usize,
    pub meta_k: MetaKConfig,
    pub algo_select: AlgoSelectExperiment,
    pub outliers: OutlierConfig,
    pub bsf: BsfExperiment,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            bootstrap_resamples: 1000,
            meta_k: MetaKConfig::default(),
            algo_select: AlgoSelectExperiment::default(),
            outliers: default_outlier_config(),
            bsf: BsfExperiment::default(),
        }
    }
}

/// One evaluated (problem, method) pair of one split. Metrics that do not
/// apply to the method are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub split: usize,
    pub problem: String,
    pub method: String,
    /// What the method chose: k, algorithm label, θ or r.
    pub choice: String,
    pub ari: Option<f64>,
    pub loss: Option<f64>,
    pub silhouette: Option<f64>,
    pub accuracy: Option<f64>,
    pub k_hat: Option<usize>,
    pub k_star: Option<usize>,
}

impl ResultRow {
    fn new(split: usize, problem: &str, method: &str, choice: String) -> Self {
        Self {
            split,
            problem: problem.to_string(),
            method: method.to_string(),
            choice,
            ari: None,
            loss: None,
            silhouette: None,
            accuracy: None,
            k_hat: None,
            k_star: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub split: usize,
    pub seed: u64,
    pub method: String,
    pub metric: String,
    pub value: f64,
}

/// Mean over splits with a percentile-bootstrap 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: String,
    pub metric: String,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub splits: usize,
    pub config: serde_json::Value,
    pub rows: Vec<ResultRow>,
    pub split_summaries: Vec<SplitSummary>,
    pub aggregates: Vec<Aggregate>,
    pub notes: Vec<String>,
    /// Model fitted on the whole repository, where the kind has one.
    pub full_fit: Option<serde_json::Value>,
}

impl ExperimentReport {
    pub fn aggregate(&self, method: &str, metric: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.method == method && a.metric == metric)
    }

    /// Per-split values of one (method, metric), in split order.
    pub fn split_values(&self, method: &str, metric: &str) -> Vec<f64> {
        self.split_summaries
            .iter()
            .filter(|s| s.method == method && s.metric == metric)
            .map(|s| s.value)
            .collect()
    }

    /// Methods in first-appearance order.
    pub fn methods(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.method) {
                out.push(r.method.clone());
            }
        }
        out
    }
}

/// Train/test problem indices: a seeded shuffle, the first
/// `round(fraction · n)` for training.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!("train fraction {train_fraction} must lie in (0, 1)")));
    }
    let train_len = (train_fraction * n as f64).round() as usize;
    if train_len == 0 || train_len >= n {
        return Err(Error::invalid(format!(
            "splitting {n} problems at {train_fraction} leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(seed));
    let test = order.split_off(train_len);
    Ok((order, test))
}

pub fn split_repo(repo: &MetaRepository, train_fraction: f64, seed: u64) -> Result<(MetaRepository, MetaRepository)> {
    let (train, test) = split_indices(repo.len(), train_fraction, seed)?;
    Ok((repo.subset(&train), repo.subset(&test)))
}

/// Percentile bootstrap of the mean: `(low, high)` at 2.5% and 97.5%,
/// widened if needed so the interval contains the sample mean.
pub fn bootstrap_interval(values: &[f64], resamples: usize, seed: u64) -> Result<(f64, f64)> {
    if values.is_empty() || resamples == 0 {
        return Err(Error::EmptyInput);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut rng = seeded_rng(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let lo_idx = ((0.025 * resamples as f64).floor() as usize).min(resamples - 1);
    let hi_idx = ((0.975 * resamples as f64).ceil() as usize).clamp(1, resamples) - 1;
    Ok((means[lo_idx].min(mean), means[hi_idx].max(mean)))
}

const CACHE_TAG: u64 = 0xC0FF_EE00;
const BOOTSTRAP_TAG: u64 = 0xB007_5000;

fn problem_seed(seed: u64, index: usize) -> u64 {
    derive_seed(derive_seed(seed, CACHE_TAG), index as u64)
}

fn split_seed(seed: u64, split: usize) -> u64 {
    derive_seed(seed, split as u64)
}

/// Runs `splits` seeded train/test resamples of one experiment kind.
pub fn run_experiment(
    kind: ExperimentKind,
    config: &ExperimentConfig,
    repo: &MetaRepository,
    splits: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if splits == 0 {
        return Err(Error::invalid("splits must be at least 1"));
    }
    repo.require_non_empty()?;
    if kind != ExperimentKind::Bsf {
        // Validates the fraction and the repository size up front.
        split_indices(repo.len(), config.train_fraction, seed)?;
    }
    let mut notes = Vec::new();
    let (per_split, full_fit) = match kind {
        ExperimentKind::MetaK => (meta_k_experiment(config, repo, splits, seed, &mut notes)?, None),
        ExperimentKind::AlgoSelect => (algo_select_experiment(config, repo, splits, seed)?, None),
        ExperimentKind::Outliers => (outlier_experiment(config, repo, splits, seed, &mut notes)?, None),
        ExperimentKind::Threshold => threshold_experiment(config, repo, splits, seed)?,
        ExperimentKind::Bsf => (bsf_experiment(config, repo, splits, seed, &mut notes)?, None),
    };

    let rows: Vec<ResultRow> = per_split.into_iter().flatten().collect();
    let split_summaries = summarize(&rows, kind, splits, seed);
    let aggregates = aggregate(&split_summaries, config.bootstrap_resamples, seed)?;
    Ok(ExperimentReport {
        kind,
        seed,
        splits,
        config: serde_json::to_value(config)?,
        rows,
        split_summaries,
        aggregates,
        notes,
        full_fit,
    })
}

/// Runs `f` for every split in parallel, collecting in split order; a
/// failure is reported with its split and seed.
fn for_each_split<F>(splits: usize, seed: u64, f: F) -> Result<Vec<Vec<ResultRow>>>
where
    F: Fn(usize, u64) -> Result<Vec<ResultRow>> + Sync,
{
    (0..splits)
        .into_par_iter()
        .map(|s| {
            let s_seed = split_seed(seed, s);
            f(s, s_seed).map_err(|e| Error::SplitFailed {
                split: s,
                seed: s_seed,
                source: Box::new(e),
            })
        })
        .collect()
}

fn metric_names(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::MetaK => &["ari", "loss", "rmse_k"],
        ExperimentKind::AlgoSelect | ExperimentKind::Outliers | ExperimentKind::Threshold => &["ari", "loss"],
        ExperimentKind::Bsf => &["accuracy"],
    }
}

fn row_metric(row: &ResultRow, metric: &str) -> Option<f64> {
    match metric {
        "ari" => row.ari,
        "loss" => row.loss,
        "accuracy" => row.accuracy,
        _ => None,
    }
}

/// Per (split, method, metric) means of the rows; `rmse_k` is computed from
/// the rows' `k_hat` and `k_star`.
fn summarize(rows: &[ResultRow], kind: ExperimentKind, splits: usize, seed: u64) -> Vec<SplitSummary> {
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let mut out = Vec::new();
    for split in 0..splits {
        for &method in &methods {
            let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.split == split && r.method == method).collect();
            for &metric in metric_names(kind) {
                let value = if metric == "rmse_k" {
                    let pairs: Vec<(usize, usize)> = mine.iter().filter_map(|r| Some((r.k_hat?, r.k_star?))).collect();
                    if pairs.is_empty() {
                        None
                    } else {
                        let (hat, star): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
                        rmse_k(&hat, &star).ok()
                    }
                } else {
                    let vals: Vec<f64> = mine.iter().filter_map(|r| row_metric(r, metric)).collect();
                    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
                };
                if let Some(value) = value {
                    out.push(SplitSummary {
                        split,
                        seed: split_seed(seed, split),
                        method: method.to_string(),
                        metric: metric.to_string(),
                        value,
                    });
                }
            }
        }
    }
    out
}

fn aggregate(summaries: &[SplitSummary], resamples: usize, seed: u64) -> Result<Vec<Aggregate>> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for s in summaries {
        if !keys.contains(&(s.method.as_str(), s.metric.as_str())) {
            keys.push((&s.method, &s.metric));
        }
    }
    let boot_seed = derive_seed(seed, BOOTSTRAP_TAG);
    keys.iter()
        .enumerate()
        .map(|(i, &(method, metric))| {
            let values: Vec<f64> = summaries
                .iter()
                .filter(|s| s.method == method && s.metric == metric)
                .map(|s| s.value)
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let (ci_low, ci_high) = bootstrap_interval(&values, resamples.max(1), derive_seed(boot_seed, i as u64))?;
            Ok(Aggregate {
                method: method.to_string(),
                metric: metric.to_string(),
                mean,
                ci_low,
                ci_high,
            })
        })
        .collect()
}

fn meta_k_experiment(
    config: &ExperimentConfig,
    repo: &MetaRepository,
    splits: usize,
    seed: u64,
    notes: &mut Vec<String>,
) -> Result<Vec<Vec<ResultRow>>> {
    let cfg = &config.meta_k;
    cfg.validate()?;
    let cache: Vec<Option<ProblemRuns>> = repo
        .problems
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let x = p.dataset()?;
            if x.n() < cfg.max_k() {
                return Ok(None);
            }
            kmeans_runs(x, cfg, problem_seed(seed, i)).map(Some)
        })
        .collect::<Result<_>>()?;
    for (p, c) in repo.problems.iter().zip(&cache) {
        if c.is_none() {
            notes.push(format!("'{}' skipped: fewer than {} points", p.name(), cfg.max_k()));
        }
    }
    for_each_split(splits, seed, |split, s_seed| {
        let (train, test) = split_indices(repo.len(), config.train_fraction, s_seed)?;
        let samples = train
            .iter()
            .filter_map(|&i| cache[i].as_ref().map(|r| training_samples(r, &repo.problems[i].truth, cfg.pooling)))
            .collect::<Result<Vec<_>>>()?;
        let model = fit_meta_k(cfg, &samples, Vec::new())?;
        let mut rows = Vec::new();
        for &i in &test {
            let Some(runs) = &cache[i] else { continue };
            let p = &repo.problems[i];
            let (k_star, _) = best_ari_k(runs, &p.truth)?;
            let pred = meta_k_predict_from_runs(&model, runs)?;
            let pred_sil = pred.table.iter().find(|r| r.k == pred.k_hat).map(|r| r.silhouette);
            let (base_k, base_c) = silhouette_baseline_from_runs(runs);
            let base_sil = runs.all().find(|r| r.k == base_k && r.clustering == base_c).map(|r| r.silhouette);
            for (method, k_hat, c, sil) in [
                ("meta_k", pred.k_hat, &pred.clustering, pred_sil),
                ("silhouette_baseline", base_k, &base_c, base_sil),
            ] {
                let mut row = ResultRow::new(split, p.name(), method, k_hat.to_string());
                row.ari = Some(adjusted_rand_index(&p.truth, c)?);
                row.loss = Some(clustering_loss(&p.truth, c));
                row.silhouette = sil;
                row.k_hat = Some(k_hat);
                row.k_star = Some(k_star);
                rows.push(row);
            }
        }
        Ok(rows)
    })
}

fn algorithms_for(cfg: &AlgoSelectExperiment, truth: &Clustering) -> Vec<AlgorithmSpec> {
    if cfg.k_from_truth {
        cfg.algorithms.iter().map(|a| a.with_k(truth.k())).collect()
    } else {
        cfg.algorithms.clone()
    }
}

fn algo_select_experiment(
    config: &ExperimentConfig,
    repo: &MetaRepository,
    splits: usize,
    seed: u64,
) -> Result<Vec<Vec<ResultRow>>> {
    let cfg = &config.algo_select;
    if cfg.algorithms.is_empty() {
        return Err(Error::invalid("no algorithms configured"));
    }
    let cache: Vec<Vec<AlgoOutcome>> = repo
        .problems
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            run_algorithms(p.dataset()?, Some(&p.truth), &algorithms_for(cfg, &p.truth), problem_seed(seed, i))
        })
        .collect::<Result<_>>()?;
    let labels: Vec<String> = cfg.algorithms.iter().map(AlgorithmSpec::label).collect();
    for_each_split(splits, seed, |split, s_seed| {
        let (train, test) = split_indices(repo.len(), config.train_fraction, s_seed)?;
        let outcomes: Vec<Vec<AlgoOutcome>> = train.iter().map(|&i| cache[i].clone()).collect();
        let model = fit_algo_select(&cfg.algorithms, &outcomes, cfg.regressor)?;
        let mut rows = Vec::new();
        for &i in &test {
            let p = &repo.problems[i];
            let outcome = &cache[i];
            let pick = select_from_outcomes(&model, outcome)?;
            let mut push = |method: &str, j: usize| {
                let o = &outcome[j];
                let mut row = ResultRow::new(split, p.name(), method, labels[j].clone());
                row.ari = o.ari;
                row.loss = Some(o.clustering.as_ref().map_or(1.0, |c| clustering_loss(&p.truth, c)));
                row.silhouette = o.clustering.as_ref().map(|_| o.features.sil);
                rows.push(row);
            };
            push("selector", pick.index);
            for (j, label) in labels.iter().enumerate() {
                push(label, j);
            }
        }
        Ok(rows)
    })
}

fn theta_label(theta: f64) -> String {
    format!("{theta}")
}

fn outlier_experiment(
    config: &ExperimentConfig,
    repo: &MetaRepository,
    splits: usize,
    seed: u64,
    notes: &mut Vec<String>,
) -> Result<Vec<Vec<ResultRow>>> {
    let cfg = &config.outliers;
    cfg.validate()?;
    let cache: Vec<Vec<ThetaOutcome>> = repo
        .problems
        .par_iter()
        .enumerate()
        .map(|(i, p)| Ok(theta_outcomes(p.dataset()?, &p.truth, cfg, problem_seed(seed, i))))
        .collect::<Result<_>>()?;
    let zero = cfg.theta_grid.iter().position(|&t| t == 0.0);
    if zero.is_none() {
        notes.push("theta grid has no 0; the no_removal baseline is omitted".into());
    }
    for_each_split(splits, seed, |split, s_seed| {
        let (train, test) = split_indices(repo.len(), config.train_fraction, s_seed)?;
        let outcomes: Vec<Vec<ThetaOutcome>> = train.iter().map(|&i| cache[i].clone()).collect();
        let mut chosen = Vec::new();
        for (method, mode) in [("erm", OutlierMode::Erm), ("regression", OutlierMode::Regression)] {
            let model = fit_outlier_from_outcomes(cfg, mode, &outcomes)?;
            let t = cfg.theta_grid.iter().position(|&t| t == model.theta).expect("theta from grid");
            chosen.push((method, t));
        }
        if let Some(t) = zero {
            chosen.push(("no_removal", t));
        }
        let mut rows = Vec::new();
        for &i in &test {
            for &(method, t) in &chosen {
                let o = &cache[i][t];
                let mut row = ResultRow::new(split, repo.problems[i].name(), method, theta_label(cfg.theta_grid[t]));
                row.ari = Some(o.ari);
                row.loss = Some(o.loss);
                row.silhouette = Some(o.pruned_silhouette);
                rows.push(row);
            }
        }
        Ok(rows)
    })
}

fn as_graph(p: &LabeledProblem) -> Result<WeightedGraph> {
    match &p.data {
        ProblemData::Graph(g) => Ok(g.clone()),
        ProblemData::Euclidean(x) => euclidean_to_graph(x),
    }
}

#[derive(Serialize)]
struct ThresholdFit {
    r: f64,
    mean_loss: f64,
}

type SplitRows = Vec<Vec<ResultRow>>;

fn threshold_experiment(
    config: &ExperimentConfig,
    repo: &MetaRepository,
    splits: usize,
    seed: u64,
) -> Result<(SplitRows, Option<serde_json::Value>)> {
    let graphs: Vec<(WeightedGraph, Clustering)> = repo
        .problems
        .par_iter()
        .map(|p| Ok((as_graph(p)?, p.truth.clone())))
        .collect::<Result<_>>()?;
    let full = fit_single_linkage_threshold(&graphs)?;
    let full_fit = serde_json::to_value(ThresholdFit {
        r: full.r,
        mean_loss: full.empirical_mean_loss,
    })?;
    let rows = for_each_split(splits, seed, |split, s_seed| {
        let (train, test) = split_indices(repo.len(), config.train_fraction, s_seed)?;
        let train_graphs: Vec<(WeightedGraph, Clustering)> = train.iter().map(|&i| graphs[i].clone()).collect();
        let model = fit_single_linkage_threshold(&train_graphs)?;
        let algo = ThresholdLinkage { r: model.r };
        let mut rows = Vec::new();
        for &i in &test {
            let p = &repo.problems[i];
            let c = algo.cluster(&ProblemData::Graph(graphs[i].0.clone()))?;
            let mut row = ResultRow::new(split, p.name(), "threshold", format!("{}", model.r));
            row.ari = Some(adjusted_rand_index(&p.truth, &c)?);
            row.loss = Some(clustering_loss(&p.truth, &c));
            if let (Some(x), true) = (p.data.as_dataset(), c.k() >= 2 && c.k() < c.len()) {
                row.silhouette = silhouette(x, &c).ok();
            }
            rows.push(row);
        }
        Ok(rows)
    })?;
    Ok((rows, Some(full_fit)))
}

/// Problems the pair classifier accepts: at most 10 features and 1000
/// points.
pub fn bsf_eligible(p: &LabeledProblem) -> bool {
    p.data
        .as_dataset()
        .is_some_and(|x| x.d() <= MAX_DIM && x.n() <= 1000)
}

fn bsf_experiment(
    config: &ExperimentConfig,
    repo: &MetaRepository,
    splits: usize,
    seed: u64,
    notes: &mut Vec<String>,
) -> Result<Vec<Vec<ResultRow>>> {
    let keep: Vec<usize> = (0..repo.len()).filter(|&i| bsf_eligible(&repo.problems[i])).collect();
    for p in repo.problems.iter().filter(|p| !bsf_eligible(p)) {
        notes.push(format!("'{}' excluded: more than 10 features or 1000 points", p.name()));
    }
    notes.push("problems are split into pair-training and held-out categories per split; train_fraction is unused".into());
    let repo = repo.subset(&keep);
    let cfg = config.bsf;
    for_each_split(splits, seed, |split, s_seed| {
        let mut rng = stream_rng(s_seed, 0);
        let meta = build_meta_splits(&repo, &mut rng, cfg.pair_cap)?;
        let model = train_bsf(
            &meta,
            &BsfConfig {
                epochs: cfg.epochs,
                batch_size: cfg.batch_size,
                seed: derive_seed(s_seed, 1),
            },
        )?;
        // group_labels orders groups by ascending problem id, as here.
        let majority = majority_baseline(&group_labels(&meta.meta_et))?;
        let mut ids: Vec<usize> = meta.meta_et.iter().map(|p| p.problem).collect();
        ids.sort_unstable();
        ids.dedup();
        let mut rows = Vec::new();
        for (g, &id) in ids.iter().enumerate() {
            let pairs: Vec<_> = meta.meta_et.iter().filter(|p| p.problem == id).cloned().collect();
            let name = repo.problems[id].name();
            let mut row = ResultRow::new(split, name, "bsf", "pair_classifier".into());
            row.accuracy = Some(pair_accuracy(&model.net, &pairs)?);
            rows.push(row);
            let mut row = ResultRow::new(split, name, "majority", "majority_label".into());
            row.accuracy = Some(majority.per_problem[g]);
            rows.push(row);
        }
        Ok(rows)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::{generate_synthetic, SyntheticSpec};
    use crate::types::{Dataset, Edge, Labeling};

    fn tiny_repo(problems: usize, seed: u64) -> MetaRepository {
        generate_synthetic(&SyntheticSpec {
            problems,
            k_choices: vec![2, 3],
            d_range: (2, 3),
            n_range: (30, 40),
            seed,
            ..Default::default()
        })
        .unwrap()
    }

    fn quick_config() -> ExperimentConfig {
        ExperimentConfig {
            bootstrap_resamples: 200,
            meta_k: MetaKConfig {
                k_range: vec![2, 3, 4],
                runs_per_k: 3,
                ..Default::default()
            },
            algo_select: AlgoSelectExperiment {
                algorithms: vec![
                    AlgorithmSpec::new(Family::Kmeans, false, 2),
                    AlgorithmSpec::new(Family::SingleLinkage, false, 2),
                ],
                ..Default::default()
            },
            bsf: BsfExperiment {
                epochs: 1,
                batch_size: 100,
                pair_cap: 50,
            },
            ..Default::default()
        }
    }

    #[test]
    fn split_sizes_and_coverage() {
        let (train, test) = split_indices(10, 0.8, 3).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        for seed in 0..50 {
            let (train, test) = split_indices(17, 0.7, seed).unwrap();
            let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
            all.sort();
            assert_eq!(all, (0..17).collect::<Vec<_>>());
            assert_eq!(split_indices(17, 0.7, seed).unwrap(), (train, test));
        }
        assert!(split_indices(3, 0.1, 0).is_err());
        assert!(split_indices(3, 0.9, 0).is_err());
        assert!(split_indices(10, 1.0, 0).is_err());
        let repo = tiny_repo(10, 0);
        let (a, b) = split_repo(&repo, 0.8, 1).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
    }

    #[test]
    fn bootstrap_properties() {
        let (lo, hi) = bootstrap_interval(&[0.4], 1000, 1).unwrap();
        assert_eq!((lo, hi), (0.4, 0.4));
        let values: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let mean = values.iter().sum::<f64>() / 20.0;
        let (lo, hi) = bootstrap_interval(&values, 1000, 2).unwrap();
        assert!(lo <= mean && mean <= hi && lo < hi);
        assert_eq!(bootstrap_interval(&values, 1000, 2).unwrap(), (lo, hi));
    }

    #[test]
    fn meta_k_report_schema() {
        let repo = tiny_repo(10, 1);
        let r = run_experiment(ExperimentKind::MetaK, &quick_config(), &repo, 2, 5).unwrap();
        assert_eq!(r.methods(), vec!["meta_k", "silhouette_baseline"]);
        assert_eq!(r.rows.len(), 2 * 2 * 2);
        for m in ["meta_k", "silhouette_baseline"] {
            for metric in ["ari", "rmse_k"] {
                assert!(r.aggregate(m, metric).is_some());
            }
        }
    }

    #[test]
    fn aggregates_recomputable_and_intervals_contain_means() {
        let repo = tiny_repo(10, 2);
        for kind in [ExperimentKind::AlgoSelect, ExperimentKind::Outliers, ExperimentKind::Threshold] {
            let r = run_experiment(kind, &quick_config(), &repo, 3, 9).unwrap();
            for a in &r.aggregates {
                assert!(a.ci_low <= a.mean && a.mean <= a.ci_high);
                if a.metric == "rmse_k" {
                    continue;
                }
                let per_split: Vec<f64> = (0..3)
                    .map(|s| {
                        let v: Vec<f64> = r
                            .rows
                            .iter()
                            .filter(|row| row.split == s && row.method == a.method)
                            .filter_map(|row| row_metric(row, &a.metric))
                            .collect();
                        v.iter().sum::<f64>() / v.len() as f64
                    })
                    .collect();
                let mean = per_split.iter().sum::<f64>() / 3.0;
                assert!((mean - a.mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_split_degenerate_interval() {
        let repo = tiny_repo(10, 3);
        let r = run_experiment(ExperimentKind::AlgoSelect, &quick_config(), &repo, 1, 0).unwrap();
        assert!(r.aggregates.iter().all(|a| a.ci_low == a.mean && a.ci_high == a.mean));
    }

    #[test]
    fn deterministic_json() {
        let repo = tiny_repo(8, 4);
        for kind in ExperimentKind::ALL {
            let a = run_experiment(kind, &quick_config(), &repo, 2, 11).unwrap();
            let b = run_experiment(kind, &quick_config(), &repo, 2, 11).unwrap();
            assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap(), "{kind}");
        }
    }

    #[test]
    fn threshold_full_fit_on_two_graphs() {
        // Two 3-vertex graphs whose truths are both recovered exactly at r = 2.
        let e = |u, v, w| Edge { u, v, w };
        let g1 = WeightedGraph::new(3, vec![e(0, 1, 1.0), e(1, 2, 3.0), e(0, 2, 4.0)]).unwrap();
        let g2 = WeightedGraph::new(3, vec![e(0, 1, 0.5), e(1, 2, 2.0), e(0, 2, 5.0)]).unwrap();
        let t1 = Clustering::from_assignment(vec![0, 0, 1]).unwrap();
        let t2 = Clustering::from_assignment(vec![0, 0, 0]).unwrap();
        let mk = |g: WeightedGraph, t: Clustering, name: &str| {
            let mut p = LabeledProblem::new(ProblemData::Graph(g), t).unwrap();
            p.provenance.name = name.into();
            p
        };
        let repo = MetaRepository::new(vec![mk(g1, t1, "g1"), mk(g2, t2, "g2")]);
        let cfg = ExperimentConfig {
            train_fraction: 0.5,
            ..quick_config()
        };
        let r = run_experiment(ExperimentKind::Threshold, &cfg, &repo, 2, 0).unwrap();
        let full = r.full_fit.unwrap();
        assert_eq!(full["r"], 2.0);
        assert_eq!(full["mean_loss"], 0.0);
    }

    #[test]
    fn failures_name_the_split() {
        let x = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let p = LabeledProblem::euclidean(x, &Labeling::new(vec![0, 0, 1])).unwrap();
        let repo = MetaRepository::new(vec![p.clone(), p.clone(), p]);
        let cfg = ExperimentConfig {
            train_fraction: 0.5,
            algo_select: AlgoSelectExperiment {
                algorithms: vec![AlgorithmSpec::new(Family::Kmeans, false, 2)],
                regressor: RegressorKind::Ridge { lambda: 0.0 },
                k_from_truth: true,
            },
            ..quick_config()
        };
        // Identical training features make the unregularized fit singular.
        let err = run_experiment(ExperimentKind::AlgoSelect, &cfg, &repo, 2, 0).unwrap_err();
        assert!(matches!(err, Error::SplitFailed { split: 0, .. }), "{err}");
    }
}
