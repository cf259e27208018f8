//! Pair featurization and the meta-train / meta-IT / meta-ET splits.

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::normalize_features;
use crate::error::{Error, Result};
use crate::rng::MetaRng;
use crate::types::{Dataset, LabeledProblem, MetaRepository};

pub const MAX_DIM: usize = 10;
pub const COV_ENTRIES: usize = MAX_DIM * (MAX_DIM + 1) / 2;
pub const FEATURE_DIM: usize = 2 * MAX_DIM + COV_ENTRIES;
pub const DEFAULT_PAIR_CAP: usize = 2500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairExample {
    pub features: Vec<f64>,
    pub label: u8,
    pub problem: usize,
    pub i: usize,
    pub j: usize,
}

impl PairExample {
    /// Unordered identity of the source pair.
    pub fn pair_id(&self) -> (usize, usize, usize) {
        (self.problem, self.i.min(self.j), self.i.max(self.j))
    }

    pub fn swapped(&self) -> PairExample {
        PairExample {
            features: swap_blocks(&self.features),
            label: self.label,
            problem: self.problem,
            i: self.j,
            j: self.i,
        }
    }
}

/// Exchanges the two coordinate blocks of a feature vector.
pub fn swap_blocks(features: &[f64]) -> Vec<f64> {
    let mut out = features.to_vec();
    out[..MAX_DIM].copy_from_slice(&features[MAX_DIM..2 * MAX_DIM]);
    out[MAX_DIM..2 * MAX_DIM].copy_from_slice(&features[..MAX_DIM]);
    out
}

/// Featurizes pairs of one (normalized) dataset, sharing the covariance
/// block across pairs.
#[derive(Debug, Clone)]
pub struct PairFeaturizer<'a> {
    x: &'a Dataset,
    cov_block: Vec<f64>,
}

impl<'a> PairFeaturizer<'a> {
    pub fn new(x: &'a Dataset) -> Result<Self> {
        let d = x.d();
        if d > MAX_DIM {
            return Err(Error::invalid(format!("pair features need d <= {MAX_DIM}, got {d}")));
        }
        let cov = x.covariance();
        let mut cov_block = Vec::with_capacity(COV_ENTRIES);
        for a in 0..MAX_DIM {
            for b in a..MAX_DIM {
                cov_block.push(if a < d && b < d { cov[a * d + b] } else { 0.0 });
            }
        }
        Ok(Self { x, cov_block })
    }

    pub fn features(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        let n = self.x.n();
        if i >= n || j >= n {
            return Err(Error::invalid(format!("pair ({i}, {j}) out of range for {n} points")));
        }
        if i == j {
            return Err(Error::invalid("a pair needs two distinct points"));
        }
        let mut out = vec![0.0; FEATURE_DIM];
        out[..self.x.d()].copy_from_slice(self.x.row(i));
        out[MAX_DIM..MAX_DIM + self.x.d()].copy_from_slice(self.x.row(j));
        out[2 * MAX_DIM..].copy_from_slice(&self.cov_block);
        Ok(out)
    }
}

/// `[x_i | x_j | upper triangle of the covariance]`, zero-padded to ten
/// dimensions. `x` is expected to be normalized already.
pub fn pair_features(x: &Dataset, i: usize, j: usize) -> Result<Vec<f64>> {
    PairFeaturizer::new(x)?.features(i, j)
}

/// Decodes the `t`-th unordered pair `(i, j)`, `i < j`, in row order.
fn decode_pair(mut t: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    while t >= n - 1 - i {
        t -= n - 1 - i;
        i += 1;
    }
    (i, i + 1 + t)
}

/// Up to `cap` distinct unordered pairs drawn uniformly without
/// replacement, featurized on the normalized data.
pub fn sample_pairs(problem: &LabeledProblem, problem_id: usize, cap: usize, rng: &mut MetaRng) -> Result<Vec<PairExample>> {
    let x = problem.dataset()?;
    let n = x.n();
    if n < 2 || cap == 0 {
        return Ok(Vec::new());
    }
    let normalized = normalize_features(x);
    let featurizer = PairFeaturizer::new(&normalized)?;
    let total = n * (n - 1) / 2;
    let picks = index::sample(rng, total, cap.min(total));
    let labels = problem.truth.assignment();
    picks
        .into_iter()
        .map(|t| {
            let (i, j) = decode_pair(t, n);
            Ok(PairExample {
                features: featurizer.features(i, j)?,
                label: (labels[i] == labels[j]) as u8,
                problem: problem_id,
                i,
                j,
            })
        })
        .collect()
}

/// Each pair followed by its order-swapped twin.
pub fn symmetric_augment(pairs: &[PairExample]) -> Vec<PairExample> {
    pairs.iter().flat_map(|p| [p.clone(), p.swapped()]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaSplits {
    pub meta_train: Vec<PairExample>,
    pub meta_it: Vec<PairExample>,
    pub meta_et: Vec<PairExample>,
    /// 1 or 2 per problem.
    pub categories: Vec<u8>,
}

const CATEGORY_RETRIES: usize = 100;

/// Assigns each problem to category 1 or 2 with equal probability and
/// builds the splits.
pub fn build_meta_splits(repo: &MetaRepository, rng: &mut MetaRng, cap: usize) -> Result<MetaSplits> {
    if repo.len() < 2 {
        return Err(Error::invalid("meta splits need at least two problems"));
    }
    for _ in 0..CATEGORY_RETRIES {
        let categories: Vec<u8> = (0..repo.len()).map(|_| if rng.random_bool(0.5) { 1 } else { 2 }).collect();
        if categories.contains(&1) && categories.contains(&2) {
            return build_meta_splits_with_categories(repo, &categories, rng, cap);
        }
    }
    Err(Error::invalid("could not draw two non-empty problem categories"))
}

/// Category-1 problems sample a pool of up to `2·cap` pairs: the first half
/// (at most `cap`) is training data, augmented with swapped twins, and the
/// rest (at most `cap`) is meta-IT. Category-2 problems give up to `cap`
/// pairs to meta-ET.
pub fn build_meta_splits_with_categories(
    repo: &MetaRepository,
    categories: &[u8],
    rng: &mut MetaRng,
    cap: usize,
) -> Result<MetaSplits> {
    if categories.len() != repo.len() {
        return Err(Error::LengthMismatch {
            left: categories.len(),
            right: repo.len(),
        });
    }
    let mut splits = MetaSplits {
        meta_train: Vec::new(),
        meta_it: Vec::new(),
        meta_et: Vec::new(),
        categories: categories.to_vec(),
    };
    for (id, (p, &cat)) in repo.problems.iter().zip(categories).enumerate() {
        match cat {
            1 => {
                let mut pool = sample_pairs(p, id, 2 * cap, rng)?;
                pool.shuffle(rng);
                let train_len = (pool.len() / 2).min(cap);
                let it_end = (train_len + cap).min(pool.len());
                splits.meta_train.extend(symmetric_augment(&pool[..train_len]));
                splits.meta_it.extend_from_slice(&pool[train_len..it_end]);
            }
            2 => splits.meta_et.extend(sample_pairs(p, id, cap, rng)?),
            other => return Err(Error::invalid(format!("unknown category {other}"))),
        }
    }
    Ok(splits)
}

impl MetaSplits {
    /// Checks that meta-ET shares no problem with meta-train and that no
    /// pair appears in both meta-train and meta-IT.
    pub fn is_hygienic(&self) -> bool {
        let train_problems: HashSet<usize> = self.meta_train.iter().map(|p| p.problem).collect();
        let train_pairs: HashSet<_> = self.meta_train.iter().map(|p| p.pair_id()).collect();
        self.meta_et.iter().all(|p| !train_problems.contains(&p.problem))
            && self.meta_it.iter().all(|p| !train_pairs.contains(&p.pair_id()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityBaseline {
    pub per_problem: Vec<f64>,
    /// Mean weighted by pair counts.
    pub mean: f64,
}

/// Accuracy of predicting each problem's majority label for all its pairs.
pub fn majority_baseline(groups: &[Vec<u8>]) -> Result<MajorityBaseline> {
    let total: usize = groups.iter().map(Vec::len).sum();
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    let mut correct = 0usize;
    let per_problem = groups
        .iter()
        .map(|g| {
            let ones = g.iter().filter(|&&l| l == 1).count();
            let best = ones.max(g.len() - ones);
            correct += best;
            if g.is_empty() {
                0.0
            } else {
                best as f64 / g.len() as f64
            }
        })
        .collect();
    Ok(MajorityBaseline {
        per_problem,
        mean: correct as f64 / total as f64,
    })
}

/// Labels grouped by source problem, in ascending problem id.
pub fn group_labels(pairs: &[PairExample]) -> Vec<Vec<u8>> {
    let mut ids: Vec<usize> = pairs.iter().map(|p| p.problem).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.iter()
        .map(|&id| pairs.iter().filter(|p| p.problem == id).map(|p| p.label).collect())
        .collect()
}
