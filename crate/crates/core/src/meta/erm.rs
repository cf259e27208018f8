//! Empirical risk minimization over a finite family of clustering
//! algorithms, and the matching uniform-convergence bound.

use rayon::prelude::*;

use crate::clustering::AlgorithmSpec;
use crate::error::{Error, Result};
use crate::metrics::clustering_loss;
use crate::types::{Clustering, MetaRepository, ProblemData};

/// Anything that maps a problem's data to a clustering of its points.
pub trait UnsupervisedAlgorithm: Sync {
    fn cluster(&self, data: &ProblemData) -> Result<Clustering>;
}

impl<F> UnsupervisedAlgorithm for F
where
    F: Fn(&ProblemData) -> Result<Clustering> + Sync,
{
    fn cluster(&self, data: &ProblemData) -> Result<Clustering> {
        self(data)
    }
}

impl UnsupervisedAlgorithm for Box<dyn UnsupervisedAlgorithm + Send> {
    fn cluster(&self, data: &ProblemData) -> Result<Clustering> {
        (**self).cluster(data)
    }
}

/// A seeded member of the Euclidean family.
#[derive(Debug, Clone, Copy)]
pub struct SeededSpec {
    pub spec: AlgorithmSpec,
    pub seed: u64,
}

impl UnsupervisedAlgorithm for SeededSpec {
    fn cluster(&self, data: &ProblemData) -> Result<Clustering> {
        let x = data
            .as_dataset()
            .ok_or_else(|| Error::invalid("algorithm needs Euclidean data"))?;
        self.spec.run(x, self.seed)
    }
}

/// Threshold single linkage `C_r` (non-strict) on graph problems.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdLinkage {
    pub r: f64,
}

impl UnsupervisedAlgorithm for ThresholdLinkage {
    fn cluster(&self, data: &ProblemData) -> Result<Clustering> {
        match data {
            ProblemData::Graph(g) => crate::clustering::single_linkage_threshold_cluster(g, self.r, false),
            ProblemData::Euclidean(x) => {
                let g = crate::clustering::euclidean_to_graph(x)?;
                crate::clustering::single_linkage_threshold_cluster(&g, self.r, false)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErmResult {
    pub index: usize,
    pub mean_loss: f64,
    /// Mean loss of every family member, in family order.
    pub mean_losses: Vec<f64>,
}

/// Mean loss of one algorithm over the repository. A failure on a problem
/// scores the maximal loss 1 for that problem.
pub fn empirical_loss<A: UnsupervisedAlgorithm + ?Sized>(algorithm: &A, repo: &MetaRepository) -> f64 {
    let losses: Vec<f64> = repo
        .problems
        .par_iter()
        .map(|p| match algorithm.cluster(&p.data) {
            Ok(z) => clustering_loss(&p.truth, &z),
            Err(err) => {
                log::warn!("algorithm failed on '{}': {err}", p.name());
                1.0
            }
        })
        .collect();
    losses.iter().sum::<f64>() / losses.len() as f64
}

/// The family member with the lowest mean loss; ties go to the lowest index.
pub fn erm_select<A: UnsupervisedAlgorithm>(family: &[A], repo: &MetaRepository) -> Result<ErmResult> {
    if family.is_empty() {
        return Err(Error::EmptyInput);
    }
    repo.require_non_empty()?;
    let mean_losses: Vec<f64> = family.iter().map(|a| empirical_loss(a, repo)).collect();
    let mut index = 0;
    for (i, &l) in mean_losses.iter().enumerate() {
        if l < mean_losses[index] {
            index = i;
        }
    }
    Ok(ErmResult {
        index,
        mean_loss: mean_losses[index],
        mean_losses,
    })
}

/// `sqrt((2/n) · ln(|C|/δ))`.
pub fn generalization_bound(n: usize, family_size: usize, delta: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid("need at least one problem"));
    }
    if family_size < 1 {
        return Err(Error::invalid("family must be non-empty"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok((2.0 / n as f64 * (family_size as f64 / delta).ln()).sqrt())
}
