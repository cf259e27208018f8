//! Meta-unsupervised learning for clustering.
//!
//! A repository of labeled clustering problems is treated as a training set
//! whose examples are whole problems. From it the crate learns unsupervised
//! decisions for new, unlabeled data: a single-linkage threshold, the number
//! of clusters, which algorithm to run, what fraction of outliers to set
//! aside, and whether two points belong together.

pub mod bsf;
pub mod clustering;
pub mod dsu;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod meta;
pub mod metrics;
pub mod model_io;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    labels_to_clustering, Clustering, Dataset, Edge, LabeledProblem, Labeling, MetaRepository,
    ProblemData, Provenance, WeightedGraph,
};
