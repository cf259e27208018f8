//! Learning across a repository of labeled problems: ERM over algorithm
//! families, threshold fitting, meta-k, algorithm selection, outlier
//! removal and the axiom-respecting meta-clusterer.

pub mod algo_select;
pub mod axioms;
pub mod erm;
pub mod linear;
pub mod meta_k;
pub mod outliers;
pub mod threshold;

pub use algo_select::{
    algo_select_predict, algo_select_train, problem_features, AlgoSelectModel, AlgoSelection, ProblemFeatures,
    RegressorKind,
};
pub use axioms::{meta_axiom_cluster, meta_axiom_train, richness_witness, MetaAxiomModel};
pub use erm::{erm_select, generalization_bound, ErmResult, UnsupervisedAlgorithm};
pub use linear::{fit_linear, LinearModel};
pub use meta_k::{meta_k_predict, meta_k_train, silhouette_baseline_k, MetaKConfig, MetaKModel, Pooling};
pub use outliers::{fit_outlier_fraction, outlier_pipeline, OutlierConfig, OutlierMode, OutlierModel};
pub use threshold::{fit_single_linkage_threshold, ThresholdModel};
