//! A learned binary similarity function: does a pair of points from an
//! arbitrary small dataset belong to the same class?

pub mod net;
pub mod pairs;
pub mod train;

pub use net::{adadelta_step, AdadeltaState, BsfNet, LAYER_SIZES};
pub use pairs::{
    build_meta_splits, majority_baseline, pair_features, sample_pairs, symmetric_augment, MetaSplits, PairExample,
};
pub use train::{bsf_predict, pair_accuracy, train_bsf, train_on_pairs, BsfConfig, BsfModel};
