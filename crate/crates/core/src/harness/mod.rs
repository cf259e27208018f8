//! Data ingestion, synthetic repositories, experiments and reports.

pub mod experiment;
pub mod io;
pub mod report;
pub mod synth;

pub use io::{load_csv, load_repository, write_repository, LoadedRepository, Manifest, ManifestEntry, RepositoryFilters};
pub use synth::{generate_synthetic, Shape, SyntheticSpec};
pub use experiment::{
    bootstrap_interval, run_experiment, split_indices, split_repo, ExperimentConfig, ExperimentKind, ExperimentReport,
};
pub use report::{emit_report, load_report, ReportFormat};
