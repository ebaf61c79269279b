//! Dataset ingestion, run logs and post-hoc analysis of finished searches.

pub mod analysis;
pub mod artifacts;
pub mod dataset;
pub mod runlog;
pub mod synthetic;

pub use analysis::{best_so_far, high_performer_counts, pca_2d, pca_top_configs, quantile};
pub use artifacts::{emit_artifacts, ArtifactOptions};
pub use dataset::{load_csv, split_sizes, TabularDataset};
pub use runlog::{RunLog, RunLogWriter};
