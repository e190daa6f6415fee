//! Experiment harness: configuration, the training loop, metrics, checkpoints
//! and the experiment matrix.

pub mod checkpoint;
pub mod config;
pub mod matrix;
pub mod metrics;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::{RunConfig, Variant, ALL_VARIANTS};
pub use matrix::{bonus_jobs, run_grid, run_jobs, run_matrix, summarize, sweep_b, variant_jobs, Job, JobResult, SummaryRow};
pub use metrics::{
    env_step_series, median_crossing, read_metrics, rolling_success, steps_to_threshold, train_step_series,
    MetricsHeader, MetricsRecord, MetricsWriter,
};
pub use train::{evaluate, run_training, BoundaryCheck, Counters, ExpertSource, RunSummary, Trainer};
