//! Experiment driver: configuration, training loop, run records and analysis.

pub mod analysis;
pub mod config;
pub mod record;
pub mod sweep;
pub mod train;

pub use analysis::{
    convergence_epoch, first_below, phase_diagram, reliability, transition_time, PhaseCell, PhaseRow,
    Reliability,
};
pub use config::{ExperimentConfig, ModelSpec, OptimizerKind, DEFAULT_THRESHOLD};
pub use record::{EpochRow, RunRecord, RunSummary};
pub use sweep::{report, report_dir, sweep, Grid, Report};
pub use train::{train, train_problem, Problem};
