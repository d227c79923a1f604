//! Selection studies over labeled test pools: fixed-size suites (FIX),
//! reaching a quota of failures (REACH), repeated runs, time-budgeted
//! real-time selection and cross-driver transfer.

pub mod pool;
pub mod realtime;
pub mod report;
pub mod selection;
pub mod transfer;

use thiserror::Error;

use crate::learn::LearnError;
use crate::road::Label;
use crate::scenario::GenerationError;
use crate::sim::SimError;

pub use pool::{build_pool, offline_partition, Composition, TestPool};
pub use realtime::{run_realtime, CostModel, Ledger, Predictor, RealTimeConfig, RealTimeMode, RealTimeRun};
pub use report::{merge_reports, RealTimeRow, Report, RunRow, RunStats, SelectionSummary};
pub use selection::{
    run_fix, run_reach, run_repetitions, Experiment, RepetitionSpec, Repetitions, SelectionRun, Selector, Step,
};
pub use transfer::{cross_evaluate, CrossReport};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("not enough {label} tests: need {needed}, have {available}")]
    InsufficientClass { label: Label, needed: usize, available: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("report schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;
