//! Classification stack: datasets, rebalancing, four model families,
//! evaluation, cross-validation and feature ranking.

pub mod bayes;
pub mod cv;
pub mod dataset;
pub mod entropy;
pub mod forest;
pub mod logistic;
pub mod metrics;
pub mod model;
pub mod rank;
pub mod tree;

use thiserror::Error;

pub use cv::{kfold, KFoldReport};
pub use dataset::{oversample, split, Column, ColumnKind, Dataset, FeatureSet, LabeledVector, Schema};
pub use metrics::{evaluate, Confusion, EvalReport};
pub use model::{train, train_warm, train_with, Classifier, LearnConfig, ModelKind, Prediction};
pub use rank::{rank_features, RankMethod, RankedFeature};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("both classes are required, found only {0}")]
    SingleClass(crate::road::Label),
    #[error("dataset is empty")]
    Empty,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("{rows} rows cannot be split into {k} folds")]
    TooFewRows { rows: usize, k: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LearnError>;
