use serde::{Deserialize, Serialize};

use super::Result;
use crate::learn::{evaluate, Classifier, Dataset, EvalReport};

/// Evaluation of a model on data labeled by some (possibly other) driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossReport {
    pub model_provenance: String,
    pub data_provenance: String,
    pub report: EvalReport,
}

pub fn cross_evaluate(model: &Classifier, foreign: &Dataset) -> Result<CrossReport> {
    Ok(CrossReport {
        model_provenance: model.provenance.clone(),
        data_provenance: foreign.provenance.clone(),
        report: evaluate(model, foreign)?,
    })
}

/// One report per dataset, e.g. per driver of a combined training set.
pub fn cross_evaluate_each(model: &Classifier, sets: &[Dataset]) -> Result<Vec<CrossReport>> {
    sets.iter().map(|d| cross_evaluate(model, d)).collect()
}
