use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bayes::NaiveBayes;
use super::dataset::{ColumnKind, Dataset, Schema};
use super::forest::{Forest, ForestConfig};
use super::logistic::{Logistic, LogisticConfig};
use super::tree::{Tree, TreeConfig};
use super::{LearnError, Result};
use crate::par::Exec;
use crate::road::Label;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    DecisionTree,
    RandomForest,
    NaiveBayes,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Logistic,
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::NaiveBayes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::RandomForest => "random_forest",
            ModelKind::NaiveBayes => "naive_bayes",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "logistic" | "logistic_regression" => Ok(ModelKind::Logistic),
            "decision_tree" | "tree" | "j48" => Ok(ModelKind::DecisionTree),
            "random_forest" | "forest" => Ok(ModelKind::RandomForest),
            "naive_bayes" | "bayes" => Ok(ModelKind::NaiveBayes),
            _ => Err(LearnError::InvalidParameter(format!("unknown model kind {s:?}"))),
        }
    }
}

/// Hyperparameters for every model family.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnConfig {
    pub logistic: LogisticConfig,
    pub tree: TreeConfig,
    pub forest: ForestConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Params {
    Logistic(Logistic),
    DecisionTree(Tree),
    RandomForest(Forest),
    NaiveBayes(NaiveBayes),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub p_unsafe: f64,
}

impl Prediction {
    /// Ties at 0.5 go to Unsafe.
    pub fn from_proba(p: f64) -> Prediction {
        let p = p.clamp(0.0, 1.0);
        Prediction { label: Label::from_unsafe(p >= 0.5), p_unsafe: p }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub schema_version: u32,
    pub kind: ModelKind,
    /// Schema of the training data; inputs must match it.
    pub schema: Schema,
    /// Schema columns the parameters refer to, in order.
    pub active: Vec<usize>,
    pub provenance: String,
    pub seed: u64,
    pub config: LearnConfig,
    pub params: Params,
}

pub fn train(kind: ModelKind, d: &Dataset, cfg: &LearnConfig, seed: u64) -> Result<Classifier> {
    train_with(Exec::default(), kind, d, cfg, seed)
}

pub fn train_with(exec: Exec, kind: ModelKind, d: &Dataset, cfg: &LearnConfig, seed: u64) -> Result<Classifier> {
    train_warm(exec, kind, d, cfg, seed, None)
}

/// Like [`train_with`], but a Logistic fit starts from `prev` when it uses
/// the same columns.
pub fn train_warm(
    exec: Exec,
    kind: ModelKind,
    d: &Dataset,
    cfg: &LearnConfig,
    seed: u64,
    prev: Option<&Classifier>,
) -> Result<Classifier> {
    if d.len() < 2 {
        return Err(if d.is_empty() { LearnError::Empty } else { LearnError::SingleClass(d.rows[0].label) });
    }
    d.require_both_classes()?;
    let active: Vec<usize> = (0..d.schema.len())
        .filter(|&j| {
            let first = d.rows[0].values[j];
            d.rows.iter().any(|r| r.values[j] != first)
        })
        .collect();
    if active.is_empty() {
        return Err(LearnError::DegenerateData("every feature is constant".into()));
    }
    if active.len() < d.schema.len() {
        let dropped: Vec<&str> = (0..d.schema.len())
            .filter(|j| !active.contains(j))
            .map(|j| d.schema.columns[j].name.as_str())
            .collect();
        log::warn!("dropping constant features: {}", dropped.join(", "));
    }
    let x: Vec<Vec<f64>> = d.rows.iter().map(|r| active.iter().map(|&j| r.values[j]).collect()).collect();
    let y = d.labels();
    let params = match kind {
        ModelKind::Logistic => {
            let init = prev.filter(|p| p.active == active).and_then(|p| match &p.params {
                Params::Logistic(m) => Some(m),
                _ => None,
            });
            Params::Logistic(Logistic::fit_from(&x, &y, &cfg.logistic, init).0)
        }
        ModelKind::DecisionTree => Params::DecisionTree(Tree::fit(&x, &y, &cfg.tree)),
        ModelKind::RandomForest => Params::RandomForest(Forest::fit(exec, &x, &y, &cfg.forest, seed)),
        ModelKind::NaiveBayes => {
            let kinds: Vec<ColumnKind> = active.iter().map(|&j| d.schema.columns[j].kind).collect();
            Params::NaiveBayes(NaiveBayes::fit(&x, &y, &kinds))
        }
    };
    Ok(Classifier {
        schema_version: MODEL_SCHEMA_VERSION,
        kind,
        schema: d.schema.clone(),
        active,
        provenance: d.provenance.clone(),
        seed,
        config: cfg.clone(),
        params,
    })
}

impl Classifier {
    /// Wrap hand-built parameters that use every column of `schema`.
    pub fn from_params(schema: Schema, params: Params) -> Classifier {
        let kind = match &params {
            Params::Logistic(_) => ModelKind::Logistic,
            Params::DecisionTree(_) => ModelKind::DecisionTree,
            Params::RandomForest(_) => ModelKind::RandomForest,
            Params::NaiveBayes(_) => ModelKind::NaiveBayes,
        };
        Classifier {
            schema_version: MODEL_SCHEMA_VERSION,
            kind,
            active: (0..schema.len()).collect(),
            schema,
            provenance: String::new(),
            seed: 0,
            config: LearnConfig::default(),
            params,
        }
    }

    pub fn predict(&self, row: &[f64]) -> Result<Prediction> {
        if row.len() != self.schema.len() {
            return Err(LearnError::SchemaMismatch(format!(
                "row has {} values, model expects {}",
                row.len(),
                self.schema.len()
            )));
        }
        let v: Vec<f64> = self.active.iter().map(|&j| row[j]).collect();
        let p = match &self.params {
            Params::Logistic(m) => m.predict_proba(&v),
            Params::DecisionTree(m) => m.predict_proba(&v),
            Params::RandomForest(m) => m.predict_proba(&v),
            Params::NaiveBayes(m) => m.predict_proba(&v),
        };
        Ok(Prediction::from_proba(p))
    }

    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<Prediction>> {
        self.schema.ensure_same(&d.schema)?;
        d.rows.iter().map(|r| self.predict(&r.values)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Classifier> {
        #[derive(Deserialize)]
        struct Version {
            schema_version: u32,
        }
        let v: Version = serde_json::from_str(s)?;
        if v.schema_version != MODEL_SCHEMA_VERSION {
            return Err(LearnError::SchemaMismatch(format!(
                "model schema version {} is not supported (expected {MODEL_SCHEMA_VERSION})",
                v.schema_version
            )));
        }
        Ok(serde_json::from_str(s)?)
    }
}
