//! Time-budgeted generate, predict, execute loops on a simulated clock.

use serde::{Deserialize, Serialize};

use super::selection::predict_test;
use super::{ExperimentError, Result};
use crate::features::{full_road_dataset, segment_dataset, FeatureConfig};
use crate::learn::{oversample, train_warm, Classifier, Confusion, Dataset, FeatureSet, LearnConfig, LearnError, ModelKind,
    Prediction};
use crate::par::Exec;
use crate::rng;
use crate::road::{Label, LabeledTest};
use crate::scenario::{generate_one, GeneratorConfig};
use crate::sim::{label, DriverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealTimeMode {
    Baseline,
    PreTrained,
    Adaptive,
}

/// Simulated seconds charged per activity. Execution is charged the
/// test's own wall cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostModel {
    pub generation_s: f64,
    pub prediction_s: f64,
    /// Retraining costs `retrain_coeff * rows^retrain_exponent`.
    pub retrain_coeff: f64,
    pub retrain_exponent: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            generation_s: 0.5,
            prediction_s: 0.01,
            retrain_coeff: 0.2,
            retrain_exponent: 0.5,
        }
    }
}

impl CostModel {
    pub fn retrain_s(&self, rows: usize) -> f64 {
        self.retrain_coeff * (rows as f64).powf(self.retrain_exponent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RealTimeConfig {
    pub mode: RealTimeMode,
    pub budget_s: f64,
    /// Tests executed unconditionally before the first Adaptive fit.
    pub bootstrap: usize,
    pub model: ModelKind,
    pub feature_set: FeatureSet,
    pub features: FeatureConfig,
    pub cost: CostModel,
    /// Iteration cap for warm-started Logistic refits after the first fit.
    pub retrain_max_iter: Option<usize>,
}

impl Default for RealTimeConfig {
    fn default() -> Self {
        RealTimeConfig {
            mode: RealTimeMode::Baseline,
            budget_s: 21_600.0,
            bootstrap: 60,
            model: ModelKind::Logistic,
            feature_set: FeatureSet::FullRoad,
            features: FeatureConfig::default(),
            cost: CostModel::default(),
            retrain_max_iter: Some(500),
        }
    }
}

/// What a PreTrained run consults.
#[derive(Debug, Clone)]
pub enum Predictor {
    Model(Classifier),
    /// Knows the true label; still pays the prediction cost.
    Oracle,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub generation_s: f64,
    pub prediction_s: f64,
    pub execution_safe_s: f64,
    pub execution_unsafe_s: f64,
    pub retraining_s: f64,
}

impl Ledger {
    pub fn total(&self) -> f64 {
        self.generation_s + self.prediction_s + self.execution_safe_s + self.execution_unsafe_s + self.retraining_s
    }

    /// Share of consumed time per activity, in field order.
    pub fn fractions(&self) -> [f64; 5] {
        let t = self.total();
        let v = [self.generation_s, self.prediction_s, self.execution_safe_s, self.execution_unsafe_s, self.retraining_s];
        if t == 0.0 {
            [0.0; 5]
        } else {
            v.map(|x| x / t)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    /// Executed before any model existed.
    Bootstrap,
    Executed,
    Rejected,
    /// Generated, but the budget ran out before a decision was carried out.
    Unfinished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub index: usize,
    pub test_id: String,
    pub decision: Decision,
    pub p_unsafe: Option<f64>,
    /// Revealed by execution, or by post-mortem execution off the clock.
    pub truth: Label,
    pub clock_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealTimeRun {
    pub mode: RealTimeMode,
    pub budget_s: f64,
    pub seed: u64,
    pub ledger: Ledger,
    pub generated: usize,
    pub executed_unsafe: usize,
    pub executed_safe: usize,
    pub rejected: usize,
    pub unfinished: usize,
    pub retrains: usize,
    /// Executed tests count as predicted Unsafe; unfinished tests are left
    /// out.
    pub confusion: Confusion,
    pub log: Vec<Entry>,
}

impl RealTimeRun {
    pub fn executed(&self) -> usize {
        self.executed_unsafe + self.executed_safe
    }
}

struct Clock {
    budget: f64,
    used: f64,
}

impl Clock {
    /// Charge `cost` if it fits in the budget.
    fn charge(&mut self, cost: f64, slot: &mut f64) -> bool {
        if self.used + cost > self.budget {
            return false;
        }
        self.used += cost;
        *slot += cost;
        true
    }
}

fn training_set(executed: &[LabeledTest], cfg: &RealTimeConfig) -> Result<Dataset> {
    Ok(match cfg.feature_set {
        FeatureSet::FullRoad => full_road_dataset(executed, "adaptive", &cfg.features),
        FeatureSet::Segment => segment_dataset(executed, "adaptive"),
        FeatureSet::Custom => {
            return Err(ExperimentError::InvalidParameter("real-time runs need full-road or segment features".into()))
        }
    })
}

/// Run one real-time session.
///
/// Each generated test is labeled off the clock so rejected tests have a
/// post-mortem truth; the selector only learns a label by executing.
pub fn run_realtime(
    cfg: &RealTimeConfig,
    generator: &GeneratorConfig,
    driver: &DriverConfig,
    learn: &LearnConfig,
    pretrained: Option<&Predictor>,
    seed: u64,
) -> Result<RealTimeRun> {
    if !(cfg.budget_s > 0.0) {
        return Err(ExperimentError::InvalidParameter("budget must be positive".into()));
    }
    if cfg.mode == RealTimeMode::PreTrained && pretrained.is_none() {
        return Err(ExperimentError::InvalidParameter("pre-trained mode needs a model".into()));
    }
    driver.validate()?;
    let gen_cfg = generator.clone().with_seed(rng::derive(seed, "realtime-generate"));
    gen_cfg.validate()?;

    let mut clock = Clock { budget: cfg.budget_s, used: 0.0 };
    let mut run = RealTimeRun {
        mode: cfg.mode,
        budget_s: cfg.budget_s,
        seed,
        ledger: Ledger::default(),
        generated: 0,
        executed_unsafe: 0,
        executed_safe: 0,
        rejected: 0,
        unfinished: 0,
        retrains: 0,
        confusion: Confusion::default(),
        log: Vec::new(),
    };
    let mut executed: Vec<LabeledTest> = Vec::new();
    let mut adaptive: Option<Predictor> = None;

    for index in 0.. {
        if !clock.charge(cfg.cost.generation_s, &mut run.ledger.generation_s) {
            break;
        }
        let (test, _) = generate_one(&gen_cfg, index)?;
        let truth = label(&test, driver)?;
        run.generated += 1;
        let mut entry = Entry {
            index,
            test_id: test.id().to_string(),
            decision: Decision::Unfinished,
            p_unsafe: None,
            truth: truth.label,
            clock_s: clock.used,
        };

        let model: Option<&Predictor> = match cfg.mode {
            RealTimeMode::Baseline => None,
            RealTimeMode::PreTrained => pretrained,
            RealTimeMode::Adaptive if index < cfg.bootstrap => None,
            RealTimeMode::Adaptive => adaptive.as_ref(),
        };
        let bootstrap = model.is_none() && cfg.mode == RealTimeMode::Adaptive;
        let mut execute = true;
        if let Some(p) = model {
            if !clock.charge(cfg.cost.prediction_s, &mut run.ledger.prediction_s) {
                run.unfinished += 1;
                run.log.push(entry);
                break;
            }
            let pred = match p {
                Predictor::Oracle => Prediction::from_proba(if truth.label.is_unsafe() { 1.0 } else { 0.0 }),
                Predictor::Model(c) => predict_test(c, &truth, &cfg.features)?,
            };
            entry.p_unsafe = Some(pred.p_unsafe);
            execute = pred.label.is_unsafe();
        }

        if !execute {
            entry.decision = Decision::Rejected;
            entry.clock_s = clock.used;
            run.rejected += 1;
            run.confusion.record(truth.label.is_unsafe(), false);
            run.log.push(entry);
            continue;
        }

        let slot = if truth.label.is_unsafe() {
            &mut run.ledger.execution_unsafe_s
        } else {
            &mut run.ledger.execution_safe_s
        };
        if !clock.charge(truth.wall_cost, slot) {
            run.unfinished += 1;
            run.log.push(entry);
            break;
        }
        entry.decision = if bootstrap {
            Decision::Bootstrap
        } else {
            Decision::Executed
        };
        entry.clock_s = clock.used;
        if truth.label.is_unsafe() {
            run.executed_unsafe += 1;
        } else {
            run.executed_safe += 1;
        }
        run.confusion.record(truth.label.is_unsafe(), true);
        run.log.push(entry);
        executed.push(truth);

        if cfg.mode == RealTimeMode::Adaptive && index + 1 >= cfg.bootstrap {
            if !clock.charge(cfg.cost.retrain_s(executed.len()), &mut run.ledger.retraining_s) {
                break;
            }
            run.retrains += 1;
            let prev = match &adaptive {
                Some(Predictor::Model(c)) => Some(c),
                _ => None,
            };
            adaptive = retrain(cfg, learn, &executed, prev, rng::derive_index(seed, run.retrains as u64))?
                .map(Predictor::Model);
        }
    }
    Ok(run)
}

/// Fit on every executed test. Missing classes leave the loop without a
/// model, so every test keeps getting executed.
fn retrain(
    cfg: &RealTimeConfig,
    learn: &LearnConfig,
    executed: &[LabeledTest],
    prev: Option<&Classifier>,
    seed: u64,
) -> Result<Option<Classifier>> {
    let d = training_set(executed, cfg)?;
    let balanced = match oversample(&d, rng::derive(seed, "oversample")) {
        Ok(b) => b,
        Err(LearnError::SingleClass(_) | LearnError::Empty) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut learn = learn.clone();
    if let (Some(cap), Some(_)) = (cfg.retrain_max_iter, prev) {
        learn.logistic.max_iter = learn.logistic.max_iter.min(cap);
    }
    match train_warm(Exec::Sequential, cfg.model, &balanced, &learn, seed, prev) {
        Ok(c) => Ok(Some(c)),
        Err(LearnError::DegenerateData(_) | LearnError::SingleClass(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}
