use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::pool::TestPool;
use super::{ExperimentError, Result};
use crate::features::{full_road_vector, segment_vectors, FeatureConfig};
use crate::learn::{Classifier, Confusion, FeatureSet, LearnError, Prediction};
use crate::par::{self, Exec};
use crate::rng;
use crate::road::{Label, LabeledTest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Fix,
    Reach,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Fix => "fix",
            Experiment::Reach => "reach",
        })
    }
}

/// Predict a whole test. Segment models flag a test when any segment is
/// predicted unsafe; the test probability is the segment maximum.
pub fn predict_test(c: &Classifier, t: &LabeledTest, fc: &FeatureConfig) -> Result<Prediction> {
    match c.schema.set {
        FeatureSet::FullRoad => Ok(c.predict(&full_road_vector(t, fc).values)?),
        FeatureSet::Segment => {
            let mut p = 0.0f64;
            for v in segment_vectors(t) {
                p = p.max(c.predict(&v.values)?.p_unsafe);
            }
            Ok(Prediction::from_proba(p))
        }
        FeatureSet::Custom => Err(LearnError::SchemaMismatch(
            "selection needs a model trained on full-road or segment features".into(),
        )
        .into()),
    }
}

/// Decides which drawn tests get executed. Predictions are computed once
/// per pool and shared across repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct Selector {
    pub name: String,
    predictions: Option<Vec<Prediction>>,
}

impl Selector {
    /// Executes every draw.
    pub fn baseline() -> Selector {
        Selector { name: "baseline".into(), predictions: None }
    }

    /// Knows every label in advance.
    pub fn oracle(pool: &TestPool) -> Selector {
        let predictions = pool
            .tests
            .iter()
            .map(|t| Prediction::from_proba(if t.label.is_unsafe() { 1.0 } else { 0.0 }))
            .collect();
        Selector { name: "oracle".into(), predictions: Some(predictions) }
    }

    pub fn model(c: &Classifier, pool: &TestPool, fc: &FeatureConfig) -> Result<Selector> {
        let predictions = pool.tests.iter().map(|t| predict_test(c, t, fc)).collect::<Result<_>>()?;
        Ok(Selector { name: c.kind.to_string(), predictions: Some(predictions) })
    }

    pub fn from_predictions(name: impl Into<String>, predictions: Vec<Prediction>) -> Selector {
        Selector { name: name.into(), predictions: Some(predictions) }
    }

    pub fn is_baseline(&self) -> bool {
        self.predictions.is_none()
    }

    fn check(&self, pool: &TestPool) -> Result<()> {
        match &self.predictions {
            Some(p) if p.len() != pool.len() => Err(ExperimentError::InvalidParameter(format!(
                "selector has {} predictions for a pool of {}",
                p.len(),
                pool.len()
            ))),
            _ => Ok(()),
        }
    }

    fn prediction(&self, i: usize) -> Option<Prediction> {
        self.predictions.as_ref().map(|p| p[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub pool_index: usize,
    pub test_id: String,
    pub predicted: Option<Label>,
    pub p_unsafe: Option<f64>,
    pub executed: bool,
    /// Known only once executed.
    pub revealed: Option<Label>,
    pub wall_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRun {
    pub experiment: Experiment,
    pub strategy: String,
    /// Suite size S for FIX, unsafe quota N for REACH.
    pub target: usize,
    pub seed: u64,
    pub steps: Vec<Step>,
    pub drawn: usize,
    pub executed: usize,
    pub skipped: usize,
    pub executed_unsafe: usize,
    pub executed_safe: usize,
    /// Over every draw; the baseline counts as predicting Unsafe.
    pub confusion: Confusion,
    pub time_safe_s: f64,
    pub time_unsafe_s: f64,
    /// The pool ran out before the stopping rule was met.
    pub exhausted: bool,
}

impl SelectionRun {
    /// Fraction of unsafe tests among executed ones.
    pub fn unsafe_ratio(&self) -> f64 {
        if self.executed == 0 {
            0.0
        } else {
            self.executed_unsafe as f64 / self.executed as f64
        }
    }

    pub fn total_time_s(&self) -> f64 {
        self.time_safe_s + self.time_unsafe_s
    }
}

fn run(experiment: Experiment, pool: &TestPool, sel: &Selector, target: usize, seed: u64) -> Result<SelectionRun> {
    sel.check(pool)?;
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(&mut rng::rng_from(seed));
    let mut r = SelectionRun {
        experiment,
        strategy: sel.name.clone(),
        target,
        seed,
        steps: Vec::new(),
        drawn: 0,
        executed: 0,
        skipped: 0,
        executed_unsafe: 0,
        executed_safe: 0,
        confusion: Confusion::default(),
        time_safe_s: 0.0,
        time_unsafe_s: 0.0,
        exhausted: false,
    };
    let done = |r: &SelectionRun| match experiment {
        Experiment::Fix => r.executed >= target,
        Experiment::Reach => r.executed_unsafe >= target,
    };
    for i in order {
        if done(&r) {
            break;
        }
        let t = &pool.tests[i];
        let pred = sel.prediction(i);
        let execute = pred.is_none_or(|p| p.label.is_unsafe());
        r.drawn += 1;
        r.confusion.record(t.label.is_unsafe(), execute);
        let mut step = Step {
            pool_index: i,
            test_id: t.id().to_string(),
            predicted: pred.map(|p| p.label),
            p_unsafe: pred.map(|p| p.p_unsafe),
            executed: execute,
            revealed: None,
            wall_cost: 0.0,
        };
        if execute {
            r.executed += 1;
            step.revealed = Some(t.label);
            step.wall_cost = t.wall_cost;
            if t.label.is_unsafe() {
                r.executed_unsafe += 1;
                r.time_unsafe_s += t.wall_cost;
            } else {
                r.executed_safe += 1;
                r.time_safe_s += t.wall_cost;
            }
        } else {
            r.skipped += 1;
        }
        r.steps.push(step);
    }
    r.exhausted = !done(&r);
    if r.exhausted {
        log::debug!("{experiment} run {} exhausted its pool after {} draws", r.strategy, r.drawn);
    }
    Ok(r)
}

/// Draw until `suite_size` tests have been executed. Predicted-safe draws
/// are skipped and cost nothing.
pub fn run_fix(pool: &TestPool, sel: &Selector, suite_size: usize, seed: u64) -> Result<SelectionRun> {
    if suite_size == 0 {
        return Err(ExperimentError::InvalidParameter("suite size must be at least 1".into()));
    }
    run(Experiment::Fix, pool, sel, suite_size, seed)
}

/// Draw until `n` executed tests have revealed Unsafe.
pub fn run_reach(pool: &TestPool, sel: &Selector, n: usize, seed: u64) -> Result<SelectionRun> {
    if n == 0 {
        return Err(ExperimentError::InvalidParameter("unsafe quota must be at least 1".into()));
    }
    let (_, u) = pool.counts();
    if u < n {
        return Err(ExperimentError::InsufficientClass { label: Label::Unsafe, needed: n, available: u });
    }
    run(Experiment::Reach, pool, sel, n, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepetitionSpec {
    pub experiment: Experiment,
    pub target: usize,
    pub reps: usize,
    pub master_seed: u64,
}

/// Seed of repetition `r`; shared by every selector under the same master
/// seed so strategies see identical draw orders.
pub fn rep_seed(master: u64, r: usize) -> u64 {
    rng::derive_index(rng::derive(master, "rep"), r as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repetitions {
    pub spec: RepetitionSpec,
    pub strategy: String,
    pub pool: String,
    pub runs: Vec<SelectionRun>,
}

impl Repetitions {
    pub fn cumulative(&self) -> Confusion {
        self.runs.iter().map(|r| r.confusion).sum()
    }

    pub fn mean(&self, f: impl Fn(&SelectionRun) -> f64) -> f64 {
        self.runs.iter().map(&f).sum::<f64>() / self.runs.len() as f64
    }
}

pub fn run_repetitions(exec: Exec, pool: &TestPool, sel: &Selector, spec: RepetitionSpec) -> Result<Repetitions> {
    if spec.reps == 0 {
        return Err(ExperimentError::InvalidParameter("at least one repetition is required".into()));
    }
    let runs = par::map_indexed(exec, spec.reps, |r| {
        let seed = rep_seed(spec.master_seed, r);
        match spec.experiment {
            Experiment::Fix => run_fix(pool, sel, spec.target, seed),
            Experiment::Reach => run_reach(pool, sel, spec.target, seed),
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(Repetitions {
        spec,
        strategy: sel.name.clone(),
        pool: pool.composition.to_string(),
        runs,
    })
}
