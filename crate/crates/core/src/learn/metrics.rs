use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::model::Classifier;
use super::Result;

/// Confusion counts with Unsafe as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Confusion { tp, fp, tn, fn_ }
    }

    pub fn record(&mut self, truth_unsafe: bool, predicted_unsafe: bool) {
        match (truth_unsafe, predicted_unsafe) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&self, o: &Confusion) -> Confusion {
        Confusion::new(self.tp + o.tp, self.fp + o.fp, self.tn + o.tn, self.fn_ + o.fn_)
    }
}

impl std::iter::Sum for Confusion {
    fn sum<I: Iterator<Item = Confusion>>(iter: I) -> Self {
        iter.fold(Confusion::default(), |a, b| a.add(&b))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl ClassMetrics {
    fn from_counts(hit: u64, false_alarm: u64, miss: u64) -> Self {
        let precision = ratio(hit, hit + false_alarm);
        let recall = ratio(hit, hit + miss);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ClassMetrics { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: Confusion,
    pub accuracy: f64,
    #[serde(rename = "unsafe")]
    pub unsafe_: ClassMetrics,
    pub safe: ClassMetrics,
}

impl EvalReport {
    pub fn from_confusion(c: Confusion) -> Self {
        EvalReport {
            confusion: c,
            accuracy: ratio(c.tp + c.tn, c.total()),
            unsafe_: ClassMetrics::from_counts(c.tp, c.fp, c.fn_),
            safe: ClassMetrics::from_counts(c.tn, c.fn_, c.fp),
        }
    }

    pub fn from_predictions(truth: &[bool], predicted: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            c.record(t, p);
        }
        EvalReport::from_confusion(c)
    }
}

pub fn evaluate(c: &Classifier, test: &Dataset) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(super::LearnError::Empty);
    }
    let preds = c.predict_dataset(test)?;
    let predicted: Vec<bool> = preds.iter().map(|p| p.label.is_unsafe()).collect();
    Ok(EvalReport::from_predictions(&test.labels(), &predicted))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_counts() {
        let r = EvalReport::from_confusion(Confusion::new(40, 260, 549, 10));
        assert!((r.accuracy - 589.0 / 859.0).abs() < 1e-15);
        assert!((r.unsafe_.recall - 0.8).abs() < 1e-15);
        assert!((r.unsafe_.precision - 40.0 / 300.0).abs() < 1e-15);
        assert!((r.safe.recall - 549.0 / 809.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_constant() {
        let t = [true, false, true, false];
        let r = EvalReport::from_predictions(&t, &t);
        assert_eq!((r.accuracy, r.unsafe_.precision, r.unsafe_.recall), (1.0, 1.0, 1.0));
        let truth: Vec<bool> = (0..10).map(|i| i < 3).collect();
        let r = EvalReport::from_predictions(&truth, &[true; 10]);
        assert_eq!(r.unsafe_.recall, 1.0);
        assert!((r.unsafe_.precision - 0.3).abs() < 1e-15);
        assert_eq!(r.safe.precision, 0.0);
    }

    #[test]
    fn prevalence_weighted_recall_is_accuracy() {
        let c = Confusion::new(7, 3, 11, 5);
        let r = EvalReport::from_confusion(c);
        let n = c.total() as f64;
        let weighted = r.unsafe_.recall * (c.tp + c.fn_) as f64 / n + r.safe.recall * (c.tn + c.fp) as f64 / n;
        assert!((weighted - r.accuracy).abs() < 1e-15);
    }
}
