use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::metrics::{evaluate, ClassMetrics, Confusion, EvalReport};
use super::model::{train_with, LearnConfig, ModelKind};
use super::{LearnError, Result};
use crate::par::{self, Exec};
use crate::rng;

/// Fold metrics averaged with equal weight per fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroMetrics {
    pub accuracy: f64,
    #[serde(rename = "unsafe")]
    pub unsafe_: ClassMetrics,
    pub safe: ClassMetrics,
}

impl MacroMetrics {
    pub fn mean(reports: &[EvalReport]) -> MacroMetrics {
        let k = reports.len() as f64;
        let avg = |f: &dyn Fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / k;
        let class = |pick: &dyn Fn(&EvalReport) -> ClassMetrics| ClassMetrics {
            precision: avg(&|r| pick(r).precision),
            recall: avg(&|r| pick(r).recall),
            f1: avg(&|r| pick(r).f1),
        };
        MacroMetrics {
            accuracy: avg(&|r| r.accuracy),
            unsafe_: class(&|r| r.unsafe_),
            safe: class(&|r| r.safe),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KFoldReport {
    pub kind: ModelKind,
    pub k: usize,
    pub folds: Vec<EvalReport>,
    pub mean: MacroMetrics,
    /// Element-wise sum of the fold confusions.
    pub pooled: Confusion,
}

/// Shuffled partition of `0..n` into `k` folds whose sizes differ by at
/// most one.
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::rng_from(seed));
    let (base, extra) = (n / k, n % k);
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        out.push(idx[start..start + len].to_vec());
        start += len;
    }
    out
}

pub fn kfold(kind: ModelKind, d: &Dataset, k: usize, cfg: &LearnConfig, seed: u64) -> Result<KFoldReport> {
    kfold_with(Exec::default(), kind, d, k, cfg, seed)
}

pub fn kfold_with(exec: Exec, kind: ModelKind, d: &Dataset, k: usize, cfg: &LearnConfig, seed: u64) -> Result<KFoldReport> {
    if k < 2 || d.len() < k {
        return Err(LearnError::TooFewRows { rows: d.len(), k });
    }
    let folds = fold_indices(d.len(), k, rng::derive(seed, "folds"));
    let reports = par::map_indexed(exec, k, |f| {
        let test = d.subset(&folds[f]);
        let train_idx: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        let train = d.subset(&train_idx);
        // Folds already run in parallel; keep each forest sequential.
        let model = train_with(Exec::Sequential, kind, &train, cfg, rng::derive_index(seed, f as u64))?;
        evaluate(&model, &test)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(KFoldReport {
        kind,
        k,
        mean: MacroMetrics::mean(&reports),
        pooled: reports.iter().map(|r| r.confusion).sum(),
        folds: reports,
    })
}
