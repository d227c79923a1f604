//! Flat, versioned experiment reports and their CSV tables.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::realtime::{RealTimeMode, RealTimeRun};
use super::selection::{Repetitions, SelectionRun};
use super::{ExperimentError, Result};
use crate::learn::{Confusion, EvalReport};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One repetition of a FIX or REACH run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub repetition: usize,
    pub seed: u64,
    pub drawn: usize,
    pub executed: usize,
    pub skipped: usize,
    pub executed_unsafe: usize,
    pub executed_safe: usize,
    pub unsafe_ratio: f64,
    pub time_safe_s: f64,
    pub time_unsafe_s: f64,
    pub confusion: Confusion,
    pub exhausted: bool,
}

impl RunRow {
    pub fn from_run(repetition: usize, r: &SelectionRun) -> RunRow {
        RunRow {
            repetition,
            seed: r.seed,
            drawn: r.drawn,
            executed: r.executed,
            skipped: r.skipped,
            executed_unsafe: r.executed_unsafe,
            executed_safe: r.executed_safe,
            unsafe_ratio: r.unsafe_ratio(),
            time_safe_s: r.time_safe_s,
            time_unsafe_s: r.time_unsafe_s,
            confusion: r.confusion,
            exhausted: r.exhausted,
        }
    }

    fn stats(&self) -> [f64; 8] {
        [
            self.drawn as f64,
            self.executed as f64,
            self.skipped as f64,
            self.executed_unsafe as f64,
            self.executed_safe as f64,
            self.unsafe_ratio,
            self.time_safe_s,
            self.time_unsafe_s,
        ]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub drawn: f64,
    pub executed: f64,
    pub skipped: f64,
    pub executed_unsafe: f64,
    pub executed_safe: f64,
    pub unsafe_ratio: f64,
    pub time_safe_s: f64,
    pub time_unsafe_s: f64,
}

impl RunStats {
    fn from_array(a: [f64; 8]) -> RunStats {
        RunStats {
            drawn: a[0],
            executed: a[1],
            skipped: a[2],
            executed_unsafe: a[3],
            executed_safe: a[4],
            unsafe_ratio: a[5],
            time_safe_s: a[6],
            time_unsafe_s: a[7],
        }
    }

    fn to_array(self) -> [f64; 8] {
        [
            self.drawn,
            self.executed,
            self.skipped,
            self.executed_unsafe,
            self.executed_safe,
            self.unsafe_ratio,
            self.time_safe_s,
            self.time_unsafe_s,
        ]
    }
}

/// Aggregate of one (experiment, strategy, pool) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub experiment: String,
    pub strategy: String,
    pub pool: String,
    pub target: usize,
    pub master_seed: u64,
    pub rows: Vec<RunRow>,
    pub mean: RunStats,
    /// Sample standard deviation; zero for a single repetition.
    pub std: RunStats,
    /// Element-wise sum of per-repetition confusions.
    pub cumulative: Confusion,
    /// Metrics of the cumulative confusion.
    pub cumulative_metrics: EvalReport,
    pub exhausted_runs: usize,
}

impl SelectionSummary {
    pub fn from_repetitions(r: &Repetitions) -> SelectionSummary {
        let rows: Vec<RunRow> = r.runs.iter().enumerate().map(|(i, run)| RunRow::from_run(i, run)).collect();
        let n = rows.len() as f64;
        let mut mean = [0.0; 8];
        for row in &rows {
            for (m, v) in mean.iter_mut().zip(row.stats()) {
                *m += v;
            }
        }
        let mean = mean.map(|m| m / n);
        let mut var = [0.0; 8];
        if rows.len() > 1 {
            for row in &rows {
                for ((s, v), m) in var.iter_mut().zip(row.stats()).zip(mean) {
                    *s += (v - m).powi(2);
                }
            }
            var = var.map(|s| s / (n - 1.0));
        }
        let cumulative = r.cumulative();
        SelectionSummary {
            experiment: r.spec.experiment.to_string(),
            strategy: r.strategy.clone(),
            pool: r.pool.clone(),
            target: r.spec.target,
            master_seed: r.spec.master_seed,
            exhausted_runs: rows.iter().filter(|x| x.exhausted).count(),
            rows,
            mean: RunStats::from_array(mean),
            std: RunStats::from_array(var.map(f64::sqrt)),
            cumulative,
            cumulative_metrics: EvalReport::from_confusion(cumulative),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealTimeRow {
    pub mode: RealTimeMode,
    pub seed: u64,
    pub budget_s: f64,
    pub generated: usize,
    pub executed_unsafe: usize,
    pub executed_safe: usize,
    pub rejected: usize,
    pub unfinished: usize,
    pub retrains: usize,
    pub generation_s: f64,
    pub prediction_s: f64,
    pub execution_safe_s: f64,
    pub execution_unsafe_s: f64,
    pub retraining_s: f64,
    pub confusion: Confusion,
    pub metrics: EvalReport,
}

impl RealTimeRow {
    pub fn from_run(r: &RealTimeRun) -> RealTimeRow {
        RealTimeRow {
            mode: r.mode,
            seed: r.seed,
            budget_s: r.budget_s,
            generated: r.generated,
            executed_unsafe: r.executed_unsafe,
            executed_safe: r.executed_safe,
            rejected: r.rejected,
            unfinished: r.unfinished,
            retrains: r.retrains,
            generation_s: r.ledger.generation_s,
            prediction_s: r.ledger.prediction_s,
            execution_safe_s: r.ledger.execution_safe_s,
            execution_unsafe_s: r.ledger.execution_unsafe_s,
            retraining_s: r.ledger.retraining_s,
            confusion: r.confusion,
            metrics: EvalReport::from_confusion(r.confusion),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    #[serde(default)]
    pub selection: Vec<SelectionSummary>,
    #[serde(default)]
    pub realtime: Vec<RealTimeRow>,
}

impl Default for Report {
    fn default() -> Self {
        Report { schema_version: REPORT_SCHEMA_VERSION, selection: Vec::new(), realtime: Vec::new() }
    }
}

const SELECTION_HEADER: [&str; 20] = [
    "experiment",
    "strategy",
    "pool",
    "target",
    "repetition",
    "seed",
    "drawn",
    "executed",
    "skipped",
    "executed_unsafe",
    "executed_safe",
    "unsafe_ratio",
    "time_safe_s",
    "time_unsafe_s",
    "tp",
    "fp",
    "tn",
    "fn",
    "exhausted",
    "master_seed",
];

const REALTIME_HEADER: [&str; 20] = [
    "mode",
    "seed",
    "budget_s",
    "generated",
    "executed_unsafe",
    "executed_safe",
    "rejected",
    "unfinished",
    "retrains",
    "generation_s",
    "prediction_s",
    "execution_safe_s",
    "execution_unsafe_s",
    "retraining_s",
    "tp",
    "fp",
    "tn",
    "fn",
    "accuracy",
    "recall_unsafe",
];

impl Report {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| ExperimentError::InvalidParameter(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Report> {
        #[derive(Deserialize)]
        struct Version {
            schema_version: u32,
        }
        let bad = |e: serde_json::Error| ExperimentError::SchemaMismatch(e.to_string());
        let v: Version = serde_json::from_str(s).map_err(bad)?;
        if v.schema_version != REPORT_SCHEMA_VERSION {
            return Err(ExperimentError::SchemaMismatch(format!(
                "report schema version {} (expected {REPORT_SCHEMA_VERSION})",
                v.schema_version
            )));
        }
        serde_json::from_str(s).map_err(bad)
    }

    /// One row per repetition followed by `mean` and `std` rows per cell.
    pub fn write_selection_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(SELECTION_HEADER)?;
        for s in &self.selection {
            let head = [s.experiment.clone(), s.strategy.clone(), s.pool.clone(), s.target.to_string()];
            for r in &s.rows {
                let c = r.confusion;
                let mut rec: Vec<String> = head.to_vec();
                rec.extend([r.repetition.to_string(), r.seed.to_string()]);
                rec.extend(r.stats().map(|v| v.to_string()));
                rec.extend([c.tp, c.fp, c.tn, c.fn_].map(|v| v.to_string()));
                rec.extend([r.exhausted.to_string(), s.master_seed.to_string()]);
                wr.write_record(&rec)?;
            }
            for (tag, stats) in [("mean", s.mean), ("std", s.std)] {
                let mut rec: Vec<String> = head.to_vec();
                rec.extend([tag.to_string(), String::new()]);
                rec.extend(stats.to_array().map(|v| v.to_string()));
                if tag == "mean" {
                    let c = s.cumulative;
                    rec.extend([c.tp, c.fp, c.tn, c.fn_].map(|v| v.to_string()));
                    rec.push(s.exhausted_runs.to_string());
                } else {
                    rec.extend(std::iter::repeat_n(String::new(), 5));
                }
                rec.push(s.master_seed.to_string());
                wr.write_record(&rec)?;
            }
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn write_realtime_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(REALTIME_HEADER)?;
        for r in &self.realtime {
            let c = r.confusion;
            let mode = serde_json::to_value(r.mode).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            let mut rec = vec![mode, r.seed.to_string(), r.budget_s.to_string()];
            rec.extend(
                [r.generated, r.executed_unsafe, r.executed_safe, r.rejected, r.unfinished, r.retrains].map(|v| v.to_string()),
            );
            rec.extend(
                [r.generation_s, r.prediction_s, r.execution_safe_s, r.execution_unsafe_s, r.retraining_s].map(|v| v.to_string()),
            );
            rec.extend([c.tp, c.fp, c.tn, c.fn_].map(|v| v.to_string()));
            rec.extend([r.metrics.accuracy, r.metrics.unsafe_.recall].map(|v| v.to_string()));
            wr.write_record(&rec)?;
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Concatenate report sections in input order; nothing is recomputed.
pub fn merge_reports(reports: &[Report]) -> Result<Report> {
    if reports.is_empty() {
        return Err(ExperimentError::InvalidParameter("no reports to merge".into()));
    }
    let mut out = Report::default();
    for r in reports {
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(ExperimentError::SchemaMismatch(format!(
                "report schema version {} (expected {REPORT_SCHEMA_VERSION})",
                r.schema_version
            )));
        }
        out.selection.extend(r.selection.iter().cloned());
        out.realtime.extend(r.realtime.iter().cloned());
    }
    Ok(out)
}
