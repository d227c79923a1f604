use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::entropy::{best_threshold, label_entropy};
use super::{LearnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMethod {
    InfoGain,
    Correlation,
}

impl RankMethod {
    pub fn threshold(self) -> f64 {
        match self {
            RankMethod::InfoGain => 0.01,
            RankMethod::Correlation => 0.1,
        }
    }
}

impl fmt::Display for RankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankMethod::InfoGain => "infogain",
            RankMethod::Correlation => "correlation",
        })
    }
}

impl FromStr for RankMethod {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "infogain" => Ok(RankMethod::InfoGain),
            "correlation" | "pearson" => Ok(RankMethod::Correlation),
            _ => Err(LearnError::InvalidParameter(format!("unknown ranking method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub rank: usize,
    pub feature: String,
    pub score: f64,
    pub above_threshold: bool,
}

/// Information gain in bits of the best binary threshold split.
pub fn info_gain(values: &[f64], labels: &[bool]) -> f64 {
    best_threshold(values, labels, 1).map_or(0.0, |s| s.gain.max(0.0))
}

/// |Pearson r| between a feature and the 0/1 label; 0 for a constant
/// feature.
pub fn abs_correlation(values: &[f64], labels: &[bool]) -> f64 {
    let n = values.len() as f64;
    let t: Vec<f64> = labels.iter().map(|&l| l as u8 as f64).collect();
    let mx = values.iter().sum::<f64>() / n;
    let my = t.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in values.iter().zip(&t) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        0.0
    } else {
        (sxy / (sxx * syy).sqrt()).abs().min(1.0)
    }
}

/// Features in descending score order; ties keep schema order.
pub fn rank_features(d: &Dataset, method: RankMethod) -> Result<Vec<RankedFeature>> {
    d.require_both_classes()?;
    let labels = d.labels();
    let mut scored: Vec<(usize, f64)> = (0..d.schema.len())
        .map(|j| {
            let v = d.column(j);
            let s = match method {
                RankMethod::InfoGain => info_gain(&v, &labels),
                RankMethod::Correlation => abs_correlation(&v, &labels),
            };
            (j, s)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(r, (j, score))| RankedFeature {
            rank: r + 1,
            feature: d.schema.columns[j].name.clone(),
            score,
            above_threshold: score >= method.threshold(),
        })
        .collect())
}

/// Upper bound on information gain for these labels.
pub fn max_info_gain(labels: &[bool]) -> f64 {
    label_entropy(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::dataset::Schema;

    fn data() -> Dataset {
        let y: Vec<bool> = (0..12).map(|i| i % 3 == 0).collect();
        let x: Vec<Vec<f64>> = y.iter().enumerate().map(|(i, &l)| vec![7.0, l as u8 as f64, i as f64]).collect();
        Dataset::from_matrix(Schema::numeric(&["const", "copy", "index"]), x, &y).unwrap()
    }

    #[test]
    fn copy_of_label_is_maximal() {
        let d = data();
        let r = rank_features(&d, RankMethod::InfoGain).unwrap();
        assert_eq!(r[0].feature, "copy");
        assert!((r[0].score - max_info_gain(&d.labels())).abs() < 1e-15);
        let c = rank_features(&d, RankMethod::Correlation).unwrap();
        assert_eq!(c[0].feature, "copy");
        assert!((c[0].score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_scores_zero() {
        for m in [RankMethod::InfoGain, RankMethod::Correlation] {
            let r = rank_features(&data(), m).unwrap();
            let c = r.iter().find(|f| f.feature == "const").unwrap();
            assert_eq!(c.score, 0.0);
            assert!(!c.above_threshold);
            assert_eq!(r.last().unwrap().feature, "const");
        }
    }

    #[test]
    fn method_names_parse() {
        assert_eq!("infogain".parse::<RankMethod>().unwrap(), RankMethod::InfoGain);
        assert_eq!("info_gain".parse::<RankMethod>().unwrap(), RankMethod::InfoGain);
        assert_eq!(RankMethod::Correlation.to_string().parse::<RankMethod>().unwrap(), RankMethod::Correlation);
    }
}
