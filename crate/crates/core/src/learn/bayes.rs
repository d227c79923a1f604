//! Naive Bayes with Gaussian numeric and Bernoulli boolean likelihoods.

use serde::{Deserialize, Serialize};

use super::dataset::ColumnKind;

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Likelihood {
    Gaussian { mean: [f64; 2], var: [f64; 2] },
    /// P(feature = 1 | class).
    Bernoulli { p_true: [f64; 2] },
}

/// Index 0 is Safe, 1 is Unsafe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub prior: [f64; 2],
    pub features: Vec<Likelihood>,
}

fn gauss_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mean).powi(2) / var)
}

impl NaiveBayes {
    pub fn fit(x: &[Vec<f64>], y: &[bool], kinds: &[ColumnKind]) -> NaiveBayes {
        let counts = [y.iter().filter(|&&l| !l).count(), y.iter().filter(|&&l| l).count()];
        let n = y.len() as f64;
        let prior = [(counts[0] as f64 + 1.0) / (n + 2.0), (counts[1] as f64 + 1.0) / (n + 2.0)];
        let features = kinds
            .iter()
            .enumerate()
            .map(|(j, kind)| {
                let per_class = |c: usize| x.iter().zip(y).filter(move |(_, &l)| l as usize == c).map(move |(r, _)| r[j]);
                match kind {
                    ColumnKind::Boolean => {
                        let p = |c: usize| {
                            let ones = per_class(c).filter(|&v| v >= 0.5).count();
                            (ones as f64 + 1.0) / (counts[c] as f64 + 2.0)
                        };
                        Likelihood::Bernoulli { p_true: [p(0), p(1)] }
                    }
                    ColumnKind::Numeric => {
                        let mean = |c: usize| {
                            if counts[c] == 0 { 0.0 } else { per_class(c).sum::<f64>() / counts[c] as f64 }
                        };
                        let m = [mean(0), mean(1)];
                        let var = |c: usize| {
                            let v = if counts[c] == 0 {
                                0.0
                            } else {
                                per_class(c).map(|v| (v - m[c]).powi(2)).sum::<f64>() / counts[c] as f64
                            };
                            v.max(VARIANCE_FLOOR)
                        };
                        Likelihood::Gaussian { mean: m, var: [var(0), var(1)] }
                    }
                }
            })
            .collect();
        NaiveBayes { prior, features }
    }

    /// Log joint per class, up to a shared constant.
    pub fn log_joint(&self, row: &[f64]) -> [f64; 2] {
        let mut lj = [self.prior[0].ln(), self.prior[1].ln()];
        for (v, f) in row.iter().zip(&self.features) {
            for (c, acc) in lj.iter_mut().enumerate() {
                *acc += match f {
                    Likelihood::Gaussian { mean, var } => gauss_log_pdf(*v, mean[c], var[c]),
                    Likelihood::Bernoulli { p_true } => {
                        if *v >= 0.5 { p_true[c].ln() } else { (1.0 - p_true[c]).ln() }
                    }
                };
            }
        }
        lj
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let [s, u] = self.log_joint(row);
        1.0 / (1.0 + (s - u).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn posterior_matches_bayes_rule() {
        // Two rows per class; hand-set means 0/4, variances 1/1.
        let x = vec![vec![-1.0], vec![1.0], vec![3.0], vec![5.0]];
        let y = vec![false, false, true, true];
        let nb = NaiveBayes::fit(&x, &y, &[ColumnKind::Numeric]);
        let pdf = |v: f64, m: f64, s2: f64| (-(v - m) * (v - m) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt();
        let q = 1.7;
        let (ls, lu) = (0.5 * pdf(q, 0.0, 1.0), 0.5 * pdf(q, 4.0, 1.0));
        assert!((nb.predict_proba(&[q]) - lu / (ls + lu)).abs() < 1e-9);
    }

    #[test]
    fn boolean_laplace() {
        let x = vec![vec![1.0], vec![1.0], vec![0.0]];
        let y = vec![true, true, false];
        let nb = NaiveBayes::fit(&x, &y, &[ColumnKind::Boolean]);
        assert_eq!(nb.prior, [2.0 / 5.0, 3.0 / 5.0]);
        assert_eq!(nb.features[0], Likelihood::Bernoulli { p_true: [1.0 / 3.0, 3.0 / 4.0] });
        let expect = 0.6 * 0.75 / (0.6 * 0.75 + 0.4 / 3.0);
        assert!((nb.predict_proba(&[1.0]) - expect).abs() < 1e-12);
    }

    #[test]
    fn variance_floor_applies() {
        let x = vec![vec![2.0], vec![2.0], vec![5.0], vec![6.0]];
        let nb = NaiveBayes::fit(&x, &[false, false, true, true], &[ColumnKind::Numeric]);
        match &nb.features[0] {
            Likelihood::Gaussian { var, .. } => assert_eq!(var[0], VARIANCE_FLOOR),
            _ => unreachable!(),
        }
        assert!(nb.predict_proba(&[2.0]) < 1e-6);
    }
}
