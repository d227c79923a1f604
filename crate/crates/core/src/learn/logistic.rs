//! L2-regularised logistic regression fitted by full-batch gradient descent
//! on standardised features.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticConfig {
    pub l2: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            l2: 1e-3,
            max_iter: 10_000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub iterations: usize,
    pub final_loss: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean cross-entropy plus `l2/2 * |w|^2` (bias unpenalised) and its
/// gradient `(dw, db)`. `x` rows are already standardised.
pub fn loss_and_grad(x: &[Vec<f64>], y: &[bool], w: &[f64], b: f64, l2: f64) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        let t = label as u8 as f64;
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        for (g, a) in gw.iter_mut().zip(row) {
            *g += r * a;
        }
        gb += r;
    }
    loss /= n;
    gb /= n;
    for (g, wi) in gw.iter_mut().zip(w) {
        *g = *g / n + l2 * wi;
    }
    loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    (loss, gw, gb)
}

/// Population mean and standard deviation per column.
pub fn column_stats(x: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let p = x.first().map_or(0, Vec::len);
    let n = x.len() as f64;
    let mean: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let std = (0..p)
        .map(|j| (x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    (mean, std)
}

impl Logistic {
    /// Fit on rows whose columns all vary. Also returns the loss after
    /// every iteration.
    pub fn fit_traced(x: &[Vec<f64>], y: &[bool], cfg: &LogisticConfig) -> (Logistic, Vec<f64>) {
        Logistic::fit_from(x, y, cfg, None)
    }

    /// Fit starting from the decision function of `init`, re-expressed in
    /// the new standardisation.
    pub fn fit_from(x: &[Vec<f64>], y: &[bool], cfg: &LogisticConfig, init: Option<&Logistic>) -> (Logistic, Vec<f64>) {
        let (mean, scale) = column_stats(x);
        let z: Vec<Vec<f64>> = x
            .iter()
            .map(|r| r.iter().zip(&mean).zip(&scale).map(|((v, m), s)| (v - m) / s).collect())
            .collect();
        let p = mean.len();
        // Standardised columns have unit mean square, so the Hessian's top
        // eigenvalue is at most 0.25 * (p + 1) + l2.
        let step = 1.0 / (0.25 * (p as f64 + 1.0) + cfg.l2);
        let (mut w, mut b) = match init.filter(|m| m.weights.len() == p) {
            Some(m) => {
                let w: Vec<f64> = (0..p).map(|j| m.weights[j] * scale[j] / m.scale[j]).collect();
                let b = m.bias + (0..p).map(|j| m.weights[j] * (mean[j] - m.mean[j]) / m.scale[j]).sum::<f64>();
                (w, b)
            }
            None => (vec![0.0; p], 0.0),
        };
        let mut history = Vec::new();
        let mut iterations = 0;
        let (mut loss, mut gw, mut gb) = loss_and_grad(&z, y, &w, b, cfg.l2);
        history.push(loss);
        while iterations < cfg.max_iter {
            let norm = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
            if norm < cfg.tol {
                break;
            }
            for (wi, g) in w.iter_mut().zip(&gw) {
                *wi -= step * g;
            }
            b -= step * gb;
            iterations += 1;
            (loss, gw, gb) = loss_and_grad(&z, y, &w, b, cfg.l2);
            history.push(loss);
        }
        let model = Logistic {
            weights: w,
            bias: b,
            mean,
            scale,
            iterations,
            final_loss: loss,
        };
        (model, history)
    }

    pub fn fit(x: &[Vec<f64>], y: &[bool], cfg: &LogisticConfig) -> Logistic {
        Logistic::fit_traced(x, y, cfg).0
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let z = self.bias
            + row
                .iter()
                .zip(&self.weights)
                .zip(self.mean.iter().zip(&self.scale))
                .map(|((v, w), (m, s))| w * (v - m) / s)
                .sum::<f64>();
        sigmoid(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn blobs(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = crate::rng::rng_from(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let u = i % 2 == 0;
            let c = if u { 1.0 } else { -1.0 };
            x.push(vec![c + rng.gen_range(-1.5..1.5), 3.0 * rng.gen_range(-1.0..1.0) + 10.0]);
            y.push(u);
        }
        (x, y)
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn separable_toy_fits_perfectly() {
        let x: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                vec![s * (1.0 + i as f64 / 10.0), (i % 5) as f64]
            })
            .collect();
        let y: Vec<bool> = x.iter().map(|r| r[0] > 0.0).collect();
        let m = Logistic::fit(&x, &y, &LogisticConfig::default());
        for (r, &t) in x.iter().zip(&y) {
            assert_eq!(m.predict_proba(r) >= 0.5, t);
        }
    }

    #[test]
    fn loss_never_increases() {
        let (x, y) = blobs(200, 5);
        let (_, h) = Logistic::fit_traced(&x, &y, &LogisticConfig { max_iter: 500, ..Default::default() });
        for w in h.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn converges_on_overlapping_data() {
        let (x, y) = blobs(200, 6);
        let m = Logistic::fit(&x, &y, &LogisticConfig::default());
        assert!(m.iterations < 10_000);
    }

    #[test]
    fn finite_difference_gradient() {
        let mut rng = crate::rng::rng_from(11);
        let x: Vec<Vec<f64>> = (0..15).map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let y: Vec<bool> = (0..15).map(|_| rng.gen()).collect();
        let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = 0.3;
        let (_, gw, gb) = loss_and_grad(&x, &y, &w, b, 0.01);
        let h = 1e-5;
        for j in 0..3 {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[j] += h;
            wm[j] -= h;
            let fd = (loss_and_grad(&x, &y, &wp, b, 0.01).0 - loss_and_grad(&x, &y, &wm, b, 0.01).0) / (2.0 * h);
            assert!((fd - gw[j]).abs() < 1e-7);
        }
        let fd = (loss_and_grad(&x, &y, &w, b + h, 0.01).0 - loss_and_grad(&x, &y, &w, b - h, 0.01).0) / (2.0 * h);
        assert!((fd - gb).abs() < 1e-7);
    }

    #[test]
    fn warm_start_preserves_function_and_converges() {
        let (x, y) = blobs(120, 9);
        let cold = Logistic::fit(&x, &y, &LogisticConfig::default());
        let (more, more_y) = blobs(140, 10);
        let zero = LogisticConfig { max_iter: 0, ..Default::default() };
        let (start, _) = Logistic::fit_from(&more, &more_y, &zero, Some(&cold));
        for r in &more {
            assert!((start.predict_proba(r) - cold.predict_proba(r)).abs() < 1e-12);
        }
        let (warm, _) = Logistic::fit_from(&more, &more_y, &LogisticConfig::default(), Some(&cold));
        let (fresh, _) = Logistic::fit_from(&more, &more_y, &LogisticConfig::default(), None);
        assert!(warm.iterations <= fresh.iterations);
        for r in &more {
            assert!((warm.predict_proba(r) - fresh.predict_proba(r)).abs() < 1e-3);
        }
    }

    #[test]
    fn rescaling_keeps_labels() {
        let (x, y) = blobs(100, 8);
        let m = Logistic::fit(&x, &y, &LogisticConfig::default());
        let xs: Vec<Vec<f64>> = x.iter().map(|r| vec![r[0] * 1000.0 - 7.0, r[1] * 0.01 + 3.0]).collect();
        let ms = Logistic::fit(&xs, &y, &LogisticConfig::default());
        for (a, b) in x.iter().zip(&xs) {
            assert_eq!(m.predict_proba(a) >= 0.5, ms.predict_proba(b) >= 0.5);
        }
    }
}
