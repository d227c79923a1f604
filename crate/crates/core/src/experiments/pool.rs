use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{ExperimentError, Result};
use crate::rng;
use crate::road::{Label, LabeledTest};

/// Requested class mix of a pool, written (safe/unsafe).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CompositionInput", into = "RawComposition")]
pub struct Composition {
    safe: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComposition {
    safe_fraction: f64,
    unsafe_fraction: f64,
}

/// Either `{"safe_fraction", "unsafe_fraction"}` or text such as "95/5".
#[derive(Deserialize)]
#[serde(untagged)]
enum CompositionInput {
    Text(String),
    Fractions(RawComposition),
}

impl TryFrom<CompositionInput> for Composition {
    type Error = ExperimentError;

    fn try_from(c: CompositionInput) -> Result<Self> {
        match c {
            CompositionInput::Text(s) => s.parse(),
            CompositionInput::Fractions(r) => Composition::try_from(r),
        }
    }
}

impl TryFrom<RawComposition> for Composition {
    type Error = ExperimentError;

    fn try_from(r: RawComposition) -> Result<Self> {
        if (r.safe_fraction + r.unsafe_fraction - 1.0).abs() > 1e-9 {
            return Err(ExperimentError::InvalidParameter(format!(
                "pool fractions {} + {} do not sum to 1",
                r.safe_fraction, r.unsafe_fraction
            )));
        }
        Composition::new(r.safe_fraction)
    }
}

impl From<Composition> for RawComposition {
    fn from(c: Composition) -> Self {
        RawComposition { safe_fraction: c.safe, unsafe_fraction: c.unsafe_fraction() }
    }
}

impl Composition {
    pub fn new(safe_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&safe_fraction) {
            return Err(ExperimentError::InvalidParameter(format!(
                "safe fraction {safe_fraction} outside [0, 1]"
            )));
        }
        Ok(Composition { safe: safe_fraction })
    }

    pub fn safe_fraction(&self) -> f64 {
        self.safe
    }

    pub fn unsafe_fraction(&self) -> f64 {
        1.0 - self.safe
    }

    /// The four mixes studied by default: (95/5), (80/20), (60/40), (30/70).
    pub fn standard() -> [Composition; 4] {
        [0.95, 0.8, 0.6, 0.3].map(|s| Composition { safe: s })
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |v: f64| {
            let p = v * 100.0;
            if (p - p.round()).abs() < 1e-9 { format!("{}", p.round()) } else { format!("{p}") }
        };
        write!(f, "({}/{})", pct(self.safe), pct(self.unsafe_fraction()))
    }
}

impl FromStr for Composition {
    type Err = ExperimentError;

    /// Accepts "95/5", "(95/5)" or "0.95/0.05".
    fn from_str(s: &str) -> Result<Self> {
        let bad = || ExperimentError::InvalidParameter(format!("cannot parse pool composition {s:?}"));
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let (a, b) = t.split_once('/').ok_or_else(bad)?;
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        let total = a + b;
        if !(total > 0.0) || a < 0.0 || b < 0.0 {
            return Err(bad());
        }
        Composition::try_from(RawComposition { safe_fraction: a / total, unsafe_fraction: b / total })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestPool {
    pub composition: Composition,
    pub tests: Vec<LabeledTest>,
}

impl TestPool {
    /// (safe, unsafe) counts.
    pub fn counts(&self) -> (usize, usize) {
        let u = self.tests.iter().filter(|t| t.label.is_unsafe()).count();
        (self.tests.len() - u, u)
    }

    pub fn len(&self) -> usize {
        self.tests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tests.is_empty()
    }
}

fn split_by_label(labeled: &[LabeledTest]) -> (Vec<usize>, Vec<usize>) {
    (0..labeled.len()).partition(|&i| !labeled[i].label.is_unsafe())
}

/// Largest (safe, unsafe) counts whose unsafe count is within one row of
/// the requested share.
fn pool_counts(c: Composition, avail_s: usize, avail_u: usize) -> Result<(usize, usize)> {
    let (fs, fu) = (c.safe_fraction(), c.unsafe_fraction());
    let short = |label, needed, available| ExperimentError::InsufficientClass { label, needed, available };
    if fu == 0.0 {
        return if avail_s > 0 { Ok((avail_s, 0)) } else { Err(short(Label::Safe, 1, 0)) };
    }
    if fs == 0.0 {
        return if avail_u > 0 { Ok((0, avail_u)) } else { Err(short(Label::Unsafe, 1, 0)) };
    }
    if avail_s == 0 {
        return Err(short(Label::Safe, 1, 0));
    }
    if avail_u == 0 {
        return Err(short(Label::Unsafe, 1, 0));
    }
    let fits = |s: usize, u: usize| s > 0 && u > 0 && (u as f64 - fu * (s + u) as f64).abs() < 1.0;
    let by_safe = (avail_s, avail_u.min((avail_s as f64 * fu / fs + 1e-9).floor() as usize));
    let by_unsafe = (avail_s.min((avail_u as f64 * fs / fu + 1e-9).floor() as usize), avail_u);
    [by_safe, by_unsafe]
        .into_iter()
        .filter(|&(s, u)| fits(s, u))
        .max_by_key(|&(s, u)| s + u)
        .ok_or_else(|| {
            if avail_u < avail_s {
                short(Label::Unsafe, (fu / fs).ceil() as usize, avail_u)
            } else {
                short(Label::Safe, (fs / fu).ceil() as usize, avail_s)
            }
        })
}

/// Seeded draw without replacement matching the requested mix as closely
/// as the available rows allow, using as many rows as possible.
pub fn build_pool(labeled: &[LabeledTest], composition: Composition, seed: u64) -> Result<TestPool> {
    let (mut safe, mut unsafe_) = split_by_label(labeled);
    let (ns, nu) = pool_counts(composition, safe.len(), unsafe_.len())?;
    safe.shuffle(&mut rng::rng_from(rng::derive(seed, "pool-safe")));
    unsafe_.shuffle(&mut rng::rng_from(rng::derive(seed, "pool-unsafe")));
    let mut members: Vec<usize> = safe[..ns].iter().chain(&unsafe_[..nu]).copied().collect();
    members.sort_unstable();
    Ok(TestPool {
        composition,
        tests: members.into_iter().map(|i| labeled[i].clone()).collect(),
    })
}

/// Balanced training set of `floor(train_share * minority)` rows per class
/// and the remaining rows, both in input order.
pub fn offline_partition(
    labeled: &[LabeledTest],
    train_share: f64,
    seed: u64,
) -> Result<(Vec<LabeledTest>, Vec<LabeledTest>)> {
    if !(train_share > 0.0 && train_share < 1.0) {
        return Err(ExperimentError::InvalidParameter(format!("train share {train_share} outside (0, 1)")));
    }
    let (mut safe, mut unsafe_) = split_by_label(labeled);
    let minority = safe.len().min(unsafe_.len());
    let n = (train_share * minority as f64 + 1e-9).floor() as usize;
    if n == 0 {
        let label = if safe.len() < unsafe_.len() { Label::Safe } else { Label::Unsafe };
        return Err(ExperimentError::InsufficientClass { label, needed: 2, available: minority });
    }
    safe.shuffle(&mut rng::rng_from(rng::derive(seed, "train-safe")));
    unsafe_.shuffle(&mut rng::rng_from(rng::derive(seed, "train-unsafe")));
    let mut in_train = vec![false; labeled.len()];
    for &i in safe[..n].iter().chain(&unsafe_[..n]) {
        in_train[i] = true;
    }
    let (train, rest): (Vec<_>, Vec<_>) = labeled.iter().cloned().zip(in_train).partition(|(_, t)| *t);
    Ok((train.into_iter().map(|p| p.0).collect(), rest.into_iter().map(|p| p.0).collect()))
}
