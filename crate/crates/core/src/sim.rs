//! Deterministic kinematic lane-keeping surrogate.
//!
//! The driver plans a speed for every turn from the friction-limited
//! cornering speed `v = sqrt(mu * r * g)`, using its own (possibly wrong)
//! friction belief and a noisy perception of the radius. A two-pass,
//! acceleration-limited speed profile is then driven over a fixed grid.
//! An out-of-bound episode (OBE) happens on a turn when the driven speed
//! anywhere on it exceeds the true friction-limited speed.
//!
//! Driver target on turn `i`, with perceived radius `r̂ = r (1 + η)`:
//!
//! ```text
//! v*² = min(AF, 1)² · mu_assumed · r̂ · g  +  max(AF - 1, 0) · corner_carry
//! ```
//!
//! Cautious drivers (AF ≤ 1) scale their cap down; aggressive drivers carry
//! a fixed surplus of squared speed into every corner, which hurts tight
//! corners far more than wide ones.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::{self, Exec};
use crate::rng;
use crate::road::{Label, LabeledTest, RoadSegment, TestCase};

pub const G: f64 = 9.81;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("safe speed undefined for radius {radius} and friction {mu}")]
    Domain { radius: f64, mu: f64 },
    #[error("invalid driver config: {0}")]
    InvalidDriver(String),
}

/// Friction-limited cornering speed on a flat road.
pub fn safe_speed(radius: f64, mu: f64, g: f64) -> Result<f64, SimError> {
    if !(radius > 0.0 && mu > 0.0 && g > 0.0) {
        return Err(SimError::Domain { radius, mu });
    }
    Ok((mu * radius * g).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriverConfig {
    /// Driver profile name, used as dataset provenance.
    pub name: String,
    pub aggression: f64,
    /// Friction the driver believes the road has.
    pub mu_assumed: f64,
    pub v_max: f64,
    pub a_acc: f64,
    /// Braking capability, positive magnitude.
    pub a_dec: f64,
    /// Maximum relative radius misperception η_max.
    pub perception_noise: f64,
    pub noise_seed: u64,
    pub g: f64,
    /// Squared-speed surplus (m²/s²) per unit of aggression above 1.
    pub corner_carry: f64,
    /// Fixed per-test execution overhead (s).
    pub overhead_s: f64,
    pub grid_m: f64,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig::aggressive(1.5)
    }
}

impl DriverConfig {
    /// The aggression-driven lane keeper at a given aggression factor.
    pub fn aggressive(aggression: f64) -> Self {
        DriverConfig {
            name: format!("aggressive-af{aggression}"),
            aggression,
            mu_assumed: 0.65,
            v_max: 30.0,
            a_acc: 3.0,
            a_dec: 6.0,
            perception_noise: 0.25,
            noise_seed: 0,
            g: G,
            corner_carry: 30.0,
            overhead_s: 5.0,
            grid_m: 1.0,
        }
    }

    /// Trajectory planner: never aggressive, but with its own friction belief.
    pub fn planner() -> Self {
        DriverConfig {
            name: "planner".into(),
            aggression: 1.0,
            mu_assumed: 0.66,
            ..DriverConfig::aggressive(1.0)
        }
    }

    pub fn with_noise_seed(mut self, seed: u64) -> Self {
        self.noise_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidDriver(m.to_string()));
        if !(self.aggression > 0.0 && self.aggression.is_finite()) {
            return bad("aggression must be positive");
        }
        if !(self.mu_assumed > 0.0 && self.mu_assumed <= 2.0) {
            return bad("mu_assumed must lie in (0, 2]");
        }
        if !(self.v_max > 0.0 && self.a_acc > 0.0 && self.a_dec > 0.0) {
            return bad("v_max, a_acc and a_dec must be positive");
        }
        if !(0.0..0.5).contains(&self.perception_noise) {
            return bad("perception_noise must lie in [0, 0.5)");
        }
        if !(self.g > 0.0 && self.grid_m > 0.0) {
            return bad("g and grid_m must be positive");
        }
        if !(self.corner_carry >= 0.0 && self.overhead_s >= 0.0) {
            return bad("corner_carry and overhead_s must be non-negative");
        }
        Ok(())
    }

    /// Target speed for a turn of perceived radius `perceived`.
    pub fn target_speed(&self, perceived: f64) -> f64 {
        let scale = self.aggression.min(1.0);
        let base = scale * scale * self.mu_assumed * perceived * self.g;
        let carry = (self.aggression - 1.0).max(0.0) * self.corner_carry;
        (base + carry).sqrt().min(self.v_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub label: Label,
    pub obe_segments: Vec<usize>,
    /// (position m, speed m/s) per grid point.
    pub speed_profile: Vec<(f64, f64)>,
    pub sim_duration: f64,
    pub wall_cost: f64,
}

struct GridPoint {
    s: f64,
    cap: f64,
    /// Segments this point lies on; boundary points touch two.
    segs: (usize, usize),
}

/// Relative radius error for turn `index` of test `test_id`.
pub fn perception_error(driver: &DriverConfig, test_id: &str, index: usize) -> f64 {
    let eta = driver.perception_noise;
    if eta == 0.0 {
        return 0.0;
    }
    let key = rng::mix64(driver.noise_seed ^ rng::fnv1a(test_id.as_bytes()));
    rng::rng_stream(key, index as u64).gen_range(-eta..=eta)
}

fn caps(test: &TestCase, driver: &DriverConfig) -> Vec<f64> {
    test.segments()
        .iter()
        .enumerate()
        .map(|(i, seg)| {
            if seg.is_turn() {
                let perceived = seg.radius() * (1.0 + perception_error(driver, test.id(), i));
                driver.target_speed(perceived)
            } else {
                driver.v_max
            }
        })
        .collect()
}

fn grid(segments: &[RoadSegment], caps: &[f64], step: f64) -> (Vec<GridPoint>, Vec<f64>) {
    let mut pts = vec![GridPoint {
        s: 0.0,
        cap: caps[0],
        segs: (0, 0),
    }];
    let mut ds = Vec::new();
    let mut s0 = 0.0;
    for (i, seg) in segments.iter().enumerate() {
        let n = (seg.length() / step).ceil().max(1.0) as usize;
        let h = seg.length() / n as f64;
        for j in 1..=n {
            let last = j == n;
            let next = if last && i + 1 < segments.len() { i + 1 } else { i };
            ds.push(h);
            pts.push(GridPoint {
                s: if last { s0 + seg.length() } else { s0 + h * j as f64 },
                cap: caps[i].min(caps[next]),
                segs: (i, next),
            });
        }
        s0 += seg.length();
    }
    (pts, ds)
}

pub fn simulate(test: &TestCase, driver: &DriverConfig) -> Result<SimResult, SimError> {
    driver.validate()?;
    let segments = test.segments();
    let caps = caps(test, driver);
    let (pts, ds) = grid(segments, &caps, driver.grid_m);

    // Start from rest, then limit acceleration forward and braking backward.
    let mut v: Vec<f64> = pts.iter().map(|p| p.cap).collect();
    v[0] = 0.0;
    for k in 1..v.len() {
        v[k] = v[k].min((v[k - 1] * v[k - 1] + 2.0 * driver.a_acc * ds[k - 1]).sqrt());
    }
    for k in (0..v.len() - 1).rev() {
        v[k] = v[k].min((v[k + 1] * v[k + 1] + 2.0 * driver.a_dec * ds[k]).sqrt());
    }

    let physical: Vec<Option<f64>> = segments
        .iter()
        .map(|seg| {
            seg.is_turn()
                .then(|| (seg.friction() * seg.radius() * driver.g).sqrt())
        })
        .collect();
    let mut obe = vec![false; segments.len()];
    for (p, &speed) in pts.iter().zip(&v) {
        for i in [p.segs.0, p.segs.1] {
            if let Some(limit) = physical[i] {
                if speed > limit {
                    obe[i] = true;
                }
            }
        }
    }
    let obe_segments: Vec<usize> = (0..segments.len()).filter(|&i| obe[i]).collect();

    let sim_duration: f64 = ds
        .iter()
        .enumerate()
        .map(|(k, h)| 2.0 * h / (v[k] + v[k + 1]))
        .sum();

    Ok(SimResult {
        label: Label::from_unsafe(!obe_segments.is_empty()),
        obe_segments,
        speed_profile: pts.iter().zip(&v).map(|(p, &speed)| (p.s, speed)).collect(),
        sim_duration,
        wall_cost: driver.overhead_s + sim_duration,
    })
}

pub fn label(test: &TestCase, driver: &DriverConfig) -> Result<LabeledTest, SimError> {
    let r = simulate(test, driver)?;
    Ok(LabeledTest::new(test.clone(), r.obe_segments, r.sim_duration, r.wall_cost)
        .expect("simulator output satisfies LabeledTest invariants"))
}

pub fn label_batch(tests: &[TestCase], driver: &DriverConfig) -> Result<Vec<LabeledTest>, SimError> {
    label_batch_with(Exec::default(), tests, driver)
}

pub fn label_batch_with(
    exec: Exec,
    tests: &[TestCase],
    driver: &DriverConfig,
) -> Result<Vec<LabeledTest>, SimError> {
    driver.validate()?;
    par::map_slice(exec, tests, |t| label(t, driver)).into_iter().collect()
}
