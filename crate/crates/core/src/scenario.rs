//! Seeded random generation of road test cases.
//!
//! Test `i` of a batch draws from stream `i` of the configured seed, so
//! `generate(c, 5)` is a prefix of `generate(c, 10)` and generation can be
//! fanned out across threads without changing the result.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::{self, Exec};
use crate::rng;
use crate::road::{RoadError, RoadSegment, TestCase, MAX_TURN_ANGLE_DEG, MAX_TURN_RADIUS_M,
    MIN_TURN_ANGLE_DEG, MIN_TURN_RADIUS_M};

#[derive(Debug, Error, PartialEq)]
pub enum GenerationError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("test {index} needed more than {max_retries} drafts; the config is over-constrained")]
    GenerationExhausted { index: usize, max_retries: usize },
    #[error("requested zero tests")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub segments_min: usize,
    pub segments_max: usize,
    pub straight_len_range: [f64; 2],
    pub turn_radius_range: [f64; 2],
    pub turn_angle_range: [f64; 2],
    pub p_straight: f64,
    pub p_left: f64,
    pub p_right: f64,
    pub friction: f64,
    pub max_retries: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        default_config()
    }
}

pub fn default_config() -> GeneratorConfig {
    GeneratorConfig {
        seed: 0,
        segments_min: 3,
        segments_max: 15,
        straight_len_range: [20.0, 150.0],
        turn_radius_range: [5.0, 47.0],
        turn_angle_range: [15.0, 120.0],
        p_straight: 0.3,
        p_left: 0.35,
        p_right: 0.35,
        friction: crate::road::DEFAULT_FRICTION,
        max_retries: 1000,
    }
}

impl GeneratorConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        let bad = |m: &str| Err(GenerationError::InvalidConfig(m.to_string()));
        if self.segments_min < 2 || self.segments_max < self.segments_min {
            return bad("need 2 <= segments_min <= segments_max");
        }
        let range_ok = |r: [f64; 2], lo: f64, hi: f64| r[0].is_finite() && r[0] <= r[1] && r[0] >= lo && r[1] <= hi;
        if !range_ok(self.straight_len_range, f64::MIN_POSITIVE, f64::MAX) {
            return bad("straight_len_range must be a non-empty positive range");
        }
        if !range_ok(self.turn_radius_range, MIN_TURN_RADIUS_M, MAX_TURN_RADIUS_M) {
            return bad("turn_radius_range must lie inside [2, 47]");
        }
        if !range_ok(self.turn_angle_range, MIN_TURN_ANGLE_DEG, MAX_TURN_ANGLE_DEG) {
            return bad("turn_angle_range must lie inside [15, 120]");
        }
        let ps = [self.p_straight, self.p_left, self.p_right];
        if ps.iter().any(|p| !(*p >= 0.0)) || (ps.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return bad("segment probabilities must be non-negative and sum to 1");
        }
        if !(self.friction > 0.0 && self.friction <= 2.0) {
            return bad("friction must lie in (0, 2]");
        }
        if self.max_retries == 0 {
            return bad("max_retries must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub tests: Vec<TestCase>,
    /// Drafts thrown away (self-intersecting or too short).
    pub rejected: usize,
}

impl Generated {
    pub fn rejection_rate(&self) -> f64 {
        let drafts = self.rejected + self.tests.len();
        if drafts == 0 {
            0.0
        } else {
            self.rejected as f64 / drafts as f64
        }
    }
}

pub fn test_id(seed: u64, index: usize) -> String {
    format!("t{seed:016x}-{index:06}")
}

fn uniform(rng: &mut impl Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.gen_range(range[0]..=range[1])
    }
}

fn draft(cfg: &GeneratorConfig, rng: &mut impl Rng) -> Result<Vec<RoadSegment>, RoadError> {
    let n = rng.gen_range(cfg.segments_min..=cfg.segments_max);
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let seg = if u < cfg.p_straight {
                RoadSegment::straight(uniform(rng, cfg.straight_len_range))?
            } else {
                let radius = uniform(rng, cfg.turn_radius_range);
                let angle = uniform(rng, cfg.turn_angle_range);
                if u < cfg.p_straight + cfg.p_left {
                    RoadSegment::left(angle, radius)?
                } else {
                    RoadSegment::right(angle, radius)?
                }
            };
            seg.with_friction(cfg.friction)
        })
        .collect()
}

/// Test number `index` of the batch, plus the number of rejected drafts.
pub fn generate_one(cfg: &GeneratorConfig, index: usize) -> Result<(TestCase, usize), GenerationError> {
    let mut rng = rng::rng_stream(cfg.seed, index as u64);
    for attempt in 0..cfg.max_retries {
        let segs = draft(cfg, &mut rng)
            .map_err(|e| GenerationError::InvalidConfig(e.to_string()))?;
        if let Ok(test) = TestCase::new(test_id(cfg.seed, index), segs) {
            return Ok((test, attempt));
        }
    }
    Err(GenerationError::GenerationExhausted {
        index,
        max_retries: cfg.max_retries,
    })
}

pub fn generate(cfg: &GeneratorConfig, n: usize) -> Result<Generated, GenerationError> {
    generate_with(Exec::default(), cfg, n)
}

pub fn generate_with(exec: Exec, cfg: &GeneratorConfig, n: usize) -> Result<Generated, GenerationError> {
    if n == 0 {
        return Err(GenerationError::Empty);
    }
    cfg.validate()?;
    let results = par::map_indexed(exec, n, |i| generate_one(cfg, i));
    let mut tests = Vec::with_capacity(n);
    let mut rejected = 0;
    for r in results {
        let (t, rej) = r?;
        tests.push(t);
        rejected += rej;
    }
    Ok(Generated { tests, rejected })
}
