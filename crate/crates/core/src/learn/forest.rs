//! Bagged random-subspace ensemble of trees.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{Tree, TreeConfig};
use crate::par::{self, Exec};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestConfig {
    pub trees: usize,
    /// Attributes per split; `None` means ceil(sqrt(p)).
    pub features_per_split: Option<usize>,
    pub tree: TreeConfig,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            trees: 100,
            features_per_split: None,
            tree: TreeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub bag_seeds: Vec<u64>,
}

impl Forest {
    pub fn fit(exec: Exec, x: &[Vec<f64>], y: &[bool], cfg: &ForestConfig, seed: u64) -> Forest {
        let p = x[0].len();
        let m = cfg.features_per_split.unwrap_or_else(|| (p as f64).sqrt().ceil() as usize).clamp(1, p);
        let n = x.len();
        let bag_seeds: Vec<u64> = (0..cfg.trees as u64).map(|b| rng::derive_index(seed, b)).collect();
        let trees = par::map_slice(exec, &bag_seeds, |&s| {
            let mut r = rng::rng_from(s);
            let rows: Vec<usize> = (0..n).map(|_| r.gen_range(0..n)).collect();
            Tree::fit_random(x, y, rows, &cfg.tree, m, &mut r)
        });
        Forest { trees, bag_seeds }
    }

    /// Mean of the trees' leaf probabilities.
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_proba(row)).sum::<f64>() / self.trees.len() as f64
    }
}
