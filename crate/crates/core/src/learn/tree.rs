//! C4.5-style binary decision tree over numeric thresholds.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::entropy::{best_threshold, ThresholdSplit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    /// Highest gain ratio among attributes with at least average gain.
    GainRatio,
    InfoGain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeConfig {
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub criterion: SplitCriterion,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            min_leaf: 5,
            max_depth: None,
            criterion: SplitCriterion::GainRatio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        p_unsafe: f64,
        safe: usize,
        #[serde(rename = "unsafe")]
        unsafe_: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn leaf(safe: usize, unsafe_: usize) -> Node {
        let n = safe + unsafe_;
        Node::Leaf {
            p_unsafe: if n == 0 { 0.5 } else { unsafe_ as f64 / n as f64 },
            safe,
            unsafe_,
        }
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { p_unsafe, .. } => return *p_unsafe,
                Node::Split { feature, threshold, left, right } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub root: Node,
}

/// Best admissible threshold of every attribute in `features` over `rows`.
pub fn candidate_splits(
    x: &[Vec<f64>],
    y: &[bool],
    rows: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Vec<(usize, ThresholdSplit)> {
    let labels: Vec<bool> = rows.iter().map(|&i| y[i]).collect();
    features
        .iter()
        .filter_map(|&j| {
            let values: Vec<f64> = rows.iter().map(|&i| x[i][j]).collect();
            best_threshold(&values, &labels, min_leaf)
                .filter(|s| s.gain > 1e-12)
                .map(|s| (j, s))
        })
        .collect()
}

/// Pick the winning attribute among candidates.
pub fn choose(cands: &[(usize, ThresholdSplit)], criterion: SplitCriterion) -> Option<(usize, ThresholdSplit)> {
    if cands.is_empty() {
        return None;
    }
    let better = |a: f64, b: f64| a > b + 1e-12;
    match criterion {
        SplitCriterion::InfoGain => cands
            .iter()
            .copied()
            .reduce(|best, c| if better(c.1.gain, best.1.gain) { c } else { best }),
        SplitCriterion::GainRatio => {
            let avg = cands.iter().map(|c| c.1.gain).sum::<f64>() / cands.len() as f64;
            cands
                .iter()
                .copied()
                .filter(|c| c.1.gain >= avg - 1e-12)
                .reduce(|best, c| if better(c.1.gain_ratio(), best.1.gain_ratio()) { c } else { best })
        }
    }
}

struct Grower<'a, R> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    cfg: &'a TreeConfig,
    /// Attributes sampled per split, with the generator that draws them.
    subsample: Option<(usize, &'a mut R)>,
}

impl<R: Rng> Grower<'_, R> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> Node {
        let u = rows.iter().filter(|&&i| self.y[i]).count();
        let s = rows.len() - u;
        let leaf = Node::leaf(s, u);
        if u == 0 || s == 0 || rows.len() < 2 * self.cfg.min_leaf.max(1) {
            return leaf;
        }
        if self.cfg.max_depth.is_some_and(|d| depth >= d) {
            return leaf;
        }
        let p = self.x[0].len();
        let features: Vec<usize> = match &mut self.subsample {
            Some((m, rng)) => {
                let mut f = index::sample(*rng, p, (*m).min(p)).into_vec();
                f.sort_unstable();
                f
            }
            None => (0..p).collect(),
        };
        let cands = candidate_splits(self.x, self.y, &rows, &features, self.cfg.min_leaf);
        let Some((feature, split)) = choose(&cands, self.cfg.criterion) else {
            return leaf;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x[i][feature] <= split.threshold);
        Node::Split {
            feature,
            threshold: split.threshold,
            left: Box::new(self.grow(l, depth + 1)),
            right: Box::new(self.grow(r, depth + 1)),
        }
    }
}

impl Tree {
    pub fn fit(x: &[Vec<f64>], y: &[bool], cfg: &TreeConfig) -> Tree {
        let rows: Vec<usize> = (0..x.len()).collect();
        let mut g: Grower<'_, rand_chacha::ChaCha8Rng> = Grower { x, y, cfg, subsample: None };
        Tree { root: g.grow(rows, 0) }
    }

    /// Grow on the given (possibly repeated) row indices, sampling
    /// `features_per_split` attributes at each node.
    pub fn fit_random<R: Rng>(
        x: &[Vec<f64>],
        y: &[bool],
        rows: Vec<usize>,
        cfg: &TreeConfig,
        features_per_split: usize,
        rng: &mut R,
    ) -> Tree {
        let mut g = Grower { x, y, cfg, subsample: Some((features_per_split, rng)) };
        Tree { root: g.grow(rows, 0) }
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        self.root.predict_proba(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_input_is_a_leaf() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0]];
        let t = Tree::fit(&x, &[true; 3], &TreeConfig::default());
        assert_eq!(t.root, Node::leaf(0, 3));
        assert_eq!(t.predict_proba(&[100.0]), 1.0);
    }

    #[test]
    fn learns_a_threshold() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
        let y: Vec<bool> = (0..40).map(|i| i >= 25).collect();
        let t = Tree::fit(&x, &y, &TreeConfig::default());
        match &t.root {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 24.5);
            }
            _ => panic!("expected a split"),
        }
        for (r, &l) in x.iter().zip(&y) {
            assert_eq!(t.predict_proba(r) >= 0.5, l);
        }
    }

    #[test]
    fn min_leaf_is_respected() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i * 13 % 30) as f64]).collect();
        let y: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let cfg = TreeConfig { min_leaf: 4, ..Default::default() };
        fn check(n: &Node, min: usize) {
            match n {
                Node::Leaf { safe, unsafe_, .. } => assert!(safe + unsafe_ >= min),
                Node::Split { left, right, .. } => {
                    check(left, min);
                    check(right, min);
                }
            }
        }
        check(&Tree::fit(&x, &y, &cfg).root, 4);
    }

    #[test]
    fn max_depth_caps_growth() {
        let x: Vec<Vec<f64>> = (0..60).map(|i| vec![i as f64]).collect();
        let y: Vec<bool> = (0..60).map(|i| (i / 10) % 2 == 0).collect();
        let cfg = TreeConfig { max_depth: Some(1), ..Default::default() };
        assert_eq!(Tree::fit(&x, &y, &cfg).root.depth(), 1);
    }
}
