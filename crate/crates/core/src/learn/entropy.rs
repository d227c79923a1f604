//! Entropy in bits and the binary threshold search shared by the tree
//! learner and information-gain ranking.

/// Shannon entropy of a two-class count pair, in bits.
pub fn entropy(safe: usize, unsafe_: usize) -> f64 {
    let n = (safe + unsafe_) as f64;
    if n == 0.0 {
        return 0.0;
    }
    [safe, unsafe_]
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

pub fn label_entropy(labels: &[bool]) -> f64 {
    let u = labels.iter().filter(|&&l| l).count();
    entropy(labels.len() - u, u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSplit {
    /// Rows with value <= threshold go left.
    pub threshold: f64,
    pub gain: f64,
    pub split_info: f64,
    /// (safe, unsafe) counts on each side.
    pub left: (usize, usize),
    pub right: (usize, usize),
}

impl ThresholdSplit {
    pub fn gain_ratio(&self) -> f64 {
        if self.split_info > 0.0 {
            self.gain / self.split_info
        } else {
            0.0
        }
    }
}

/// Best binary split of one numeric attribute by information gain.
///
/// Candidates are midpoints between adjacent distinct values where the
/// class distribution changes; both sides must hold at least `min_leaf`
/// rows. Returns `None` when no admissible candidate exists.
pub fn best_threshold(values: &[f64], labels: &[bool], min_leaf: usize) -> Option<ThresholdSplit> {
    debug_assert_eq!(values.len(), labels.len());
    let n = values.len();
    if n < 2 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    // Collapse equal values into groups of (value, safe, unsafe).
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for &i in &order {
        let v = values[i];
        match groups.last_mut() {
            Some(g) if g.0 == v => {
                if labels[i] { g.2 += 1 } else { g.1 += 1 }
            }
            _ => groups.push((v, !labels[i] as usize, labels[i] as usize)),
        }
    }
    if groups.len() < 2 {
        return None;
    }

    let total_u = labels.iter().filter(|&&l| l).count();
    let total_s = n - total_u;
    let parent = entropy(total_s, total_u);
    let nf = n as f64;

    let mut best: Option<ThresholdSplit> = None;
    let (mut ls, mut lu) = (0usize, 0usize);
    for w in 0..groups.len() - 1 {
        ls += groups[w].1;
        lu += groups[w].2;
        let (a, b) = (groups[w], groups[w + 1]);
        let pure = |g: (f64, usize, usize)| g.1 == 0 || g.2 == 0;
        let same_class = pure(a) && pure(b) && (a.2 > 0) == (b.2 > 0);
        if same_class {
            continue;
        }
        let nl = ls + lu;
        let nr = n - nl;
        if nl < min_leaf || nr < min_leaf {
            continue;
        }
        let (rs, ru) = (total_s - ls, total_u - lu);
        let cond = nl as f64 / nf * entropy(ls, lu) + nr as f64 / nf * entropy(rs, ru);
        let gain = parent - cond;
        if best.is_none_or(|b| gain > b.gain) {
            best = Some(ThresholdSplit {
                threshold: a.0 + (b.0 - a.0) / 2.0,
                gain,
                split_info: entropy(nl, nr),
                left: (ls, lu),
                right: (rs, ru),
            });
        }
    }
    best
}
