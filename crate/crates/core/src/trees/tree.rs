use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};

/// Gini impurity `1 - sum p_k^2`.
pub fn gini(counts: &[usize]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::domain("gini of an empty node"));
    }
    let t = total as f64;
    Ok(1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>())
}

fn gini2(c: [usize; 2]) -> f64 {
    gini(&c).unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        /// (positive, negative) sample counts.
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        /// Samples with `x <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
        /// Sample-weighted Gini decrease, relative to the tree's root sample count.
        impurity_decrease: f64,
        samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
}

impl Tree {
    /// Unnormalized mean-decrease-impurity per feature.
    pub fn raw_importances(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        for node in &self.nodes {
            if let TreeNode::Split { feature, impurity_decrease, .. } = node {
                imp[*feature] += impurity_decrease;
            }
        }
        imp
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Split { .. })).count()
    }
}

pub(crate) struct TreeParams {
    pub max_features: usize,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub random_thresholds: bool,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    /// Weighted child impurity (lower is better).
    score: f64,
    left: [usize; 2],
}

fn counts_of(samples: &[usize], positive: &[bool]) -> [usize; 2] {
    let p = samples.iter().filter(|&&i| positive[i]).count();
    [p, samples.len() - p]
}

fn child_score(left: [usize; 2], total: [usize; 2]) -> f64 {
    let right = [total[0] - left[0], total[1] - left[1]];
    let (nl, nr) = ((left[0] + left[1]) as f64, (right[0] + right[1]) as f64);
    (nl * gini2(left) + nr * gini2(right)) / (nl + nr)
}

/// One uniformly drawn threshold strictly inside the node's value range.
fn random_split(col: &[f64], samples: &[usize], positive: &[bool], total: [usize; 2], rng: &mut impl Rng) -> Option<(f64, f64, [usize; 2])> {
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| (lo.min(col[i]), hi.max(col[i])));
    if !(hi > lo) {
        return None;
    }
    let mut thr = lo + rng.random::<f64>() * (hi - lo);
    if !(thr > lo && thr < hi) {
        thr = lo + 0.5 * (hi - lo);
        if !(thr > lo && thr < hi) {
            return None;
        }
    }
    let mut left = [0, 0];
    for &i in samples {
        if col[i] <= thr {
            left[usize::from(!positive[i])] += 1;
        }
    }
    Some((thr, child_score(left, total), left))
}

/// Best midpoint threshold by exhaustive scan.
fn best_split(col: &[f64], samples: &[usize], positive: &[bool], total: [usize; 2]) -> Option<(f64, f64, [usize; 2])> {
    let mut pairs: Vec<(f64, bool)> = samples.iter().map(|&i| (col[i], positive[i])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut left = [0, 0];
    let mut best: Option<(f64, f64, [usize; 2])> = None;
    for k in 0..pairs.len() - 1 {
        left[usize::from(!pairs[k].1)] += 1;
        let (a, b) = (pairs[k].0, pairs[k + 1].0);
        if a == b {
            continue;
        }
        let thr = a + 0.5 * (b - a);
        if !(thr > a && thr < b) {
            continue;
        }
        let score = child_score(left, total);
        if best.is_none_or(|(_, s, _)| score < s) {
            best = Some((thr, score, left));
        }
    }
    best
}

/// Grows one tree over `samples` (duplicates allowed for bootstrap draws).
pub(crate) fn grow(columns: &[Vec<f64>], positive: &[bool], samples: Vec<usize>, params: &TreeParams, rng: &mut impl Rng) -> Tree {
    let n_features = columns.len();
    let root_n = samples.len() as f64;
    let mut nodes = vec![TreeNode::Leaf { counts: [0, 0] }];
    let mut stack = vec![(0usize, samples, 0usize)];
    while let Some((id, samples, depth)) = stack.pop() {
        let total = counts_of(&samples, positive);
        let node_gini = gini2(total);
        let splittable = samples.len() >= params.min_samples_split
            && node_gini > 0.0
            && params.max_depth.is_none_or(|d| depth < d);
        let mut chosen: Option<Candidate> = None;
        if splittable {
            for feature in index::sample(rng, n_features, params.max_features).into_iter() {
                let col = &columns[feature];
                let found = if params.random_thresholds {
                    random_split(col, &samples, positive, total, rng)
                } else {
                    best_split(col, &samples, positive, total)
                };
                if let Some((threshold, score, left)) = found {
                    let better = match &chosen {
                        None => true,
                        Some(c) => score < c.score || (score == c.score && feature < c.feature),
                    };
                    if better {
                        chosen = Some(Candidate { feature, threshold, score, left });
                    }
                }
            }
        }
        match chosen {
            None => nodes[id] = TreeNode::Leaf { counts: total },
            Some(c) => {
                let (l, r): (Vec<usize>, Vec<usize>) = samples.iter().partition(|&&i| columns[c.feature][i] <= c.threshold);
                debug_assert_eq!(counts_of(&l, positive), c.left);
                let n = samples.len() as f64;
                let decrease = n / root_n * (node_gini - c.score);
                let (left, right) = (nodes.len(), nodes.len() + 1);
                nodes.push(TreeNode::Leaf { counts: [0, 0] });
                nodes.push(TreeNode::Leaf { counts: [0, 0] });
                nodes[id] = TreeNode::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right,
                    impurity_decrease: decrease,
                    samples: samples.len(),
                };
                stack.push((right, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
        }
    }
    Tree { nodes, n_features }
}
