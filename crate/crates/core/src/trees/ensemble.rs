use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::label::{class_counts, Label};
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::trees::tree::{grow, Tree, TreeParams};
use crate::trees::ImportanceVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitter {
    /// Extra-trees: one uniform threshold per candidate feature.
    Random,
    /// Random forest: best midpoint per candidate feature.
    Best,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n_trees: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(M))`.
    pub max_features: Option<usize>,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub splitter: Splitter,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: None,
            min_samples_split: 2,
            max_depth: None,
            splitter: Splitter::Random,
            bootstrap: false,
            seed: 0,
        }
    }
}

impl EnsembleConfig {
    pub fn resolved_max_features(&self, n_features: usize) -> Result<usize> {
        let k = self.max_features.unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize);
        if k == 0 || k > n_features {
            return Err(Error::domain(format!("max_features {k} outside 1..={n_features}")));
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub trees: Vec<Tree>,
    pub n_features: usize,
}

/// Fits `cfg.n_trees` trees, each on its own ChaCha8 stream derived from `cfg.seed`.
pub fn fit_ensemble<T: Real>(x: &Matrix<T>, y: &[Label], cfg: &EnsembleConfig) -> Result<Ensemble> {
    let (n, m) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::shape(format!("{n} rows but {} labels", y.len())));
    }
    if n < 2 {
        return Err(Error::domain("need at least two observations"));
    }
    let (pos, neg) = class_counts(y);
    if pos == 0 || neg == 0 {
        return Err(Error::domain("both classes must be present"));
    }
    if cfg.n_trees == 0 {
        return Err(Error::domain("n_trees must be at least 1"));
    }
    let params = TreeParams {
        max_features: cfg.resolved_max_features(m)?,
        min_samples_split: cfg.min_samples_split,
        max_depth: cfg.max_depth,
        random_thresholds: cfg.splitter == Splitter::Random,
    };
    let columns: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| x.get(i, j).as_f64()).collect()).collect();
    let positive: Vec<bool> = y.iter().map(|l| l.is_positive()).collect();
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t as u64);
            let samples = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(&columns, &positive, samples, &params, &mut rng)
        })
        .collect();
    Ok(Ensemble { trees, n_features: m })
}

/// Per-tree normalized impurity decrease, averaged over trees and renormalized to sum 1.
/// All zeros when no tree split.
pub fn importances(ensemble: &Ensemble) -> ImportanceVector<f64> {
    let mut acc = vec![0.0; ensemble.n_features];
    for tree in &ensemble.trees {
        let raw = tree.raw_importances();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            for (a, r) in acc.iter_mut().zip(&raw) {
                *a += r / total;
            }
        }
    }
    let total: f64 = acc.iter().sum();
    if total > 0.0 {
        for a in &mut acc {
            *a /= total;
        }
    }
    ImportanceVector { scores: acc }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::TreeNode;

    /// Feature 0 decides the label; features 1..6 are noise.
    fn separable(n: usize, seed: u64) -> (Matrix<f64>, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let positive = i % 2 == 0;
            data.push(if positive { rng.random_range(0.6..1.0) } else { rng.random_range(0.0..0.4) });
            for _ in 0..5 {
                data.push(rng.random_range(0.0..1.0));
            }
            y.push(if positive { Label::Mass } else { Label::NonMass });
        }
        (Matrix::from_vec(n, 6, data).unwrap(), y)
    }

    fn argmax(v: &[f64]) -> usize {
        v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0
    }

    #[test]
    fn separating_feature_dominates_for_both_splitters() {
        for splitter in [Splitter::Random, Splitter::Best] {
            for seed in 0..10 {
                let (x, y) = separable(80, seed);
                let cfg = EnsembleConfig { n_trees: 30, splitter, seed, ..Default::default() };
                let imp = importances(&fit_ensemble(&x, &y, &cfg).unwrap());
                assert_eq!(argmax(&imp.scores), 0, "{splitter:?} seed {seed}: {:?}", imp.scores);
                assert!((imp.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(imp.scores.iter().all(|&s| s >= 0.0));
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let (x, y) = separable(40, 1);
        let cfg = EnsembleConfig { n_trees: 8, bootstrap: true, seed: 42, ..Default::default() };
        assert_eq!(fit_ensemble(&x, &y, &cfg).unwrap(), fit_ensemble(&x, &y, &cfg).unwrap());
        let other = EnsembleConfig { seed: 43, ..cfg.clone() };
        assert_ne!(fit_ensemble(&x, &y, &cfg).unwrap(), fit_ensemble(&x, &y, &other).unwrap());
    }

    #[test]
    fn oversized_min_split_yields_stumps_and_zero_importance() {
        let (x, y) = separable(20, 2);
        let cfg = EnsembleConfig { n_trees: 5, min_samples_split: 21, ..Default::default() };
        let ens = fit_ensemble(&x, &y, &cfg).unwrap();
        assert!(ens.trees.iter().all(|t| t.nodes.len() == 1));
        assert!(importances(&ens).scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn single_useful_feature_gets_all_importance() {
        let (x, y) = separable(30, 3);
        let only = x.select_cols(&[0]).unwrap();
        let imp = importances(&fit_ensemble(&only, &y, &EnsembleConfig { n_trees: 4, ..Default::default() }).unwrap());
        assert_eq!(imp.scores, vec![1.0]);
    }

    #[test]
    fn thresholds_lie_strictly_inside_observed_values() {
        let (x, y) = separable(60, 4);
        for splitter in [Splitter::Random, Splitter::Best] {
            let ens = fit_ensemble(&x, &y, &EnsembleConfig { n_trees: 5, splitter, ..Default::default() }).unwrap();
            for tree in &ens.trees {
                for node in &tree.nodes {
                    if let TreeNode::Split { feature, threshold, .. } = node {
                        let col: Vec<f64> = (0..x.rows()).map(|i| x.get(i, *feature)).collect();
                        assert!(col.iter().any(|&v| v < *threshold));
                        assert!(col.iter().any(|&v| v > *threshold));
                    }
                }
            }
        }
    }

    #[test]
    fn constant_feature_never_used() {
        let (x, y) = separable(50, 5);
        let mut rows = Vec::new();
        for i in 0..x.rows() {
            let mut r = x.row(i).to_vec();
            r.push(3.0);
            rows.push(r);
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let imp = importances(&fit_ensemble(&x, &y, &EnsembleConfig { n_trees: 20, max_features: Some(7), ..Default::default() }).unwrap());
        assert_eq!(imp.scores[6], 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (x, y) = separable(10, 6);
        let single = vec![Label::Mass; 10];
        assert!(matches!(fit_ensemble(&x, &single, &EnsembleConfig::default()), Err(Error::Domain(_))));
        let cfg = EnsembleConfig { max_features: Some(7), ..Default::default() };
        assert!(fit_ensemble(&x, &y, &cfg).is_err());
        let cfg = EnsembleConfig { n_trees: 0, ..Default::default() };
        assert!(fit_ensemble(&x, &y, &cfg).is_err());
        assert_eq!(EnsembleConfig::default().resolved_max_features(4096).unwrap(), 64);
        assert_eq!(EnsembleConfig::default().resolved_max_features(10).unwrap(), 4);
    }
}
