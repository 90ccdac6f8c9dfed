mod common;

use common::rng;
use patchsvm::trees::{fit_ensemble, importances, select_cumulative, EnsembleConfig, ImportanceVector, Splitter};
use patchsvm::{Label, Matrix};
use rand::Rng;

fn random_importances(r: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    let m = r.random_range(1..200);
    let mut v: Vec<f64> = match r.random_range(0..3) {
        0 => (0..m).map(|_| r.random::<f64>()).collect(),
        // heavy ties
        1 => (0..m).map(|_| r.random_range(0..4) as f64 * 0.25).collect(),
        // heavy-tailed
        _ => (0..m).map(|_| r.random::<f64>().powi(8)).collect(),
    };
    if v.iter().all(|&x| x == 0.0) {
        v[0] = 1.0;
    }
    v
}

#[test]
fn cumulative_prefix_is_minimal() {
    let mut r = rng(6);
    for _ in 0..500 {
        let scores = random_importances(&mut r);
        let total: f64 = scores.iter().sum();
        let sel = select_cumulative(&ImportanceVector { scores: scores.clone() }, 0.95).unwrap();
        let sum = |idx: &[usize]| idx.iter().map(|&j| scores[j]).sum::<f64>();
        let k = sel.selected_indices.len();
        assert!(sum(&sel.selected_indices) >= 0.95 * total * (1.0 - 1e-12));
        assert!(sum(&sel.selected_indices[..k - 1]) < 0.95 * total);
        // ranked by descending importance
        assert!(sel.selected_indices.windows(2).all(|w| scores[w[0]] >= scores[w[1]]));
        let mut sorted = scores.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        assert!(sorted[..k].iter().sum::<f64>() >= 0.95 * total * (1.0 - 1e-12));
    }
}

#[test]
fn uniform_hundred() {
    let sel = select_cumulative(&ImportanceVector { scores: vec![1.0; 100] }, 0.95).unwrap();
    assert_eq!(sel.selected_indices.len(), 95);
}

fn noisy(n: usize, m: usize, seed: u64) -> (Matrix<f64>, Vec<Label>) {
    let mut r = rng(seed);
    let mut data = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let pos = i % 2 == 0;
        for j in 0..m {
            let shift = if j == 1 && pos { 1.5 } else { 0.0 };
            data.push(r.random::<f64>() + shift);
        }
        y.push(if pos { Label::Mass } else { Label::NonMass });
    }
    (Matrix::from_vec(n, m, data).unwrap(), y)
}

#[test]
fn importances_are_a_distribution() {
    let (x, y) = noisy(60, 8, 1);
    for splitter in [Splitter::Random, Splitter::Best] {
        let cfg = EnsembleConfig { n_trees: 20, splitter, bootstrap: splitter == Splitter::Best, seed: 3, ..Default::default() };
        let imp = importances(&fit_ensemble(&x, &y, &cfg).unwrap());
        assert!(imp.scores.iter().all(|&s| s >= 0.0));
        assert!((imp.scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let top = (0..8).max_by(|&a, &b| imp.scores[a].total_cmp(&imp.scores[b])).unwrap();
        assert_eq!(top, 1);
    }
}

#[test]
fn column_permutation_permutes_importances() {
    let (x, y) = noisy(50, 5, 2);
    let perm = [3, 0, 4, 1, 2];
    let xp = x.select_cols(&perm).unwrap();
    let cfg = EnsembleConfig { n_trees: 5, splitter: Splitter::Best, bootstrap: false, max_features: Some(5), seed: 9, ..Default::default() };
    let a = importances(&fit_ensemble(&x, &y, &cfg).unwrap());
    let b = importances(&fit_ensemble(&xp, &y, &cfg).unwrap());
    for (k, &j) in perm.iter().enumerate() {
        assert!((b.scores[k] - a.scores[j]).abs() < 1e-12, "{k} <- {j}");
    }
}
