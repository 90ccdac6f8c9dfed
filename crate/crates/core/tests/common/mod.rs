//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain kernel formulas, written out independently of the library.
#[derive(Debug, Clone, Copy)]
pub enum RefKernel {
    Rbf(f64),
    Linear,
    Poly(u32, f64, f64),
    Sigmoid(f64, f64),
}

impl RefKernel {
    pub fn k(&self, x: &[f64], z: &[f64]) -> f64 {
        let dot: f64 = x.iter().zip(z).map(|(a, b)| a * b).sum();
        match *self {
            RefKernel::Rbf(g) => (-g * x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).exp(),
            RefKernel::Linear => dot,
            RefKernel::Poly(d, g, c) => (g * dot + c).powi(d as i32),
            RefKernel::Sigmoid(g, c) => (g * dot + c).tanh(),
        }
    }
}

pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

/// Two noisy Gaussian blobs with both classes present.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize, separation: f64) -> Dataset {
    loop {
        let y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        if y.iter().all(|&v| v > 0.0) || y.iter().all(|&v| v < 0.0) {
            continue;
        }
        let x = y
            .iter()
            .map(|&s| (0..d).map(|_| s * separation + rng.random_range(-1.0..1.0)).collect())
            .collect();
        return Dataset { x, y };
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Q_ij = y_i y_j K(x_i, x_j)`.
pub fn q_matrix(ds: &Dataset, k: RefKernel) -> DMatrix<f64> {
    let n = ds.y.len();
    DMatrix::from_fn(n, n, |i, j| ds.y[i] * ds.y[j] * k.k(&ds.x[i], &ds.x[j]))
}

pub fn min_eigenvalue(q: &DMatrix<f64>) -> f64 {
    q.clone().symmetric_eigen().eigenvalues.min()
}

/// Root of a nonincreasing piecewise-linear `g` by bisection down to float resolution.
fn bisect(g: impl Fn(f64) -> f64, span: f64) -> f64 {
    let (mut lo, mut hi) = (-span, span);
    while hi - lo > 1e-15 * span.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Euclidean projection onto `{0 <= a <= c, y'a = 0}`.
pub fn project_c(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let span = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let g = |l: f64| -> f64 { v.iter().zip(y).map(|(&vi, &yi)| yi * (vi - l * yi).clamp(0.0, c)).sum() };
    let lambda = bisect(g, span);
    v.iter().zip(y).map(|(&vi, &yi)| (vi - lambda * yi).clamp(0.0, c)).collect()
}

/// Euclidean projection onto `{0 <= a <= u, sum_{y=+1} a = sum_{y=-1} a = nu/2}`.
pub fn project_nu(v: &[f64], y: &[f64], u: f64, nu: f64) -> Vec<f64> {
    let span = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + u + 1.0;
    let mut out = vec![0.0; v.len()];
    for class in [1.0, -1.0] {
        let idx: Vec<usize> = (0..v.len()).filter(|&i| y[i] == class).collect();
        let g = |l: f64| idx.iter().map(|&i| (v[i] - l).clamp(0.0, u)).sum::<f64>() - nu / 2.0;
        let lambda = bisect(g, span);
        for &i in &idx {
            out[i] = (v[i] - lambda).clamp(0.0, u);
        }
    }
    out
}

fn matvec(q: &[f64], a: &[f64]) -> Vec<f64> {
    let n = a.len();
    (0..n).map(|i| q[i * n..(i + 1) * n].iter().zip(a).map(|(x, y)| x * y).sum()).collect()
}

/// Minimizes `1/2 a'Qa + p'a` over a convex set by accelerated projected
/// gradient with adaptive restart, until a plain projected-gradient step moves
/// the iterate by less than `tol`.
pub fn projected_gradient(q: &DMatrix<f64>, p: &[f64], project: impl Fn(&[f64]) -> Vec<f64>, tol: f64) -> Vec<f64> {
    let n = p.len();
    let lmax = q.clone().symmetric_eigen().eigenvalues.max().max(1e-12);
    let step = 1.0 / lmax;
    let qf: Vec<f64> = (0..n * n).map(|k| q[(k / n, k % n)]).collect();
    let f = |a: &[f64]| -> f64 {
        let qa = matvec(&qf, a);
        (0..n).map(|i| a[i] * (0.5 * qa[i] + p[i])).sum()
    };
    let grad = |a: &[f64]| -> Vec<f64> { matvec(&qf, a).iter().zip(p).map(|(g, pi)| g + pi).collect() };
    let mut x = project(&vec![0.0; n]);
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut fx = f(&x);
    let converged = |x: &[f64]| {
        let g = grad(x);
        let plain = project(&(0..n).map(|i| x[i] - step * g[i]).collect::<Vec<_>>());
        plain.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) < tol
    };
    for it in 0..5_000_000usize {
        if it % 16 == 0 && converged(&x) {
            if std::env::var("ORACLE_DEBUG").is_ok() {
                eprintln!("oracle n={n} iters={it}");
            }
            break;
        }
        let g = grad(&z);
        let next = project(&(0..n).map(|i| z[i] - step * g[i]).collect::<Vec<_>>());
        let fnext = f(&next);
        if fnext > fx && t > 1.0 {
            // restart momentum from the last accepted iterate
            t = 1.0;
            z = x.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = (0..n).map(|i| next[i] + (t - 1.0) / t_next * (next[i] - x[i])).collect();
        x = next;
        fx = fnext;
        t = t_next;
    }
    x
}

pub struct RefSvm {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Dual objective in maximization form.
    pub objective: f64,
}

/// C-SVM dual solved by the projected-gradient oracle.
pub fn oracle_csvm(ds: &Dataset, k: RefKernel, c: f64) -> RefSvm {
    let q = q_matrix(ds, k);
    let n = ds.y.len();
    let p = vec![-1.0; n];
    let alpha = projected_gradient(&q, &p, |v| project_c(v, &ds.y, c), 1e-10);
    let av = DMatrix::from_column_slice(n, 1, &alpha);
    let qa = &q * &av;
    let objective = alpha.iter().sum::<f64>() - 0.5 * (av.transpose() * &qa)[(0, 0)];
    // bias from interior points, else interval midpoint
    let (mut sum, mut free, mut lo, mut hi) = (0.0, 0, f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let yg = ds.y[i] * (qa[(i, 0)] - 1.0);
        let eps = 1e-8 * c;
        if alpha[i] > eps && alpha[i] < c - eps {
            sum += yg;
            free += 1;
        } else if (alpha[i] >= c - eps) == (ds.y[i] > 0.0) {
            lo = lo.max(yg);
        } else {
            hi = hi.min(yg);
        }
    }
    let rho = if free > 0 { sum / free as f64 } else { 0.5 * (lo + hi) };
    RefSvm { alpha, bias: -rho, objective }
}

/// nu-SVM dual (`0 <= a <= 1/n`, `sum a = nu`) solved by the oracle; objective is `-1/2 a'Qa`.
pub fn oracle_nusvm_objective(ds: &Dataset, k: RefKernel, nu: f64) -> f64 {
    let q = q_matrix(ds, k);
    let n = ds.y.len();
    let alpha = projected_gradient(&q, &vec![0.0; n], |v| project_nu(v, &ds.y, 1.0 / n as f64, nu), 1e-10);
    let av = DMatrix::from_column_slice(n, 1, &alpha);
    -0.5 * (av.transpose() * &q * &av)[(0, 0)]
}

pub fn ref_decision(ds: &Dataset, k: RefKernel, svm: &RefSvm, x: &[f64]) -> f64 {
    svm.bias + (0..ds.y.len()).map(|i| svm.alpha[i] * ds.y[i] * k.k(&ds.x[i], x)).sum::<f64>()
}

/// Area under the ROC as the fraction of correctly ordered (pos, neg) pairs, ties counting 1/2.
pub fn mann_whitney(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if positive[i] && !positive[j] {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

/// Literal trace of the patch-scan pseudocode: 1-based origins stepping by
/// `stride`, keeping a patch only while its final row/col stays strictly inside.
pub fn trace_patch_origins(rows: usize, cols: usize, ph: usize, pw: usize, stride: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut initial_row = 1;
    loop {
        let final_row = initial_row + ph;
        if !(final_row < rows) {
            break;
        }
        let mut initial_col = 1;
        loop {
            let final_col = initial_col + pw;
            if !(final_col < cols) {
                break;
            }
            out.push((initial_row, initial_col));
            initial_col += stride;
        }
        initial_row += stride;
    }
    out
}

/// Direct-loop 3x3 "same" convolution over a channel-last tensor.
pub fn conv_loop(
    input: &[f32],
    h: usize,
    w: usize,
    cin: usize,
    kernel: &[f32],
    bias: &[f32],
    cout: usize,
) -> Vec<f32> {
    let mut out = vec![0f32; h * w * cout];
    for r in 0..h {
        for c in 0..w {
            for o in 0..cout {
                let mut s = f64::from(bias[o]);
                for dr in 0..3 {
                    for dc in 0..3 {
                        let (rr, cc) = (r as isize + dr as isize - 1, c as isize + dc as isize - 1);
                        if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                            continue;
                        }
                        for i in 0..cin {
                            let x = input[(rr as usize * w + cc as usize) * cin + i];
                            let k = kernel[((dr * 3 + dc) * cin + i) * cout + o];
                            s += f64::from(x) * f64::from(k);
                        }
                    }
                }
                out[(r * w + c) * cout + o] = s as f32;
            }
        }
    }
    out
}
