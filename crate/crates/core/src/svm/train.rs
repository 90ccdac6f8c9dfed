use crate::error::{Error, Result};
use crate::label::{class_counts, Label};
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::svm::solver::{solve, Problem, Solution};
use crate::svm::{Formulation, KernelSpec, SolverConfig, SvmModel};

fn check_data<T: Real>(x: &Matrix<T>, y: &[Label]) -> Result<(usize, usize)> {
    if y.len() != x.rows() {
        return Err(Error::shape(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    let (pos, neg) = class_counts(y);
    if pos == 0 || neg == 0 {
        return Err(Error::domain("training data must contain both classes"));
    }
    Ok((pos, neg))
}

/// Largest feasible nu for the class balance, `2 * min(n_pos, n_neg) / n`.
pub fn max_feasible_nu(y: &[Label]) -> f64 {
    let (pos, neg) = class_counts(y);
    2.0 * pos.min(neg) as f64 / y.len() as f64
}

fn signs<T: Real>(y: &[Label]) -> Vec<T> {
    y.iter().map(|l| T::of(l.sign())).collect()
}

fn assemble<T: Real>(
    x: &Matrix<T>,
    sol: &Solution<T>,
    y: &[T],
    scale: T,
    bias: T,
    rho_margin: T,
    kernel: KernelSpec<T>,
    formulation: Formulation<T>,
) -> SvmModel<T> {
    let sv_indices: Vec<usize> = (0..x.rows()).filter(|&i| sol.alpha[i] > T::zero()).collect();
    SvmModel {
        support_vectors: x.select_rows(&sv_indices),
        dual_coefs: sv_indices.iter().map(|&i| sol.alpha[i] * y[i] * scale).collect(),
        bias,
        kernel,
        formulation,
        rho_margin,
        sv_indices,
        iterations: sol.iterations,
    }
}

/// Free-variable average of `values`, or the midpoint of the bound interval when none are free.
struct BiasEstimate {
    upper: f64,
    lower: f64,
    sum_free: f64,
    free: usize,
}

impl BiasEstimate {
    fn new() -> Self {
        Self { upper: f64::INFINITY, lower: f64::NEG_INFINITY, sum_free: 0.0, free: 0 }
    }

    fn value(&self) -> f64 {
        if self.free > 0 {
            self.sum_free / self.free as f64
        } else {
            0.5 * (self.upper + self.lower)
        }
    }
}

/// C-SVM: `max sum a - 1/2 a'Qa` subject to `0 <= a <= C`, `y'a = 0`.
pub fn train_csvm<T: Real>(x: &Matrix<T>, y: &[Label], c: T, kernel: &KernelSpec<T>, cfg: &SolverConfig) -> Result<SvmModel<T>> {
    check_data(x, y)?;
    if !(c > T::zero()) || !c.is_finite() {
        return Err(Error::domain(format!("C must be positive, got {c}")));
    }
    let kernel = kernel.resolve(x)?;
    let ys = signs::<T>(y);
    let n = x.rows();
    let sol = solve(
        Problem { x, kernel, y: ys.clone(), p: vec![-T::one(); n], alpha: vec![T::zero(); n], upper: c, nu: false },
        cfg,
    )?;
    let mut est = BiasEstimate::new();
    for i in 0..n {
        let yg = (ys[i] * sol.grad[i]).as_f64();
        let positive = ys[i] > T::zero();
        if sol.alpha[i] >= c {
            if positive {
                est.lower = est.lower.max(yg);
            } else {
                est.upper = est.upper.min(yg);
            }
        } else if sol.alpha[i] <= T::zero() {
            if positive {
                est.upper = est.upper.min(yg);
            } else {
                est.lower = est.lower.max(yg);
            }
        } else {
            est.free += 1;
            est.sum_free += yg;
        }
    }
    let bias = T::of(-est.value());
    Ok(assemble(x, &sol, &ys, T::one(), bias, T::zero(), kernel, Formulation::CSvm { c }))
}

/// nu-SVM: `max -1/2 a'Qa` subject to `0 <= a <= 1/n`, `y'a = 0`, `sum a = nu`.
pub fn train_nusvm<T: Real>(x: &Matrix<T>, y: &[Label], nu: T, kernel: &KernelSpec<T>, cfg: &SolverConfig) -> Result<SvmModel<T>> {
    let (pos, neg) = check_data(x, y)?;
    let max = max_feasible_nu(y);
    if !(nu > T::zero()) || !nu.is_finite() {
        return Err(Error::domain(format!("nu must lie in (0, 1], got {nu}")));
    }
    if nu.as_f64() > max {
        return Err(Error::InfeasibleNu { nu: nu.as_f64(), max });
    }
    let kernel = kernel.resolve(x)?;
    let ys = signs::<T>(y);
    let n = x.rows();
    let nf = T::of(n as f64);

    // unit box, sum a = nu * n split evenly between the classes
    let mut alpha = vec![T::zero(); n];
    let half = nu * nf / T::of(2.0);
    let (mut left_pos, mut left_neg) = (half, half);
    for i in 0..n {
        let left = if ys[i] > T::zero() { &mut left_pos } else { &mut left_neg };
        alpha[i] = T::one().min(*left);
        *left -= alpha[i];
    }
    debug_assert!(pos > 0 && neg > 0);
    let sol = solve(Problem { x, kernel, y: ys.clone(), p: vec![T::zero(); n], alpha, upper: T::one(), nu: true }, cfg)?;

    let mut est = [BiasEstimate::new(), BiasEstimate::new()];
    for i in 0..n {
        let e = &mut est[usize::from(ys[i] < T::zero())];
        let g = sol.grad[i].as_f64();
        if sol.alpha[i] >= T::one() {
            e.lower = e.lower.max(g);
        } else if sol.alpha[i] <= T::zero() {
            e.upper = e.upper.min(g);
        } else {
            e.free += 1;
            e.sum_free += g;
        }
    }
    let (r1, r2) = (est[0].value(), est[1].value());
    let offset = (r1 - r2) / 2.0;
    let margin = (r1 + r2) / 2.0;
    let scale = T::one() / nf;
    Ok(assemble(
        x,
        &sol,
        &ys,
        scale,
        T::of(-offset) * scale,
        T::of(margin) * scale,
        kernel,
        Formulation::NuSvm { nu },
    ))
}

/// Dispatches on the formulation.
pub fn train<T: Real>(x: &Matrix<T>, y: &[Label], formulation: Formulation<T>, kernel: &KernelSpec<T>, cfg: &SolverConfig) -> Result<SvmModel<T>> {
    match formulation {
        Formulation::CSvm { c } => train_csvm(x, y, c, kernel, cfg),
        Formulation::NuSvm { nu } => train_nusvm(x, y, nu, kernel, cfg),
    }
}
