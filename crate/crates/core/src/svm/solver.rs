use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::svm::{KernelCache, KernelSpec};

/// Curvature floor for non-positive-definite pairs.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Stop once the maximal KKT violation falls below this.
    pub kkt_tolerance: f64,
    /// Budget of pair updates.
    pub max_iterations: usize,
    /// Kernel rows kept in the LRU cache (`0` disables caching).
    pub cache_size: usize,
    /// Reserved for randomized working-set fallbacks; the maximal-violating-pair
    /// rule used here is deterministic and does not consume it.
    pub seed: u64,
    /// Panic if a pair update ever decreases the dual objective.
    pub monitor_objective: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { kkt_tolerance: 1e-3, max_iterations: 10_000_000, cache_size: 4096, seed: 0, monitor_objective: false }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kkt_tolerance > 0.0) {
            return Err(Error::domain("kkt_tolerance must be positive"));
        }
        Ok(())
    }
}

pub(crate) struct Solution<T> {
    pub alpha: Vec<T>,
    pub grad: Vec<T>,
    pub iterations: usize,
}

pub(crate) struct Problem<'a, T> {
    pub x: &'a Matrix<T>,
    pub kernel: KernelSpec<T>,
    /// `+1` / `-1` per row.
    pub y: Vec<T>,
    pub p: Vec<T>,
    pub alpha: Vec<T>,
    pub upper: T,
    /// Keep `sum alpha` fixed by pairing only within a class.
    pub nu: bool,
}

struct State<'a, 'b, T> {
    cache: KernelCache<'a, T>,
    y: &'b [T],
    alpha: Vec<T>,
    grad: Vec<T>,
    upper: T,
}

impl<T: Real> State<'_, '_, T> {
    fn at_upper(&self, t: usize) -> bool {
        self.alpha[t] >= self.upper
    }

    fn at_lower(&self, t: usize) -> bool {
        self.alpha[t] <= T::zero()
    }

    fn positive(&self, t: usize) -> bool {
        self.y[t] > T::zero()
    }

    fn in_up(&self, t: usize) -> bool {
        if self.positive(t) {
            !self.at_upper(t)
        } else {
            !self.at_lower(t)
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if self.positive(t) {
            !self.at_lower(t)
        } else {
            !self.at_upper(t)
        }
    }

    /// Maximal violating pair over all rows, or over one class at a time when `nu`.
    fn select(&self, nu: bool) -> (usize, usize, f64) {
        let n = self.alpha.len();
        if !nu {
            let (mut i, mut gmax) = (usize::MAX, f64::NEG_INFINITY);
            let (mut j, mut gmax2) = (usize::MAX, f64::NEG_INFINITY);
            for t in 0..n {
                let yg = (self.y[t] * self.grad[t]).as_f64();
                if self.in_up(t) && -yg > gmax {
                    gmax = -yg;
                    i = t;
                }
                if self.in_low(t) && yg > gmax2 {
                    gmax2 = yg;
                    j = t;
                }
            }
            return (i, j, gmax + gmax2);
        }
        // per class: i maximizes -yG over I_up, j maximizes yG over I_low
        let mut best = [(usize::MAX, f64::NEG_INFINITY, usize::MAX, f64::NEG_INFINITY); 2];
        for t in 0..n {
            let class = usize::from(!self.positive(t));
            let yg = (self.y[t] * self.grad[t]).as_f64();
            let b = &mut best[class];
            if self.in_up(t) && -yg > b.1 {
                b.1 = -yg;
                b.0 = t;
            }
            if self.in_low(t) && yg > b.3 {
                b.3 = yg;
                b.2 = t;
            }
        }
        let gap = |b: &(usize, f64, usize, f64)| b.1 + b.3;
        let pick = if gap(&best[0]) >= gap(&best[1]) { best[0] } else { best[1] };
        (pick.0, pick.2, gap(&pick))
    }

    /// Analytic two-variable step with clipping to the box.
    fn update(&mut self, i: usize, j: usize) {
        let qi = self.cache.row(i);
        let qj = self.cache.row(j);
        let (yi, yj) = (self.y[i], self.y[j]);
        let c = self.upper;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let kij = qi[j];
        let tau = T::of(TAU);
        let (mut ai, mut aj) = (old_i, old_j);
        if yi != yj {
            let mut quad = self.cache.diag(i) + self.cache.diag(j) - T::of(2.0) * kij;
            if quad <= T::zero() {
                quad = tau;
            }
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > T::zero() {
                if aj < T::zero() {
                    aj = T::zero();
                    ai = diff;
                }
            } else if ai < T::zero() {
                ai = T::zero();
                aj = -diff;
            }
            if diff > T::zero() {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = self.cache.diag(i) + self.cache.diag(j) - T::of(2.0) * kij;
            if quad <= T::zero() {
                quad = tau;
            }
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < T::zero() {
                aj = T::zero();
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < T::zero() {
                ai = T::zero();
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for (t, g) in self.grad.iter_mut().enumerate() {
            *g += self.y[t] * (yi * qi[t] * di + yj * qj[t] * dj);
        }
    }

    /// `1/2 a'Qa + p'a`, computed from the gradient.
    fn objective(&self, p: &[T]) -> f64 {
        0.5 * self.alpha.iter().zip(&self.grad).zip(p).map(|((&a, &g), &pp)| (a * (g + pp)).as_f64()).sum::<f64>()
    }
}

pub(crate) fn solve<T: Real>(problem: Problem<'_, T>, cfg: &SolverConfig) -> Result<Solution<T>> {
    cfg.validate()?;
    let n = problem.x.rows();
    let mut state = State {
        cache: KernelCache::new(problem.x, problem.kernel, cfg.cache_size),
        y: &problem.y,
        alpha: problem.alpha,
        grad: problem.p.clone(),
        upper: problem.upper,
    };
    for i in 0..n {
        let a = state.alpha[i];
        if a != T::zero() {
            let q = state.cache.row(i);
            let yi = state.y[i];
            for t in 0..n {
                state.grad[t] += state.y[t] * yi * q[t] * a;
            }
        }
    }
    let mut iterations = 0;
    let mut objective = if cfg.monitor_objective { state.objective(&problem.p) } else { 0.0 };
    loop {
        let (i, j, gap) = state.select(problem.nu);
        if i == usize::MAX || j == usize::MAX || gap < cfg.kkt_tolerance {
            break;
        }
        if iterations >= cfg.max_iterations {
            return Err(Error::Convergence {
                iterations,
                residual: gap,
                alpha: state.alpha.iter().map(|a| a.as_f64()).collect(),
            });
        }
        state.update(i, j);
        iterations += 1;
        if cfg.monitor_objective {
            let next = state.objective(&problem.p);
            assert!(
                next <= objective + 1e-9 * objective.abs().max(1.0),
                "dual objective got worse at iteration {iterations}: {objective} -> {next}"
            );
            objective = next;
        }
    }
    Ok(Solution { alpha: state.alpha, grad: state.grad, iterations })
}
