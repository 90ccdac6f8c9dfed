use std::sync::Arc;

use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::svm::KernelSpec;

/// Kernel rows computed on demand with least-recently-used eviction.
///
/// `capacity` counts rows; `0` disables caching.
pub struct KernelCache<'a, T> {
    x: &'a Matrix<T>,
    kernel: KernelSpec<T>,
    capacity: usize,
    rows: Vec<Option<Arc<Vec<T>>>>,
    last_used: Vec<u64>,
    clock: u64,
    cached: usize,
    diag: Vec<T>,
    computed: usize,
}

impl<'a, T: Real> KernelCache<'a, T> {
    pub fn new(x: &'a Matrix<T>, kernel: KernelSpec<T>, capacity: usize) -> Self {
        let n = x.rows();
        let diag = (0..n).map(|i| kernel.eval(x.row(i), x.row(i))).collect();
        Self {
            x,
            kernel,
            capacity,
            rows: vec![None; n],
            last_used: vec![0; n],
            clock: 0,
            cached: 0,
            diag,
            computed: 0,
        }
    }

    pub fn diag(&self, i: usize) -> T {
        self.diag[i]
    }

    /// Number of rows evaluated so far (cache misses).
    pub fn rows_computed(&self) -> usize {
        self.computed
    }

    pub fn row(&mut self, i: usize) -> Arc<Vec<T>> {
        self.clock += 1;
        if let Some(r) = &self.rows[i] {
            self.last_used[i] = self.clock;
            return Arc::clone(r);
        }
        let xi = self.x.row(i);
        let row: Arc<Vec<T>> = Arc::new((0..self.x.rows()).map(|j| self.kernel.eval(xi, self.x.row(j))).collect());
        self.computed += 1;
        if self.capacity == 0 {
            return row;
        }
        if self.cached >= self.capacity {
            let victim = (0..self.rows.len())
                .filter(|&k| self.rows[k].is_some())
                .min_by_key(|&k| self.last_used[k])
                .expect("cache is non-empty");
            self.rows[victim] = None;
            self.cached -= 1;
        }
        self.rows[i] = Some(Arc::clone(&row));
        self.last_used[i] = self.clock;
        self.cached += 1;
        row
    }
}
