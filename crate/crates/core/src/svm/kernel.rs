use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{population_variance, Real};

/// Kernel width; `Scale` resolves to `1 / (M * var(X))` on the training data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma<T> {
    Scale,
    Value(T),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec<T> {
    Rbf { gamma: Gamma<T> },
    Linear,
    Polynomial { degree: u32, gamma: Gamma<T>, coef0: T },
    Sigmoid { gamma: Gamma<T>, coef0: T },
}

impl<T: Real> KernelSpec<T> {
    pub fn rbf(gamma: T) -> Self {
        KernelSpec::Rbf { gamma: Gamma::Value(gamma) }
    }

    pub fn rbf_scale() -> Self {
        KernelSpec::Rbf { gamma: Gamma::Scale }
    }

    pub fn gamma(&self) -> Option<Gamma<T>> {
        match *self {
            KernelSpec::Rbf { gamma } | KernelSpec::Polynomial { gamma, .. } | KernelSpec::Sigmoid { gamma, .. } => {
                Some(gamma)
            }
            KernelSpec::Linear => None,
        }
    }

    fn with_gamma(self, g: T) -> Self {
        let gamma = Gamma::Value(g);
        match self {
            KernelSpec::Rbf { .. } => KernelSpec::Rbf { gamma },
            KernelSpec::Polynomial { degree, coef0, .. } => KernelSpec::Polynomial { degree, gamma, coef0 },
            KernelSpec::Sigmoid { coef0, .. } => KernelSpec::Sigmoid { gamma, coef0 },
            KernelSpec::Linear => KernelSpec::Linear,
        }
    }

    /// Replaces a `Scale` gamma by its value on `x` and validates parameters.
    pub fn resolve(&self, x: &Matrix<T>) -> Result<Self> {
        let resolved = match self.gamma() {
            Some(Gamma::Scale) => {
                let var = population_variance(x.data());
                let g = if var > T::zero() && x.cols() > 0 { T::one() / (T::of(x.cols() as f64) * var) } else { T::one() };
                self.with_gamma(g)
            }
            _ => *self,
        };
        resolved.validate()?;
        Ok(resolved)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(Gamma::Value(g)) = self.gamma() {
            if !(g > T::zero()) || !g.is_finite() {
                return Err(Error::domain(format!("kernel gamma must be positive, got {g}")));
            }
        }
        if let KernelSpec::Polynomial { degree: 0, .. } = self {
            return Err(Error::domain("polynomial degree must be at least 1"));
        }
        Ok(())
    }

    fn gamma_value(&self) -> T {
        match self.gamma() {
            Some(Gamma::Value(g)) => g,
            _ => T::one(),
        }
    }

    /// Evaluates on equal-length slices with a resolved gamma.
    pub(crate) fn eval(&self, x: &[T], z: &[T]) -> T {
        match *self {
            KernelSpec::Rbf { .. } => {
                let d2: T = x.iter().zip(z).map(|(&a, &b)| (a - b) * (a - b)).sum();
                (-self.gamma_value() * d2).exp()
            }
            KernelSpec::Linear => dot(x, z),
            KernelSpec::Polynomial { degree, coef0, .. } => (self.gamma_value() * dot(x, z) + coef0).powi(degree as i32),
            KernelSpec::Sigmoid { coef0, .. } => (self.gamma_value() * dot(x, z) + coef0).tanh(),
        }
    }
}

fn dot<T: Real>(x: &[T], z: &[T]) -> T {
    x.iter().zip(z).map(|(&a, &b)| a * b).sum()
}

/// `K(x, z)`; gamma must already be a value.
pub fn kernel_eval<T: Real>(k: &KernelSpec<T>, x: &[T], z: &[T]) -> Result<T> {
    if x.len() != z.len() {
        return Err(Error::shape(format!("kernel inputs of length {} and {}", x.len(), z.len())));
    }
    if let Some(Gamma::Scale) = k.gamma() {
        return Err(Error::domain("gamma must be resolved before evaluation"));
    }
    k.validate()?;
    Ok(k.eval(x, z))
}
