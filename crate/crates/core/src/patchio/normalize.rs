use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

/// Standard deviations below this are treated as a constant patch.
const DEGENERATE_STD: f64 = 1e-12;

/// Zero-mean, unit-variance patch values (all zeros for a constant patch).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPatch<T> {
    pub values: Grid<T>,
}

/// Standardizes with the population standard deviation.
pub fn normalize_patch<T: Real>(patch: &Grid<u16>) -> Result<NormalizedPatch<T>> {
    if patch.is_empty() {
        return Err(Error::shape("cannot normalize an empty patch"));
    }
    let n = patch.data().len() as f64;
    let mean = patch.data().iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let var = patch.data().iter().map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let values = if std < DEGENERATE_STD {
        patch.map(|_| T::zero())
    } else {
        patch.map(|v| T::of((f64::from(v) - mean) / std))
    };
    Ok(NormalizedPatch { values })
}
