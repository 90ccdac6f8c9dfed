use crate::label::Label;
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::svm::{Formulation, SvmModel};

/// Relative tolerance for recognizing a coefficient sitting on a box bound.
const BOUND_SLACK: f64 = 1e-9;

/// Largest complementary-slackness or stationarity residual over the training rows.
///
/// C-SVM residuals are in margin units (target margin 1). nu-SVM residuals are
/// multiplied by `n` so they are on the same scale as the solver tolerance.
pub fn check_kkt<T: Real>(model: &SvmModel<T>, x: &Matrix<T>, y: &[Label]) -> f64 {
    let n = x.rows();
    let alpha = training_alphas(model, x);
    let (upper, target, scale) = match model.formulation {
        Formulation::CSvm { c } => (c.as_f64(), 1.0, 1.0),
        Formulation::NuSvm { .. } => (1.0 / n as f64, model.rho_margin.as_f64(), n as f64),
    };
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let m = y[i].sign() * model.decision_function(x.row(i)).map_or(f64::NAN, |v| v.as_f64());
        let a = alpha[i];
        let r = if a <= upper * BOUND_SLACK {
            (target - m).max(0.0)
        } else if a >= upper * (1.0 - BOUND_SLACK) {
            (m - target).max(0.0)
        } else {
            (m - target).abs()
        };
        worst = worst.max(r * scale);
    }
    let balance: f64 = model.dual_coefs.iter().map(|c| c.as_f64()).sum();
    worst = worst.max(balance.abs() * scale);
    if let Formulation::NuSvm { nu } = model.formulation {
        let total: f64 = model.dual_coefs.iter().map(|c| c.as_f64().abs()).sum();
        worst = worst.max((total - nu.as_f64()).abs() * scale);
    }
    worst
}

/// `|coef|` mapped back onto training rows (zero for non-support rows).
fn training_alphas<T: Real>(model: &SvmModel<T>, x: &Matrix<T>) -> Vec<f64> {
    let mut alpha = vec![0.0; x.rows()];
    if model.sv_indices.len() == model.n_support() {
        for (k, &i) in model.sv_indices.iter().enumerate() {
            alpha[i] = model.dual_coefs[k].as_f64().abs();
        }
        return alpha;
    }
    // models read from disk: match rows at f32 precision
    for k in 0..model.n_support() {
        let sv: Vec<f32> = model.support_vectors.row(k).iter().map(|v| v.as_f64() as f32).collect();
        if let Some(i) = (0..x.rows()).find(|&i| x.row(i).iter().map(|v| v.as_f64() as f32).eq(sv.iter().copied())) {
            alpha[i] += model.dual_coefs[k].as_f64().abs();
        }
    }
    alpha
}
