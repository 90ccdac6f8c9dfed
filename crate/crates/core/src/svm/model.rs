use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil;
use crate::label::Label;
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::svm::{Gamma, KernelSpec};

const MAGIC: &[u8; 4] = b"SVMM";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Formulation<T> {
    CSvm { c: T },
    NuSvm { nu: T },
}

impl<T: Real> Formulation<T> {
    pub fn parameter(&self) -> T {
        match *self {
            Formulation::CSvm { c } => c,
            Formulation::NuSvm { nu } => nu,
        }
    }
}

/// Trained binary classifier; mass is the positive class.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel<T> {
    pub support_vectors: Matrix<T>,
    /// `alpha_i * y_i` per support vector.
    pub dual_coefs: Vec<T>,
    pub bias: T,
    /// Kernel with gamma resolved.
    pub kernel: KernelSpec<T>,
    pub formulation: Formulation<T>,
    /// Functional margin `rho` of the nu-SVM (zero for C-SVM).
    pub rho_margin: T,
    /// Training-row index of each support vector (empty for models read from disk).
    pub sv_indices: Vec<usize>,
    /// Solver iterations used.
    pub iterations: usize,
}

impl<T: Real> SvmModel<T> {
    pub fn dim(&self) -> usize {
        self.support_vectors.cols()
    }

    pub fn n_support(&self) -> usize {
        self.dual_coefs.len()
    }

    /// `sum_i coef_i K(sv_i, x) + b`.
    pub fn decision_function(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim() && self.n_support() > 0 {
            return Err(Error::shape(format!("input of length {}, model expects {}", x.len(), self.dim())));
        }
        let mut s = self.bias;
        for (k, &c) in self.dual_coefs.iter().enumerate() {
            s += c * self.kernel.eval(self.support_vectors.row(k), x);
        }
        Ok(s)
    }

    pub fn decision_values(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        (0..x.rows()).map(|i| self.decision_function(x.row(i))).collect()
    }

    pub fn predict(&self, x: &[T]) -> Result<Label> {
        Ok(Label::from_sign(self.decision_function(x)?.as_f64()))
    }

    /// Dual objective in the model's own scaling: `sum|a| - 1/2 a'Qa` for C-SVM,
    /// `-1/2 a'Qa` for nu-SVM.
    pub fn dual_objective(&self) -> f64 {
        let n = self.n_support();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += (self.dual_coefs[i] * self.dual_coefs[j]).as_f64()
                    * self.kernel.eval(self.support_vectors.row(i), self.support_vectors.row(j)).as_f64();
            }
        }
        let linear = match self.formulation {
            Formulation::CSvm { .. } => self.dual_coefs.iter().map(|c| c.as_f64().abs()).sum(),
            Formulation::NuSvm { .. } => 0.0,
        };
        linear - 0.5 * quad
    }

    /// Fraction of rows with `y f(x) < rho - slack` (nu-SVM margin errors).
    pub fn margin_error_fraction(&self, x: &Matrix<T>, y: &[Label], slack: T) -> Result<f64> {
        let f = self.decision_values(x)?;
        let errors = f
            .iter()
            .zip(y)
            .filter(|(&v, l)| T::of(l.sign()) * v < self.rho_margin - slack)
            .count();
        Ok(errors as f64 / y.len() as f64)
    }
}

fn kernel_fields<T: Real>(k: &KernelSpec<T>) -> (u8, f64, f64, u32) {
    let g = |g: Gamma<T>| match g {
        Gamma::Value(v) => v.as_f64(),
        Gamma::Scale => 0.0,
    };
    match *k {
        KernelSpec::Rbf { gamma } => (0, g(gamma), 0.0, 0),
        KernelSpec::Linear => (1, 0.0, 0.0, 0),
        KernelSpec::Polynomial { degree, gamma, coef0 } => (2, g(gamma), coef0.as_f64(), degree),
        KernelSpec::Sigmoid { gamma, coef0 } => (3, g(gamma), coef0.as_f64(), 0),
    }
}

/// `SVMM` file (little-endian): magic, `u32` version, `u8` formulation tag (0 = C, 1 = nu)
/// and `f64` parameter, `u8` kernel tag (0 rbf, 1 linear, 2 polynomial, 3 sigmoid) with
/// `f64` gamma, `f64` coef0, `u32` degree, then `u32` n_sv, `u32` dim, `f64` bias,
/// `f64` rho, `f64` coefficients and `f32` support vectors row-major.
pub fn write_model<T: Real>(path: &Path, m: &SvmModel<T>) -> Result<()> {
    let (ktag, gamma, coef0, degree) = kernel_fields(&m.kernel);
    let (ftag, param) = match m.formulation {
        Formulation::CSvm { c } => (0u8, c.as_f64()),
        Formulation::NuSvm { nu } => (1u8, nu.as_f64()),
    };
    fsutil::write_atomic(path, |f| {
        let mut w = BufWriter::new(f);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[ftag])?;
        w.write_all(&param.to_le_bytes())?;
        w.write_all(&[ktag])?;
        w.write_all(&gamma.to_le_bytes())?;
        w.write_all(&coef0.to_le_bytes())?;
        w.write_all(&degree.to_le_bytes())?;
        w.write_all(&(m.n_support() as u32).to_le_bytes())?;
        w.write_all(&(m.dim() as u32).to_le_bytes())?;
        w.write_all(&m.bias.as_f64().to_le_bytes())?;
        w.write_all(&m.rho_margin.as_f64().to_le_bytes())?;
        for c in &m.dual_coefs {
            w.write_all(&c.as_f64().to_le_bytes())?;
        }
        for v in m.support_vectors.data() {
            w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
        }
        w.flush()
    })
}

struct Cursor<R> {
    r: R,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.r.read_exact(&mut b).map_err(|_| Error::format("truncated SVMM file"))?;
        Ok(b)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.bytes()?))
    }
}

pub fn read_model<T: Real>(path: &Path) -> Result<SvmModel<T>> {
    let mut c = Cursor { r: BufReader::new(File::open(path)?) };
    if &c.bytes::<4>()? != MAGIC {
        return Err(Error::format("bad SVMM magic"));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::format(format!("unsupported SVMM version {version}")));
    }
    let ftag = c.u8()?;
    let param = T::of(c.f64()?);
    let formulation = match ftag {
        0 => Formulation::CSvm { c: param },
        1 => Formulation::NuSvm { nu: param },
        t => return Err(Error::format(format!("unknown formulation tag {t}"))),
    };
    let ktag = c.u8()?;
    let gamma = Gamma::Value(T::of(c.f64()?));
    let coef0 = T::of(c.f64()?);
    let degree = c.u32()?;
    let kernel = match ktag {
        0 => KernelSpec::Rbf { gamma },
        1 => KernelSpec::Linear,
        2 => KernelSpec::Polynomial { degree, gamma, coef0 },
        3 => KernelSpec::Sigmoid { gamma, coef0 },
        t => return Err(Error::format(format!("unknown kernel tag {t}"))),
    };
    let n_sv = c.u32()? as usize;
    let dim = c.u32()? as usize;
    let bias = T::of(c.f64()?);
    let rho_margin = T::of(c.f64()?);
    let dual_coefs = (0..n_sv).map(|_| c.f64().map(T::of)).collect::<Result<Vec<_>>>()?;
    let sv = (0..n_sv * dim).map(|_| c.f32().map(|v| T::of(f64::from(v)))).collect::<Result<Vec<_>>>()?;
    Ok(SvmModel {
        support_vectors: Matrix::from_vec(n_sv, dim, sv)?,
        dual_coefs,
        bias,
        kernel,
        formulation,
        rho_margin,
        sv_indices: Vec::new(),
        iterations: 0,
    })
}
