//! Mass/non-mass patch classification pipeline.
//!
//! The numeric modules are generic over [`Real`] (`f32` / `f64`); the aliases
//! below pin the precisions the pipeline uses: `f32` for stored activations
//! and features, `f64` for the SVM and evaluation arithmetic.

pub mod cnn;
pub mod error;
pub mod eval;
pub mod fsutil;
pub mod grid;
pub mod label;
pub mod matrix;
pub mod patchio;
pub mod scalar;
pub mod svm;
pub mod trees;

pub use error::{Error, Result};
pub use grid::Grid;
pub use label::Label;
pub use matrix::Matrix;
pub use scalar::Real;

pub type Tensor = cnn::Tensor3<f32>;
pub type Network = cnn::Network<f32>;
pub type FeatureMatrix = cnn::FeatureMatrix<f32>;
pub type NormalizedPatch = patchio::NormalizedPatch<f32>;
pub type ImportanceVector = trees::ImportanceVector<f64>;
pub type SvmModel = svm::SvmModel<f64>;
pub type KernelSpec = svm::KernelSpec<f64>;
pub type CvReport = eval::CvReport;
