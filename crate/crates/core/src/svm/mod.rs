//! Kernel SVMs trained on the dual with sequential minimal optimization.
//!
//! Both formulations share one solver for
//!
//! ```text
//! min_a  1/2 a'Qa + p'a   s.t.  y'a = 0,  0 <= a_i <= u,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! C-SVM uses `p = -1`, `u = C`. The nu-SVM runs with `p = 0`, `u = 1` and the extra
//! constraint `sum a = nu * n`; the trained model is rescaled by `1/n`, so its
//! coefficients obey `|a_i| <= 1/n` and `sum a_i = nu`.

mod cache;
mod kernel;
mod kkt;
mod model;
mod solver;
mod train;

pub use cache::KernelCache;
pub use kernel::{kernel_eval, Gamma, KernelSpec};
pub use kkt::check_kkt;
pub use model::{read_model, write_model, Formulation, SvmModel};
pub use solver::SolverConfig;
pub use train::{max_feasible_nu, train, train_csvm, train_nusvm};
