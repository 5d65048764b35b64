//! Sparse kernels and the regularized factorization behind every projection.

mod ldl;
mod sparse;

pub use ldl::{minimum_degree_ordering, RegularizedFactorization};
pub use sparse::{axpy, dot, norm2, norm_inf, sub, CscMirror, CsrMatrix};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("entry ({row}, {col}) outside a {nrows}x{ncols} matrix")]
    IndexOutOfRange { row: usize, col: usize, nrows: usize, ncols: usize },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("regularization must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("pivot {pivot} is not positive")]
    NotPositiveDefinite { pivot: usize },
}

/// Default regularization `1e-8 · max(1, ‖A_B‖∞²)`.
pub fn default_sigma(a_b: &CsrMatrix) -> f64 {
    let nrm = a_b.norm_inf();
    1e-8 * f64::max(1.0, nrm * nrm)
}
