//! Dense linear algebra substrate: vectors as `[f64]`, a row-major [`Matrix`],
//! LU / Cholesky / LDLᵀ factorizations, and symmetric eigensolvers.

mod factor;
mod matrix;
mod sym_eig;

pub use factor::{
    ldlt_inertia, lu_solve, solve_rank_revealing, Cholesky, Inertia, Ldlt, Lu, LU_PIVOT_TOL,
    SYMMETRY_TOL, ZERO_PIVOT_TOL,
};
pub use matrix::Matrix;
pub use sym_eig::{jacobi_eigen, sym_generalized_eig, SymEigen, JACOBI_MAX_SWEEPS, JACOBI_REL_TOL};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular (pivot {pivot} below threshold)")]
    SingularMatrix { pivot: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-finite entry")]
    NonFinite,
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += s * x`
#[inline]
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(s: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| s * x).collect()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}
