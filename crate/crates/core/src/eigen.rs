//! Modal analysis `K φ = ω² M φ` and linear buckling
//! `K_L φ = λ (K(u_L) − K_L) φ`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{fmt_f64, IoError};
use crate::numerics::{lu_solve, sym_generalized_eig, LinalgError, Matrix};
use crate::operators::{OpError, Operators};

/// `‖ΔK‖_F ≤ DEGENERATE_TOL · ‖K_L‖_F` means the model has no geometric stiffness.
pub const DEGENERATE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Operator(#[from] OpError),
    #[error("geometric stiffness vanishes; the model is linear")]
    DegenerateGeometricStiffness,
    #[error("requested {requested} modes from a system with {available}")]
    InvalidCount { requested: usize, available: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    /// `ω²` for modal analysis, the raw load factor for buckling.
    pub value: f64,
    pub vector: Vec<f64>,
}

impl EigenPair {
    /// Angular frequency `ω = √(ω²)` of a modal pair.
    pub fn frequency(&self) -> f64 {
        self.value.max(0.0).sqrt()
    }
}

fn check_count(count: usize, n: usize) -> Result<(), EigenError> {
    if count == 0 || count > n {
        Err(EigenError::InvalidCount {
            requested: count,
            available: n,
        })
    } else {
        Ok(())
    }
}

/// The `count` lowest modes, M-orthonormal, ascending in `ω²`.
pub fn modal<O: Operators + ?Sized>(ops: &O, count: usize) -> Result<Vec<EigenPair>, EigenError> {
    check_count(count, ops.n_dof())?;
    let k = ops.stiffness()?;
    let m = ops.mass()?;
    Ok(sym_generalized_eig(&k, &m, count)?
        .into_iter()
        .map(|(value, vector)| EigenPair { value, vector })
        .collect())
}

/// Linear buckling about the linear solution `K_L u_L = P`.
///
/// Solved as `ΔK φ = μ K_L φ` with `K_L` Cholesky-reduced and `λ = 1/μ`.
/// Returns the `count` pairs of smallest `|λ|` (positive first on ties) with
/// K_L-orthonormal vectors. The raw sign is kept: a compressive loss of
/// stability typically shows as a negative `λ`.
pub fn buckling<O: Operators + ?Sized>(ops: &O, count: usize) -> Result<Vec<EigenPair>, EigenError> {
    let n = ops.n_dof();
    check_count(count, n)?;
    let kl = ops.stiffness()?;
    let p = ops.force()?;
    let ul = lu_solve(&kl, &p)?;
    let dk = ops.jacobian(&ul)?.sub(&kl);
    if dk.frobenius_norm() <= DEGENERATE_TOL * kl.frobenius_norm() {
        return Err(EigenError::DegenerateGeometricStiffness);
    }
    let mut dk_sym: Matrix = dk;
    dk_sym.symmetrize();
    let all = sym_generalized_eig(&dk_sym, &kl, n)?;
    let mu_max = all.iter().fold(0.0_f64, |m, (mu, _)| m.max(mu.abs()));
    let mut pairs: Vec<EigenPair> = all
        .into_iter()
        .filter(|(mu, _)| mu.abs() > 1e-12 * mu_max)
        .map(|(mu, vector)| EigenPair { value: 1.0 / mu, vector })
        .collect();
    pairs.sort_by(|a, b| {
        a.value
            .abs()
            .total_cmp(&b.value.abs())
            .then((a.value < 0.0).cmp(&(b.value < 0.0)))
    });
    if pairs.len() < count {
        return Err(EigenError::InvalidCount {
            requested: count,
            available: pairs.len(),
        });
    }
    pairs.truncate(count);
    Ok(pairs)
}

/// Mode table: one column per mode, a header row of eigenvalues, one row per DoF.
pub fn modes_csv(pairs: &[EigenPair]) -> Result<String, IoError> {
    let mut out = String::new();
    let header: Result<Vec<String>, IoError> = pairs.iter().map(|p| fmt_f64(p.value)).collect();
    out.push_str(&header?.join(","));
    out.push('\n');
    let n = pairs.first().map_or(0, |p| p.vector.len());
    for i in 0..n {
        let row: Result<Vec<String>, IoError> = pairs.iter().map(|p| fmt_f64(p.vector[i])).collect();
        out.push_str(&row?.join(","));
        out.push('\n');
    }
    Ok(out)
}
