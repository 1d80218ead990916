//! Dense symmetric eigensolver (cyclic Jacobi) and the symmetric-definite
//! generalized problem `A x = λ B x` by Cholesky reduction.

use super::factor::{Cholesky, SYMMETRY_TOL};
use super::{LinalgError, Matrix};

pub const JACOBI_REL_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues (ascending) and column eigenvectors of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector of `values[k]`.
    pub vectors: Matrix,
}

fn off_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigen(a: &Matrix) -> Result<SymEigen, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    if !a.is_symmetric(SYMMETRY_TOL) {
        return Err(LinalgError::NotSymmetric);
    }
    let n = a.rows();
    let mut w = a.clone();
    w.symmetrize();
    let mut v = Matrix::identity(n);
    let target = JACOBI_REL_TOL * a.frobenius_norm();
    let mut converged = off_norm(&w) <= target;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = w[(k, p)];
                    let akq = w[(k, q)];
                    w[(k, p)] = c * akp - s * akq;
                    w[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = w[(p, k)];
                    let aqk = w[(q, k)];
                    w[(p, k)] = c * apk - s * aqk;
                    w[(q, k)] = s * apk + c * aqk;
                }
                w[(p, q)] = 0.0;
                w[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        converged = off_norm(&w) <= target;
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            iterations: JACOBI_MAX_SWEEPS,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].total_cmp(&w[(j, j)]));
    let values = order.iter().map(|&i| w[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &v.column(i));
    }
    Ok(SymEigen { values, vectors })
}

/// The `count` smallest eigenpairs of `A φ = λ B φ` with `A` symmetric and
/// `B` symmetric positive definite. Eigenvectors are B-orthonormal.
pub fn sym_generalized_eig(
    a: &Matrix,
    b: &Matrix,
    count: usize,
) -> Result<Vec<(f64, Vec<f64>)>, LinalgError> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n || b.cols() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: b.rows(),
        });
    }
    if count > n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: count,
        });
    }
    if !a.is_symmetric(SYMMETRY_TOL) {
        return Err(LinalgError::NotSymmetric);
    }
    let chol = Cholesky::new(b)?;
    // C = L⁻¹ A L⁻ᵀ, built column by column.
    let mut tmp = Matrix::zeros(n, n);
    for j in 0..n {
        tmp.set_column(j, &chol.forward(&a.column(j)));
    }
    // tmp = L⁻¹ A; C = (L⁻¹ (L⁻¹ A)ᵀ)ᵀ = L⁻¹ A L⁻ᵀ since A is symmetric
    let tmp_t = tmp.transpose();
    let mut c = Matrix::zeros(n, n);
    for j in 0..n {
        c.set_column(j, &chol.forward(&tmp_t.column(j)));
    }
    let mut c = c.transpose();
    c.symmetrize();
    let eig = jacobi_eigen(&c)?;
    Ok((0..count)
        .map(|k| (eig.values[k], chol.backward(&eig.vectors.column(k))))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dot, norm};

    #[test]
    fn diagonal_cases() {
        let e = sym_generalized_eig(&Matrix::from_diag(&[2.0, 8.0]), &Matrix::identity(2), 2).unwrap();
        assert!((e[0].0 - 2.0).abs() < 1e-14 && (e[1].0 - 8.0).abs() < 1e-14);
        let e = sym_generalized_eig(
            &Matrix::from_diag(&[6.0, 2.0]),
            &Matrix::from_diag(&[2.0, 1.0]),
            2,
        )
        .unwrap();
        assert!((e[0].0 - 2.0).abs() < 1e-14 && (e[1].0 - 3.0).abs() < 1e-14);
    }

    #[test]
    fn characteristic_polynomial_case() {
        // det([[2-x,-1],[-1,2-x]]) = (2-x)^2 - 1 => x = 1, 3
        let a = Matrix::from_rows(&[&[2.0, -1.0], &[-1.0, 2.0]]);
        let e = sym_generalized_eig(&a, &Matrix::identity(2), 2).unwrap();
        assert!((e[0].0 - 1.0).abs() < 1e-14);
        assert!((e[1].0 - 3.0).abs() < 1e-14);
        assert!((norm(&e[0].1) - 1.0).abs() < 1e-14);
        assert!(dot(&e[0].1, &e[1].1).abs() < 1e-14);
    }

    #[test]
    fn b_must_be_positive_definite() {
        let a = Matrix::identity(2);
        let b = Matrix::from_diag(&[1.0, 0.0]);
        assert!(matches!(
            sym_generalized_eig(&a, &b, 1),
            Err(LinalgError::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            sym_generalized_eig(&a, &Matrix::identity(3), 1),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }
}
