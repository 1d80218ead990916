//! Direct factorizations: LU with partial pivoting, Cholesky, and a symmetric
//! indefinite LDLᵀ used for inertia counting.

use serde::{Deserialize, Serialize};

use super::{LinalgError, Matrix};

/// Relative pivot threshold for LU: a pivot below `LU_PIVOT_TOL * max|A|` is singular.
pub const LU_PIVOT_TOL: f64 = 1e-14;
/// Relative symmetry tolerance accepted by the symmetric factorizations.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Relative threshold below which an LDLᵀ pivot counts as zero.
pub const ZERO_PIVOT_TOL: f64 = 1e-12;

/// Counts of positive, negative and (near-)zero eigenvalues of a symmetric matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Inertia {
    pub fn total(&self) -> usize {
        self.positive + self.negative + self.zero
    }
}

/// LU factorization `PA = LU` with row pivoting.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &Matrix) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        if !a.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let tol = LU_PIVOT_TOL * a.max_abs();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if pmax <= tol || pmax == 0.0 {
                return Err(LinalgError::SingularMatrix { pivot: k });
            }
            lu.swap_rows(k, p);
            perm.swap(k, p);
            let d = lu[(k, k)];
            for i in (k + 1)..n {
                let l = lu[(i, k)] / d;
                lu[(i, k)] = l;
                if l != 0.0 {
                    for j in (k + 1)..n {
                        lu[(i, j)] -= l * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.lu.rows();
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        Ok(x)
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn lu_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    Lu::new(a)?.solve(b)
}

/// Solves `A x = b` with complete pivoting, dropping pivots below
/// `rel_tol * max|A|`. Unknowns tied to dropped pivots are set to zero, which
/// yields a basic solution for consistent rank-deficient systems.
///
/// Returns the solution and the numerical rank.
pub fn solve_rank_revealing(
    a: &Matrix,
    b: &[f64],
    rel_tol: f64,
) -> Result<(Vec<f64>, usize), LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if !a.is_finite() || b.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let tol = rel_tol * a.max_abs();
    let mut rank = n;
    for k in 0..n {
        let mut best = (k, k, -1.0_f64);
        for i in k..n {
            for j in k..n {
                let v = m[(i, j)].abs();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 <= tol || best.2 == 0.0 {
            rank = k;
            break;
        }
        m.swap_rows(k, best.0);
        rhs.swap(k, best.0);
        m.swap_cols(k, best.1);
        col_perm.swap(k, best.1);
        let d = m[(k, k)];
        for i in (k + 1)..n {
            let l = m[(i, k)] / d;
            if l != 0.0 {
                for j in k..n {
                    m[(i, j)] -= l * m[(k, j)];
                }
                rhs[i] -= l * rhs[k];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in (0..rank).rev() {
        let s: f64 = ((i + 1)..rank).map(|j| m[(i, j)] * y[j]).sum();
        y[i] = (rhs[i] - s) / m[(i, i)];
    }
    let mut x = vec![0.0; n];
    for (k, &c) in col_perm.iter().enumerate() {
        x[c] = y[k];
    }
    Ok((x, rank))
}

/// Cholesky factor `A = L Lᵀ` of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn new(a: &Matrix) -> Result<Self, LinalgError> {
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
        let scale = a.max_abs();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= 1e-14 * scale || d <= 0.0 {
                return Err(LinalgError::NotPositiveDefinite { pivot: j });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|k| self.l[(i, k)] * y[k]).sum();
            y[i] = (y[i] - s) / self.l[(i, i)];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|k| self.l[(k, i)] * x[k]).sum();
            x[i] = (x[i] - s) / self.l[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }
}

/// Block-diagonal pivot of the symmetric indefinite factorization.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Pivot {
    One(f64),
    Two([f64; 3]),
}

/// Symmetric indefinite factorization `PAPᵀ = L D Lᵀ` with Bunch–Parlett
/// complete pivoting. `D` holds 1×1 pivots and, only when every remaining
/// diagonal entry is small relative to the off-diagonal ones, 2×2 blocks.
#[derive(Clone, Debug)]
pub struct Ldlt {
    pivots: Vec<Pivot>,
    zero_tol: f64,
}

impl Ldlt {
    pub fn new(a: &Matrix) -> Result<Self, LinalgError> {
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
        let zero_tol = ZERO_PIVOT_TOL * a.max_abs();
        let alpha = (1.0 + 17f64.sqrt()) / 8.0;
        let mut pivots = Vec::new();
        let mut k = 0;
        while k < n {
            let (r, gd) = (k..n)
                .map(|i| (i, w[(i, i)].abs()))
                .fold((k, -1.0), |b, c| if c.1 > b.1 { c } else { b });
            let mut off = (k, k, 0.0_f64);
            for i in k..n {
                for j in (i + 1)..n {
                    let v = w[(i, j)].abs();
                    if v > off.2 {
                        off = (i, j, v);
                    }
                }
            }
            if gd >= alpha * off.2 {
                swap_sym(&mut w, k, r);
                let d = w[(k, k)];
                pivots.push(Pivot::One(d));
                if d.abs() > zero_tol {
                    for i in (k + 1)..n {
                        let lik = w[(i, k)] / d;
                        for j in (k + 1)..=i {
                            let v = w[(i, j)] - lik * w[(j, k)];
                            w[(i, j)] = v;
                            w[(j, i)] = v;
                        }
                    }
                }
                k += 1;
            } else {
                swap_sym(&mut w, k, off.0);
                // off.1 > off.0 >= k, so the second index moved only if it was k.
                let q = if off.1 == k { off.0 } else { off.1 };
                swap_sym(&mut w, k + 1, q);
                let (d11, d12, d22) = (w[(k, k)], w[(k, k + 1)], w[(k + 1, k + 1)]);
                let det = d11 * d22 - d12 * d12;
                pivots.push(Pivot::Two([d11, d12, d22]));
                for i in (k + 2)..n {
                    let (a1, a2) = (w[(i, k)], w[(i, k + 1)]);
                    let l1 = (a1 * d22 - a2 * d12) / det;
                    let l2 = (a2 * d11 - a1 * d12) / det;
                    for j in (k + 2)..=i {
                        let v = w[(i, j)] - l1 * w[(j, k)] - l2 * w[(j, k + 1)];
                        w[(i, j)] = v;
                        w[(j, i)] = v;
                    }
                }
                k += 2;
            }
        }
        Ok(Self { pivots, zero_tol })
    }

    pub fn inertia(&self) -> Inertia {
        let mut inertia = Inertia {
            positive: 0,
            negative: 0,
            zero: 0,
        };
        let mut classify = |v: f64| {
            if v.abs() <= self.zero_tol {
                inertia.zero += 1;
            } else if v > 0.0 {
                inertia.positive += 1;
            } else {
                inertia.negative += 1;
            }
        };
        for p in &self.pivots {
            match *p {
                Pivot::One(d) => classify(d),
                Pivot::Two([a, b, c]) => {
                    let mean = 0.5 * (a + c);
                    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
                    classify(mean + rad);
                    classify(mean - rad);
                }
            }
        }
        inertia
    }
}

fn swap_sym(w: &mut Matrix, a: usize, b: usize) {
    if a != b {
        w.swap_rows(a, b);
        w.swap_cols(a, b);
    }
}

/// Inertia of a symmetric matrix from its LDLᵀ pivots (Sylvester's law).
pub fn ldlt_inertia(a: &Matrix) -> Result<Inertia, LinalgError> {
    Ok(Ldlt::new(a)?.inertia())
}
