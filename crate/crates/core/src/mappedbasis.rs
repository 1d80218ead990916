//! B-spline bases and mapped bases `φ(ξ) = A ψ(ξ)`, with the 1-D
//! construction that fuses two patches into a C¹ basis across their joint.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{fmt_f64, IoError};
use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MappedBasisError {
    #[error("point {0} lies outside the basis domain")]
    OutOfDomain(f64),
    #[error("incompatible bases: {0}")]
    IncompatibleBases(String),
    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),
    #[error("derivative order {0} is not supported (0, 1 or 2)")]
    DerivativeOrder(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BSplineBasis {
    degree: usize,
    knots: Vec<f64>,
}

impl BSplineBasis {
    /// Open knot vector: the first and last knot must repeat `p + 1` times.
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self, MappedBasisError> {
        let bad = |m: String| Err(MappedBasisError::InvalidKnots(m));
        if knots.len() < 2 * (degree + 1) {
            return bad(format!("need at least {} knots for degree {degree}", 2 * (degree + 1)));
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[1] < w[0]) {
            return bad("knots must be finite and nondecreasing".into());
        }
        let (first, last) = (knots[0], knots[knots.len() - 1]);
        if !(last > first) {
            return bad("empty domain".into());
        }
        if knots[..=degree].iter().any(|&k| k != first) || knots[knots.len() - degree - 1..].iter().any(|&k| k != last) {
            return bad(format!("end knots must have multiplicity {}", degree + 1));
        }
        Ok(Self { degree, knots })
    }

    /// Open basis on the strictly increasing breakpoints `unique`.
    pub fn from_breakpoints(degree: usize, unique: &[f64]) -> Result<Self, MappedBasisError> {
        if unique.len() < 2 {
            return Err(MappedBasisError::InvalidKnots("need two breakpoints".into()));
        }
        if unique.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MappedBasisError::InvalidKnots("breakpoints must increase strictly".into()));
        }
        let mut knots = vec![unique[0]; degree];
        knots.extend_from_slice(unique);
        knots.extend(std::iter::repeat_n(unique[unique.len() - 1], degree));
        Self::new(degree, knots)
    }

    /// `spans` equal spans on `[a, b]`.
    pub fn uniform(degree: usize, a: f64, b: f64, spans: usize) -> Result<Self, MappedBasisError> {
        let pts: Vec<f64> = (0..=spans).map(|i| a + (b - a) * i as f64 / spans as f64).collect();
        Self::from_breakpoints(degree, &pts)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    pub fn contains(&self, xi: f64) -> bool {
        let (a, b) = self.domain();
        xi >= a && xi <= b
    }

    /// Values (`order = 0`) or derivatives of every basis function at `ξ`,
    /// by the Cox–de Boor recursion.
    pub fn eval(&self, xi: f64, order: usize) -> Result<Vec<f64>, MappedBasisError> {
        if order > 2 {
            return Err(MappedBasisError::DerivativeOrder(order));
        }
        if !self.contains(xi) {
            return Err(MappedBasisError::OutOfDomain(xi));
        }
        let t = &self.knots;
        let m = t.len() - 1;
        // Half-open spans; the right end belongs to the last nonempty span.
        let (_, b) = self.domain();
        let span = if xi == b {
            (0..m).rev().find(|&i| t[i] < t[i + 1]).expect("nonempty domain")
        } else {
            (0..m).find(|&i| t[i] <= xi && xi < t[i + 1]).expect("inside domain")
        };
        // table[k][i] = N_{i,k}(ξ)
        let p = self.degree;
        let mut table = vec![vec![0.0; m]; p + 1];
        table[0][span] = 1.0;
        for k in 1..=p {
            for i in 0..m - k {
                let mut v = 0.0;
                let d1 = t[i + k] - t[i];
                if d1 > 0.0 {
                    v += (xi - t[i]) / d1 * table[k - 1][i];
                }
                let d2 = t[i + k + 1] - t[i + 1];
                if d2 > 0.0 {
                    v += (t[i + k + 1] - xi) / d2 * table[k - 1][i + 1];
                }
                table[k][i] = v;
            }
        }
        Ok((0..self.len()).map(|i| self.derivative(&table, order, p, i)).collect())
    }

    /// `D^d N_{i,k}` from the lower-degree values.
    fn derivative(&self, table: &[Vec<f64>], d: usize, k: usize, i: usize) -> f64 {
        if d == 0 {
            return table[k][i];
        }
        if k == 0 {
            return 0.0;
        }
        let t = &self.knots;
        let kf = k as f64;
        let mut v = 0.0;
        let d1 = t[i + k] - t[i];
        if d1 > 0.0 {
            v += kf / d1 * self.derivative(table, d - 1, k - 1, i);
        }
        let d2 = t[i + k + 1] - t[i + 1];
        if d2 > 0.0 {
            v -= kf / d2 * self.derivative(table, d - 1, k - 1, i + 1);
        }
        v
    }
}

/// `φ = A ψ` over several patches. Local functions are numbered patch by
/// patch; at a shared joint the left patch is used for evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappedBasis {
    patches: Vec<BSplineBasis>,
    n_global: usize,
    /// Nonzero entries `(row, col, value)` of `A`, sorted by row then column.
    triplets: Vec<(usize, usize, f64)>,
}

impl MappedBasis {
    pub fn new(
        patches: Vec<BSplineBasis>,
        n_global: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self, MappedBasisError> {
        let n_local: usize = patches.iter().map(BSplineBasis::len).sum();
        if triplets.iter().any(|&(r, c, _)| r >= n_global || c >= n_local) {
            return Err(MappedBasisError::IncompatibleBases("map entry out of range".into()));
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        for row in 0..n_global {
            if !triplets.iter().any(|&(r, _, v)| r == row && v != 0.0) {
                return Err(MappedBasisError::IncompatibleBases(format!("global function {row} is empty")));
            }
        }
        Ok(Self {
            patches,
            n_global,
            triplets,
        })
    }

    pub fn n_global(&self) -> usize {
        self.n_global
    }

    pub fn n_local(&self) -> usize {
        self.patches.iter().map(BSplineBasis::len).sum()
    }

    pub fn patches(&self) -> &[BSplineBasis] {
        &self.patches
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    /// Entry `A[row, col]`, zero if absent.
    pub fn coefficient(&self, row: usize, col: usize) -> f64 {
        self.triplets
            .iter()
            .find(|&&(r, c, _)| r == row && c == col)
            .map_or(0.0, |t| t.2)
    }

    pub fn dense(&self) -> Matrix {
        let mut a = Matrix::zeros(self.n_global, self.n_local());
        for &(r, c, v) in &self.triplets {
            a[(r, c)] = v;
        }
        a
    }

    /// Local evaluation vector `ψ(ξ)`: the patch containing `ξ` (leftmost at
    /// a joint) contributes, all other local functions are zero.
    pub fn eval_local(&self, xi: f64, order: usize) -> Result<Vec<f64>, MappedBasisError> {
        let mut out = vec![0.0; self.n_local()];
        let mut offset = 0;
        for patch in &self.patches {
            if patch.contains(xi) {
                let v = patch.eval(xi, order)?;
                out[offset..offset + v.len()].copy_from_slice(&v);
                return Ok(out);
            }
            offset += patch.len();
        }
        Err(MappedBasisError::OutOfDomain(xi))
    }

    /// `φ(ξ) = A ψ(ξ)`.
    pub fn eval(&self, xi: f64, order: usize) -> Result<Vec<f64>, MappedBasisError> {
        let psi = self.eval_local(xi, order)?;
        let mut phi = vec![0.0; self.n_global];
        for &(r, c, v) in &self.triplets {
            phi[r] += v * psi[c];
        }
        Ok(phi)
    }

    /// `row,col,value` lines (0-based).
    pub fn triplets_csv(&self) -> Result<String, IoError> {
        let mut out = String::from("row,col,value\n");
        for &(r, c, v) in &self.triplets {
            out.push_str(&format!("{r},{c},{}\n", fmt_f64(v)?));
        }
        Ok(out)
    }

    /// `xi,phi_0..phi_{n-1}` sampled at `samples` points over the whole domain.
    pub fn sample_csv(&self, samples: usize, order: usize) -> Result<String, MappedBasisError> {
        let (a, b) = self.domain();
        let mut out = String::from("xi");
        for k in 0..self.n_global {
            out.push_str(&format!(",phi_{k}"));
        }
        out.push('\n');
        let n = samples.max(2);
        for s in 0..n {
            let xi = a + (b - a) * s as f64 / (n - 1) as f64;
            let phi = self.eval(xi, order)?;
            let mut row = vec![xi];
            row.extend(phi);
            let line = crate::io::csv_row(&row).map_err(|e| MappedBasisError::IncompatibleBases(e.to_string()))?;
            out.push_str(&line);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn domain(&self) -> (f64, f64) {
        let a = self.patches.first().map_or(0.0, |p| p.domain().0);
        let b = self.patches.last().map_or(0.0, |p| p.domain().1);
        (a, b)
    }
}

/// Fuses two open bases meeting at a joint into a C¹ mapped basis.
///
/// With `n` functions on the left and `m` on the right, the last two left
/// functions and the first two right functions (the ones with nonzero value
/// or slope at the joint) become two global functions
///
/// `φ_a = ψᴸ_{n−1} + α ψᴸ_n + α ψᴿ_1`, `φ_b = ψᴿ_2 + (1 − α)(ψᴸ_n + ψᴿ_1)`
///
/// with `α = dᴸ / (dᴸ − dᴿ)` from the end slopes `dᴸ = ψᴸ_n'`, `dᴿ = ψᴿ_1'`.
/// For equal end spans `α = 1/2`. All other functions map to themselves.
pub fn smooth_1d_interface(left: &BSplineBasis, right: &BSplineBasis) -> Result<MappedBasis, MappedBasisError> {
    let incompatible = |m: String| Err(MappedBasisError::IncompatibleBases(m));
    if left.degree() != right.degree() {
        return incompatible(format!("degrees {} and {} differ", left.degree(), right.degree()));
    }
    if left.degree() < 2 {
        return incompatible("C¹ fusion needs degree at least 2".into());
    }
    let joint = left.domain().1;
    if right.domain().0 != joint {
        return incompatible(format!("left ends at {joint}, right starts at {}", right.domain().0));
    }
    let (n, m) = (left.len(), right.len());
    let dl = left.eval(joint, 1)?[n - 1];
    let dr = right.eval(joint, 1)?[0];
    if !(dl > 0.0 && dr < 0.0) {
        return incompatible("end slopes have unexpected signs".into());
    }
    let alpha = dl / (dl - dr);
    let beta = 1.0 - alpha;

    let mut triplets = Vec::with_capacity(n + m + 2);
    for i in 0..n - 2 {
        triplets.push((i, i, 1.0));
    }
    let (ra, rb) = (n - 2, n - 1);
    triplets.extend([(ra, n - 2, 1.0), (ra, n - 1, alpha), (ra, n, alpha)]);
    triplets.extend([(rb, n + 1, 1.0), (rb, n - 1, beta), (rb, n, beta)]);
    for j in 2..m {
        triplets.push((n + j - 2, n + j, 1.0));
    }
    MappedBasis::new(vec![left.clone(), right.clone()], n + m - 2, triplets)
}

/// Two uniform patches on `[0, 1]` and `[1, 2]` with `spans` knot spans
/// each, joined C¹ at `ξ = 1`. Degree 2 with 8 spans gives 18 global
/// functions from 20 local ones.
pub fn two_patch_example(degree: usize, spans: usize) -> Result<MappedBasis, MappedBasisError> {
    let left = BSplineBasis::uniform(degree, 0.0, 1.0, spans)?;
    let right = BSplineBasis::uniform(degree, 1.0, 2.0, spans)?;
    smooth_1d_interface(&left, &right)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernstein_values() {
        let b = BSplineBasis::new(2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(b.eval(0.0, 0).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(b.eval(0.5, 0).unwrap(), vec![0.25, 0.5, 0.25]);
        assert_eq!(b.eval(1.0, 0).unwrap(), vec![0.0, 0.0, 1.0]);
        // B₀' = −2(1−ξ), B₂' = 2ξ
        let d = b.eval(0.25, 1).unwrap();
        assert!((d[0] + 1.5).abs() < 1e-15 && (d[2] - 0.5).abs() < 1e-15);
        let dd = b.eval(0.3, 2).unwrap();
        assert!((dd[0] - 2.0).abs() < 1e-14 && (dd[1] + 4.0).abs() < 1e-14);
    }

    #[test]
    fn domain_and_knot_checks() {
        let b = BSplineBasis::uniform(2, 0.0, 1.0, 4).unwrap();
        assert_eq!(b.eval(1.5, 0), Err(MappedBasisError::OutOfDomain(1.5)));
        assert!(BSplineBasis::new(2, vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(BSplineBasis::new(1, vec![0.0, 0.0, 0.7, 0.5, 1.0, 1.0]).is_err());
        assert_eq!(b.eval(0.2, 3), Err(MappedBasisError::DerivativeOrder(3)));
    }

    #[test]
    fn identity_map_matches_local() {
        let b = BSplineBasis::uniform(3, 0.0, 2.0, 5).unwrap();
        let n = b.len();
        let mb = MappedBasis::new(vec![b.clone()], n, (0..n).map(|i| (i, i, 1.0)).collect()).unwrap();
        for xi in [0.0, 0.3, 1.1, 2.0] {
            assert_eq!(mb.eval(xi, 1).unwrap(), b.eval(xi, 1).unwrap());
        }
    }

    #[test]
    fn unequal_spans_still_c1() {
        let l = BSplineBasis::uniform(2, 0.0, 1.0, 4).unwrap();
        let r = BSplineBasis::uniform(2, 1.0, 1.5, 5).unwrap();
        let mb = smooth_1d_interface(&l, &r).unwrap();
        let h = 1e-7;
        let left = mb.eval(1.0, 1).unwrap();
        let right = mb.eval(1.0 + h, 1).unwrap();
        for (a, b) in left.iter().zip(&right) {
            assert!((a - b).abs() < 1e-4, "{a} {b}");
        }
        assert!((mb.eval(1.0, 0).unwrap().iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mismatched_degree_rejected() {
        let l = BSplineBasis::uniform(2, 0.0, 1.0, 2).unwrap();
        let r = BSplineBasis::uniform(3, 1.0, 2.0, 2).unwrap();
        assert!(matches!(smooth_1d_interface(&l, &r), Err(MappedBasisError::IncompatibleBases(_))));
        let gap = BSplineBasis::uniform(2, 1.5, 2.0, 2).unwrap();
        assert!(smooth_1d_interface(&l, &gap).is_err());
    }
}
