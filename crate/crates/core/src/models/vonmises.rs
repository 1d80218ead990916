use serde::{Deserialize, Serialize};

use crate::numerics::Matrix;
use crate::operators::{OpError, OpResult, Operators};

use super::truss::green_bar;
use super::ModelError;

/// Shallow two-bar (von Mises) truss: supports at `(∓a, 0)`, apex at height
/// `h`, reference load `P_ref` pushing the apex down.
///
/// DoFs are the apex lateral displacement `u_x` and the apex drop `v`
/// (positive downward, i.e. along the load). The symmetric variant keeps
/// only `v`. In driven mode `v = γ` is prescribed and only `u_x` (or nothing)
/// remains free.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VonMisesTruss {
    pub a: f64,
    pub h: f64,
    pub ea: f64,
    pub p_ref: f64,
    pub mass: f64,
    pub symmetric: bool,
    drive: Option<f64>,
}

impl VonMisesTruss {
    pub fn new(a: f64, h: f64, ea: f64, p_ref: f64, symmetric: bool) -> Result<Self, ModelError> {
        for (name, v) in [("a", a), ("h", h), ("ea", ea), ("p_ref", p_ref)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::invalid(name, "must be positive"));
            }
        }
        Ok(Self {
            a,
            h,
            ea,
            p_ref,
            mass: 1.0,
            symmetric,
            drive: None,
        })
    }

    /// Prescribes the apex drop through the control value γ.
    pub fn driven(mut self) -> Self {
        self.drive = Some(0.0);
        self
    }

    pub fn is_driven(&self) -> bool {
        self.drive.is_some()
    }

    /// Apex `(u_x, v)` from the reduced state.
    fn apex(&self, u: &[f64]) -> OpResult<(f64, f64)> {
        let expect = self.n_dof();
        if u.len() != expect {
            return Err(OpError::Assembly(format!("state has length {}, expected {expect}", u.len())));
        }
        Ok(match (self.symmetric, self.drive) {
            (true, None) => (0.0, u[0]),
            (false, None) => (u[0], u[1]),
            (true, Some(g)) => (0.0, g),
            (false, Some(g)) => (u[0], g),
        })
    }

    /// Apex force and tangent in `(x, drop)` coordinates.
    fn apex_response(&self, ux: f64, v: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let mut f = [0.0; 2];
        let mut k = [[0.0; 2]; 2];
        for sx in [-self.a, self.a] {
            let x0 = [-sx, self.h];
            let d = [ux - sx, self.h - v];
            let (fb, kb, _) = green_bar(x0, d, self.ea);
            // y points up, the drop coordinate down: flip the second component.
            let t = [1.0, -1.0];
            for r in 0..2 {
                f[r] += t[r] * fb[r];
                for c in 0..2 {
                    k[r][c] += t[r] * t[c] * kb[r][c];
                }
            }
        }
        (f, k)
    }
}

impl Operators for VonMisesTruss {
    fn n_dof(&self) -> usize {
        match (self.symmetric, self.drive.is_some()) {
            (true, true) => 0,
            (true, false) | (false, true) => 1,
            (false, false) => 2,
        }
    }

    fn force(&self) -> OpResult<Vec<f64>> {
        Ok(match (self.symmetric, self.drive.is_some()) {
            (_, true) => vec![0.0; self.n_dof()],
            (true, false) => vec![self.p_ref],
            (false, false) => vec![0.0, self.p_ref],
        })
    }

    fn internal_force(&self, u: &[f64]) -> OpResult<Vec<f64>> {
        let (ux, v) = self.apex(u)?;
        let (f, _) = self.apex_response(ux, v);
        Ok(match (self.symmetric, self.drive.is_some()) {
            (true, true) => vec![],
            (true, false) => vec![f[1]],
            (false, true) => vec![f[0]],
            (false, false) => f.to_vec(),
        })
    }

    fn jacobian(&self, u: &[f64]) -> OpResult<Matrix> {
        let (ux, v) = self.apex(u)?;
        let (_, k) = self.apex_response(ux, v);
        Ok(match (self.symmetric, self.drive.is_some()) {
            (true, true) => Matrix::zeros(0, 0),
            (true, false) => Matrix::from_diag(&[k[1][1]]),
            (false, true) => Matrix::from_diag(&[k[0][0]]),
            (false, false) => Matrix::from_rows(&[&k[0], &k[1]]),
        })
    }

    fn mass(&self) -> OpResult<Matrix> {
        Ok(Matrix::from_diag(&vec![self.mass; self.n_dof()]))
    }

    fn has_control(&self) -> bool {
        self.drive.is_some()
    }

    fn set_control(&mut self, gamma: f64) -> OpResult<()> {
        match &mut self.drive {
            Some(g) => {
                *g = gamma;
                Ok(())
            }
            None => Err(OpError::Unsupported("control")),
        }
    }

    fn reaction(&self, u: &[f64]) -> OpResult<f64> {
        if self.drive.is_none() {
            return Err(OpError::Unsupported("reaction"));
        }
        let (ux, v) = self.apex(u)?;
        Ok(self.apex_response(ux, v).0[1])
    }
}

/// Closed-form load factor of the symmetric truss at apex drop `v`:
/// `λ = EA / (P_ref L₀³) · (h − v) · v · (2h − v)` with `L₀² = a² + h²`.
pub fn vmtruss_analytic_path(a: f64, h: f64, ea: f64, p_ref: f64, v: f64) -> f64 {
    let l0 = (a * a + h * h).sqrt();
    ea / (p_ref * l0 * l0 * l0) * (h - v) * v * (2.0 * h - v)
}

/// Slope `dλ/dv` of [`vmtruss_analytic_path`].
pub fn vmtruss_analytic_slope(a: f64, h: f64, ea: f64, p_ref: f64, v: f64) -> f64 {
    let l0 = (a * a + h * h).sqrt();
    // d/dv [(h − v) v (2h − v)] = 3v² − 6hv + 2h²
    ea / (p_ref * l0 * l0 * l0) * (3.0 * v * v - 6.0 * h * v + 2.0 * h * h)
}

/// The two limit points `(v, λ)` at `v = h(1 ∓ 1/√3)`.
pub fn vmtruss_limit_points(a: f64, h: f64, ea: f64, p_ref: f64) -> [(f64, f64); 2] {
    let r = 1.0 / 3.0_f64.sqrt();
    [h * (1.0 - r), h * (1.0 + r)].map(|v| (v, vmtruss_analytic_path(a, h, ea, p_ref, v)))
}
