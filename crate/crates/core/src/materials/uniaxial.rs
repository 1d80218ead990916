use serde::{Deserialize, Serialize};

use super::{cauchy_stress, energy_derivatives, MaterialError, MaterialParams};

pub const ROOT_MAX_ITERATIONS: usize = 100;

/// Principal stretches of a material point and the resulting Cauchy stresses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StretchState {
    pub stretches: [f64; 3],
    pub j: f64,
    /// Principal Cauchy stresses (Pa).
    pub sigma: [f64; 3],
}

impl StretchState {
    pub fn lambda(&self) -> f64 {
        self.stretches[0]
    }

    pub fn lambda3(&self) -> f64 {
        self.stretches[2]
    }

    pub fn axial_stress(&self) -> f64 {
        self.sigma[0]
    }
}

/// Safeguarded Newton for a scalar root on `s > 0`.
///
/// `f` returns `(g, dg/ds)`. Newton steps are used while they stay inside the
/// current sign bracket (once one is known) and positive; otherwise the
/// iteration bisects. Stops when `|g| ≤ tol`.
pub fn solve_scalar_root<F>(mut f: F, s0: f64, tol: f64) -> Result<f64, MaterialError>
where
    F: FnMut(f64) -> Result<(f64, f64), MaterialError>,
{
    let mut s = s0;
    let mut neg: Option<f64> = None;
    let mut pos: Option<f64> = None;
    for _ in 0..ROOT_MAX_ITERATIONS {
        let (g, dg) = f(s)?;
        if g.abs() <= tol {
            return Ok(s);
        }
        if g < 0.0 {
            neg = Some(s);
        } else {
            pos = Some(s);
        }
        let newton = s - g / dg;
        s = match (neg, pos) {
            (Some(a), Some(b)) => {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                if newton.is_finite() && newton > lo && newton < hi {
                    newton
                } else {
                    0.5 * (lo + hi)
                }
            }
            _ if !newton.is_finite() => 2.0 * s,
            _ if newton <= 0.0 => 0.5 * s,
            _ => newton.min(10.0 * s),
        };
    }
    Err(MaterialError::NoConvergence {
        iterations: ROOT_MAX_ITERATIONS,
    })
}

/// Plane-stress through-thickness stretch for in-plane stretches `(λ₁, λ₂)`.
pub fn lateral_stretch(p: &MaterialParams, l1: f64, l2: f64) -> Result<f64, MaterialError> {
    if !(l1 > 0.0 && l2 > 0.0 && l1.is_finite() && l2.is_finite()) {
        return Err(MaterialError::InvalidStretch([l1, l2, 1.0]));
    }
    if !p.is_compressible() {
        return Ok(1.0 / (l1 * l2));
    }
    let a = l1 * l2;
    let guess = a.powf(-p.nu / (1.0 - p.nu));
    // σ₃ = Ψ₃ / (λ₁λ₂)
    solve_scalar_root(
        |s| {
            let d = energy_derivatives(p, [l1, l2, s])?;
            Ok((d.grad[2] / a, d.hess[2][2] / a))
        },
        guess,
        1e-10 * p.mu(),
    )
}

/// Uniaxial plane-stress state at axial stretch `λ`.
pub fn uniaxial_solve(p: &MaterialParams, lambda: f64) -> Result<StretchState, MaterialError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(MaterialError::InvalidStretch([lambda, 1.0, 1.0]));
    }
    let s = if p.is_compressible() {
        // σ₂ = σ₃ = Ψ₃ / (λ s) with λ₂ = λ₃ = s
        solve_scalar_root(
            |s| {
                let d = energy_derivatives(p, [lambda, s, s])?;
                let g = d.grad[2] / (lambda * s);
                let dg = (d.hess[2][1] + d.hess[2][2]) / (lambda * s) - g / s;
                Ok((g, dg))
            },
            lambda.powf(-p.nu),
            1e-10 * p.mu(),
        )?
    } else {
        lambda.powf(-0.5)
    };
    let stretches = [lambda, s, s];
    let sigma = cauchy_stress(p, stretches)?;
    Ok(StretchState {
        stretches,
        j: lambda * s * s,
        sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undeformed_state() {
        for p in [
            MaterialParams::neo_hookean(1.0, 0.45),
            MaterialParams::mooney_rivlin(1.0, 0.3, 7.0),
            MaterialParams::ogden_default(1.0, 0.5),
        ] {
            let st = uniaxial_solve(&p, 1.0).unwrap();
            assert!(st.axial_stress().abs() <= 1e-10 * p.mu());
            assert!((st.j - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn incompressible_lateral_is_inverse_sqrt() {
        let p = MaterialParams::neo_hookean(1.0, 0.5);
        let st = uniaxial_solve(&p, 4.0).unwrap();
        assert_eq!(st.lambda3(), 0.5);
    }

    #[test]
    fn scalar_root_cubic() {
        let r = solve_scalar_root(|s| Ok((s * s * s - 8.0, 3.0 * s * s)), 0.1, 1e-13).unwrap();
        assert!((r - 2.0).abs() < 1e-13);
    }

    #[test]
    fn lateral_stress_vanishes() {
        let p = MaterialParams::ogden_default(1.0, 0.3);
        for lam in [0.6, 1.7, 6.0] {
            let st = uniaxial_solve(&p, lam).unwrap();
            assert!(st.sigma[1].abs() <= 1e-10 * p.mu());
            assert!(st.sigma[2].abs() <= 1e-10 * p.mu());
        }
        let l3 = lateral_stretch(&p, 1.2, 1.1).unwrap();
        let s = super::super::cauchy_stress(&p, [1.2, 1.1, l3]).unwrap();
        assert!(s[2].abs() <= 1e-10 * p.mu());
    }
}
