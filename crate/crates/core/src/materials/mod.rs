//! Hyperelastic material-point laws written in principal stretches.
//!
//! All three families share one isochoric building block
//! `c · (J^(-β/3) · Σ λᵢ^β − 3)`:
//!
//! | model | terms `(c, β)` |
//! |-------|----------------|
//! | Neo-Hookean | `(μ/2, 2)` |
//! | Mooney–Rivlin | `(μ₁/2, 2)`, `(μ₂/2, −2)` |
//! | Ogden | `(μ_p/α_p, α_p)` |
//!
//! Compressible laws add `K/2 (J − 1)²` with `K = E / (3(1 − 2ν))`. The
//! incompressible forms (ν = 0.5) drop both the `J` factor and the
//! volumetric term; the constraint `J = 1` is the caller's business.

mod params;
mod tension;
mod uniaxial;

pub use params::{MaterialModel, MaterialParams, DEFAULT_MR_RATIO, DEFAULT_OGDEN};
pub use tension::{classify_tension, TensionState};
pub use uniaxial::{lateral_stretch, solve_scalar_root, uniaxial_solve, StretchState};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaterialError {
    #[error("invalid stretch: all principal stretches must be positive and finite, got {0:?}")]
    InvalidStretch([f64; 3]),
    #[error("invalid material parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },
    #[error("lateral stretch root solve did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
}

/// Energy value, gradient `∂Ψ/∂λᵢ` and Hessian `∂²Ψ/∂λᵢ∂λⱼ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyDerivatives {
    pub psi: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
}

fn check_stretches(l: [f64; 3]) -> Result<(), MaterialError> {
    if l.iter().all(|v| v.is_finite() && *v > 0.0) {
        Ok(())
    } else {
        Err(MaterialError::InvalidStretch(l))
    }
}

/// Strain energy density `Ψ(λ₁, λ₂, λ₃)`.
pub fn strain_energy(p: &MaterialParams, l1: f64, l2: f64, l3: f64) -> Result<f64, MaterialError> {
    Ok(energy_derivatives(p, [l1, l2, l3])?.psi)
}

/// Energy with analytic first and second derivatives in the principal stretches.
pub fn energy_derivatives(p: &MaterialParams, l: [f64; 3]) -> Result<EnergyDerivatives, MaterialError> {
    check_stretches(l)?;
    let compressible = p.is_compressible();
    let j = l[0] * l[1] * l[2];
    let mut out = EnergyDerivatives {
        psi: 0.0,
        grad: [0.0; 3],
        hess: [[0.0; 3]; 3],
    };
    for (c, beta) in p.isochoric_terms() {
        let q = if compressible { -beta / 3.0 } else { 0.0 };
        let f = if compressible { j.powf(q) } else { 1.0 };
        let pw: [f64; 3] = [l[0].powf(beta), l[1].powf(beta), l[2].powf(beta)];
        let s: f64 = pw.iter().sum();
        // a_i = q S / λ_i + β λ_i^(β-1)
        let a: [f64; 3] = std::array::from_fn(|i| q * s / l[i] + beta * pw[i] / l[i]);
        out.psi += c * (f * s - 3.0);
        for i in 0..3 {
            out.grad[i] += c * f * a[i];
            for jj in 0..3 {
                let mut t = (q * f / l[jj]) * a[i] + f * q * beta * pw[jj] / (l[jj] * l[i]);
                if i == jj {
                    t += f * (-q * s / (l[i] * l[i]) + beta * (beta - 1.0) * pw[i] / (l[i] * l[i]));
                }
                out.hess[i][jj] += c * t;
            }
        }
    }
    if compressible {
        let k = p.bulk_modulus();
        out.psi += 0.5 * k * (j - 1.0) * (j - 1.0);
        for i in 0..3 {
            out.grad[i] += k * (j - 1.0) * j / l[i];
            for jj in 0..3 {
                out.hess[i][jj] += if i == jj {
                    k * j * j / (l[i] * l[i])
                } else {
                    k * j * (2.0 * j - 1.0) / (l[i] * l[jj])
                };
            }
        }
    }
    Ok(out)
}

/// Principal Kirchhoff stresses `τᵢ = λᵢ ∂Ψ/∂λᵢ` (no pressure term).
pub fn kirchhoff_stress(p: &MaterialParams, l: [f64; 3]) -> Result<[f64; 3], MaterialError> {
    let d = energy_derivatives(p, l)?;
    Ok(std::array::from_fn(|i| l[i] * d.grad[i]))
}

/// Principal Cauchy stresses. Compressible: `σ = τ / J`. Incompressible: the
/// pressure is fixed by the plane-stress condition `σ₃ = 0`.
pub fn cauchy_stress(p: &MaterialParams, l: [f64; 3]) -> Result<[f64; 3], MaterialError> {
    let tau = kirchhoff_stress(p, l)?;
    if p.is_compressible() {
        let j = l[0] * l[1] * l[2];
        Ok(tau.map(|t| t / j))
    } else {
        Ok([tau[0] - tau[2], tau[1] - tau[2], 0.0])
    }
}
