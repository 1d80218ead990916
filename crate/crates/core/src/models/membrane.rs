use serde::{Deserialize, Serialize};

use crate::materials::{energy_derivatives, lateral_stretch, MaterialError, MaterialParams};
use crate::numerics::Matrix;
use crate::operators::{OpError, OpResult, Operators};

use super::ModelError;

const GAUSS_2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// Single bilinear membrane element `L × W × t` in uniaxial tension.
///
/// The left edge is held in x and the bottom edge in y; the right edge moves
/// rigidly by `u` and the top edge by `v`, so the element has two DoFs and a
/// homogeneous deformation `λ₁ = 1 + u/L`, `λ₂ = 1 + v/W`. The edge load acts
/// on the right edge (force per unit length, i.e. stress times thickness).
/// Plane stress fixes `λ₃` through `σ₃ = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniaxialMembraneElement {
    pub length: f64,
    pub width: f64,
    pub edge_load: f64,
    pub material: MaterialParams,
    pub lumped: bool,
    drive: Option<f64>,
}

/// Reduced in-plane energy density and its derivatives in `(λ₁, λ₂)`.
struct PlaneEnergy {
    grad: [f64; 2],
    hess: [[f64; 2]; 2],
    lambda3: f64,
}

fn op_err(e: MaterialError) -> OpError {
    OpError::Assembly(e.to_string())
}

impl UniaxialMembraneElement {
    pub fn new(length: f64, width: f64, edge_load: f64, material: MaterialParams) -> Result<Self, ModelError> {
        for (name, v) in [("length", length), ("width", width)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::invalid(name, "must be positive"));
            }
        }
        material
            .validate()
            .map_err(|e| ModelError::invalid("material", e.to_string()))?;
        Ok(Self {
            length,
            width,
            edge_load,
            material,
            lumped: false,
            drive: None,
        })
    }

    pub fn lumped(mut self, lumped: bool) -> Self {
        self.lumped = lumped;
        self
    }

    /// Prescribes the right-edge displacement `u` through the control value.
    pub fn driven(mut self) -> Self {
        self.drive = Some(0.0);
        self
    }

    fn dofs(&self, u: &[f64]) -> OpResult<(f64, f64)> {
        match (self.drive, u) {
            (None, [a, b]) => Ok((*a, *b)),
            (Some(g), [b]) => Ok((g, *b)),
            _ => Err(OpError::Assembly(format!("state has length {}, expected {}", u.len(), self.n_dof()))),
        }
    }

    fn stretches(&self, u: f64, v: f64) -> OpResult<(f64, f64)> {
        let l1 = 1.0 + u / self.length;
        let l2 = 1.0 + v / self.width;
        if l1 > 0.0 && l2 > 0.0 {
            Ok((l1, l2))
        } else {
            Err(OpError::Assembly(format!("element inverted (stretches {l1}, {l2})")))
        }
    }

    fn plane_energy(&self, l1: f64, l2: f64) -> OpResult<PlaneEnergy> {
        let p = &self.material;
        let l3 = lateral_stretch(p, l1, l2).map_err(op_err)?;
        let d = energy_derivatives(p, [l1, l2, l3]).map_err(op_err)?;
        let l = [l1, l2];
        let mut grad = [0.0; 2];
        let mut hess = [[0.0; 2]; 2];
        if p.is_compressible() {
            // Ψ₃ = 0 at the plane-stress λ₃; condense λ₃ out of the Hessian.
            for a in 0..2 {
                grad[a] = d.grad[a];
                for b in 0..2 {
                    hess[a][b] = d.hess[a][b] - d.hess[a][2] * d.hess[b][2] / d.hess[2][2];
                }
            }
        } else {
            // λ₃ = 1/(λ₁λ₂): chain rule through m_a = ∂λ₃/∂λ_a.
            let m = [-l3 / l[0], -l3 / l[1]];
            for a in 0..2 {
                grad[a] = d.grad[a] + d.grad[2] * m[a];
                for b in 0..2 {
                    let mab = l3 * if a == b { 2.0 } else { 1.0 } / (l[a] * l[b]);
                    hess[a][b] = d.hess[a][b]
                        + d.hess[a][2] * m[b]
                        + d.hess[2][b] * m[a]
                        + d.hess[2][2] * m[a] * m[b]
                        + d.grad[2] * mab;
                }
            }
        }
        Ok(PlaneEnergy { grad, hess, lambda3: l3 })
    }

    /// Integrates over the element with 2×2 Gauss points. The deformation is
    /// homogeneous, so every point sees the same stretches.
    fn assemble(&self, u: f64, v: f64) -> OpResult<([f64; 2], [[f64; 2]; 2])> {
        let (l1, l2) = self.stretches(u, v)?;
        let e = self.plane_energy(l1, l2)?;
        let t = self.material.thickness;
        let det_j = self.length * self.width / 4.0;
        // dλ₁/du = 1/L, dλ₂/dv = 1/W
        let dl = [1.0 / self.length, 1.0 / self.width];
        let mut f = [0.0; 2];
        let mut k = [[0.0; 2]; 2];
        for _ in GAUSS_2 {
            for _ in GAUSS_2 {
                let w = t * det_j;
                for a in 0..2 {
                    f[a] += w * e.grad[a] * dl[a];
                    for b in 0..2 {
                        k[a][b] += w * e.hess[a][b] * dl[a] * dl[b];
                    }
                }
            }
        }
        Ok((f, k))
    }

    /// Through-thickness stretch at the reduced state.
    pub fn lambda3(&self, u: &[f64]) -> OpResult<f64> {
        let (a, b) = self.dofs(u)?;
        let (l1, l2) = self.stretches(a, b)?;
        Ok(self.plane_energy(l1, l2)?.lambda3)
    }

    /// In-plane stretches `(λ₁, λ₂)` at the reduced state.
    pub fn in_plane_stretches(&self, u: &[f64]) -> OpResult<(f64, f64)> {
        let (a, b) = self.dofs(u)?;
        self.stretches(a, b)
    }

    /// Diagonal of the (tied-edge) mass matrix: consistent `ρtA/3` per DoF
    /// from 2×2 Gauss integration of the shape functions, or row-sum lumped
    /// `ρtA/2`.
    fn mass_diag(&self) -> f64 {
        let rho_t = self.material.rho * self.material.thickness;
        let area = self.length * self.width;
        if self.lumped {
            return rho_t * area / 2.0;
        }
        // The right-edge DoF moves nodes 2 and 3; their summed shape function
        // is (1 + ξ)/2 on the reference square.
        let det_j = area / 4.0;
        let mut m = 0.0;
        for xi in GAUSS_2 {
            for _eta in GAUSS_2 {
                let n = 0.5 * (1.0 + xi);
                m += rho_t * n * n * det_j;
            }
        }
        m
    }
}

impl Operators for UniaxialMembraneElement {
    fn n_dof(&self) -> usize {
        if self.drive.is_some() {
            1
        } else {
            2
        }
    }

    fn force(&self) -> OpResult<Vec<f64>> {
        Ok(if self.drive.is_some() {
            vec![0.0]
        } else {
            vec![self.edge_load * self.width, 0.0]
        })
    }

    fn internal_force(&self, u: &[f64]) -> OpResult<Vec<f64>> {
        let (a, b) = self.dofs(u)?;
        let (f, _) = self.assemble(a, b)?;
        Ok(if self.drive.is_some() { vec![f[1]] } else { f.to_vec() })
    }

    fn jacobian(&self, u: &[f64]) -> OpResult<Matrix> {
        let (a, b) = self.dofs(u)?;
        let (_, k) = self.assemble(a, b)?;
        Ok(if self.drive.is_some() {
            Matrix::from_diag(&[k[1][1]])
        } else {
            Matrix::from_rows(&[&k[0], &k[1]])
        })
    }

    fn mass(&self) -> OpResult<Matrix> {
        Ok(Matrix::from_diag(&vec![self.mass_diag(); self.n_dof()]))
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
        let (a, b) = self.dofs(u)?;
        Ok(self.assemble(a, b)?.0[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::check_consistency;

    fn element(nu: f64) -> UniaxialMembraneElement {
        let mat = MaterialParams::neo_hookean(1.0e3, nu).with_thickness(0.1).with_density(2.0);
        UniaxialMembraneElement::new(2.0, 1.0, 10.0, mat).unwrap()
    }

    #[test]
    fn rest_state_residual() {
        for nu in [0.3, 0.5] {
            let e = element(nu);
            assert_eq!(e.residual(&[0.0, 0.0]).unwrap(), vec![-10.0, 0.0]);
        }
    }

    #[test]
    fn masses() {
        let e = element(0.3);
        let area = 2.0;
        assert!((e.mass().unwrap()[(0, 0)] - 2.0 * 0.1 * area / 3.0).abs() < 1e-15);
        let l = e.clone().lumped(true);
        assert!((l.mass().unwrap()[(1, 1)] - 2.0 * 0.1 * area / 2.0).abs() < 1e-15);
    }

    #[test]
    fn tangent_consistency() {
        for nu in [0.3, 0.45, 0.5] {
            let e = element(nu);
            let r = check_consistency(&e, &[vec![0.0, 0.0], vec![0.8, -0.2], vec![-0.3, 0.1]], 1e-6).unwrap();
            assert!(r.passed(), "nu={nu} {r:?}");
        }
    }
}
