use serde::{Deserialize, Serialize};

use crate::numerics::Matrix;
use crate::operators::{OpError, OpResult, Operators};

use super::ModelError;

fn positive(name: &str, v: f64) -> Result<(), ModelError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::invalid(name, "must be positive"))
    }
}

/// Single linear spring `k` with point mass `m` and load `f`. When driven,
/// the end displacement is prescribed and the model has no free DoF.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSpring {
    pub k: f64,
    pub f: f64,
    pub m: f64,
    drive: Option<f64>,
}

impl LinearSpring {
    pub fn new(k: f64, f: f64) -> Result<Self, ModelError> {
        positive("k", k)?;
        if !f.is_finite() {
            return Err(ModelError::invalid("f", "must be finite"));
        }
        Ok(Self { k, f, m: 1.0, drive: None })
    }

    pub fn with_mass(mut self, m: f64) -> Result<Self, ModelError> {
        positive("m", m)?;
        self.m = m;
        Ok(self)
    }

    pub fn driven(mut self) -> Self {
        self.drive = Some(0.0);
        self
    }
}

impl Operators for LinearSpring {
    fn n_dof(&self) -> usize {
        if self.drive.is_some() {
            0
        } else {
            1
        }
    }

    fn force(&self) -> OpResult<Vec<f64>> {
        Ok(if self.drive.is_some() { vec![] } else { vec![self.f] })
    }

    fn internal_force(&self, u: &[f64]) -> OpResult<Vec<f64>> {
        if u.len() != self.n_dof() {
            return Err(OpError::Assembly("wrong state length".into()));
        }
        Ok(u.iter().map(|x| self.k * x).collect())
    }

    fn jacobian(&self, u: &[f64]) -> OpResult<Matrix> {
        if u.len() != self.n_dof() {
            return Err(OpError::Assembly("wrong state length".into()));
        }
        Ok(Matrix::from_diag(&vec![self.k; self.n_dof()]))
    }

    fn mass(&self) -> OpResult<Matrix> {
        Ok(Matrix::from_diag(&vec![self.m; self.n_dof()]))
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

    fn reaction(&self, _u: &[f64]) -> OpResult<f64> {
        self.drive
            .map(|g| self.k * g)
            .ok_or(OpError::Unsupported("reaction"))
    }
}

/// `n` equal masses joined by `n + 1` equal springs between fixed walls,
/// each mass carrying load `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpringMassChain {
    pub n: usize,
    pub k: f64,
    pub m: f64,
    pub f: f64,
}

impl SpringMassChain {
    pub fn new(n: usize, k: f64, m: f64) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::invalid("n", "needs at least one mass"));
        }
        positive("k", k)?;
        positive("m", m)?;
        Ok(Self { n, k, m, f: 1.0 })
    }

    pub fn with_load(mut self, f: f64) -> Self {
        self.f = f;
        self
    }

    fn tangent(&self) -> Matrix {
        let mut k = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            k[(i, i)] = 2.0 * self.k;
            if i + 1 < self.n {
                k[(i, i + 1)] = -self.k;
                k[(i + 1, i)] = -self.k;
            }
        }
        k
    }
}

impl Operators for SpringMassChain {
    fn n_dof(&self) -> usize {
        self.n
    }

    fn force(&self) -> OpResult<Vec<f64>> {
        Ok(vec![self.f; self.n])
    }

    fn internal_force(&self, u: &[f64]) -> OpResult<Vec<f64>> {
        if u.len() != self.n {
            return Err(OpError::Assembly("wrong state length".into()));
        }
        Ok(self.tangent().mul_vec(u))
    }

    fn jacobian(&self, _u: &[f64]) -> OpResult<Matrix> {
        Ok(self.tangent())
    }

    fn mass(&self) -> OpResult<Matrix> {
        Ok(Matrix::from_diag(&vec![self.m; self.n]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mass_chain() {
        let c = SpringMassChain::new(1, 4.0, 1.0).unwrap();
        assert_eq!(c.stiffness().unwrap(), Matrix::from_rows(&[&[8.0]]));
        assert_eq!(c.mass().unwrap(), Matrix::from_rows(&[&[1.0]]));
    }

    #[test]
    fn driven_spring_reaction() {
        let mut s = LinearSpring::new(3.0, 1.0).unwrap().driven();
        s.set_control(0.5).unwrap();
        assert_eq!(s.reaction(&[]).unwrap(), 1.5);
        assert!(LinearSpring::new(-1.0, 1.0).is_err());
    }
}
