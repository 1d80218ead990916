//! The operator contract every model exposes and every solver consumes.
//!
//! Sign convention: `R(u) = F_int(u) - P`, so `R(0) = -P`, and the load-scaled
//! residual is `R(u, λ) = F_int(u) - λP`. Both residuals are built from the same
//! internal-force assembly, hence `R(u, 1)` and `R(u)` agree bit for bit.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{norm, Matrix};

/// Outcome of an operator call.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpStatus {
    Success,
    AssemblyError,
    NotConverged,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum OpError {
    #[error("assembly failed: {0}")]
    Assembly(String),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("operator not provided: {0}")]
    Unsupported(&'static str),
}

impl OpError {
    pub fn status(&self) -> OpStatus {
        match self {
            OpError::NotConverged(_) => OpStatus::NotConverged,
            _ => OpStatus::AssemblyError,
        }
    }
}

pub type OpResult<T> = Result<T, OpError>;

/// Black-box structural operators: `P`, `R(u)`, `R(u, λ)`, `K_L`, `M`, `K(u)`
/// and optionally `K(u, Δu)` and a prescribed-displacement driver.
pub trait Operators {
    fn n_dof(&self) -> usize;

    /// External reference load `P`.
    fn force(&self) -> OpResult<Vec<f64>>;

    /// Internal force vector `F_int(u)`.
    fn internal_force(&self, u: &[f64]) -> OpResult<Vec<f64>>;

    /// Tangent stiffness `K(u) = ∂R/∂u`.
    fn jacobian(&self, u: &[f64]) -> OpResult<Matrix>;

    fn mass(&self) -> OpResult<Matrix>;

    /// `R(u) = F_int(u) - P`.
    fn residual(&self, u: &[f64]) -> OpResult<Vec<f64>> {
        self.al_residual(u, 1.0)
    }

    /// `R(u, λ) = F_int(u) - λP`.
    fn al_residual(&self, u: &[f64], lambda: f64) -> OpResult<Vec<f64>> {
        let mut f = self.internal_force(u)?;
        let p = self.force()?;
        for (fi, pi) in f.iter_mut().zip(&p) {
            *fi -= lambda * pi;
        }
        Ok(f)
    }

    /// Linear stiffness `K_L = K(0)`.
    fn stiffness(&self) -> OpResult<Matrix> {
        self.jacobian(&vec![0.0; self.n_dof()])
    }

    /// Increment-dependent Jacobian `K(u, Δu)`; no shipped model provides one.
    fn d_jacobian(&self, _u: &[f64], _du: &[f64]) -> Option<OpResult<Matrix>> {
        None
    }

    fn has_control(&self) -> bool {
        false
    }

    /// Sets the prescribed-displacement driver value γ.
    fn set_control(&mut self, _gamma: f64) -> OpResult<()> {
        Err(OpError::Unsupported("control"))
    }

    /// Reaction conjugate to the driver at state `u` (for the current γ).
    fn reaction(&self, _u: &[f64]) -> OpResult<f64> {
        Err(OpError::Unsupported("reaction"))
    }
}

impl<T: Operators + ?Sized> Operators for Box<T> {
    fn n_dof(&self) -> usize {
        (**self).n_dof()
    }
    fn force(&self) -> OpResult<Vec<f64>> {
        (**self).force()
    }
    fn internal_force(&self, u: &[f64]) -> OpResult<Vec<f64>> {
        (**self).internal_force(u)
    }
    fn jacobian(&self, u: &[f64]) -> OpResult<Matrix> {
        (**self).jacobian(u)
    }
    fn mass(&self) -> OpResult<Matrix> {
        (**self).mass()
    }
    fn residual(&self, u: &[f64]) -> OpResult<Vec<f64>> {
        (**self).residual(u)
    }
    fn al_residual(&self, u: &[f64], lambda: f64) -> OpResult<Vec<f64>> {
        (**self).al_residual(u, lambda)
    }
    fn stiffness(&self) -> OpResult<Matrix> {
        (**self).stiffness()
    }
    fn d_jacobian(&self, u: &[f64], du: &[f64]) -> Option<OpResult<Matrix>> {
        (**self).d_jacobian(u, du)
    }
    fn has_control(&self) -> bool {
        (**self).has_control()
    }
    fn set_control(&mut self, gamma: f64) -> OpResult<()> {
        (**self).set_control(gamma)
    }
    fn reaction(&self, u: &[f64]) -> OpResult<f64> {
        (**self).reaction(u)
    }
}

/// Owned, sendable operator set; what worker threads receive.
pub type BoxedOps = Box<dyn Operators + Send>;

/// Cloneable operator sets can be boxed for workers.
pub trait CloneOps: Operators + Send {
    fn clone_boxed(&self) -> BoxedOps;
}

impl<T: Operators + Clone + Send + 'static> CloneOps for T {
    fn clone_boxed(&self) -> BoxedOps {
        Box::new(self.clone())
    }
}

type VecFn = dyn Fn(&[f64]) -> OpResult<Vec<f64>> + Send + Sync;
type MatFn = dyn Fn(&[f64]) -> OpResult<Matrix> + Send + Sync;

/// Operator set assembled from closures, for ad-hoc systems.
#[derive(Clone)]
pub struct FnOperators {
    n: usize,
    load: Vec<f64>,
    internal: Arc<VecFn>,
    tangent: Arc<MatFn>,
    mass: Option<Matrix>,
}

impl FnOperators {
    pub fn new(
        load: Vec<f64>,
        internal: impl Fn(&[f64]) -> OpResult<Vec<f64>> + Send + Sync + 'static,
        tangent: impl Fn(&[f64]) -> OpResult<Matrix> + Send + Sync + 'static,
    ) -> Self {
        Self {
            n: load.len(),
            load,
            internal: Arc::new(internal),
            tangent: Arc::new(tangent),
            mass: None,
        }
    }

    pub fn with_mass(mut self, mass: Matrix) -> Self {
        self.mass = Some(mass);
        self
    }
}

impl fmt::Debug for FnOperators {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnOperators").field("n", &self.n).finish()
    }
}

impl Operators for FnOperators {
    fn n_dof(&self) -> usize {
        self.n
    }
    fn force(&self) -> OpResult<Vec<f64>> {
        Ok(self.load.clone())
    }
    fn internal_force(&self, u: &[f64]) -> OpResult<Vec<f64>> {
        (self.internal)(u)
    }
    fn jacobian(&self, u: &[f64]) -> OpResult<Matrix> {
        (self.tangent)(u)
    }
    fn mass(&self) -> OpResult<Matrix> {
        self.mass.clone().ok_or(OpError::Unsupported("mass"))
    }
}

/// Wraps an operator set so that any assembly at a state with
/// `max|u_i| > threshold` fails.
#[derive(Clone, Debug)]
pub struct Poisoned<O> {
    pub inner: O,
    pub threshold: f64,
}

impl<O> Poisoned<O> {
    pub fn new(inner: O, threshold: f64) -> Self {
        Self { inner, threshold }
    }

    fn check(&self, u: &[f64]) -> OpResult<()> {
        let m = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if m > self.threshold || !m.is_finite() {
            Err(OpError::Assembly(format!(
                "state beyond poison threshold ({m:.3e} > {:.3e})",
                self.threshold
            )))
        } else {
            Ok(())
        }
    }
}

impl<O: Operators> Operators for Poisoned<O> {
    fn n_dof(&self) -> usize {
        self.inner.n_dof()
    }
    fn force(&self) -> OpResult<Vec<f64>> {
        self.inner.force()
    }
    fn internal_force(&self, u: &[f64]) -> OpResult<Vec<f64>> {
        self.check(u)?;
        self.inner.internal_force(u)
    }
    fn jacobian(&self, u: &[f64]) -> OpResult<Matrix> {
        self.check(u)?;
        self.inner.jacobian(u)
    }
    fn mass(&self) -> OpResult<Matrix> {
        self.inner.mass()
    }
    fn stiffness(&self) -> OpResult<Matrix> {
        self.inner.stiffness()
    }
    fn has_control(&self) -> bool {
        self.inner.has_control()
    }
    fn set_control(&mut self, gamma: f64) -> OpResult<()> {
        if gamma.abs() > self.threshold {
            return Err(OpError::Assembly(format!(
                "control {gamma:.3e} beyond poison threshold"
            )));
        }
        self.inner.set_control(gamma)
    }
    fn reaction(&self, u: &[f64]) -> OpResult<f64> {
        self.check(u)?;
        self.inner.reaction(u)
    }
}

/// Result of comparing the Jacobian against finite differences of the residual.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    /// Max relative error per sample state.
    pub errors: Vec<f64>,
    pub threshold: f64,
}

impl ConsistencyReport {
    pub const DEFAULT_THRESHOLD: f64 = 1e-5;

    pub fn max_error(&self) -> f64 {
        self.errors.iter().fold(0.0_f64, |m, &e| m.max(e))
    }

    pub fn passed(&self) -> bool {
        self.errors.iter().all(|&e| e <= self.threshold)
    }
}

/// Compares `K(u)` column-wise against central differences of `R` at each
/// sample, using the step `h·(1 + ‖u‖)`. The error of a sample is
/// `max|K_fd - K| / max(max|K|, tiny)`.
pub fn check_consistency<O: Operators + ?Sized>(
    ops: &O,
    samples: &[Vec<f64>],
    h: f64,
) -> OpResult<ConsistencyReport> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let n = ops.n_dof();
    let mut errors = Vec::with_capacity(samples.len());
    for u in samples {
        assert_eq!(u.len(), n, "sample has wrong length");
        let k = ops.jacobian(u)?;
        let step = h * (1.0 + norm(u));
        let mut worst = 0.0_f64;
        let mut up = u.clone();
        let mut um = u.clone();
        for j in 0..n {
            up[j] = u[j] + step;
            um[j] = u[j] - step;
            let rp = ops.residual(&up)?;
            let rm = ops.residual(&um)?;
            up[j] = u[j];
            um[j] = u[j];
            for i in 0..n {
                let fd = (rp[i] - rm[i]) / (2.0 * step);
                worst = worst.max((fd - k[(i, j)]).abs());
            }
        }
        let scale = k.max_abs().max(f64::MIN_POSITIVE);
        errors.push(worst / scale);
    }
    Ok(ConsistencyReport {
        errors,
        threshold: ConsistencyReport::DEFAULT_THRESHOLD,
    })
}
