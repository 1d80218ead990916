//! Nonlinear static solvers: Newton–Raphson, dynamic relaxation with kinetic
//! or viscous damping, sequential composition, and displacement control.

mod dr;
mod newton;

pub use dr::{auto_mass_scaling, dr_solve, dr_solve_traced, DrTrace, DR_STABILITY_TARGET};
pub use newton::{newton_solve, newton_solve_at};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operators::{OpError, Operators};

/// Absolute residual floor used when the reference load vanishes.
pub const FORCE_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticConfig {
    /// Relative residual tolerance: `‖R‖ ≤ tolF · ‖P‖`.
    pub tol_f: f64,
    /// Relative update tolerance: `‖Δu‖ ≤ tolU · (1 + ‖u‖)`.
    pub tol_u: f64,
    pub max_iterations: usize,
    /// Dynamic relaxation pseudo time step.
    pub dt: f64,
    /// Mass scaling; `None` picks one from the stiffness and mass diagonals.
    pub alpha: Option<f64>,
    /// Viscous damping `c`; zero selects kinetic damping.
    pub damping: f64,
}

impl StaticConfig {
    pub fn newton() -> Self {
        Self {
            tol_f: 1e-6,
            tol_u: 1e-12,
            max_iterations: 50,
            dt: 1.0,
            alpha: None,
            damping: 0.0,
        }
    }

    pub fn dynamic_relaxation() -> Self {
        Self {
            tol_f: 1e-4,
            max_iterations: 100_000,
            ..Self::newton()
        }
    }

    pub fn with_tol_f(mut self, tol: f64) -> Self {
        self.tol_f = tol;
        self
    }

    pub fn with_tol_u(mut self, tol: f64) -> Self {
        self.tol_u = tol;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn with_damping(mut self, c: f64) -> Self {
        self.damping = c;
        self
    }

    pub fn validate(&self) -> Result<(), StaticsError> {
        let bad = |f: &str| Err(StaticsError::InvalidConfig(f.to_string()));
        if !(self.tol_f > 0.0) {
            return bad("tol_f must be positive");
        }
        if !(self.tol_u > 0.0) {
            return bad("tol_u must be positive");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if self.alpha.is_some_and(|a| !(a > 0.0 && a.is_finite())) {
            return bad("alpha must be positive");
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return bad("damping must be non-negative");
        }
        Ok(())
    }
}

impl Default for StaticConfig {
    fn default() -> Self {
        Self::newton()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StaticStatus {
    Converged,
    NotConverged,
    AssemblyError,
    SingularMatrix,
    Diverged,
}

impl StaticStatus {
    pub fn is_converged(self) -> bool {
        self == StaticStatus::Converged
    }
}

/// One line of the iteration log: `iter, |R|/|P|, |du|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub relative_residual: f64,
    pub update_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticResult {
    /// Last valid iterate.
    pub u: Vec<f64>,
    /// Number of updates performed.
    pub iterations: usize,
    pub residual_norm: f64,
    pub status: StaticStatus,
    pub message: Option<String>,
    pub log: Vec<IterationRecord>,
}

impl StaticResult {
    pub fn is_converged(&self) -> bool {
        self.status.is_converged()
    }

    pub(crate) fn failed(u: Vec<f64>, iterations: usize, status: StaticStatus, err: impl ToString) -> Self {
        Self {
            u,
            iterations,
            residual_norm: f64::NAN,
            status,
            message: Some(err.to_string()),
            log: Vec::new(),
        }
    }
}

pub(crate) fn op_status(e: &OpError) -> StaticStatus {
    match e {
        OpError::NotConverged(_) => StaticStatus::NotConverged,
        _ => StaticStatus::AssemblyError,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StaticsError {
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("operator set has no displacement control")]
    NoControl,
    #[error("control schedule must be strictly monotone")]
    NonMonotoneSchedule,
    #[error("composite solver needs at least one stage")]
    NoStages,
    #[error(transparent)]
    Operator(#[from] OpError),
}

/// A static solver stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Stage {
    Newton(StaticConfig),
    DynamicRelaxation(StaticConfig),
}

impl Stage {
    pub fn run<O: Operators + ?Sized>(&self, ops: &O, u0: Option<&[f64]>) -> StaticResult {
        match self {
            Stage::Newton(c) => newton_solve(ops, c, u0),
            Stage::DynamicRelaxation(c) => dr_solve(ops, c, u0),
        }
    }
}

/// Runs the stages in order, each starting from the previous stage's iterate.
/// Assembly failures and divergence abort; a non-final stage that merely
/// fails to converge hands over its last iterate.
pub fn composite_solve<O: Operators + ?Sized>(
    stages: &[Stage],
    ops: &O,
    u0: Option<&[f64]>,
) -> Result<StaticResult, StaticsError> {
    let (last, init) = stages.split_last().ok_or(StaticsError::NoStages)?;
    let mut u: Option<Vec<f64>> = u0.map(<[f64]>::to_vec);
    let mut total = 0;
    for stage in init {
        let r = stage.run(ops, u.as_deref());
        total += r.iterations;
        if matches!(r.status, StaticStatus::AssemblyError | StaticStatus::Diverged) {
            return Ok(StaticResult { iterations: total, ..r });
        }
        u = Some(r.u);
    }
    let r = last.run(ops, u.as_deref());
    Ok(StaticResult {
        iterations: total + r.iterations,
        ..r
    })
}

/// A converged displacement-controlled state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub gamma: f64,
    pub u: Vec<f64>,
    pub reaction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlPath {
    pub points: Vec<ControlPoint>,
    /// `None` when the whole schedule converged, else the failing status.
    pub failure: Option<StaticStatus>,
}

impl ControlPath {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

/// Steps the prescribed displacement through `schedule`, warm-starting each
/// solve from the previous state and recording the conjugate reaction. Stops
/// at the first failed step and returns the partial path.
pub fn displacement_control<O: Operators + ?Sized>(
    ops: &mut O,
    stage: &Stage,
    schedule: &[f64],
    u0: Option<&[f64]>,
) -> Result<ControlPath, StaticsError> {
    if !ops.has_control() {
        return Err(StaticsError::NoControl);
    }
    let dir = schedule.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>();
    if !(dir.iter().all(|&d| d > 0.0) || dir.iter().all(|&d| d < 0.0)) {
        return Err(StaticsError::NonMonotoneSchedule);
    }
    let mut u = u0.map_or_else(|| vec![0.0; ops.n_dof()], <[f64]>::to_vec);
    let mut points = Vec::with_capacity(schedule.len());
    for &gamma in schedule {
        if let Err(e) = ops.set_control(gamma) {
            return Ok(ControlPath {
                points,
                failure: Some(op_status(&e)),
            });
        }
        let r = stage.run(&*ops, Some(&u));
        if !r.is_converged() {
            return Ok(ControlPath {
                points,
                failure: Some(r.status),
            });
        }
        let reaction = match ops.reaction(&r.u) {
            Ok(v) => v,
            Err(e) => {
                return Ok(ControlPath {
                    points,
                    failure: Some(op_status(&e)),
                })
            }
        };
        u = r.u;
        points.push(ControlPoint {
            gamma,
            u: u.clone(),
            reaction,
        });
    }
    Ok(ControlPath { points, failure: None })
}
