//! Arc-length continuation of `R(u, λ) = 0`: load control, Riks and Crisfield
//! steppers, step-length adaptation, stability monitoring through the inertia
//! of `K(u)`, singular-point computation and branch switching.

mod singular;
mod steppers;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{csv_row, IoError};
use crate::numerics::{dot, ldlt_inertia, norm, LinalgError};
use crate::operators::{OpError, Operators};

pub use singular::{
    compute_singular_point, switch_branch, SingularKind, SingularPoint, LIMIT_THRESHOLD, SINGULAR_ACCEPT_TOL,
    SINGULAR_MAX_ITERATIONS, SINGULAR_TOL,
};
pub use steppers::{step_crisfield, step_load_control, step_riks};

/// Smallest step length, relative to `Δℓ₀`, before a run gives up.
pub const MIN_LENGTH_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContinuationError {
    #[error("corrector did not converge in {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("arc-length constraint has complex roots")]
    ComplexRoots,
    #[error(transparent)]
    Assembly(#[from] OpError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("bracket endpoints have the same stability index")]
    BadBracket,
    #[error("branch switch failed: {0}")]
    BranchSwitchFailed(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl ContinuationError {
    /// Short tag used in abort messages.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::NotConverged { .. } => "NotConverged",
            Self::ComplexRoots => "ComplexRoots",
            Self::Assembly(e) => match e.status() {
                crate::operators::OpStatus::AssemblyError => "AssemblyError",
                crate::operators::OpStatus::NotConverged => "NotConverged",
                _ => "OperatorError",
            },
            Self::Linalg(_) => "SingularMatrix",
            Self::BadBracket => "BadBracket",
            Self::BranchSwitchFailed(_) => "BranchSwitchFailed",
            Self::InvalidConfig(_) => "InvalidConfig",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stepper {
    LoadControl,
    Riks,
    Crisfield,
}

impl std::str::FromStr for Stepper {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "load" | "loadcontrol" | "load-control" => Ok(Self::LoadControl),
            "riks" => Ok(Self::Riks),
            "crisfield" => Ok(Self::Crisfield),
            other => Err(format!("unknown stepper '{other}' (load|riks|crisfield)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    pub stepper: Stepper,
    /// Base arc length `Δℓ₀` (a load increment for load control).
    pub dl0: f64,
    /// Weight of the load term in the constraint metric.
    pub psi: f64,
    pub tol_f: f64,
    pub tol_u: f64,
    pub max_iterations: usize,
    pub steps: usize,
    /// Sign of the first load increment.
    pub forward: bool,
    pub detect_singular: bool,
    pub switch_branch: bool,
    /// Branch-switch perturbation relative to `Δℓ₀`.
    pub tau_rel: f64,
}

impl ContinuationConfig {
    pub fn new(stepper: Stepper, dl0: f64, steps: usize) -> Self {
        Self {
            stepper,
            dl0,
            psi: 1.0,
            tol_f: 1e-9,
            tol_u: 1e-14,
            max_iterations: 25,
            steps,
            forward: true,
            detect_singular: false,
            switch_branch: false,
            tau_rel: 0.01,
        }
    }

    pub fn with_psi(mut self, psi: f64) -> Self {
        self.psi = psi;
        self
    }

    pub fn with_tol_f(mut self, tol: f64) -> Self {
        self.tol_f = tol;
        self
    }

    pub fn with_singular_detection(mut self, detect: bool) -> Self {
        self.detect_singular = detect;
        self
    }

    /// Enables singular-point detection and a branch switch at the first bifurcation.
    pub fn with_branch_switch(mut self, tau_rel: f64) -> Self {
        self.detect_singular = true;
        self.switch_branch = true;
        self.tau_rel = tau_rel;
        self
    }

    pub fn backward(mut self) -> Self {
        self.forward = false;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.dl0 > 0.0 && self.dl0.is_finite()) {
            return Err(format!("dl must be positive, got {}", self.dl0));
        }
        if !(self.psi > 0.0 && self.psi.is_finite()) {
            return Err(format!("psi must be positive, got {}", self.psi));
        }
        if !(self.tol_f > 0.0) {
            return Err("tol_f must be positive".into());
        }
        if self.max_iterations == 0 {
            return Err("max_iterations must be at least 1".into());
        }
        if !(self.tau_rel >= 0.0) {
            return Err("tau_rel must be non-negative".into());
        }
        Ok(())
    }
}

/// Converged point `w = (λ, u)` on an equilibrium path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub step: usize,
    pub u: Vec<f64>,
    pub lambda: f64,
    /// Number of negative pivots of `K(u)`.
    pub stability: usize,
    pub converged: bool,
    /// Arc length of the step that produced this point.
    pub dl: f64,
}

impl PathPoint {
    pub fn new(u: Vec<f64>, lambda: f64) -> Self {
        Self {
            step: 0,
            u,
            lambda,
            stability: 0,
            converged: true,
            dl: 0.0,
        }
    }
}

/// Distance in the constraint metric, `√(‖Δu‖² + ψ²Δλ²PᵀP)`.
pub fn path_distance(a: (&[f64], f64), b: (&[f64], f64), psi: f64, pp: f64) -> f64 {
    let du2: f64 = a.0.iter().zip(b.0).map(|(x, y)| (x - y) * (x - y)).sum();
    let dl = a.1 - b.1;
    (du2 + psi * psi * dl * dl * pp).sqrt()
}

/// Mutable state of a continuation driver.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationState {
    pub u: Vec<f64>,
    pub lambda: f64,
    /// Last accepted increment `(Δu, Δλ)`.
    pub prev: Option<(Vec<f64>, f64)>,
    pub dl: f64,
    pub dl0: f64,
    pub psi: f64,
    pub stability: usize,
}

impl ContinuationState {
    pub fn new(u: Vec<f64>, lambda: f64, dl0: f64, psi: f64) -> Self {
        Self {
            u,
            lambda,
            prev: None,
            dl: dl0,
            dl0,
            psi,
            stability: 0,
        }
    }

    /// Seeds the secant predictor with a known direction.
    pub fn with_direction(mut self, du: Vec<f64>, dlambda: f64) -> Self {
        self.prev = Some((du, dlambda));
        self
    }

    pub fn accept(&mut self, step: &StepResult) {
        self.u.clone_from(&step.u);
        self.lambda = step.lambda;
        self.prev = Some((step.du.clone(), step.dlambda));
    }

    pub fn reduce_length(&mut self, factor: f64) {
        self.dl *= factor;
    }

    pub fn reset_length(&mut self) {
        self.dl = self.dl0;
    }
}

/// Outcome of one corrector loop.
#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub u: Vec<f64>,
    pub lambda: f64,
    pub du: Vec<f64>,
    pub dlambda: f64,
    pub iterations: usize,
}

/// Dispatches one step of the configured stepper.
pub fn step<O: Operators + ?Sized>(
    state: &ContinuationState,
    ops: &O,
    cfg: &ContinuationConfig,
) -> Result<StepResult, ContinuationError> {
    match cfg.stepper {
        Stepper::LoadControl => step_load_control(state, ops, cfg),
        Stepper::Riks => step_riks(state, ops, cfg),
        Stepper::Crisfield => step_crisfield(state, ops, cfg),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPath {
    pub start: Option<PathPoint>,
    /// Converged points, in order; the start point is not repeated here.
    pub points: Vec<PathPoint>,
    pub singular_points: Vec<SingularPoint>,
    /// Points produced by branch switching (also present in `points`).
    pub switched: Vec<usize>,
    /// Non-fatal problems, such as a singular point that could not be located.
    pub warnings: Vec<String>,
    /// Why the run stopped early, if it did.
    pub abort: Option<String>,
    #[serde(skip)]
    pub abort_error: Option<ContinuationError>,
}

impl EquilibriumPath {
    pub fn is_aborted(&self) -> bool {
        self.abort.is_some()
    }

    /// Start point followed by every converged point.
    pub fn all_points(&self) -> impl Iterator<Item = &PathPoint> {
        self.start.iter().chain(self.points.iter())
    }

    pub fn csv_header(n: usize) -> String {
        let mut h = vec!["step".to_string(), "lambda".to_string()];
        h.extend((0..n).map(|i| format!("u_{i}")));
        h.push("stability".into());
        h.push("dl".into());
        h.join(",")
    }

    /// `step,lambda,u_0..u_{n-1},stability,dl`, start point first as step 0.
    pub fn to_csv(&self) -> Result<String, IoError> {
        let n = self.all_points().next().map_or(0, |p| p.u.len());
        let mut out = Self::csv_header(n);
        out.push('\n');
        for p in self.all_points() {
            out.push_str(&p.step.to_string());
            out.push(',');
            let mut vals = vec![p.lambda];
            vals.extend_from_slice(&p.u);
            out.push_str(&csv_row(&vals)?);
            out.push_str(&format!(",{},", p.stability));
            out.push_str(&csv_row(&[p.dl])?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        for p in self.all_points() {
            if let Some(v) = std::iter::once(&p.lambda).chain(&p.u).find(|v| !v.is_finite()) {
                return Err(IoError::NonFinite(*v));
            }
        }
        serde_json::to_string_pretty(self).map_err(|e| IoError::Parse(e.to_string()))
    }
}

/// Parses a path CSV back into points (start point included).
pub fn read_path_csv(text: &str) -> Result<Vec<PathPoint>, IoError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| IoError::Parse("empty path file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[0] != "step" || cols[1] != "lambda" || cols[cols.len() - 2] != "stability" {
        return Err(IoError::Parse(format!("unexpected header '{header}'")));
    }
    let n = cols.len() - 4;
    let bad = |l: &str| IoError::Parse(format!("bad row '{l}'"));
    let mut out = Vec::new();
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols.len() {
            return Err(bad(line));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(line));
        let mut u = Vec::with_capacity(n);
        for c in &cells[2..2 + n] {
            u.push(num(c)?);
        }
        out.push(PathPoint {
            step: cells[0].trim().parse().map_err(|_| bad(line))?,
            lambda: num(cells[1])?,
            u,
            stability: cells[2 + n].trim().parse().map_err(|_| bad(line))?,
            converged: true,
            dl: num(cells[3 + n])?,
        });
    }
    Ok(out)
}

fn stability_of<O: Operators + ?Sized>(ops: &O, u: &[f64]) -> Result<usize, ContinuationError> {
    Ok(ldlt_inertia(&ops.jacobian(u)?)?.negative)
}

/// Runs `cfg.steps` continuation steps from the undeformed state `(0, 0)`.
pub fn run<O: Operators + ?Sized>(ops: &O, cfg: &ContinuationConfig) -> EquilibriumPath {
    let state = ContinuationState::new(vec![0.0; ops.n_dof()], 0.0, cfg.dl0, cfg.psi);
    run_from(ops, cfg, state)
}

/// Runs `cfg.steps` continuation steps from an arbitrary state.
///
/// Failed steps halve `Δℓ`; below `MIN_LENGTH_RATIO · Δℓ₀` the run aborts
/// with the last error recorded. After each success `Δℓ` returns to `Δℓ₀`.
/// A change of the negative-pivot count of `K(u)` between consecutive points
/// triggers, when enabled, the singular-point solve and a branch switch.
pub fn run_from<O: Operators + ?Sized>(ops: &O, cfg: &ContinuationConfig, mut state: ContinuationState) -> EquilibriumPath {
    let mut path = EquilibriumPath::default();
    let abort = |path: &mut EquilibriumPath, e: ContinuationError, msg: String| {
        path.abort = Some(format!("{}: {msg}", e.kind()));
        path.abort_error = Some(e);
    };
    if let Err(msg) = cfg.validate() {
        abort(&mut path, ContinuationError::InvalidConfig(msg.clone()), msg);
        return path;
    }
    if state.u.len() != ops.n_dof() {
        let e = ContinuationError::Assembly(OpError::Assembly("start vector has the wrong length".into()));
        abort(&mut path, e.clone(), e.to_string());
        return path;
    }
    state.stability = match stability_of(ops, &state.u) {
        Ok(s) => s,
        Err(e) => {
            abort(&mut path, e.clone(), format!("start point: {e}"));
            return path;
        }
    };
    let mut start = PathPoint::new(state.u.clone(), state.lambda);
    start.stability = state.stability;
    path.start = Some(start);
    let min_dl = MIN_LENGTH_RATIO * state.dl0;
    let mut switched = false;

    let mut step_no = 0;
    while step_no < cfg.steps {
        let result = step(&state, ops, cfg).and_then(|r| stability_of(ops, &r.u).map(|s| (r, s)));
        let (res, stab) = match result {
            Ok(v) => v,
            Err(e) => {
                state.reduce_length(0.5);
                if state.dl < min_dl {
                    let msg = format!("step {} failed at minimum length: {e}", step_no + 1);
                    abort(&mut path, e, msg);
                    return path;
                }
                continue;
            }
        };
        step_no += 1;
        let prev_point = path.points.last().cloned().or_else(|| path.start.clone()).expect("start set");
        let point = PathPoint {
            step: step_no,
            u: res.u.clone(),
            lambda: res.lambda,
            stability: stab,
            converged: true,
            dl: state.dl,
        };
        state.accept(&res);
        state.stability = stab;
        state.reset_length();
        path.points.push(point.clone());

        if cfg.detect_singular && stab != prev_point.stability {
            match compute_singular_point(ops, (&prev_point, &point)) {
                Ok(sp) => {
                    let switch_now = cfg.switch_branch && !switched && sp.kind == SingularKind::Bifurcation;
                    path.singular_points.push(sp.clone());
                    if switch_now {
                        switched = true;
                        match switch_branch(&sp, ops, cfg.tau_rel, state.dl0, cfg.tol_f, cfg.max_iterations) {
                            Ok(mut sw) => {
                                sw.stability = stability_of(ops, &sw.u).unwrap_or(stab);
                                step_no += 1;
                                sw.step = step_no;
                                let du: Vec<f64> = sw.u.iter().zip(&sp.u).map(|(a, b)| a - b).collect();
                                state.u.clone_from(&sw.u);
                                state.lambda = sw.lambda;
                                state.prev = Some((du, sw.lambda - sp.lambda));
                                state.stability = sw.stability;
                                path.switched.push(path.points.len());
                                path.points.push(sw);
                            }
                            Err(e) => path.warnings.push(format!("step {step_no}: {e}")),
                        }
                    }
                }
                Err(e) => path.warnings.push(format!("step {step_no}: singular point not located: {e}")),
            }
        }
    }
    path
}

/// `|ΔuᵀΔu + ψ²Δλ²PᵀP − Δℓ²|` for an increment.
pub fn constraint_violation(du: &[f64], dlambda: f64, psi: f64, pp: f64, dl: f64) -> f64 {
    (dot(du, du) + psi * psi * dlambda * dlambda * pp - dl * dl).abs()
}

/// `‖R(u, λ)‖ / ‖P‖` at a path point.
pub fn relative_residual<O: Operators + ?Sized>(ops: &O, p: &PathPoint) -> Result<f64, OpError> {
    let r = ops.al_residual(&p.u, p.lambda)?;
    Ok(norm(&r) / norm(&ops.force()?).max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LinearSpring;

    #[test]
    fn load_control_spring_steps() {
        let s = LinearSpring::new(2.0, 3.0).unwrap();
        let cfg = ContinuationConfig::new(Stepper::LoadControl, 0.1, 10);
        let path = run(&s, &cfg);
        assert!(path.abort.is_none());
        assert_eq!(path.points.len(), 10);
        for (i, p) in path.points.iter().enumerate() {
            let lam = 0.1 * (i + 1) as f64;
            assert!((p.lambda - lam).abs() < 1e-12);
            assert!((p.u[0] - lam * 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn crisfield_first_step_is_pure_load() {
        let s = LinearSpring::new(1.0, 2.0).unwrap();
        let state = ContinuationState::new(vec![0.0], 0.0, 0.5, 1.0);
        let cfg = ContinuationConfig::new(Stepper::Crisfield, 0.5, 1);
        let r = step_crisfield(&state, &s, &cfg).unwrap();
        let pp = 4.0;
        assert!(constraint_violation(&r.du, r.dlambda, 1.0, pp, 0.5) <= 1e-10 * 0.25);
        assert!(r.dlambda > 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let s = LinearSpring::new(3.0, 1.0).unwrap();
        let path = run(&s, &ContinuationConfig::new(Stepper::Riks, 0.3, 4));
        let text = path.to_csv().unwrap();
        assert!(text.starts_with("step,lambda,u_0,stability,dl\n"));
        let back = read_path_csv(&text).unwrap();
        let orig: Vec<PathPoint> = path.all_points().cloned().collect();
        assert_eq!(back.len(), orig.len());
        for (a, b) in back.iter().zip(&orig) {
            assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
            assert_eq!(a.u[0].to_bits(), b.u[0].to_bits());
        }
    }

    #[test]
    fn stepper_names() {
        assert_eq!("crisfield".parse::<Stepper>().unwrap(), Stepper::Crisfield);
        assert!("newton".parse::<Stepper>().is_err());
    }
}
