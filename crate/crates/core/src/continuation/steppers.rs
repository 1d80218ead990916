use crate::numerics::{dot, norm, Lu};
use crate::operators::Operators;

use super::{ContinuationConfig, ContinuationError, ContinuationState, StepResult};

/// Load-scaled residual, tangent factorization and the two tangent solves
/// `δu_R = −K⁻¹R`, `δu_t = K⁻¹P` at `(u, λ)`.
struct Linearization {
    du_r: Vec<f64>,
    du_t: Vec<f64>,
}

fn linearize<O: Operators + ?Sized>(ops: &O, u: &[f64], lambda: f64, p: &[f64]) -> Result<Linearization, ContinuationError> {
    let r = ops.al_residual(u, lambda)?;
    let k = ops.jacobian(u)?;
    let lu = Lu::new(&k)?;
    let minus_r: Vec<f64> = r.iter().map(|v| -v).collect();
    Ok(Linearization {
        du_r: lu.solve(&minus_r)?,
        du_t: lu.solve(p)?,
    })
}

fn residual_ok<O: Operators + ?Sized>(
    ops: &O,
    u: &[f64],
    lambda: f64,
    cfg: &ContinuationConfig,
    pnorm: f64,
) -> Result<bool, ContinuationError> {
    let r = ops.al_residual(u, lambda)?;
    let rn = norm(&r);
    if !rn.is_finite() {
        return Err(ContinuationError::NotConverged { iterations: 0 });
    }
    Ok(rn <= cfg.tol_f * pnorm.max(f64::MIN_POSITIVE))
}

fn finish(state: &ContinuationState, du: Vec<f64>, dlambda: f64, iterations: usize) -> StepResult {
    let u = state.u.iter().zip(&du).map(|(a, b)| a + b).collect();
    StepResult {
        u,
        lambda: state.lambda + dlambda,
        du,
        dlambda,
        iterations,
    }
}

/// `λ ← λ + Δℓ`, then Newton on `R(u, λ) = 0` at fixed `λ`.
pub fn step_load_control<O: Operators + ?Sized>(
    state: &ContinuationState,
    ops: &O,
    cfg: &ContinuationConfig,
) -> Result<StepResult, ContinuationError> {
    let p = ops.force()?;
    let pnorm = norm(&p);
    let sign = if cfg.forward { 1.0 } else { -1.0 };
    let dlambda = sign * state.dl;
    let lambda = state.lambda + dlambda;
    let mut du = vec![0.0; state.u.len()];
    let mut u = state.u.clone();
    for it in 0..=cfg.max_iterations {
        if residual_ok(ops, &u, lambda, cfg, pnorm)? {
            return Ok(finish(state, du, dlambda, it));
        }
        if it == cfg.max_iterations {
            break;
        }
        let lin = linearize(ops, &u, lambda, &p)?;
        for i in 0..u.len() {
            du[i] += lin.du_r[i];
            u[i] += lin.du_r[i];
        }
        if norm(&lin.du_r) <= cfg.tol_u * (1.0 + norm(&u)) && residual_ok(ops, &u, lambda, cfg, pnorm)? {
            return Ok(finish(state, du, dlambda, it + 1));
        }
    }
    Err(ContinuationError::NotConverged {
        iterations: cfg.max_iterations,
    })
}

/// Secant predictor: the previous increment rescaled to length `Δℓ` in the
/// constraint metric, or a pure load step on the first step.
fn predictor(state: &ContinuationState, cfg: &ContinuationConfig, pp: f64) -> (Vec<f64>, f64) {
    let psi2pp = state.psi * state.psi * pp;
    if let Some((du, dl)) = &state.prev {
        let len = (dot(du, du) + psi2pp * dl * dl).sqrt();
        if len > 0.0 {
            let s = state.dl / len;
            return (du.iter().map(|v| s * v).collect(), s * dl);
        }
    }
    let sign = if cfg.forward { 1.0 } else { -1.0 };
    (vec![0.0; state.u.len()], sign * state.dl / (state.psi * pp.sqrt()))
}

/// Riks: corrections confined to the hyperplane orthogonal to the predictor.
pub fn step_riks<O: Operators + ?Sized>(
    state: &ContinuationState,
    ops: &O,
    cfg: &ContinuationConfig,
) -> Result<StepResult, ContinuationError> {
    let p = ops.force()?;
    let pp = dot(&p, &p);
    let pnorm = pp.sqrt();
    let psi2pp = state.psi * state.psi * pp;
    let (t_u, t_l) = predictor(state, cfg, pp);
    let mut du = t_u.clone();
    let mut dlambda = t_l;
    for it in 0..=cfg.max_iterations {
        let u: Vec<f64> = state.u.iter().zip(&du).map(|(a, b)| a + b).collect();
        let lambda = state.lambda + dlambda;
        if residual_ok(ops, &u, lambda, cfg, pnorm)? {
            return Ok(finish(state, du, dlambda, it));
        }
        if it == cfg.max_iterations {
            break;
        }
        let lin = linearize(ops, &u, lambda, &p)?;
        let denom = dot(&t_u, &lin.du_t) + psi2pp * t_l;
        if denom == 0.0 || !denom.is_finite() {
            return Err(ContinuationError::NotConverged { iterations: it });
        }
        let dl = -dot(&t_u, &lin.du_r) / denom;
        for i in 0..du.len() {
            du[i] += lin.du_r[i] + dl * lin.du_t[i];
        }
        dlambda += dl;
    }
    Err(ContinuationError::NotConverged {
        iterations: cfg.max_iterations,
    })
}

/// Crisfield: the spherical constraint `‖Δu‖² + ψ²Δλ²PᵀP = Δℓ²` is enforced
/// exactly at every iteration by solving its quadratic in `δλ`.
pub fn step_crisfield<O: Operators + ?Sized>(
    state: &ContinuationState,
    ops: &O,
    cfg: &ContinuationConfig,
) -> Result<StepResult, ContinuationError> {
    let p = ops.force()?;
    let pp = dot(&p, &p);
    let pnorm = pp.sqrt();
    let psi2pp = state.psi * state.psi * pp;
    let (mut du, mut dlambda) = predictor(state, cfg, pp);
    // Root choice follows the previous step's increment (or the predictor).
    let (ref_u, ref_l) = match &state.prev {
        Some((u, l)) => (u.clone(), *l),
        None => (du.clone(), dlambda),
    };
    let dl2 = state.dl * state.dl;
    for it in 0..=cfg.max_iterations {
        let u: Vec<f64> = state.u.iter().zip(&du).map(|(a, b)| a + b).collect();
        let lambda = state.lambda + dlambda;
        if residual_ok(ops, &u, lambda, cfg, pnorm)? {
            return Ok(finish(state, du, dlambda, it));
        }
        if it == cfg.max_iterations {
            break;
        }
        let lin = linearize(ops, &u, lambda, &p)?;
        let base: Vec<f64> = du.iter().zip(&lin.du_r).map(|(a, b)| a + b).collect();
        let a1 = dot(&lin.du_t, &lin.du_t) + psi2pp;
        let a2 = 2.0 * dot(&lin.du_t, &base) + 2.0 * psi2pp * dlambda;
        let a3 = dot(&base, &base) + psi2pp * dlambda * dlambda - dl2;
        let disc = a2 * a2 - 4.0 * a1 * a3;
        if disc < 0.0 || !disc.is_finite() {
            return Err(ContinuationError::ComplexRoots);
        }
        // Cancellation-free roots of a1 x² + a2 x + a3 = 0.
        let q = -0.5 * (a2 + a2.signum() * disc.sqrt());
        let roots = if q == 0.0 { [0.0, 0.0] } else { [q / a1, a3 / q] };
        let score = |x: f64| {
            let cand_l = dlambda + x;
            let mut s = psi2pp * ref_l * cand_l;
            for i in 0..base.len() {
                s += ref_u[i] * (base[i] + x * lin.du_t[i]);
            }
            s
        };
        let x = if score(roots[0]) >= score(roots[1]) { roots[0] } else { roots[1] };
        for i in 0..du.len() {
            du[i] = base[i] + x * lin.du_t[i];
        }
        dlambda += x;
    }
    Err(ContinuationError::NotConverged {
        iterations: cfg.max_iterations,
    })
}
