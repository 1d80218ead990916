use serde::{Deserialize, Serialize};

use crate::numerics::{norm, Matrix};
use crate::operators::Operators;

use super::{op_status, IterationRecord, StaticConfig, StaticResult, StaticStatus, FORCE_FLOOR};

/// Target for `Δt · √(max K_L,ii / min M_ii)` when the mass scaling is automatic.
pub const DR_STABILITY_TARGET: f64 = 0.5;

/// Residual history and kinetic-energy peaks of a DR run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DrTrace {
    pub residuals: Vec<f64>,
    pub peaks: Vec<usize>,
    pub alpha: f64,
}

/// Mass scaling `α` with `Δt · √(max K_L,ii / (α · min M_ii)) = 0.5`.
pub fn auto_mass_scaling(kl: &Matrix, mass_diag: &[f64], dt: f64) -> f64 {
    let kmax = kl.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mmin = mass_diag.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let alpha = (dt / DR_STABILITY_TARGET).powi(2) * kmax / mmin;
    if alpha > 0.0 && alpha.is_finite() {
        alpha
    } else {
        1.0
    }
}

/// Row-sum lumped mass diagonal.
fn lumped_diag(m: &Matrix) -> Vec<f64> {
    (0..m.rows()).map(|i| m.row(i).iter().sum()).collect()
}

/// Dynamic relaxation. See [`dr_solve_traced`].
pub fn dr_solve<O: Operators + ?Sized>(ops: &O, cfg: &StaticConfig, u0: Option<&[f64]>) -> StaticResult {
    dr_solve_traced(ops, cfg, u0).0
}

/// Explicit central-difference march of `M ü + C u̇ + R(u) = 0` towards the
/// static equilibrium. With zero damping, kinetic damping is used: when the
/// kinetic energy drops, the state is rewound to the energy peak (assumed in
/// the middle of the last step), velocities are zeroed and the march
/// restarts with a half-step velocity.
pub fn dr_solve_traced<O: Operators + ?Sized>(
    ops: &O,
    cfg: &StaticConfig,
    u0: Option<&[f64]>,
) -> (StaticResult, DrTrace) {
    let n = ops.n_dof();
    let mut trace = DrTrace::default();
    let u_start = u0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let setup = (|| {
        let p = ops.force()?;
        let m = ops.mass()?;
        let kl = ops.stiffness()?;
        Ok::<_, crate::operators::OpError>((p, m, kl))
    })();
    let (p, m, kl) = match setup {
        Ok(v) => v,
        Err(e) => return (StaticResult::failed(u_start, 0, op_status(&e), e), trace),
    };
    let md = lumped_diag(&m);
    if md.iter().any(|&v| !(v > 0.0)) {
        let r = StaticResult::failed(u_start, 0, StaticStatus::AssemblyError, "lumped mass must be positive");
        return (r, trace);
    }
    let dt = cfg.dt;
    let alpha = cfg.alpha.unwrap_or_else(|| auto_mass_scaling(&kl, &md, dt));
    trace.alpha = alpha;
    let minv: Vec<f64> = md.iter().map(|v| 1.0 / (alpha * v)).collect();
    let ms: Vec<f64> = md.iter().map(|v| alpha * v).collect();
    let kinetic = |v: &[f64]| 0.5 * v.iter().zip(&ms).map(|(vi, mi)| mi * vi * vi).sum::<f64>();
    let scale = norm(&p).max(FORCE_FLOOR / cfg.tol_f);
    let bound = 1e12 * (1.0 + norm(&u_start));
    let c = cfg.damping;

    let mut u = u_start.clone();
    let mut v = vec![0.0; n];
    let mut ek_prev = 0.0;
    let mut log = Vec::new();
    let mut iterations = 0;
    let mut r = match ops.residual(&u) {
        Ok(r) => r,
        Err(e) => return (StaticResult::failed(u, 0, op_status(&e), e), trace),
    };
    loop {
        let rn = norm(&r);
        trace.residuals.push(rn);
        log.push(IterationRecord {
            iteration: iterations,
            relative_residual: rn / scale,
            update_norm: dt * norm(&v),
        });
        let it = iterations;
        let finish = move |status, message: Option<String>, u: Vec<f64>, log, trace| {
            (
                StaticResult {
                    u,
                    iterations: it,
                    residual_norm: rn,
                    status,
                    message,
                    log,
                },
                trace,
            )
        };
        if rn <= cfg.tol_f * scale {
            return finish(StaticStatus::Converged, None, u, log, trace);
        }
        if iterations >= cfg.max_iterations {
            let msg = format!("no convergence in {} steps", cfg.max_iterations);
            return finish(StaticStatus::NotConverged, Some(msg), u, log, trace);
        }
        // v₊ = [(1 − cΔt/2) v₋ − Δt M⁻¹ R] / (1 + cΔt/2)
        let v_new: Vec<f64> = (0..n)
            .map(|i| ((1.0 - 0.5 * c * dt) * v[i] - dt * minv[i] * r[i]) / (1.0 + 0.5 * c * dt))
            .collect();
        let ek = kinetic(&v_new);
        iterations += 1;
        let mut u_next: Vec<f64>;
        if c == 0.0 && ek < ek_prev {
            // Peak in the middle of the step:
            // u* = u_{t+Δt} − 3/2 Δt v₊ + Δt²/2 M⁻¹ (−R(u_t))
            u_next = (0..n)
                .map(|i| {
                    let u_end = u[i] + dt * v_new[i];
                    u_end - 1.5 * dt * v_new[i] - 0.5 * dt * dt * minv[i] * r[i]
                })
                .collect();
            trace.peaks.push(iterations);
            let r_peak = match ops.residual(&u_next) {
                Ok(r) => r,
                Err(e) => return finish(op_status(&e), Some(e.to_string()), u, log, trace),
            };
            // Restart from rest: v_{Δt/2} = Δt/2 M⁻¹ (−R(u*))
            v = (0..n).map(|i| -0.5 * dt * minv[i] * r_peak[i]).collect();
            for i in 0..n {
                u_next[i] += dt * v[i];
            }
            ek_prev = kinetic(&v);
        } else {
            u_next = (0..n).map(|i| u[i] + dt * v_new[i]).collect();
            v = v_new;
            ek_prev = ek;
        }
        let un = norm(&u_next);
        if !un.is_finite() || un > bound {
            return finish(StaticStatus::Diverged, Some("displacement blew up".into()), u, log, trace);
        }
        match ops.residual(&u_next) {
            Ok(rr) => r = rr,
            Err(e) => return finish(op_status(&e), Some(e.to_string()), u, log, trace),
        }
        u = u_next;
    }
}
