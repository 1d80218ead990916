use crate::numerics::{lu_solve, norm};
use crate::operators::Operators;

use super::{op_status, IterationRecord, StaticConfig, StaticResult, StaticStatus, FORCE_FLOOR};

/// Newton–Raphson on `R(u) = 0`. Without `u0` the iteration starts from the
/// linear solution `K_L u = P`.
pub fn newton_solve<O: Operators + ?Sized>(ops: &O, cfg: &StaticConfig, u0: Option<&[f64]>) -> StaticResult {
    newton_solve_at(ops, 1.0, cfg, u0)
}

/// Newton–Raphson on `R(u, λ) = 0` at fixed load factor `λ`. The residual
/// tolerance is relative to `‖P‖` (not `‖λP‖`).
pub fn newton_solve_at<O: Operators + ?Sized>(
    ops: &O,
    lambda: f64,
    cfg: &StaticConfig,
    u0: Option<&[f64]>,
) -> StaticResult {
    let n = ops.n_dof();
    let p = match ops.force() {
        Ok(p) => p,
        Err(e) => return StaticResult::failed(vec![0.0; n], 0, op_status(&e), e),
    };
    let scale = norm(&p).max(FORCE_FLOOR / cfg.tol_f);
    let mut u = match u0 {
        Some(u0) => u0.to_vec(),
        None => {
            let kl = match ops.stiffness() {
                Ok(k) => k,
                Err(e) => return StaticResult::failed(vec![0.0; n], 0, op_status(&e), e),
            };
            let rhs: Vec<f64> = p.iter().map(|v| lambda * v).collect();
            match lu_solve(&kl, &rhs) {
                Ok(x) => x,
                Err(e) => return StaticResult::failed(vec![0.0; n], 0, StaticStatus::SingularMatrix, e),
            }
        }
    };
    let mut log = Vec::new();
    let mut iterations = 0;
    let mut last_du = 0.0;
    let mut u_good = u.clone();
    loop {
        let r = match ops.al_residual(&u, lambda) {
            Ok(r) => r,
            Err(e) => return StaticResult { log, ..StaticResult::failed(u_good, iterations, op_status(&e), e) },
        };
        u_good.clone_from(&u);
        let rn = norm(&r);
        log.push(IterationRecord {
            iteration: iterations,
            relative_residual: rn / scale,
            update_norm: last_du,
        });
        let done = |status, message: Option<String>, u: Vec<f64>, log| StaticResult {
            u,
            iterations,
            residual_norm: rn,
            status,
            message,
            log,
        };
        if !rn.is_finite() {
            return done(StaticStatus::Diverged, Some("non-finite residual".into()), u, log);
        }
        if rn <= cfg.tol_f * scale {
            return done(StaticStatus::Converged, None, u, log);
        }
        if iterations > 0 && last_du <= cfg.tol_u * (1.0 + norm(&u)) {
            return done(StaticStatus::Converged, Some("update below tolerance".into()), u, log);
        }
        if iterations >= cfg.max_iterations {
            let msg = format!("no convergence in {} iterations", cfg.max_iterations);
            return done(StaticStatus::NotConverged, Some(msg), u, log);
        }
        let k = match ops.jacobian(&u) {
            Ok(k) => k,
            Err(e) => return StaticResult { log, ..StaticResult::failed(u, iterations, op_status(&e), e) },
        };
        let minus_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let du = match lu_solve(&k, &minus_r) {
            Ok(du) => du,
            Err(e) => {
                return StaticResult {
                    residual_norm: rn,
                    log,
                    ..StaticResult::failed(u, iterations, StaticStatus::SingularMatrix, e)
                }
            }
        };
        for (ui, di) in u.iter_mut().zip(&du) {
            *ui += di;
        }
        last_du = norm(&du);
        iterations += 1;
    }
}
