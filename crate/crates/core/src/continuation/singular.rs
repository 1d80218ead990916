use serde::{Deserialize, Serialize};

use crate::numerics::{dot, jacobi_eigen, norm, solve_rank_revealing, Matrix};
use crate::operators::Operators;

use super::{ContinuationError, PathPoint};

/// `|φᵀP| > LIMIT_THRESHOLD · ‖φ‖‖P‖` classifies a limit point.
pub const LIMIT_THRESHOLD: f64 = 0.1;
pub const SINGULAR_TOL: f64 = 1e-10;
pub const SINGULAR_ACCEPT_TOL: f64 = 1e-8;
pub const SINGULAR_MAX_ITERATIONS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingularKind {
    Limit,
    Bifurcation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub u: Vec<f64>,
    pub lambda: f64,
    /// Unit null vector of `K(u*)`.
    pub phi: Vec<f64>,
    pub kind: SingularKind,
    pub iterations: usize,
}

/// Blocks of the extended residual at one iterate.
struct Blocks {
    r: Vec<f64>,
    kphi: Vec<f64>,
    g: f64,
    k: Matrix,
    /// `(‖R‖/‖P‖, ‖Kφ‖/‖K‖, |‖φ‖ − 1|)`
    scales: [f64; 3],
}

fn block_norms<O: Operators + ?Sized>(
    ops: &O,
    u: &[f64],
    lambda: f64,
    phi: &[f64],
    pnorm: f64,
) -> Result<Blocks, ContinuationError> {
    let r = ops.al_residual(u, lambda)?;
    let k = ops.jacobian(u)?;
    let kphi = k.mul_vec(phi);
    let g = norm(phi) - 1.0;
    let scales = [
        norm(&r) / pnorm.max(f64::MIN_POSITIVE),
        norm(&kphi) / k.frobenius_norm().max(f64::MIN_POSITIVE),
        g.abs(),
    ];
    Ok(Blocks { r, kphi, g, k, scales })
}

/// Solves the extended system `[R(u, λ); K(u)φ; ‖φ‖ − 1] = 0` by Newton's
/// method, starting at the midpoint of a bracket whose stability indices
/// differ. The derivative of `K(u)φ` with respect to `u` is formed column by
/// column with central differences.
///
/// The Jacobian of the extended system is itself singular at a symmetric
/// pitchfork, so each Newton step uses a rank-revealing solve.
pub fn compute_singular_point<O: Operators + ?Sized>(
    ops: &O,
    bracket: (&PathPoint, &PathPoint),
) -> Result<SingularPoint, ContinuationError> {
    let (a, b) = bracket;
    if a.stability == b.stability {
        return Err(ContinuationError::BadBracket);
    }
    let n = ops.n_dof();
    let p = ops.force()?;
    let pnorm = norm(&p);
    let mut u: Vec<f64> = a.u.iter().zip(&b.u).map(|(x, y)| 0.5 * (x + y)).collect();
    let mut lambda = 0.5 * (a.lambda + b.lambda);
    let k_mid = ops.jacobian(&u)?;
    let eig = jacobi_eigen(&k_mid)?;
    let imin = (0..n)
        .min_by(|&i, &j| eig.values[i].abs().total_cmp(&eig.values[j].abs()))
        .ok_or(ContinuationError::BadBracket)?;
    let mut phi = eig.vectors.column(imin);

    let m = 2 * n + 1;
    let mut last_scales = [f64::INFINITY; 3];
    for it in 0..=SINGULAR_MAX_ITERATIONS {
        let Blocks { r, kphi, g, k, scales } = block_norms(ops, &u, lambda, &phi, pnorm)?;
        last_scales = scales;
        if scales.iter().all(|&s| s <= SINGULAR_TOL) {
            return Ok(classify(u, lambda, phi, &p, it));
        }
        if it == SINGULAR_MAX_ITERATIONS {
            break;
        }
        // Jacobian blocks: [K, −P, 0; D_u(Kφ), 0, K; 0, 0, φᵀ/‖φ‖]
        let mut j = Matrix::zeros(m, m);
        for r_ in 0..n {
            for c in 0..n {
                j[(r_, c)] = k[(r_, c)];
                j[(n + r_, n + 1 + c)] = k[(r_, c)];
            }
            j[(r_, n)] = -p[r_];
        }
        let h = 1e-6 * (1.0 + norm(&u));
        let mut up = u.clone();
        let mut um = u.clone();
        for c in 0..n {
            up[c] = u[c] + h;
            um[c] = u[c] - h;
            let kp = ops.jacobian(&up)?.mul_vec(&phi);
            let km = ops.jacobian(&um)?.mul_vec(&phi);
            up[c] = u[c];
            um[c] = u[c];
            for r_ in 0..n {
                j[(n + r_, c)] = (kp[r_] - km[r_]) / (2.0 * h);
            }
        }
        let pn = norm(&phi);
        for c in 0..n {
            j[(2 * n, n + 1 + c)] = phi[c] / pn;
        }
        let mut rhs = Vec::with_capacity(m);
        rhs.extend(r.iter().map(|v| -v));
        rhs.extend(kphi.iter().map(|v| -v));
        rhs.push(-g);
        let (delta, _rank) = solve_rank_revealing(&j, &rhs, 1e-12)?;
        for i in 0..n {
            u[i] += delta[i];
            phi[i] += delta[n + 1 + i];
        }
        lambda += delta[n];
        if !lambda.is_finite() || u.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    if last_scales.iter().all(|&s| s <= SINGULAR_ACCEPT_TOL) {
        return Ok(classify(u, lambda, phi, &p, SINGULAR_MAX_ITERATIONS));
    }
    Err(ContinuationError::NotConverged {
        iterations: SINGULAR_MAX_ITERATIONS,
    })
}

fn classify(u: Vec<f64>, lambda: f64, phi: Vec<f64>, p: &[f64], iterations: usize) -> SingularPoint {
    let pn = norm(&phi);
    let phi: Vec<f64> = phi.iter().map(|v| v / pn).collect();
    let kind = if dot(&phi, p).abs() > LIMIT_THRESHOLD * norm(p) {
        SingularKind::Limit
    } else {
        SingularKind::Bifurcation
    };
    SingularPoint {
        u,
        lambda,
        phi,
        kind,
        iterations,
    }
}

/// Leaves a bifurcation point along its null vector.
///
/// Solves `R(u, λ) = 0` together with the amplitude condition
/// `φᵀ(u − u*) = Δℓ₀`, starting from the perturbed state `u* + τφ` with
/// `τ = τ_rel · Δℓ₀`. The result must carry a component along `φ` larger
/// than `10τ`, otherwise the switch is reported as failed.
pub fn switch_branch<O: Operators + ?Sized>(
    sp: &SingularPoint,
    ops: &O,
    tau_rel: f64,
    dl0: f64,
    tol_f: f64,
    max_iterations: usize,
) -> Result<PathPoint, ContinuationError> {
    if sp.kind == SingularKind::Limit {
        return Err(ContinuationError::BranchSwitchFailed("singular point is a limit point".into()));
    }
    let tau = tau_rel * dl0;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(ContinuationError::BranchSwitchFailed("zero perturbation stays on the trivial branch".into()));
    }
    let n = ops.n_dof();
    let p = ops.force()?;
    let pnorm = norm(&p);
    let mut u: Vec<f64> = sp.u.iter().zip(&sp.phi).map(|(a, b)| a + tau * b).collect();
    let mut lambda = sp.lambda;
    let amplitude = |u: &[f64]| sp.phi.iter().zip(u.iter().zip(&sp.u)).map(|(f, (a, b))| f * (a - b)).sum::<f64>();
    let mut converged = false;
    for _ in 0..=max_iterations {
        let r = ops.al_residual(&u, lambda)?;
        let c = amplitude(&u) - dl0;
        if norm(&r) <= tol_f * pnorm && c.abs() <= 1e-12 * dl0 {
            converged = true;
            break;
        }
        let k = ops.jacobian(&u)?;
        // Bordered system [K, −P; φᵀ, 0] [δu; δλ] = −[R; c]
        let mut j = Matrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for c_ in 0..n {
                j[(i, c_)] = k[(i, c_)];
            }
            j[(i, n)] = -p[i];
            j[(n, i)] = sp.phi[i];
        }
        let mut rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        rhs.push(-c);
        let d = crate::numerics::lu_solve(&j, &rhs)?;
        for i in 0..n {
            u[i] += d[i];
        }
        lambda += d[n];
    }
    if !converged {
        return Err(ContinuationError::NotConverged { iterations: max_iterations });
    }
    let amp = amplitude(&u);
    if amp.abs() <= 10.0 * tau {
        return Err(ContinuationError::BranchSwitchFailed(format!(
            "component along the mode {amp:.3e} does not exceed 10 tau = {:.3e}",
            10.0 * tau
        )));
    }
    Ok(PathPoint {
        step: 0,
        u,
        lambda,
        stability: 0,
        converged: true,
        dl: dl0,
    })
}
