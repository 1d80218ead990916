//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use pathfinder_core::continuation::PathPoint;
use pathfinder_core::materials::MaterialParams;
use pathfinder_core::models::VonMisesTruss;

pub const A: f64 = 1.0;
pub const H: f64 = 0.5;
pub const EA: f64 = 30.0;

pub fn vm_truss() -> VonMisesTruss {
    VonMisesTruss::new(A, H, EA, 1.0, false).unwrap()
}

/// Apex load of the symmetric truss from bar statics: Green strain, axial
/// force `N = EA·E`, vertical projection `(h − v)/L₀` per bar.
pub fn oracle_load(v: f64) -> f64 {
    let l0 = (A * A + H * H).sqrt();
    let strain = ((H - v).powi(2) - H * H) / (2.0 * l0 * l0);
    let n = EA * strain;
    -2.0 * n * (H - v) / l0
}

/// Limit loads by dense sampling of the curve followed by bisection on the
/// sampled slope sign.
pub fn oracle_limits() -> [f64; 2] {
    let m = 1_000_000;
    let vmax = 2.0 * H;
    let dv = vmax / m as f64;
    let slope = |v: f64| (oracle_load(v + 1e-7) - oracle_load(v - 1e-7)) / 2e-7;
    let mut out = Vec::new();
    let mut prev = oracle_load(0.0);
    let mut rising = true;
    for i in 1..=m {
        let v = i as f64 * dv;
        let cur = oracle_load(v);
        if (cur > prev) != rising {
            let (mut lo, mut hi) = (v - 2.0 * dv, v);
            let s_lo = slope(lo).signum();
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if slope(mid).signum() == s_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(oracle_load(0.5 * (lo + hi)));
            rising = !rising;
        }
        prev = cur;
    }
    [out[0], out[1]]
}

/// Upper bound on the distance from `(u_x, v, λ)` to the curve `u_x = 0, λ = λ(v)`.
pub fn curve_gap(p: &PathPoint) -> f64 {
    (p.u[0].powi(2) + (p.lambda - oracle_load(p.u[1])).powi(2)).sqrt()
}

/// Arc length of the analytic curve from v = 0 to v = 2h, by the trapezoid rule.
pub fn path_scale() -> f64 {
    let m = 20_000;
    let dv = 2.0 * H / m as f64;
    (0..m)
        .map(|i| {
            let (v0, v1) = (i as f64 * dv, (i + 1) as f64 * dv);
            (dv * dv + (oracle_load(v1) - oracle_load(v0)).powi(2)).sqrt()
        })
        .sum()
}

/// Fixed–fixed chain of `n` masses: `ω_k = 2√(k/m) sin(kπ / (2(n+1)))`.
pub fn chain_frequency(n: usize, k: f64, m: f64, mode: usize) -> f64 {
    2.0 * (k / m).sqrt() * (mode as f64 * std::f64::consts::PI / (2.0 * (n + 1) as f64)).sin()
}

/// Strain energy written directly from the model definitions, sharing no
/// code with the library.
pub fn energy(p: &MaterialParams, l: [f64; 3]) -> f64 {
    use pathfinder_core::materials::MaterialModel::*;
    let mu = p.e / (2.0 * (1.0 + p.nu));
    let terms: Vec<(f64, f64)> = match &p.model {
        NeoHookean => vec![(mu / 2.0, 2.0)],
        MooneyRivlin { ratio } => vec![
            (mu * ratio / (1.0 + ratio) / 2.0, 2.0),
            (mu / (1.0 + ratio) / 2.0, -2.0),
        ],
        Ogden { terms } => terms.iter().map(|&(m, a)| (m / a, a)).collect(),
    };
    let j = l[0] * l[1] * l[2];
    let compressible = p.nu < 0.5;
    let mut w = 0.0;
    for (c, b) in terms {
        let s: f64 = l.iter().map(|x| x.powf(b)).sum();
        let f = if compressible { j.powf(-b / 3.0) } else { 1.0 };
        w += c * (f * s - 3.0);
    }
    if compressible {
        let k = p.e / (3.0 * (1.0 - 2.0 * p.nu));
        w += 0.5 * k * (j - 1.0).powi(2);
    }
    w
}

/// Fourth-order central difference of `f` at `x`.
pub fn derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
}

/// Bisection for the sign change of `g` on `[a, b]`.
pub fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ga = g(a).signum();
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(m).signum() == ga {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Uniaxial plane stress by energy minimization. The lateral stretch `s`
/// minimizes `Ψ(λ, s, s)` (bisection on the finite-difference slope). By the
/// envelope theorem the nominal stress is `∂Ψ/∂λ₁` at that minimizer. Returns
/// `(s, J, σ)` with Cauchy `σ = λ ∂Ψ/∂λ₁ / J`. Incompressible laws take
/// `s = λ^(-1/2)` and differentiate the reduced energy instead.
pub fn uniaxial_oracle(p: &MaterialParams, lambda: f64) -> (f64, f64, f64) {
    if p.nu >= 0.5 {
        let w = |l: f64| energy(p, [l, l.powf(-0.5), l.powf(-0.5)]);
        let s = lambda.powf(-0.5);
        return (s, 1.0, lambda * derivative(w, lambda, 1e-3 * lambda));
    }
    let slope = |s: f64| derivative(|t| energy(p, [lambda, t, t]), s, 1e-4 * s);
    let s = bisect(slope, 1e-3, 3.0);
    let j = lambda * s * s;
    let dpsi = derivative(|l| energy(p, [l, s, s]), lambda, 1e-3 * lambda);
    (s, j, lambda * dpsi / j)
}

/// Every numeric token parses to a finite value and no `nan`/`inf`
/// spelling appears as a token. JSON `null` (a missing value) is allowed.
pub fn scan_finite(text: &str) -> Result<usize, String> {
    let mut numbers = 0;
    let seps = |c: char| c == ',' || c.is_whitespace() || matches!(c, ':' | '[' | ']' | '{' | '}');
    for tok in text.split(seps).map(|t| t.trim_matches('"')).filter(|t| !t.is_empty()) {
        let bare = tok.trim_start_matches(['+', '-']).to_ascii_lowercase();
        if matches!(bare.as_str(), "nan" | "inf" | "infinity") {
            return Err(format!("non-finite token {tok}"));
        }
        if let Ok(v) = tok.parse::<f64>() {
            if !v.is_finite() {
                return Err(format!("non-finite token {tok}"));
            }
            numbers += 1;
        }
    }
    Ok(numbers)
}
