use pathfinder_core::apalm::{serial_init, solve, ApalmConfig, IntervalStatus};
use pathfinder_core::continuation::{run, ContinuationConfig, Stepper};
use pathfinder_core::eigen::modal;
use pathfinder_core::materials::{uniaxial_solve, MaterialParams};
use pathfinder_core::models::{make_operator_set, LinearSpring, Model, ModelConfig};
use pathfinder_core::numerics::{ldlt_inertia, lu_solve, norm, sub};
use pathfinder_core::operators::{check_consistency, Operators, Poisoned};
use pathfinder_core::statics::{composite_solve, dr_solve, newton_solve, Stage, StaticConfig, StaticStatus};
use pathfinder_core::Matrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{chain_frequency, uniaxial_oracle, vm_truss};

/// Every shipped model, free and displacement-driven, with a state scale
/// that keeps random samples inside the admissible region.
fn shipped_models() -> Vec<(String, Model, f64)> {
    let mut out = Vec::new();
    for (name, scale) in [
        ("spring", 1.0),
        ("chain", 1.0),
        ("vmtruss", 0.5),
        ("vmtruss1", 0.5),
        ("column", 0.05),
        ("membrane", 0.3),
    ] {
        let m = make_operator_set(&ModelConfig::named(name).unwrap()).unwrap();
        if let Ok(mut d) = m.clone().driven() {
            d.set_control(0.1 * scale).unwrap();
            out.push((format!("{name} (driven)"), d, scale));
        }
        out.push((name.to_string(), m, scale));
    }
    out
}

#[test]
fn jacobians_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (name, model, scale) in shipped_models() {
        let samples: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..model.n_dof()).map(|_| rng.gen_range(-scale..scale)).collect())
            .collect();
        let report = check_consistency(&model, &samples, 1e-6).unwrap();
        assert!(report.max_error() <= 1e-5, "{name}: {:?}", report.errors);
    }
}

fn materials(nu: f64) -> Vec<(&'static str, MaterialParams)> {
    let e = 3.0;
    vec![
        ("NH", MaterialParams::neo_hookean(e, nu)),
        ("MR", MaterialParams::mooney_rivlin(e, nu, 7.0)),
        ("OG", MaterialParams::ogden_default(e, nu)),
    ]
}

fn stretch_samples() -> impl Iterator<Item = f64> {
    (0..100).map(|i| 1.0 + 11.5 * i as f64 / 99.0)
}

#[test]
fn incompressible_uniaxial_lateral_stretch() {
    for (name, p) in materials(0.5) {
        for lam in stretch_samples() {
            let s = uniaxial_solve(&p, lam).unwrap();
            assert!((s.lambda3() - lam.powf(-0.5)).abs() <= 1e-10, "{name} at {lam}");
            let (_, _, sigma) = uniaxial_oracle(&p, lam);
            assert!((s.axial_stress() - sigma).abs() <= 1e-8 * sigma.abs().max(p.mu()), "{name} at {lam}");
        }
        let s = uniaxial_solve(&p, 1.0).unwrap();
        assert!(s.axial_stress().abs() <= 1e-10);
    }
}

#[test]
fn compressible_uniaxial_matches_energy_minimization() {
    for (name, p) in materials(0.3) {
        let s1 = uniaxial_solve(&p, 1.0).unwrap();
        assert!(s1.axial_stress().abs() <= 1e-10, "{name}");
        assert!((s1.j - 1.0).abs() <= 1e-10, "{name}");
        for lam in stretch_samples() {
            let s = uniaxial_solve(&p, lam).unwrap();
            let (lat, j, sigma) = uniaxial_oracle(&p, lam);
            assert!((s.lambda3() - lat).abs() <= 1e-6 * lat, "{name} at {lam}: {} vs {lat}", s.lambda3());
            assert!((s.j - j).abs() <= 1e-6 * j, "{name} at {lam}");
            let tol = 1e-8 * sigma.abs().max(p.mu());
            assert!((s.axial_stress() - sigma).abs() <= tol, "{name} at {lam}: {} vs {sigma}", s.axial_stress());
        }
    }
}

fn membrane() -> Model {
    make_operator_set(&ModelConfig::named("membrane").unwrap()).unwrap()
}

#[test]
fn dynamic_relaxation_agrees_with_newton_on_membrane() {
    let ops = membrane();
    let nr = newton_solve(&ops, &StaticConfig::newton().with_tol_f(1e-6), None);
    assert!(nr.is_converged(), "{nr:?}");
    let dr = dr_solve(&ops, &StaticConfig::dynamic_relaxation().with_tol_f(1e-4), None);
    assert!(dr.is_converged(), "{:?}", dr.message);
    let gap = norm(&sub(&dr.u, &nr.u));
    assert!(gap <= 1e-3 * norm(&nr.u), "{gap} vs {}", norm(&nr.u));

    let stages = [
        Stage::DynamicRelaxation(StaticConfig::dynamic_relaxation().with_tol_f(1e-4)),
        Stage::Newton(StaticConfig::newton().with_tol_f(1e-6)),
    ];
    let both = composite_solve(&stages, &ops, None).unwrap();
    assert!(both.is_converged());
    let r = ops.residual(&both.u).unwrap();
    assert!(norm(&r) <= 1e-6 * norm(&ops.force().unwrap()));
}

#[test]
fn chain_modes_match_closed_form() {
    let ops = make_operator_set(&ModelConfig::named("chain").unwrap()).unwrap();
    let m = ops.mass().unwrap();
    let pairs = modal(&ops, 5).unwrap();
    for (i, p) in pairs.iter().enumerate() {
        let exact = chain_frequency(5, 1.0, 1.0, i + 1);
        assert!((p.frequency() - exact).abs() <= 1e-8, "mode {}: {} vs {exact}", i + 1, p.frequency());
    }
    for (i, a) in pairs.iter().enumerate() {
        for (j, b) in pairs.iter().enumerate() {
            let mb = m.mul_vec(&b.vector);
            let g: f64 = a.vector.iter().zip(&mb).map(|(x, y)| x * y).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((g - target).abs() <= 1e-9, "({i}, {j}): {g}");
        }
    }
}

#[test]
fn poisoned_model_fails_every_static_solver_cleanly() {
    let ops = Poisoned::new(LinearSpring::new(1.0, 10.0).unwrap(), 2.0);
    let newton = newton_solve(&ops, &StaticConfig::newton(), Some(&[0.0]));
    let dr = dr_solve(&ops, &StaticConfig::dynamic_relaxation(), None);
    let both = composite_solve(
        &[
            Stage::DynamicRelaxation(StaticConfig::dynamic_relaxation()),
            Stage::Newton(StaticConfig::newton()),
        ],
        &ops,
        None,
    )
    .unwrap();
    for r in [newton, dr, both] {
        assert_eq!(r.status, StaticStatus::AssemblyError, "{r:?}");
        assert!(r.message.is_some());
        assert!(r.u.iter().all(|v| v.is_finite() && v.abs() <= 2.0), "{:?}", r.u);
    }
}

#[test]
fn poisoned_model_fails_every_path_solver_cleanly() {
    let ops = Poisoned::new(vm_truss(), 0.3);
    for stepper in [Stepper::LoadControl, Stepper::Riks, Stepper::Crisfield] {
        let path = run(&ops, &ContinuationConfig::new(stepper, 0.05, 100).with_singular_detection(true));
        assert!(path.abort.is_some(), "{stepper:?}");
        assert!(!path.points.is_empty());
        assert!(path.to_csv().is_ok(), "{stepper:?}");
    }
    let cfg = ApalmConfig {
        dl: 0.05,
        max_level: 2,
        ..ApalmConfig::default()
    };
    let (p0, ivs) = serial_init(&ops, &cfg, 100).unwrap();
    assert!(p0.abort.is_some());
    let out = solve(&p0, ivs, &cfg, || Ok::<_, String>(Poisoned::new(vm_truss(), 0.3))).unwrap();
    assert!(out.report.intervals.iter().all(|iv| iv.status != IntervalStatus::Pending));
    assert!(out.to_csv().is_ok());
}

/// `Q D Qᵀ` with a random orthogonal `Q` from Gram–Schmidt.
fn with_spectrum(d: &[f64], seed: u64) -> Matrix {
    let n = d.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for w in &q {
            let c: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
            for (vi, wi) in v.iter_mut().zip(w) {
                *vi -= c * wi;
            }
        }
        let nv = norm(&v);
        if nv > 1e-3 {
            q.push(v.iter().map(|x| x / nv).collect());
        }
    }
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = (0..n).map(|k| q[k][i] * d[k] * q[k][j]).sum();
        }
    }
    a.symmetrize();
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inertia_counts_signs_of_spectrum(
        d in proptest::collection::vec(prop_oneof![-10.0..-0.1f64, 0.1..10.0f64], 1..9),
        seed in any::<u64>(),
    ) {
        let a = with_spectrum(&d, seed);
        let inertia = ldlt_inertia(&a).unwrap();
        prop_assert_eq!(inertia.negative, d.iter().filter(|v| **v < 0.0).count());
        prop_assert_eq!(inertia.positive, d.iter().filter(|v| **v > 0.0).count());
        prop_assert_eq!(inertia.zero, 0);
    }

    #[test]
    fn lu_residual_is_small(
        n in 1usize..10,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = rng.gen_range(-1.0..1.0);
            }
            a[(i, i)] += n as f64;
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = lu_solve(&a, &b).unwrap();
        let r = norm(&sub(&a.mul_vec(&x), &b));
        prop_assert!(r <= 1e-12 * a.frobenius_norm() * norm(&x).max(1.0));
    }
}
