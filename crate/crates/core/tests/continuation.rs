use pathfinder_core::continuation::{
    compute_singular_point, constraint_violation, read_path_csv, relative_residual, run, run_from, step_crisfield,
    step_load_control, switch_branch, ContinuationConfig, ContinuationError, ContinuationState, PathPoint,
    SingularKind, Stepper,
};
use pathfinder_core::eigen::buckling;
use pathfinder_core::models::{LinearSpring, TrussLattice};
use pathfinder_core::numerics::{dot, norm};
use pathfinder_core::operators::{FnOperators, Operators, Poisoned};
use pathfinder_core::Matrix;

mod common;
use common::{curve_gap, oracle_limits, oracle_load, vm_truss, H};

fn trace(stepper: Stepper) {
    let ops = vm_truss();
    let cfg = ContinuationConfig::new(stepper, 0.05, 200).with_singular_detection(true);
    let path = run(&ops, &cfg);
    assert!(path.abort.is_none(), "{:?}", path.abort);
    let last = path.points.last().unwrap();
    assert!(last.u[1] > 2.5 * H, "did not pass the snap: v = {}", last.u[1]);
    for p in &path.points {
        assert!(curve_gap(p) <= 1e-6, "{p:?} gap {}", curve_gap(p));
        assert!(relative_residual(&ops, p).unwrap() <= 1e-8);
    }
    let limits = oracle_limits();
    let found: Vec<_> = path.singular_points.iter().filter(|s| s.kind == SingularKind::Limit).collect();
    assert_eq!(found.len(), 2, "{:?}", path.singular_points);
    for (sp, lam) in found.iter().zip(limits) {
        assert!((sp.lambda - lam).abs() <= 1e-6, "{} vs {lam}", sp.lambda);
    }
}

#[test]
fn crisfield_traces_snap_through() {
    trace(Stepper::Crisfield);
}

#[test]
fn riks_traces_snap_through() {
    trace(Stepper::Riks);
}

#[test]
fn crisfield_constraint_holds_at_every_point() {
    let ops = vm_truss();
    let cfg = ContinuationConfig::new(Stepper::Crisfield, 0.05, 40);
    let mut state = ContinuationState::new(vec![0.0; 2], 0.0, 0.05, 1.0);
    let pp = dot(&ops.force().unwrap(), &ops.force().unwrap());
    // Near the limit point a fixed Δℓ can cycle; halve as the driver does.
    let mut accepted = 0;
    while accepted < 40 {
        let r = match step_crisfield(&state, &ops, &cfg) {
            Ok(r) => r,
            Err(_) => {
                state.reduce_length(0.5);
                assert!(state.dl > 1e-6);
                continue;
            }
        };
        let viol = constraint_violation(&r.du, r.dlambda, 1.0, pp, state.dl);
        assert!(viol <= 1e-10 * state.dl * state.dl, "{viol}");
        state.accept(&r);
        state.reset_length();
        accepted += 1;
    }
}

#[test]
fn load_control_below_limit_and_at_limit() {
    let ops = vm_truss();
    let [lam1, _] = oracle_limits();
    let cfg = ContinuationConfig::new(Stepper::LoadControl, lam1 / 10.0, 9).with_tol_f(1e-12);
    let path = run(&ops, &cfg);
    assert!(path.abort.is_none());
    for p in &path.points {
        assert!(curve_gap(p) <= 1e-8);
    }
    // A step onto a load just beyond the limit has no nearby solution.
    let last = path.points.last().unwrap();
    let mut state = ContinuationState::new(last.u.clone(), last.lambda, lam1 - last.lambda + 1e-3, 1.0);
    state.dl = lam1 - last.lambda + 1e-3;
    let r = step_load_control(&state, &ops, &cfg);
    match r {
        Err(ContinuationError::NotConverged { .. }) => {}
        Ok(s) => assert!(s.u[1] > H, "Newton should not settle near the limit: {s:?}"),
        Err(e) => panic!("unexpected {e}"),
    }
}

#[test]
fn riks_matches_load_control_on_spring() {
    let s = LinearSpring::new(2.0, 1.0).unwrap();
    // The first Riks step is a pure load step of Δℓ; later secant steps of
    // length Δℓ along u = λ/2 advance λ by Δℓ/√(1 + 1/4).
    let dl = 0.3;
    let riks = run(&s, &ContinuationConfig::new(Stepper::Riks, dl, 5));
    let dlam = dl / 1.25f64.sqrt();
    let mut lc = run(&s, &ContinuationConfig::new(Stepper::LoadControl, dl, 1)).points;
    let rest = run_from(
        &s,
        &ContinuationConfig::new(Stepper::LoadControl, dlam, 4),
        ContinuationState::new(lc[0].u.clone(), lc[0].lambda, dlam, 1.0),
    );
    lc.extend(rest.points);
    assert_eq!(riks.points.len(), lc.len());
    for (a, b) in riks.points.iter().zip(&lc) {
        assert!((a.lambda - b.lambda).abs() <= 1e-12, "{} {}", a.lambda, b.lambda);
        assert!((a.u[0] - b.u[0]).abs() <= 1e-12);
    }
}

#[test]
fn complex_roots_recover_by_halving() {
    // Saturating spring f(u) = 3 tanh(10u): its curvature radius near the knee
    // is far below Δℓ. Linearized at a predictor u_p = Δℓ on the plateau the
    // corrector line sits near λ = 3, outside the sphere of radius Δℓ = 2.
    let ops = FnOperators::new(
        vec![1.0],
        |u| Ok(vec![3.0 * (10.0 * u[0]).tanh()]),
        |u| Ok(Matrix::from_diag(&[30.0 / (10.0 * u[0]).cosh().powi(2)])),
    );
    let cfg = ContinuationConfig::new(Stepper::Crisfield, 2.0, 1);
    let state = ContinuationState::new(vec![0.0], 0.0, 2.0, 1.0).with_direction(vec![1.0], 0.0);
    let first = step_crisfield(&state, &ops, &cfg);
    assert!(matches!(first, Err(ContinuationError::ComplexRoots)), "{first:?}");
    let path = run_from(&ops, &ContinuationConfig::new(Stepper::Crisfield, 2.0, 3), state);
    assert!(path.abort.is_none(), "{:?}", path.abort);
    assert_eq!(path.points.len(), 3);
}

#[test]
fn bad_bracket_rejected() {
    let ops = vm_truss();
    let a = PathPoint::new(vec![0.0, 0.0], 0.0);
    let b = PathPoint::new(vec![0.0, 0.01], oracle_load(0.01));
    assert_eq!(compute_singular_point(&ops, (&a, &b)), Err(ContinuationError::BadBracket));
}

fn column() -> TrussLattice {
    TrussLattice::column(1e7, 1.0, 1.0, 1.0).unwrap()
}

#[test]
fn column_bifurcation_and_branch_switch() {
    let ops = column();
    let b = buckling(&ops, 1).unwrap();
    let lam_cr = b[0].value.abs();
    let dl = 0.005;
    let cfg = ContinuationConfig::new(Stepper::Crisfield, dl, 160).with_branch_switch(0.01);
    let path = run(&ops, &cfg);
    assert!(path.abort.is_none(), "{:?}", path.abort);
    let sp = path
        .singular_points
        .iter()
        .find(|s| s.kind == SingularKind::Bifurcation)
        .expect("bifurcation");
    assert!((sp.lambda - lam_cr).abs() <= 1e-6, "{} vs {lam_cr}", sp.lambda);
    let cosine = dot(&sp.phi, &b[0].vector).abs() / (norm(&sp.phi) * norm(&b[0].vector));
    assert!(cosine >= 1.0 - 1e-6, "{cosine}");
    assert_eq!(path.switched.len(), 1, "{:?}", path.warnings);
    let sw = &path.points[path.switched[0]];
    assert!(sw.u[0].abs() > 10.0 * 0.01 * dl);

    // λ(x) ≈ λ*(1 − x²/(2L²)) on the buckled branch at small amplitude.
    let mut checked = 0;
    for p in &path.points[path.switched[0]..] {
        let x = p.u[0].abs();
        if x < 0.05 {
            let drop_model = sp.lambda - p.lambda;
            let drop_oracle = sp.lambda * x * x / 2.0;
            if drop_oracle > 1e-9 {
                assert!((drop_model - drop_oracle).abs() <= 0.05 * drop_oracle, "x={x} {drop_model} {drop_oracle}");
                checked += 1;
            }
        }
    }
    assert!(checked >= 2, "too few small-amplitude points: {checked}");
}

#[test]
fn column_inertia_flip_brackets_buckling_load() {
    let ops = column();
    let lam_cr = buckling(&ops, 1).unwrap()[0].value.abs();
    let dl = 0.01 * lam_cr;
    let path = run(&ops, &ContinuationConfig::new(Stepper::Crisfield, dl, 150));
    let pts: Vec<&PathPoint> = path.all_points().collect();
    let flip = pts.windows(2).find(|w| w[0].stability != w[1].stability).expect("flip");
    assert!(flip[0].lambda <= lam_cr && lam_cr <= flip[1].lambda + 1e-12);
    assert!(flip[1].lambda - flip[0].lambda <= dl * 1.0001);
}

#[test]
fn switch_guards() {
    let ops = column();
    let path = run(
        &ops,
        &ContinuationConfig::new(Stepper::Crisfield, 0.005, 120).with_singular_detection(true),
    );
    let sp = path.singular_points[0].clone();
    assert_eq!(sp.kind, SingularKind::Bifurcation);
    assert!(matches!(
        switch_branch(&sp, &ops, 0.0, 0.005, 1e-9, 25),
        Err(ContinuationError::BranchSwitchFailed(_))
    ));
    let mut limit = sp.clone();
    limit.kind = SingularKind::Limit;
    assert!(matches!(
        switch_branch(&limit, &ops, 0.01, 0.005, 1e-9, 25),
        Err(ContinuationError::BranchSwitchFailed(_))
    ));
}

#[test]
fn poisoned_model_aborts_with_assembly_error() {
    let ops = Poisoned::new(vm_truss(), 0.3);
    let path = run(&ops, &ContinuationConfig::new(Stepper::Crisfield, 0.05, 50));
    let msg = path.abort.clone().expect("abort");
    assert!(msg.starts_with("AssemblyError"), "{msg}");
    assert!(!path.points.is_empty());
    for p in &path.points {
        assert!(p.u.iter().all(|v| v.abs() <= 0.3));
    }
    let text = path.to_csv().unwrap();
    assert_eq!(read_path_csv(&text).unwrap().len(), path.points.len() + 1);
}

#[test]
fn root_selection_scale_invariance() {
    let base = vm_truss();
    let c = 7.0;
    let scaled = FnOperators::new(
        base.force().unwrap().iter().map(|v| c * v).collect(),
        {
            let b = base.clone();
            move |u| b.internal_force(u)
        },
        {
            let b = base.clone();
            move |u| b.jacobian(u)
        },
    );
    let cfg = ContinuationConfig::new(Stepper::Crisfield, 0.05, 1);
    let mut s1 = ContinuationState::new(vec![0.0; 2], 0.0, 0.05, 1.0);
    // ψ²Δλ²PᵀP is already invariant under P → cP, λ → λ/c, so ψ stays put.
    let mut s2 = ContinuationState::new(vec![0.0; 2], 0.0, 0.05, 1.0);
    for _ in 0..15 {
        let r1 = step_crisfield(&s1, &base, &cfg).unwrap();
        let r2 = step_crisfield(&s2, &scaled, &cfg).unwrap();
        for (a, b) in r1.du.iter().zip(&r2.du) {
            assert!((a - b).abs() <= 1e-10, "{a} {b}");
        }
        assert!((r1.lambda - c * r2.lambda).abs() <= 1e-10);
        s1.accept(&r1);
        s2.accept(&r2);
    }
}
