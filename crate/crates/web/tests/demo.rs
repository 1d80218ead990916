use pathfinder_web::{basis_samples, truss_path, uniaxial_curve, MAX_POINTS};

#[test]
fn truss_path_passes_both_limits() {
    let p = truss_path("crisfield", 0.05, 200, 30.0, 0.5).unwrap();
    assert!(p.abort.is_none());
    assert_eq!(p.v.len(), 201);
    assert_eq!(p.limits.len(), 2);
    assert!((p.limits[0].1 + p.limits[1].1).abs() < 1e-9);
    let json = serde_json::to_string(&p).unwrap();
    assert!(json.contains("\"lambda\""));
}

#[test]
fn truss_path_rejects_bad_input() {
    assert!(truss_path("newton", 0.05, 10, 30.0, 0.5).is_err());
    assert!(truss_path("riks", -0.05, 10, 30.0, 0.5).is_err());
    assert!(truss_path("riks", 0.05, MAX_POINTS + 1, 30.0, 0.5).is_err());
    assert!(truss_path("riks", 0.05, 10, -1.0, 0.5).is_err());
}

#[test]
fn neo_hookean_curve() {
    let c = uniaxial_curve("NH", 3.0, 0.5, 4.0, 31).unwrap();
    assert_eq!(c.lambda.len(), 31);
    for (l, s) in c.lambda.iter().zip(&c.sigma) {
        assert!((s - (l * l - 1.0 / l)).abs() <= 1e-9 * s.abs().max(1.0));
    }
    assert!(uniaxial_curve("XX", 3.0, 0.5, 4.0, 31).is_err());
    assert!(uniaxial_curve("NH", 3.0, 0.5, 0.5, 31).is_err());
}

#[test]
fn basis_is_a_partition_of_unity() {
    let b = basis_samples(2, 8, 101, 0).unwrap();
    assert_eq!((b.phi.len(), b.n_local), (18, 20));
    for k in 0..b.xi.len() {
        let s: f64 = b.phi.iter().map(|row| row[k]).sum();
        assert!((s - 1.0).abs() <= 1e-12);
    }
    let d = basis_samples(3, 4, 11, 1).unwrap();
    for k in 0..d.xi.len() {
        let s: f64 = d.phi.iter().map(|row| row[k]).sum();
        assert!(s.abs() <= 1e-9);
    }
    assert!(basis_samples(2, 8, 1, 0).is_err());
    assert!(basis_samples(2, 8, 11, 3).is_err());
}
