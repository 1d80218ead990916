use pathfinder_core::mappedbasis::{smooth_1d_interface, BSplineBasis, MappedBasis};

/// Two quadratic patches on [0, 1] and [1, 2] with breakpoints every 1/8.
fn example() -> MappedBasis {
    let left: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
    let right: Vec<f64> = (8..=16).map(|i| i as f64 / 8.0).collect();
    let l = BSplineBasis::from_breakpoints(2, &left).unwrap();
    let r = BSplineBasis::from_breakpoints(2, &right).unwrap();
    smooth_1d_interface(&l, &r).unwrap()
}

/// `A` entry in the 1-based numbering used by the worked example.
fn a(mb: &MappedBasis, k: usize, l: usize) -> f64 {
    mb.coefficient(k - 1, l - 1)
}

#[test]
fn dimensions() {
    let mb = example();
    assert_eq!(mb.n_local(), 20);
    assert_eq!(mb.n_global(), 18);
    assert_eq!(mb.dense().rows(), 18);
    assert_eq!(mb.dense().cols(), 20);
}

#[test]
fn interface_coefficients() {
    let mb = example();
    assert_eq!(a(&mb, 9, 9), 1.0);
    assert_eq!(a(&mb, 9, 10), 0.5);
    assert_eq!(a(&mb, 9, 11), 0.5);
    assert_eq!(a(&mb, 10, 12), 1.0);
    assert_eq!(a(&mb, 10, 10), 0.5);
    assert_eq!(a(&mb, 10, 11), 0.5);
    let row9: Vec<_> = mb.triplets().iter().filter(|t| t.0 == 8).collect();
    let row10: Vec<_> = mb.triplets().iter().filter(|t| t.0 == 9).collect();
    assert_eq!((row9.len(), row10.len()), (3, 3));
    for k in (1..=8).chain(11..=18) {
        let row: Vec<_> = mb.triplets().iter().filter(|t| t.0 == k - 1).collect();
        assert_eq!(row.len(), 1);
        assert_eq!(row[0].2, 1.0);
    }
}

#[test]
fn partition_of_unity() {
    let mb = example();
    for s in 0..200 {
        let xi = 2.0 * s as f64 / 199.0;
        let sum: f64 = mb.eval(xi, 0).unwrap().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12, "ξ = {xi}: {sum}");
    }
    let at_joint = mb.eval(1.0, 0).unwrap();
    let nonzero: Vec<_> = at_joint.iter().enumerate().filter(|(_, v)| **v != 0.0).collect();
    assert_eq!(nonzero, vec![(8, &0.5), (9, &0.5)]);
}

#[test]
fn c1_across_joint() {
    // Second-order one-sided differences are exact on quadratic spans, so the
    // only error left is rounding.
    let mb = example();
    let h = 1e-6;
    let f = |x: f64| mb.eval(x, 0).unwrap();
    let (f0, fl1, fl2, fr1, fr2) = (f(1.0), f(1.0 - h), f(1.0 - 2.0 * h), f(1.0 + h), f(1.0 + 2.0 * h));
    for k in 0..mb.n_global() {
        let dl = (3.0 * f0[k] - 4.0 * fl1[k] + fl2[k]) / (2.0 * h);
        let dr = (-3.0 * f0[k] + 4.0 * fr1[k] - fr2[k]) / (2.0 * h);
        assert!((dl - dr).abs() <= 1e-8, "φ_{k}: {dl} vs {dr}");
    }
    // Without the fusion the local functions jump in slope by 16.
    let psi_l = mb.patches()[0].eval(1.0, 1).unwrap();
    assert!((psi_l[9] - 16.0).abs() < 1e-12);
}

#[test]
fn interior_functions_preserved() {
    let mb = example();
    for s in 0..50 {
        let xi = 0.99 * s as f64 / 49.0;
        let phi = mb.eval(xi, 0).unwrap();
        let psi = mb.patches()[0].eval(xi, 0).unwrap();
        for k in 0..8 {
            assert_eq!(phi[k].to_bits(), psi[k].to_bits());
        }
    }
}

#[test]
fn bernstein_patches() {
    let l = BSplineBasis::new(2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
    let r = BSplineBasis::new(2, vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]).unwrap();
    let mb = smooth_1d_interface(&l, &r).unwrap();
    assert_eq!(mb.n_global(), 4);
    let h = 1e-6;
    let f = |x: f64| mb.eval(x, 0).unwrap();
    for k in 0..4 {
        let dl = (3.0 * f(1.0)[k] - 4.0 * f(1.0 - h)[k] + f(1.0 - 2.0 * h)[k]) / (2.0 * h);
        let dr = (-3.0 * f(1.0)[k] + 4.0 * f(1.0 + h)[k] - f(1.0 + 2.0 * h)[k]) / (2.0 * h);
        assert!((dl - dr).abs() <= 1e-8);
    }
}

#[test]
fn exports() {
    let mb = example();
    let t = mb.triplets_csv().unwrap();
    assert_eq!(t.lines().count(), 1 + 16 + 6);
    let s = mb.sample_csv(11, 0).unwrap();
    assert_eq!(s.lines().count(), 12);
    assert!(s.starts_with("xi,phi_0,"));
}
