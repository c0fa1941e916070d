use std::f64::consts::{FRAC_PI_2, PI};

use lbt_core::profiles::*;
use proptest::prelude::*;

fn cf1_density(k: usize, x: f64) -> f64 {
    match k {
        1 => 0.5 / ((x - 1.0) * (2.0 - x)).sqrt(),
        2 => 0.5 / (x * (1.0 - x)).sqrt(),
        _ => 0.5 / (-x).sqrt(),
    }
}

fn q1_params() -> TableParams {
    TableParams { nu0: 2.5, nu1: 1.0, nu3: -0.8, omega1: 2.0 * PI, omega2: 2.0 * PI, n: 1.0 }
}

/// Closed-form inverse of `S(u) = sin²u (1+β sin²u)/(1+β)` on `[0, π/2]`.
fn quartic_inverse(y: f64, beta: f64) -> f64 {
    let s2 = (-1.0 + (1.0 + 4.0 * beta * (1.0 + beta) * y).sqrt()) / (2.0 * beta);
    s2.sqrt().asin()
}

#[test]
fn cf1_densities_match_closed_forms() {
    let t = cf1();
    for k in 1..=3 {
        let (lo, hi) = t.branch_range(k);
        for i in 1..200 {
            let x = lo + (hi - lo) * i as f64 / 200.0;
            let r = t.density(k, x).unwrap();
            let e = cf1_density(k, x);
            assert!((r / e - 1.0).abs() < 1e-12, "k={k} x={x} {r} {e}");
        }
    }
    for d in [1e-6, 1e-9, 1e-12] {
        let r = t.density(1, 1.0 + d).unwrap();
        assert!((r / cf1_density(1, 1.0 + d) - 1.0).abs() < 1e-9);
        let r = t.density(2, 1.0 - d).unwrap();
        assert!((r / cf1_density(2, 1.0 - d) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn cf1_inverse_branches() {
    let t = cf1();
    for i in 0..=50 {
        let s = i as f64 / 50.0;
        let x1 = 1.0 + s;
        assert!((t.inverse_branch(1, x1).unwrap() - s.sqrt().asin()).abs() < 1e-13);
        assert!((t.inverse_branch(2, s).unwrap() - s.sqrt().asin()).abs() < 1e-13);
        assert!((t.inverse_branch(3, -s).unwrap() - s.sqrt()).abs() < 1e-13);
    }
}

#[test]
fn density_errors() {
    let t = cf1();
    assert!(matches!(t.density(1, 0.5), Err(ProfileError::OutOfRange { which: 1, .. })));
    assert!(matches!(t.density(1, 1.0), Err(ProfileError::EndpointSingularity { which: 1, .. })));
    assert!(matches!(t.density(2, 1.0), Err(ProfileError::EndpointSingularity { .. })));
    assert!(matches!(t.density(3, 0.0), Err(ProfileError::EndpointSingularity { .. })));
    // the bottom of branch 3 is a regular end
    assert!((t.density(3, -1.0).unwrap() - 0.5).abs() < 1e-14);
}

#[test]
fn cf1_validation() {
    let t = cf1();
    let r2 = validate(&t, 2).unwrap();
    assert_eq!(r2.warnings().count(), 0, "{:?}", r2.warnings().collect::<Vec<_>>());
    let r4 = validate(&t, 4).unwrap();
    let w: Vec<_> = r4.warnings().collect();
    assert!(!w.is_empty());
    assert!(w.iter().any(|c| c.name.contains("φ₂^(4)(0)")));
}

#[test]
fn trig_family_rejects_mismatched_curvature() {
    let e = make_trig_family(3.0, 1.0, -1.0, 2.0 * PI, 2.0 * PI, 1.0).unwrap_err();
    assert!(matches!(e, ProfileError::IncompatibleParameters { .. }));
}

#[test]
fn trig_family_warns_on_phi3_mismatch() {
    let t = make_trig_family(2.0, 1.0, -2.0, 2.0 * PI, 2.0 * PI, 1.0).unwrap();
    let r = validate(&t, 2).unwrap();
    assert!(r.warnings().any(|c| c.name.contains("φ₃")));
}

#[test]
fn coincident_profiles_have_no_gap() {
    let p = TableParams { nu0: 2.0, nu1: 1.0, nu3: -1.0, omega1: 2.0 * PI, omega2: 2.0 * PI, n: 1.0 };
    let phi1 = Profile::new(|t: f64| 1.0 + t.sin().powi(2), |t: f64| (2.0 * t).sin(), |t: f64| 2.0 * (2.0 * t).cos());
    let phi3 = Profile::new(|t: f64| -t * t, |t: f64| -2.0 * t, |_| -2.0);
    let e = ProfileTriple::new(p, [phi1.clone(), phi1, phi3]).unwrap_err();
    assert!(matches!(e, ProfileError::NonPositiveGap { .. }), "{e:?}");
}

#[test]
fn increasing_phi3_is_rejected() {
    let p = TableParams { nu0: 2.0, nu1: 1.0, nu3: -1.0, omega1: 2.0 * PI, omega2: 2.0 * PI, n: 1.0 };
    let phi1 = Profile::new(|t: f64| 1.0 + t.sin().powi(2), |t: f64| (2.0 * t).sin(), |t: f64| 2.0 * (2.0 * t).cos());
    let phi2 = Profile::new(|t: f64| t.sin().powi(2), |t: f64| (2.0 * t).sin(), |t: f64| 2.0 * (2.0 * t).cos());
    let phi3 = Profile::new(|t: f64| t * t, |t: f64| 2.0 * t, |_| 2.0);
    let e = ProfileTriple::new(p, [phi1, phi2, phi3]).unwrap_err();
    assert!(matches!(e, ProfileError::MonotonicityViolation { which: 3, .. }), "{e:?}");
}

#[test]
fn edge_coefficients() {
    let t = cf1();
    let edges = t.edge_data();
    assert_eq!(edges.len(), 5);
    for e in &edges {
        assert!((e.g0 - 0.5).abs() < 1e-10, "{e:?}");
    }
    // numerical limit √|x−e|·ρ(x)
    let x = 1.0 + 1e-10;
    let r = (x - 1.0f64).sqrt() * t.density(1, x).unwrap();
    assert!((r - 0.5).abs() < 1e-9, "{r}");
}

#[test]
fn quartic_family_inverse_and_density() {
    let beta = 0.25;
    let t = make_quartic_family(q1_params(), beta).unwrap();
    for i in 1..100 {
        let s = i as f64 / 100.0;
        let x1 = 1.0 + 1.5 * s;
        let th = quartic_inverse(s, beta);
        assert!((t.inverse_branch(1, x1).unwrap() - th).abs() < 1e-12);
        let rho = t.density(1, x1).unwrap();
        assert!((rho * t.dphi(1, th) - 1.0).abs() < 1e-10, "{}", rho * t.dphi(1, th));
        let th2 = t.inverse_branch(2, s).unwrap();
        assert!((th2 - th).abs() < 1e-12);
    }
}

#[test]
fn quartic_edges_match_second_derivatives() {
    let t = make_quartic_family(q1_params(), 0.25).unwrap();
    for e in t.edge_data() {
        let theta = match (e.which, e.side) {
            (1, Side::Lower) | (2, Side::Lower) | (3, _) => 0.0,
            (1, Side::Upper) => 0.25 * t.omega1(),
            _ => 0.25 * t.omega2(),
        };
        let expect = 1.0 / (2.0 * t.ddphi(e.which, theta).abs()).sqrt();
        assert!((e.g0 / expect - 1.0).abs() < 1e-10, "{e:?} {expect}");
    }
    let edges = t.edge_data();
    let g1 = edges.iter().find(|e| e.which == 1 && e.side == Side::Lower).unwrap();
    let g2 = edges.iter().find(|e| e.which == 2 && e.side == Side::Upper).unwrap();
    assert!((g1.g0 - g2.g0).abs() < 1e-10);
    assert!(validate(&t, 2).unwrap().warnings().next().is_none());
}

#[test]
fn registry_builds_named_families() {
    let reg = FamilyRegistry::default();
    let p = TableParams { nu0: 2.0, nu1: 1.0, nu3: -1.0, omega1: 2.0 * PI, omega2: 2.0 * PI, n: 1.0 };
    assert!(reg.build("trig", &p, &Default::default()).is_ok());
    assert!(matches!(reg.build("nope", &p, &Default::default()), Err(ProfileError::UnknownFamily(_))));
}

#[test]
fn scaling_multiplies_values() {
    let t = cf1().scaled(3.0).unwrap();
    assert_eq!(t.nu0(), 6.0);
    let r = t.density(1, 4.5).unwrap();
    // ρ for c·φ is ρ(x/c)/c
    assert!((r - cf1_density(1, 1.5) / 3.0).abs() < 1e-12);
    assert!((t.phi(1, FRAC_PI_2) - 6.0).abs() < 1e-14);
}

proptest! {
    #[test]
    fn inverse_is_left_inverse(k in 1usize..=3, s in 0.0f64..1.0) {
        let t = cf1();
        let (lo, hi) = t.branch_range(k);
        let x = lo + (hi - lo) * s;
        let th = t.inverse_branch(k, x).unwrap();
        prop_assert!((t.phi(k, th) - x).abs() < 1e-14);
    }

    #[test]
    fn density_is_inverse_slope(k in 1usize..=3, s in 0.001f64..0.999, beta in 0.0f64..1.0) {
        let nu1 = 1.0;
        let nu0 = nu1 + nu1 * (1.0 + 2.0 * beta);
        let p = TableParams { nu0, nu1, nu3: -0.8, omega1: 2.0 * PI, omega2: 2.0 * PI, n: 1.0 };
        let t = if beta == 0.0 { make_trig_family(nu0, nu1, -0.8, 2.0 * PI, 2.0 * PI, 1.0).unwrap() } else { make_quartic_family(p, beta).unwrap() };
        let (lo, hi) = t.branch_range(k);
        let x = lo + (hi - lo) * s;
        let th = t.inverse_branch(k, x).unwrap();
        let rho = t.density(k, x).unwrap();
        prop_assert!((rho * t.dphi(k, th).abs() - 1.0).abs() < 1e-9);
    }
}
