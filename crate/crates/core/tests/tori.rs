use std::f64::consts::{FRAC_PI_2, PI};

use lbt_core::dynamics::{billiard_map, boundary_integrals, BoundaryCovector, FlowOptions};
use lbt_core::profiles::{cf1, make_quartic_family, TableParams};
use lbt_core::tori::*;

#[test]
fn roots() {
    assert_eq!(roots_from_h(0.0, -0.25).unwrap(), (-0.5, 0.5));
    assert_eq!(roots_from_h(1.0, 0.25).unwrap(), (0.5, 0.5));
    assert!(matches!(roots_from_h(0.0, 1.0), Err(ToriError::NoRealRoots(_))));
    let (a, b) = roots_from_h(1.0 + 1e-9, 1e-9).unwrap();
    assert!((a - 1e-9).abs() < 1e-24 && (b - 1.0).abs() < 1e-15);
}

#[test]
fn cases() {
    let t = cf1();
    assert_eq!(classify_case(-0.5, 0.5, &t), Some(CaseTag::A));
    assert_eq!(classify_case(-0.5, 1.5, &t), Some(CaseTag::B));
    assert_eq!(classify_case(0.2, 0.5, &t), Some(CaseTag::C));
    assert_eq!(classify_case(0.5, 1.5, &t), Some(CaseTag::D));
    assert_eq!(classify_case(-0.5, 1.0, &t), None);
    assert_eq!(classify_case(-1.0, 0.5, &t), None);
    assert_eq!(classify_case(-0.5, 2.5, &t), None);
}

#[test]
fn sample_torus_point() {
    let t = cf1();
    let s = TorusSpec::new(&t, -0.5, 0.5).unwrap();
    let xi = torus_point(&t, &s, FRAC_PI_2, 0.0).unwrap();
    assert!((xi.p1 - 3.75f64.sqrt()).abs() < 1e-14 && (xi.p2 - 0.5).abs() < 1e-15);
    let lam = leray_density(&t, &s, FRAC_PI_2, 0.0).unwrap();
    assert!((lam - 2.0 / (3.75f64.sqrt() * 0.5)).abs() < 1e-13);
    assert!((lam - leray_density(&t, &s, -FRAC_PI_2, 0.0).unwrap()).abs() < 1e-15);
    // turning curve φ₂ = κ₂
    let f2 = t.inverse_branch(2, 0.5).unwrap();
    let xi = torus_point(&t, &s, 0.3, f2).unwrap();
    assert!(xi.p2.abs() < 1e-7);
    assert!(matches!(torus_point(&t, &s, 0.3, f2 + 0.1), Err(ToriError::OutsideProjection(..))));
    assert!(matches!(leray_density(&t, &s, 0.3, f2), Err(ToriError::TurningPointSingularity(..)) | Err(ToriError::OutsideProjection(..))));
}

#[test]
fn leray_density_blows_up_like_inverse_sqrt() {
    let t = cf1();
    let s = TorusSpec::new(&t, -0.5, 0.5).unwrap();
    let f2 = t.inverse_branch(2, 0.5).unwrap();
    let ratio: Vec<f64> = [1e-4, 1e-6, 1e-8]
        .iter()
        .map(|&d| {
            let th = t.inverse_branch(2, 0.5 - d).unwrap();
            assert!(th < f2);
            leray_density(&t, &s, 0.4, th).unwrap() * d.sqrt()
        })
        .collect();
    assert!((ratio[1] / ratio[2] - 1.0).abs() < 1e-3, "{ratio:?}");
}

#[test]
fn torus_points_have_prescribed_integrals() {
    let t = cf1();
    for &(k1, k2) in &[(-0.5, 0.5), (-0.2, 0.9), (-0.5, 1.5), (-0.9, 1.1)] {
        let s = TorusSpec::new(&t, k1, k2).unwrap();
        let rule = theta_rule(&t, &s, 8, 4).unwrap();
        for (t1, t2, _) in rule {
            for (e1, e2) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0)] {
                let xi = torus_point(&t, &s.with_signs(e1, e2), t1, t2).unwrap();
                let b = boundary_integrals(&t, &xi).unwrap();
                assert!((b[0] - s.h1()).abs() < 1e-12 && (b[1] - s.h2()).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn masses_agree_across_coordinates() {
    let t = cf1();
    for &(k1, k2) in &[(-0.5, 0.5), (-0.3, 0.8), (-0.8, 0.1), (-0.5, 1.5), (-0.2, 1.9)] {
        let s = TorusSpec::new(&t, k1, k2).unwrap();
        let mx = leray_mass(&t, &s).unwrap();
        let mt = leray_mass_theta(&t, &s, 1e-12).unwrap();
        assert!(mx > 0.0);
        assert!((mx / mt - 1.0).abs() < 1e-8, "{k1} {k2}: {mx} {mt}");
        let flipped = leray_mass_theta(&t, &s.with_signs(-1.0, 1.0), 1e-12).unwrap();
        assert_eq!(flipped, mt);
    }
}

#[test]
fn quartic_masses_agree_across_coordinates() {
    let p = TableParams { nu0: 2.5, nu1: 1.0, nu3: -0.8, omega1: 2.0 * PI, omega2: 2.0 * PI, n: 1.0 };
    let t = make_quartic_family(p, 0.25).unwrap();
    for &(k1, k2) in &[(-0.4, 0.5), (-0.4, 1.7)] {
        let s = TorusSpec::new(&t, k1, k2).unwrap();
        let mx = leray_mass(&t, &s).unwrap();
        let mt = leray_mass_theta(&t, &s, 1e-12).unwrap();
        assert!((mx / mt - 1.0).abs() < 1e-8, "{k1} {k2}: {mx} {mt}");
    }
}

#[test]
fn masses_positive_on_case_a_grid() {
    let t = cf1();
    for i in 1..=5 {
        for j in 1..=5 {
            let s = TorusSpec::new(&t, -(i as f64) / 6.0, j as f64 / 6.0).unwrap();
            let m = leray_mass(&t, &s).unwrap();
            assert!(m.is_finite() && m > 0.0);
        }
    }
}

#[test]
fn billiard_orbit_stays_on_torus() {
    let t = cf1();
    let s = TorusSpec::new(&t, -0.4, 0.6).unwrap();
    let mut xi: BoundaryCovector = torus_point(&t, &s, 0.7, 0.3).unwrap();
    let opts = FlowOptions::with_tol(1e-10);
    for _ in 0..100 {
        xi = billiard_map(&t, &xi, &opts).unwrap();
        let b = boundary_integrals(&t, &xi).unwrap();
        assert!((b[0] - s.h1()).abs() < 1e-7 && (b[1] - s.h2()).abs() < 1e-7);
    }
}
