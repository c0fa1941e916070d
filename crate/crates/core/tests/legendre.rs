use std::f64::consts::PI;

use lbt_core::legendre::*;
use lbt_core::quadrature::{integrate, QuadratureSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `∫_{x₂}^{x₁} z^k dz / √((x₁−z)(z−x₂))` by singular quadrature.
fn r_k_quadrature(x1: f64, x2: f64, k: usize) -> f64 {
    let (hi, lo) = if x1 >= x2 { (x1, x2) } else { (x2, x1) };
    let spec = QuadratureSpec::inv_sqrt(lo, hi).with_tol(1e-15, 1e-14);
    integrate(|p| p.x.powi(k as i32) / (p.da * p.db).sqrt(), &spec).unwrap().value
}

#[test]
fn kernel_identity_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..100 {
        let (x1, x2): (f64, f64) = (rng.gen_range(1e-3..3.0), rng.gen_range(1e-3..3.0));
        let r0 = r_k_quadrature(x1, x2, 0);
        for k in 0..=20 {
            let q = r_k_quadrature(x1, x2, k);
            let c = r_k(x1.max(x2), x1.min(x2), k);
            assert!((q - c).abs() / r0 < 1e-9 * (1.0 + q.abs()), "k={k} ({x1},{x2}): {q} vs {c}");
        }
    }
}

#[test]
fn kernel_examples() {
    assert!((r_k(2.0, 0.5, 0) - PI).abs() < 1e-15);
    let p = SymmetricPoint::new(2.0, 0.5);
    assert!((r_k(2.0, 0.5, 1) - PI * p.s1).abs() < 1e-14);
    let q = r_k_quadrature(2.0, 0.5, 3);
    assert!(((r_k(2.0, 0.5, 3) - q) / q).abs() < 1e-10);
}

#[test]
fn generating_function() {
    let (z, t) = (0.3, 0.1f64);
    let s: f64 = (0..=30).map(|k| legendre_p(k, z) * t.powi(k as i32)).sum();
    let exact = (1.0 - 2.0 * z * t + t * t).powf(-0.5);
    assert!((s - exact).abs() < 1e-12);
    let all = legendre_p_all(30, z);
    for (k, v) in all.iter().enumerate() {
        assert_eq!(*v, legendre_p(k, z));
    }
}

#[test]
fn inverse_square_root_series() {
    let (x1, x2, k1) = (2.0, 0.5, -10.0f64);
    assert_eq!(inverse_sqrt_series_coeff(1, x1, x2), -1.0);
    let p = SymmetricPoint::new(x1, x2);
    assert!((inverse_sqrt_series_coeff(2, x1, x2) + p.s1).abs() < 1e-15);
    let s: f64 = (1..=40).map(|j| inverse_sqrt_series_coeff(j, x1, x2) * k1.powi(-(j as i32))).sum();
    let exact = 1.0 / ((x1 - k1) * (x2 - k1)).sqrt();
    assert!((s - exact).abs() < 1e-10);
}

#[test]
fn adams_linearization_up_to_twelve() {
    let zs: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 / 100.0).collect();
    for m in 0..=12 {
        for k in 0..=m {
            for &z in &zs {
                let lhs = legendre_p(k, z) * legendre_p(m - k, z);
                let rhs: f64 = (0..=m / 2).map(|r| adams_coeff(m, k, r).unwrap() * legendre_p(m - 2 * r, z)).sum();
                assert!((lhs - rhs).abs() < 1e-12, "m={m} k={k} z={z}");
            }
        }
    }
}

#[test]
fn adams_matrix_is_triangular_with_nonzero_diagonal() {
    // rows k = 0..=m/2, columns r: c^m_{k,r} = 0 for r > k, c^m_{k,k} ≠ 0
    for m in 0..=16 {
        for k in 0..=m / 2 {
            for r in 0..=m / 2 {
                let c = adams_coeff(m, k, r).unwrap();
                if r > k {
                    assert_eq!(c, 0.0);
                }
                if r == k {
                    assert!(c > 0.0);
                }
            }
        }
    }
    assert_eq!(adams_a(-1), 0.0);
    assert_eq!(adams_a(0), 1.0);
    assert!((adams_a(3) - 15.0 / 6.0).abs() < 1e-15);
}

#[test]
fn large_index_coefficients_stay_finite() {
    for m in [40, 80, 160] {
        let c = adams_coeff(m, m / 2, m / 4).unwrap();
        assert!(c.is_finite() && c > 0.0);
    }
}

proptest! {
    #[test]
    fn monomial_round_trip(m in 0usize..=16, z in -1.0f64..1.0) {
        let a = monomial_in_legendre(m);
        let v: f64 = a.iter().enumerate().map(|(r, c)| c * legendre_p(m - 2 * r, z)).sum();
        prop_assert!((v - z.powi(m as i32)).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_form_matches_the_scaled_polynomial(x1 in 0.01f64..3.0, x2 in 0.01f64..3.0, k in 0usize..20) {
        let p = SymmetricPoint::new(x1, x2);
        let direct = p.s2.powi(k as i32) * legendre_p(k, p.s1 / p.s2);
        let h = homogeneous_p(k, p.s1, p.s2);
        prop_assert!((h - direct).abs() <= 1e-11 * direct.abs().max(p.s1.powi(k as i32)));
    }

    #[test]
    fn symmetric_points_recover_their_roots(x1 in 1e-3f64..5.0, x2 in 1e-3f64..5.0) {
        let p = SymmetricPoint::new(x1, x2);
        prop_assert!(p.s1 >= p.s2 && p.s2 > 0.0);
        let (a, b) = p.roots();
        prop_assert!((a - x1.max(x2)).abs() < 1e-12 * x1.max(x2));
        prop_assert!((b - x1.min(x2)).abs() < 1e-9 * x1.max(x2));
    }
}
