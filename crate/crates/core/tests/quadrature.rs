use std::f64::consts::PI;

use lbt_core::quadrature::*;
use proptest::prelude::*;

type Case = (&'static str, Box<dyn Fn(Point) -> f64>, QuadratureSpec, f64);

fn beta_corpus() -> Vec<Case> {
    vec![
        ("arcsine mass", Box::new(|p: Point| 1.0 / (p.da * p.db).sqrt()), QuadratureSpec::inv_sqrt(0.0, 1.0), PI),
        ("arcsine mean", Box::new(|p: Point| p.x / (p.da * p.db).sqrt()), QuadratureSpec::inv_sqrt(0.0, 1.0), PI / 2.0),
        ("semicircle", Box::new(|p: Point| (p.da * p.db).sqrt()), QuadratureSpec::inv_sqrt(-1.0, 1.0), PI / 2.0),
        (
            "one-sided root",
            Box::new(|p: Point| 1.0 / p.db.sqrt()),
            QuadratureSpec::new(0.0, 4.0, Edge::Smooth, Edge::InvSqrt),
            4.0,
        ),
        (
            "shifted arcsine cosine",
            Box::new(|p: Point| p.x.cos() / (p.da * p.db).sqrt()),
            QuadratureSpec::inv_sqrt(-1.0, 1.0),
            // π J₀(1)
            PI * 0.765_197_686_557_966_6,
        ),
    ]
}

#[test]
fn closed_form_corpus() {
    for (name, f, spec, exact) in beta_corpus() {
        let r = integrate(&f, &spec).unwrap();
        assert!((r.value - exact).abs() < 1e-12 * exact.abs().max(1.0), "{name}: {} vs {exact}", r.value);
        // the doubling estimate bounds the true error
        assert!((r.value - exact).abs() <= r.error.max(1e-14 * exact.abs()), "{name}: estimate {}", r.error);
    }
}

#[test]
fn plain_gauss_legendre_is_also_available() {
    let spec = QuadratureSpec::smooth(0.0, 2.0).with_substitution(Substitution::None);
    let v = integrate(|p| p.x.exp(), &spec).unwrap().value;
    assert!((v - (2f64.exp() - 1.0)).abs() < 1e-13);
}

#[test]
fn double_integrals_separate() {
    let xs = QuadratureSpec::inv_sqrt(1.0, 2.0);
    let ys = QuadratureSpec::inv_sqrt(0.0, 1.0);
    let v = integrate_2d(|p, q| (p.x - q.x) / (p.da * p.db * q.da * q.db).sqrt(), &xs, &ys).unwrap().value;
    assert!((v - PI * PI).abs() < 1e-12);
}

#[test]
fn square_root_expansion_validator() {
    // f ≡ 1: F = 2√(κ−a) exactly
    let grid: Vec<f64> = (1..=8).map(|i| 10f64.powf(-(i as f64) / 2.0)).collect();
    let r = check_sqrt_expansion(|_, _| 1.0, 0.0, &grid).unwrap();
    assert!(r.constant < 1e-10);
    assert!(r.exponent.is_none());

    // f(x) = x at a = 0.5: F = 2a√d + (4/3)d^{3/2}
    let a = 0.5;
    let grid: Vec<f64> = [1e-4, 1e-3, 1e-2, 1e-1].iter().map(|d| a + d).collect();
    let r = check_sqrt_expansion(|x, _| x, a, &grid).unwrap();
    for &(k, big_f, _, _) in &r.rows {
        let d: f64 = k - a;
        assert!((big_f - (2.0 * a * d.sqrt() + 4.0 / 3.0 * d.powf(1.5))).abs() < 1e-13);
    }
    assert!((r.constant - 4.0 / 3.0).abs() < 1e-8);
    assert!((r.exponent.unwrap() - 1.5).abs() < 1e-6);
    assert!(r.derivative_constant < 3.0);

    // f = cos x at a = 0: f′(0) = 0 removes the d^{3/2} term, leaving −(8/15)d^{5/2}
    let grid: Vec<f64> = (0..7).map(|i| 1e-4 * 10f64.powf(i as f64 / 2.0)).collect();
    let r = check_sqrt_expansion(|x, _| x.cos(), 0.0, &grid).unwrap();
    assert!((r.exponent.unwrap() - 2.5).abs() < 0.05, "{:?}", r.exponent);
    // f = cos(x − 1) keeps a first-order term: exponent 3/2
    let r = check_sqrt_expansion(|x, _| (x - 1.0).cos(), 0.0, &grid).unwrap();
    assert!((r.exponent.unwrap() - 1.5).abs() < 0.05, "{:?}", r.exponent);
}

#[test]
fn log_asymptotics_validator() {
    let alphas: Vec<f64> = (4..=12).map(|i| -(10f64.powi(-i))).collect();
    let one = |_: f64| 1.0;
    let fit = check_log_asymptotics(&LogForm::First { f: &one, upper: 1.0 }, &alphas).unwrap();
    assert!(fit.relative_error < 0.02, "{fit:?}");
    assert!((fit.c + 2.0).abs() < 0.02);
    // closed form 2 log((√(1−α)+1)/√(−α))
    for &a in &alphas {
        let v = LogForm::First { f: &one, upper: 1.0 }.evaluate(a).unwrap();
        let exact = 2.0 * (((1.0 - a).sqrt() + 1.0) / (-a).sqrt()).ln();
        assert!((v - exact).abs() < 1e-12 * exact);
    }
    let lin = |s: f64| 1.0 + s;
    let fit = check_log_asymptotics(&LogForm::First { f: &lin, upper: 1.0 }, &alphas).unwrap();
    assert!(fit.relative_error < 0.02, "{fit:?}");
    // the mirrored form also diverges to +∞, so its coefficient is −2F(0)
    let fit = check_log_asymptotics(&LogForm::Second { f: &one, lower: -1.0 }, &alphas).unwrap();
    assert!(fit.relative_error < 0.02 && fit.c < 0.0, "{fit:?}");
}

proptest! {
    #[test]
    fn weighted_polynomials_are_exact(coeffs in prop::collection::vec(-2.0f64..2.0, 1..40), a in -3.0f64..0.0, len in 0.1f64..4.0) {
        let b = a + len;
        let spec = QuadratureSpec::inv_sqrt(a, b).with_n(32);
        let poly = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let v = integrate(|p| poly(p.x) / (p.da * p.db).sqrt(), &spec).unwrap().value;
        // oracle: x = c + r cos φ turns the integral into a trigonometric
        // polynomial over (0, π), integrated exactly by the midpoint rule
        let (c, r) = (0.5 * (a + b), 0.5 * len);
        let m = 4 * coeffs.len() + 4;
        let exact: f64 = (0..m).map(|i| poly(c + r * (PI * (i as f64 + 0.5) / m as f64).cos())).sum::<f64>() * PI / m as f64;
        prop_assert!((v - exact).abs() < 1e-11 * (1.0 + exact.abs()), "{} {}", v, exact);
    }
}
