//! Liouville tori on the boundary: classification by the roots `(κ₁, κ₂)`
//! of `t² − h₁t + h₂`, explicit parametrizations in cases A and B, and
//! their Leray measures.
//!
//! On the boundary torus the momenta satisfy
//! `p₁² = (φ₁−κ₁)(φ₁−κ₂)` and `p₂² = (φ₂−κ₁)(κ₂−φ₂)`, and the Leray form
//! is `λ = (φ₁−φ₂)/(|p₁||p₂|) dθ₁∧dθ₂`.
//!
//! Projection regions of the canonical component:
//!
//! | case | `θ₁`                                   | `θ₂`                       | free sign |
//! |------|----------------------------------------|----------------------------|-----------|
//! | A    | full circle                            | `[−f₂(κ₂), f₂(κ₂)]`        | `ε₂`      |
//! | B    | `[f₁(κ₂), ω₁/2 − f₁(κ₂)]`              | full circle                | `ε₁`      |
//!
//! In `x = φ(θ)` coordinates each region covers its value rectangle 16
//! times (quarter periods times the free sign).

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::dynamics::{BoundaryCovector, BoundarySide};
use crate::quadrature::{gauss_legendre_nodes, integrate_2d, Edge, Integral, Point, QuadError, QuadratureSpec};
use crate::profiles::ProfileTriple;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ToriError {
    #[error("no real roots: discriminant {0}")]
    NoRealRoots(f64),
    #[error("(κ₁, κ₂) = ({0}, {1}) is degenerate or outside the table range")]
    Degenerate(f64, f64),
    #[error("case {0:?} has no parametrization")]
    Unsupported(CaseTag),
    #[error("(θ₁, θ₂) = ({0}, {1}) is outside the projection region")]
    OutsideProjection(f64, f64),
    #[error("(θ₁, θ₂) = ({0}, {1}) is on a turning curve")]
    TurningPointSingularity(f64, f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseTag {
    A,
    B,
    C,
    D,
}

/// Real roots of `t² − h₁t + h₂`, ascending.
pub fn roots_from_h(h1: f64, h2: f64) -> Result<(f64, f64), ToriError> {
    let disc = h1 * h1 - 4.0 * h2;
    if disc < 0.0 {
        return Err(ToriError::NoRealRoots(disc));
    }
    let s = disc.sqrt();
    // avoid cancellation in the smaller-magnitude root
    let q = -0.5 * (-h1 - h1.signum() * s);
    let (r1, r2) = if q != 0.0 { (q, h2 / q) } else { (0.5 * h1, 0.5 * h1) };
    Ok(if r1 <= r2 { (r1, r2) } else { (r2, r1) })
}

/// Case of `(κ₁, κ₂)`, or `None` when degenerate (an inequality holds with
/// equality to `1e-12`, or a root is outside `[ν₃, ν₀]`).
pub fn classify_case(k1: f64, k2: f64, t: &ProfileTriple) -> Option<CaseTag> {
    let tol = 1e-12 * t.params().scale().max(1.0);
    let lt = |a: f64, b: f64| a < b - tol;
    let (n0, n1, n3) = (t.nu0(), t.nu1(), t.nu3());
    if !(k1 <= k2) {
        return None;
    }
    let k1_neg = lt(n3, k1) && lt(k1, 0.0);
    if k1_neg && lt(0.0, k2) && lt(k2, n1) {
        Some(CaseTag::A)
    } else if k1_neg && lt(n1, k2) && lt(k2, n0) {
        Some(CaseTag::B)
    } else if lt(0.0, k1) && k1 <= k2 && lt(k2, n1) {
        Some(CaseTag::C)
    } else if lt(0.0, k1) && lt(k1, n1) && lt(n1, k2) && lt(k2, n0) {
        Some(CaseTag::D)
    } else {
        None
    }
}

/// A Liouville torus component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusSpec {
    pub kappa1: f64,
    pub kappa2: f64,
    pub case: CaseTag,
    pub eps1: f64,
    pub eps2: f64,
}

impl TorusSpec {
    pub fn new(t: &ProfileTriple, kappa1: f64, kappa2: f64) -> Result<Self, ToriError> {
        let case = classify_case(kappa1, kappa2, t).ok_or(ToriError::Degenerate(kappa1, kappa2))?;
        Ok(TorusSpec { kappa1, kappa2, case, eps1: 1.0, eps2: 1.0 })
    }

    pub fn with_signs(mut self, eps1: f64, eps2: f64) -> Self {
        self.eps1 = eps1.signum();
        self.eps2 = eps2.signum();
        self
    }

    pub fn from_h(t: &ProfileTriple, h1: f64, h2: f64) -> Result<Self, ToriError> {
        let (k1, k2) = roots_from_h(h1, h2)?;
        Self::new(t, k1, k2)
    }

    pub fn h1(&self) -> f64 {
        self.kappa1 + self.kappa2
    }

    pub fn h2(&self) -> f64 {
        self.kappa1 * self.kappa2
    }

    /// `(φ₁−κ₁)(φ₁−κ₂)` and `(φ₂−κ₁)(κ₂−φ₂)` at an angle pair.
    pub fn momenta_squared(&self, t: &ProfileTriple, t1: f64, t2: f64) -> (f64, f64) {
        let (f1, f2) = (t.phi(1, t1), t.phi(2, t2));
        ((f1 - self.kappa1) * (f1 - self.kappa2), (f2 - self.kappa1) * (self.kappa2 - f2))
    }

    fn require_boundary_case(&self) -> Result<(), ToriError> {
        match self.case {
            CaseTag::A | CaseTag::B => Ok(()),
            c => Err(ToriError::Unsupported(c)),
        }
    }
}

/// Slack allowed for rounding when a point sits on a turning curve.
fn slack(t: &ProfileTriple) -> f64 {
    1e-13 * t.params().scale().powi(2)
}

/// The covector of the torus over `(θ₁, θ₂)` on the `+N` boundary.
pub fn torus_point(t: &ProfileTriple, spec: &TorusSpec, t1: f64, t2: f64) -> Result<BoundaryCovector, ToriError> {
    spec.require_boundary_case()?;
    let (q1, q2) = spec.momenta_squared(t, t1, t2);
    if q1 < -slack(t) || q2 < -slack(t) {
        return Err(ToriError::OutsideProjection(t1, t2));
    }
    Ok(BoundaryCovector {
        theta1: t1,
        theta2: t2,
        p1: spec.eps1 * q1.max(0.0).sqrt(),
        p2: spec.eps2 * q2.max(0.0).sqrt(),
        side: BoundarySide::Plus,
    })
}

/// Leray density `(φ₁−φ₂)/(|p₁||p₂|)` at an interior point of the region.
pub fn leray_density(t: &ProfileTriple, spec: &TorusSpec, t1: f64, t2: f64) -> Result<f64, ToriError> {
    spec.require_boundary_case()?;
    let (q1, q2) = spec.momenta_squared(t, t1, t2);
    if q1 < -slack(t) || q2 < -slack(t) {
        return Err(ToriError::OutsideProjection(t1, t2));
    }
    if q1 <= 0.0 || q2 <= 0.0 {
        return Err(ToriError::TurningPointSingularity(t1, t2));
    }
    Ok((t.phi(1, t1) - t.phi(2, t2)) / (q1.sqrt() * q2.sqrt()))
}

/// Distance from an abscissa of `[a, b]` to a point `c` that is an end or
/// lies outside the interval, without cancellation.
#[inline]
pub fn dist(p: &Point, a: f64, b: f64, c: f64) -> f64 {
    if c == a {
        p.da
    } else if c == b {
        p.db
    } else if c < a {
        p.da + (a - c)
    } else {
        p.db + (c - b)
    }
}

/// Value rectangle `[a₁,b₁] × [a₂,b₂]` covered by a case.
pub fn case_rectangle(t: &ProfileTriple, case: CaseTag, k1: f64, k2: f64) -> ((f64, f64), (f64, f64)) {
    let (n0, n1) = (t.nu0(), t.nu1());
    match case {
        CaseTag::A => ((n1, n0), (0.0, k2)),
        CaseTag::B => ((k2, n0), (0.0, n1)),
        CaseTag::C => ((n1, n0), (k1, k2)),
        CaseTag::D => ((k2, n0), (k1, n1)),
    }
}

fn edge_gap(end: f64, points: &[f64]) -> Edge {
    let g = points.iter().map(|&c| (c - end).abs()).filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min);
    if g.is_finite() {
        Edge::Near(g)
    } else {
        Edge::InvSqrt
    }
}

/// Quadrature specs for the two value directions of a case rectangle.
/// Every end carries a square-root singularity or has one nearby.
pub fn case_specs(t: &ProfileTriple, case: CaseTag, k1: f64, k2: f64, n: usize) -> (QuadratureSpec, QuadratureSpec) {
    let ((a1, b1), (a2, b2)) = case_rectangle(t, case, k1, k2);
    let sing1 = [t.nu1(), t.nu0(), k1, k2];
    let sing2 = [0.0, t.nu1(), k1, k2];
    let xs = QuadratureSpec::new(a1, b1, edge_gap(a1, &sing1), edge_gap(b1, &sing1)).with_n(n).with_tol(1e-13, 1e-11);
    let ys = QuadratureSpec::new(a2, b2, edge_gap(a2, &sing2), edge_gap(b2, &sing2)).with_n(n).with_tol(1e-13, 1e-11);
    (xs, ys)
}

/// `∫∫ K(x₁,x₂) (x₁−x₂) ρ₁ρ₂ / √(|x₁−κ₁||x₁−κ₂|·|x₂−κ₁||x₂−κ₂|)` over the
/// case rectangle. With `K ≡ 1` this is one sixteenth of the Leray mass.
pub fn case_integral<K>(t: &ProfileTriple, case: CaseTag, k1: f64, k2: f64, kernel: K) -> Result<Integral, ToriError>
where
    K: Fn(f64, f64) -> f64,
{
    let (xs, ys) = case_specs(t, case, k1, k2, 48);
    let (n0, n1) = (t.nu0(), t.nu1());
    let (b1, b2) = (t.branch(1), t.branch(2));
    let f = |p: Point, q: Point| {
        let (x1, x2) = (p.x, q.x);
        let r1 = b1.density_from(dist(&p, xs.a, xs.b, n1), dist(&p, xs.a, xs.b, n0));
        let r2 = b2.density_from(dist(&q, ys.a, ys.b, 0.0), dist(&q, ys.a, ys.b, n1));
        let w1 = dist(&p, xs.a, xs.b, k1) * dist(&p, xs.a, xs.b, k2);
        let w2 = dist(&q, ys.a, ys.b, k1) * dist(&q, ys.a, ys.b, k2);
        kernel(x1, x2) * (x1 - x2) * r1 * r2 / (w1.sqrt() * w2.sqrt())
    };
    Ok(integrate_2d(f, &xs, &ys)?)
}

/// Total Leray mass of the canonical component, in value coordinates.
pub fn leray_mass(t: &ProfileTriple, spec: &TorusSpec) -> Result<f64, ToriError> {
    spec.require_boundary_case()?;
    Ok(16.0 * case_integral(t, spec.case, spec.kappa1, spec.kappa2, |_, _| 1.0)?.value)
}

/// Nodes and weights on a projection region in angle space.
///
/// Periodic directions use the trapezoidal rule (symmetric nodes); the
/// librating direction uses `θ = c + r sin χ` with Gauss–Legendre in `χ`,
/// which removes the square-root vanishing of the momentum at the turning
/// curve. Weights include the factor 2 for the free sign.
pub fn theta_rule(t: &ProfileTriple, spec: &TorusSpec, n_periodic: usize, n_gl: usize) -> Result<Vec<(f64, f64, f64)>, ToriError> {
    spec.require_boundary_case()?;
    let (nodes, weights) = gauss_legendre_nodes(n_gl);
    let mut out = Vec::with_capacity(n_periodic * n_gl);
    match spec.case {
        CaseTag::A => {
            let r = t.inverse_branch(2, spec.kappa2).map_err(|_| ToriError::Degenerate(spec.kappa1, spec.kappa2))?;
            let w1 = t.omega1();
            let h = w1 / n_periodic as f64;
            for i in 0..n_periodic {
                let t1 = (i as f64 + 0.5) * h;
                for (x, w) in nodes.iter().zip(&weights) {
                    let chi = FRAC_PI_2 * x;
                    out.push((t1, r * chi.sin(), 2.0 * h * w * FRAC_PI_2 * r * chi.cos()));
                }
            }
        }
        CaseTag::B => {
            let f = t.inverse_branch(1, spec.kappa2).map_err(|_| ToriError::Degenerate(spec.kappa1, spec.kappa2))?;
            let c = 0.25 * t.omega1();
            let r = c - f;
            let w2 = t.omega2();
            let h = w2 / n_periodic as f64;
            for i in 0..n_periodic {
                let t2 = (i as f64 + 0.5) * h;
                for (x, w) in nodes.iter().zip(&weights) {
                    let chi = FRAC_PI_2 * x;
                    out.push((c + r * chi.sin(), t2, 2.0 * h * w * FRAC_PI_2 * r * chi.cos()));
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(out)
}

/// Integral of `g·λ` over the canonical component in angle space.
pub fn theta_integral<G>(t: &ProfileTriple, spec: &TorusSpec, n_periodic: usize, n_gl: usize, g: G) -> Result<f64, ToriError>
where
    G: Fn(f64, f64) -> f64,
{
    let rule = theta_rule(t, spec, n_periodic, n_gl)?;
    let mut acc = 0.0;
    for (t1, t2, w) in rule {
        let (q1, q2) = spec.momenta_squared(t, t1, t2);
        let lam = (t.phi(1, t1) - t.phi(2, t2)) / (q1.max(0.0).sqrt() * q2.max(0.0).sqrt());
        acc += w * g(t1, t2) * lam;
    }
    Ok(acc)
}

/// Leray mass by angle-space quadrature, doubling until the relative change
/// drops below `rel_tol`.
pub fn leray_mass_theta(t: &ProfileTriple, spec: &TorusSpec, rel_tol: f64) -> Result<f64, ToriError> {
    let (mut np, mut ng) = (64, 32);
    let mut prev = theta_integral(t, spec, np, ng, |_, _| 1.0)?;
    for _ in 0..6 {
        np *= 2;
        ng *= 2;
        let v = theta_integral(t, spec, np, ng, |_, _| 1.0)?;
        if (v - prev).abs() <= rel_tol * v.abs() {
            return Ok(v);
        }
        prev = v;
    }
    Err(ToriError::Quadrature(QuadError::NonConvergent { a: spec.kappa1, b: spec.kappa2, prev, last: prev }))
}
