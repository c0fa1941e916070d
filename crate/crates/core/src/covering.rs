//! The cylinder `C = 𝕋_{ω₁} × 𝕋_{ω₂} × [−N, N]`, its two involutions, the
//! branch set and the coefficient forms of the metric and integrals.

use crate::profiles::{ProfileTriple, TableParams};

/// A point of the cylinder with angles reduced to `[0, ω_k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CylinderPoint {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl CylinderPoint {
    /// Reduces the angles; `None` when `|θ₃| > N`.
    pub fn new(p: &TableParams, theta1: f64, theta2: f64, theta3: f64) -> Option<Self> {
        if !(theta3.abs() <= p.n) {
            return None;
        }
        Some(CylinderPoint { theta1: theta1.rem_euclid(p.omega1), theta2: theta2.rem_euclid(p.omega2), theta3 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointClass {
    Regular,
    S1Branch,
    S2Branch,
}

/// Default branch-set tolerance `1e-9·min(ω₁, ω₂)`.
pub fn branch_tol(p: &TableParams) -> f64 {
    1e-9 * p.omega1.min(p.omega2)
}

/// Distance from `x` to the nearest point of `offset + period·ℤ`.
pub fn dist_to_lattice(x: f64, offset: f64, period: f64) -> f64 {
    let r = (x - offset).rem_euclid(period);
    r.min(period - r)
}

/// Distance in angle space to the branch set, used by the flow as a
/// proximity guard.
pub fn branch_distance(p: &TableParams, t1: f64, t2: f64, t3: f64) -> f64 {
    let s1 = dist_to_lattice(t1, 0.0, 0.5 * p.omega1).hypot(dist_to_lattice(t2, 0.25 * p.omega2, 0.5 * p.omega2));
    let s2 = dist_to_lattice(t2, 0.0, 0.5 * p.omega2).hypot(t3);
    s1.min(s2)
}

pub fn classify_point(p: &TableParams, q: &CylinderPoint, tol: f64) -> PointClass {
    if dist_to_lattice(q.theta1, 0.0, 0.5 * p.omega1) <= tol
        && dist_to_lattice(q.theta2, 0.25 * p.omega2, 0.5 * p.omega2) <= tol
    {
        PointClass::S1Branch
    } else if dist_to_lattice(q.theta2, 0.0, 0.5 * p.omega2) <= tol && q.theta3.abs() <= tol {
        PointClass::S2Branch
    } else {
        PointClass::Regular
    }
}

/// `σ₁ : (θ₁, θ₂, θ₃) ↦ (−θ₁, ω₂/2 − θ₂, θ₃)`.
pub fn sigma1(p: &TableParams, q: &CylinderPoint) -> CylinderPoint {
    CylinderPoint {
        theta1: (-q.theta1).rem_euclid(p.omega1),
        theta2: (0.5 * p.omega2 - q.theta2).rem_euclid(p.omega2),
        theta3: q.theta3,
    }
}

/// `σ₂ : (θ₁, θ₂, θ₃) ↦ (θ₁, −θ₂, −θ₃)`.
pub fn sigma2(p: &TableParams, q: &CylinderPoint) -> CylinderPoint {
    CylinderPoint { theta1: q.theta1, theta2: (-q.theta2).rem_euclid(p.omega2), theta3: -q.theta3 }
}

fn same_point(p: &TableParams, a: &CylinderPoint, b: &CylinderPoint, tol: f64) -> bool {
    dist_to_lattice(a.theta1 - b.theta1, 0.0, p.omega1) <= tol
        && dist_to_lattice(a.theta2 - b.theta2, 0.0, p.omega2) <= tol
        && (a.theta3 - b.theta3).abs() <= tol
}

fn push_unique<T>(out: &mut Vec<T>, x: T, same: impl Fn(&T, &T) -> bool) {
    if !out.iter().any(|y| same(y, &x)) {
        out.push(x);
    }
}

/// Orbit under `{id, σ₁, σ₂, σ₁σ₂}`, with coincident images merged.
pub fn group_orbit(p: &TableParams, q: &CylinderPoint) -> Vec<CylinderPoint> {
    let tol = branch_tol(p);
    let s1 = sigma1(p, q);
    let mut out = Vec::with_capacity(4);
    for x in [*q, s1, sigma2(p, q), sigma2(p, &s1)] {
        push_unique(&mut out, x, |a, b| same_point(p, a, b, tol));
    }
    out
}

/// Orbit of a boundary point under the group generated by
/// `θ₁ ↦ −θ₁`, `θ₁ ↦ ω₁/2 − θ₁`, `θ₂ ↦ −θ₂`, `θ₂ ↦ ω₂/2 − θ₂` on the torus.
/// A generic point has 16 images.
pub fn symmetry_orbit_boundary(p: &TableParams, t1: f64, t2: f64) -> Vec<(f64, f64)> {
    let tol = branch_tol(p);
    let (w1, w2) = (p.omega1, p.omega2);
    let a = [t1, -t1, 0.5 * w1 - t1, t1 + 0.5 * w1];
    let b = [t2, -t2, 0.5 * w2 - t2, t2 + 0.5 * w2];
    let mut out = Vec::with_capacity(16);
    for &x in &a {
        for &y in &b {
            push_unique(&mut out, (x.rem_euclid(w1), y.rem_euclid(w2)), |u, v| {
                dist_to_lattice(u.0 - v.0, 0.0, w1) <= tol && dist_to_lattice(u.1 - v.1, 0.0, w2) <= tol
            });
        }
    }
    out
}

/// The same orbit modulo `(θ₁, θ₂) ↦ (−θ₁, ω₂/2 − θ₂)`, i.e. the orbit of
/// the projected point on the boundary of the quotient table. A generic
/// point has 8 images.
pub fn symmetry_orbit_quotient(p: &TableParams, t1: f64, t2: f64) -> Vec<(f64, f64)> {
    let tol = branch_tol(p);
    let (w1, w2) = (p.omega1, p.omega2);
    let close = |u: &(f64, f64), v: &(f64, f64)| {
        dist_to_lattice(u.0 - v.0, 0.0, w1) <= tol && dist_to_lattice(u.1 - v.1, 0.0, w2) <= tol
    };
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(8);
    for x in symmetry_orbit_boundary(p, t1, t2) {
        let ix = ((-x.0).rem_euclid(w1), (0.5 * w2 - x.1).rem_euclid(w2));
        if !out.iter().any(|y| close(y, &x) || close(y, &ix)) {
            out.push(x);
        }
    }
    out
}

/// `Π₁, Π₂, Π₃` and the profile values at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricCoeffs {
    pub pi: [f64; 3],
    pub phi: [f64; 3],
}

impl MetricCoeffs {
    pub fn from_phi(phi: [f64; 3]) -> Self {
        let [a, b, c] = phi;
        MetricCoeffs { pi: [(a - b) * (a - c), (a - b) * (b - c), (a - c) * (b - c)], phi }
    }
}

/// Coefficients of the quadratic forms `I₁` and `I₂` on the tangent bundle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegralCoeffs {
    pub i1: [f64; 3],
    pub i2: [f64; 3],
}

pub fn phi_at(t: &ProfileTriple, t1: f64, t2: f64, t3: f64) -> [f64; 3] {
    [t.phi(1, t1), t.phi(2, t2), t.phi(3, t3)]
}

pub fn metric_coeffs(t: &ProfileTriple, q: &CylinderPoint) -> MetricCoeffs {
    MetricCoeffs::from_phi(phi_at(t, q.theta1, q.theta2, q.theta3))
}

pub fn integral_coeffs(t: &ProfileTriple, q: &CylinderPoint) -> IntegralCoeffs {
    let m = metric_coeffs(t, q);
    let [a, b, c] = m.phi;
    let [p1, p2, p3] = m.pi;
    IntegralCoeffs {
        i1: [(b + c) * p1, (a + c) * p2, (a + b) * p3],
        i2: [b * c * p1, a * c * p2, a * b * p3],
    }
}

/// Pushed-forward metric `g̃` and tensor `Ã` in the chart
/// `y = (x₁² − x₂², 2x₁x₂, x₃)` centred on the branch line
/// `θ₁ = 0, θ₂ = ω₂/4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pushforward {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub g33: f64,
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub a33: f64,
}

impl Pushforward {
    /// Eigenvalues of the `2×2` block `(g̃₁₁ g̃₁₂; g̃₁₂ g̃₂₂)`, smaller first.
    pub fn block_eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * (self.g11 + self.g22);
        let d = (0.5 * (self.g11 - self.g22)).hypot(self.g12);
        (m - d, m + d)
    }
}

/// Evaluates the pushforward coefficients at chart point `(x₁, x₂, x₃)`.
///
/// Close to the axis the difference quotient `(φ₁−φ₂)/(x₁²+x₂²)` is lost
/// to cancellation, so for `x₁² + x₂² < 1e-14·ω₂²` the continuous limit
/// `g̃₁₁ = g̃₂₂ = a₁(ν₁ − φ₃)/4`, `g̃₁₂ = 0`, `a₁ = φ₁″(0)/2` is returned.
pub fn pushforward_probe(t: &ProfileTriple, x1: f64, x2: f64, x3: f64) -> Pushforward {
    let f1 = t.phi(1, x1);
    let f2 = t.phi(2, 0.25 * t.omega2() + x2);
    let f3 = t.phi(3, x3);
    let r2 = x1 * x1 + x2 * x2;
    let g33 = (f1 - f3) * (f2 - f3);
    if r2 < 1e-14 * t.omega2() * t.omega2() {
        let a1 = 0.5 * t.ddphi(1, 0.0);
        let g = 0.25 * a1 * (t.nu1() - f3);
        let nu1 = t.nu1();
        return Pushforward { g11: g, g12: 0.0, g22: g, g33, a11: nu1, a12: 0.0, a21: 0.0, a22: nu1, a33: f3 };
    }
    let q = (f1 - f2) / r2;
    Pushforward {
        g11: 0.25 * q * ((f1 - f3) * x1 * x1 + (f2 - f3) * x2 * x2) / r2,
        g12: 0.25 * q * q * x1 * x2,
        g22: 0.25 * q * ((f1 - f3) * x2 * x2 + (f2 - f3) * x1 * x1) / r2,
        g33,
        a11: (f1 * x1 * x1 + f2 * x2 * x2) / r2,
        a12: q * x1 * x2,
        a21: q * x1 * x2,
        a22: (f1 * x2 * x2 + f2 * x1 * x1) / r2,
        a33: f3,
    }
}

/// `x₁^{2m} ± x₂^{2m}` written through `w = y₁ + i y₂ = (x₁ + i x₂)²`.
///
/// Returns `(P(y₁, y₂), has_factor)`: the identity is
/// `x₁^{2m} ± x₂^{2m} = (x₁² + x₂²)·P` when `has_factor`, otherwise `= P`.
/// The polynomial is evaluated from `y` alone.
pub fn power_sum_in_y(m: usize, plus: bool, y1: f64, y2: f64) -> (f64, bool) {
    let rr = y1 * y1 + y2 * y2; // (x₁² + x₂²)²
    let mut total = 0.0;
    let mut factor = false;
    let mut binom = 1.0f64;
    for j in 0..=2 * m {
        let survives = (m + j).is_multiple_of(2) == plus;
        if survives {
            let jj = j.min(2 * m - j);
            factor = jj % 2 == 1;
            // Re(w^k)
            let k = m.abs_diff(j) as i32;
            let (mut re, mut im) = (1.0, 0.0);
            for _ in 0..k {
                (re, im) = (re * y1 - im * y2, re * y2 + im * y1);
            }
            total += 2.0 * binom * rr.powi((jj / 2) as i32) * re;
        }
        binom = binom * (2 * m - j) as f64 / (j + 1) as f64;
    }
    (total / 4f64.powi(m as i32), factor)
}
