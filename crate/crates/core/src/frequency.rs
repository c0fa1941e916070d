//! Actions, the frequency map of the billiard ball map and its Jacobian.
//!
//! Everything is assembled from one-dimensional moments over the three
//! value segments of a torus,
//!
//! ```text
//! M_k = ∫ x^k ρ(x) / √(|x−κ₁||x−κ₂|) dx,   k = 0, 1,
//! ```
//!
//! called `U`, `V`, `W` for the segments of `φ₁`, `φ₂`, `φ₃`. For a case A
//! torus the segments are `[ν₁,ν₀]`, `[0,κ₂]`, `[ν₃,κ₁]`; case B uses
//! `[κ₂,ν₀]`, `[0,ν₁]`, `[ν₃,κ₁]`. In both cases
//!
//! ```text
//! Ω₁ = π A / D,  Ω₂ = π B / D,
//! A = V₁W₀ − V₀W₁,  B = U₁W₀ − U₀W₁,  D = U₁V₀ − U₀V₁.
//! ```
//!
//! Derivatives in `κ` are taken under the integral sign. When `κ` is an end
//! of the segment the derivative is the finite part
//! `G′(κ) = h(κ)/√(κ−a) − ½∫ (h(x)−h(κ)) (κ−x)^(−3/2) dx`
//! of `G(κ) = ∫_a^κ h(x)/√(κ−x) dx`, which stays absolutely convergent.
//!
//! Case B formulas are derived by the same bookkeeping as case A: the
//! librating angle is `θ₁` over `φ₁ ∈ [κ₂,ν₀]` and `θ₂` circulates.

use std::f64::consts::PI;

use thiserror::Error;

use crate::dynamics::{integrate_to_boundary_observed, lift, project, reflect, DynamicsError, FlowOptions, PhasePoint};
use crate::profiles::ProfileTriple;
use crate::quadrature::{integrate, integrate_2d, Edge, Point, QuadError, QuadratureSpec};
use crate::tori::{classify_case, dist, torus_point, CaseTag, ToriError, TorusSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrequencyError {
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("frequency system is singular: det = {det:e}")]
    SingularSystem { det: f64 },
    #[error("(κ₁, κ₂) = ({0}, {1}) is not an interior case A or B point")]
    OutsideDomain(f64, f64),
    #[error("κ = {0} outside (0, ν₁)")]
    OutOfRange(f64),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Tori(#[from] ToriError),
}

/// One value segment `[a,b]` of branch `which`, with the signs making
/// `s_i (x − κ_i)` positive inside.
#[derive(Clone, Copy, Debug)]
struct Segment {
    which: usize,
    spec: QuadratureSpec,
    lo: f64,
    hi: f64,
    kappa: [f64; 2],
    sign: [f64; 2],
}

const MOMENT_TOL: (f64, f64) = (1e-15, 1e-13);
const FINITE_PART_RTOL: f64 = 1e-8;

impl Segment {
    fn new(t: &ProfileTriple, which: usize, a: f64, b: f64, k1: f64, k2: f64) -> Self {
        let (lo, hi) = t.branch_range(which);
        let br = t.branch(which);
        let mut sing = vec![k1, k2];
        if br.lo_singular() {
            sing.push(lo);
        }
        if br.hi_singular() {
            sing.push(hi);
        }
        let edge = |e: f64, outward: f64| {
            let on_end = sing.contains(&e);
            let gap = sing
                .iter()
                .map(|&c| outward * (c - e))
                .filter(|&d| d > 0.0)
                .fold(f64::INFINITY, f64::min);
            if gap.is_finite() {
                Edge::Near(gap)
            } else if on_end {
                Edge::InvSqrt
            } else {
                Edge::Smooth
            }
        };
        let spec = QuadratureSpec::new(a, b, edge(a, -1.0), edge(b, 1.0)).with_n(48).with_tol(MOMENT_TOL.0, MOMENT_TOL.1);
        let mid = 0.5 * (a + b);
        let sign = [(mid - k1).signum(), (mid - k2).signum()];
        Segment { which, spec, lo, hi, kappa: [k1, k2], sign }
    }

    fn rho(&self, t: &ProfileTriple, p: &Point) -> f64 {
        let (a, b) = (self.spec.a, self.spec.b);
        t.branch(self.which).density_from(dist(p, a, b, self.lo), dist(p, a, b, self.hi))
    }

    fn d(&self, p: &Point, i: usize) -> f64 {
        dist(p, self.spec.a, self.spec.b, self.kappa[i])
    }

    fn quad<F: Fn(Point) -> f64>(&self, f: F) -> Result<f64, QuadError> {
        Ok(integrate(f, &self.spec)?.value)
    }

    /// `(M₀, M₁)`.
    fn moments(&self, t: &ProfileTriple) -> Result<[f64; 2], QuadError> {
        let m0 = self.quad(|p| self.rho(t, &p) / (self.d(&p, 0) * self.d(&p, 1)).sqrt())?;
        let m1 = self.quad(|p| p.x * self.rho(t, &p) / (self.d(&p, 0) * self.d(&p, 1)).sqrt())?;
        Ok([m0, m1])
    }

    /// `∫ √(|x−κ₁||x−κ₂|) ρ dx`.
    fn root_integral(&self, t: &ProfileTriple) -> Result<f64, QuadError> {
        self.quad(|p| (self.d(&p, 0) * self.d(&p, 1)).sqrt() * self.rho(t, &p))
    }

    fn end_point(&self, upper: bool) -> Point {
        let (a, b) = (self.spec.a, self.spec.b);
        if upper {
            Point { x: b, da: b - a, db: 0.0 }
        } else {
            Point { x: a, da: 0.0, db: b - a }
        }
    }

    /// `∂(M₀, M₁)/∂κ_i`.
    fn moment_derivatives(&self, t: &ProfileTriple, i: usize) -> Result<[f64; 2], QuadError> {
        let j = 1 - i;
        let (a, b) = (self.spec.a, self.spec.b);
        let k = self.kappa[i];
        let mut out = [0.0; 2];
        for (pow, o) in out.iter_mut().enumerate() {
            let xk = |x: f64| if pow == 0 { 1.0 } else { x };
            if k == a || k == b {
                let upper = k == b;
                let h = |p: &Point| xk(p.x) * self.rho(t, p) / self.d(p, j).sqrt();
                let hk = h(&self.end_point(upper));
                let len = b - a;
                // the density interpolant carries ~1e-11 relative noise,
                // amplified here by the (κ−x)^(−3/2) weight
                let spec = self.spec.with_tol(FINITE_PART_RTOL * hk.abs() / len.sqrt(), FINITE_PART_RTOL);
                let fp = integrate(
                    |p| {
                        let r = if upper { p.db } else { p.da };
                        (h(&p) - hk) / (r * r.sqrt())
                    },
                    &spec,
                )?
                .value;
                *o = if upper { hk / len.sqrt() - 0.5 * fp } else { -hk / len.sqrt() + 0.5 * fp };
            } else {
                let s = self.sign[i];
                *o = 0.5 * s * self.quad(|p| {
                    let (di, dj) = (self.d(&p, i), self.d(&p, j));
                    xk(p.x) * self.rho(t, &p) / ((di * dj).sqrt() * di)
                })?;
            }
        }
        Ok(out)
    }
}

/// Action prefactors `2/π`, `2/π`, `1/π`.
const ACTION_FACTOR: [f64; 3] = [2.0 / PI, 2.0 / PI, 1.0 / PI];

fn segments(t: &ProfileTriple, k1: f64, k2: f64) -> Result<(CaseTag, [Segment; 3]), FrequencyError> {
    let case = classify_case(k1, k2, t).ok_or(FrequencyError::OutsideDomain(k1, k2))?;
    let (n0, n1, n3) = (t.nu0(), t.nu1(), t.nu3());
    let (r1, r2) = match case {
        CaseTag::A => ((n1, n0), (0.0, k2)),
        CaseTag::B => ((k2, n0), (0.0, n1)),
        _ => return Err(FrequencyError::OutsideDomain(k1, k2)),
    };
    Ok((
        case,
        [
            Segment::new(t, 1, r1.0, r1.1, k1, k2),
            Segment::new(t, 2, r2.0, r2.1, k1, k2),
            Segment::new(t, 3, n3, k1, k1, k2),
        ],
    ))
}

/// Generalized action `J_k(κ₁, κ₂)`, `k ∈ {1,2,3}`.
pub fn action(t: &ProfileTriple, k: usize, k1: f64, k2: f64) -> Result<f64, FrequencyError> {
    assert!((1..=3).contains(&k), "action index {k} out of 1..=3");
    let (_, segs) = segments(t, k1, k2)?;
    Ok(ACTION_FACTOR[k - 1] * segs[k - 1].root_integral(t)?)
}

/// All three actions.
pub fn actions(t: &ProfileTriple, k1: f64, k2: f64) -> Result<[f64; 3], FrequencyError> {
    let (_, segs) = segments(t, k1, k2)?;
    let mut out = [0.0; 3];
    for k in 0..3 {
        out[k] = ACTION_FACTOR[k] * segs[k].root_integral(t)?;
    }
    Ok(out)
}

/// Moments and their `κ`-derivatives on the three segments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub case: CaseTag,
    /// `m[seg][k]`: `U_k`, `V_k`, `W_k`.
    pub m: [[f64; 2]; 3],
    /// `dm[seg][i][k] = ∂M_k/∂κ_i`, filled by [`moments_with_derivatives`].
    pub dm: [[[f64; 2]; 2]; 3],
    kappa: [f64; 2],
    sign: [[f64; 2]; 3],
}

fn collect(t: &ProfileTriple, k1: f64, k2: f64, derivs: bool) -> Result<Moments, FrequencyError> {
    let (case, segs) = segments(t, k1, k2)?;
    let mut m = [[0.0; 2]; 3];
    let mut dm = [[[0.0; 2]; 2]; 3];
    let mut sign = [[0.0; 2]; 3];
    for (s, seg) in segs.iter().enumerate() {
        m[s] = seg.moments(t)?;
        sign[s] = seg.sign;
        if derivs {
            for i in 0..2 {
                dm[s][i] = seg.moment_derivatives(t, i)?;
            }
        }
    }
    Ok(Moments { case, m, dm, kappa: [k1, k2], sign })
}

pub fn moments(t: &ProfileTriple, k1: f64, k2: f64) -> Result<Moments, FrequencyError> {
    collect(t, k1, k2, false)
}

pub fn moments_with_derivatives(t: &ProfileTriple, k1: f64, k2: f64) -> Result<Moments, FrequencyError> {
    collect(t, k1, k2, true)
}

impl Moments {
    /// `∂J_k/∂κ_i` as `grad[k][i]`.
    pub fn action_grad(&self) -> [[f64; 2]; 3] {
        let mut g = [[0.0; 2]; 3];
        for k in 0..3 {
            let [m0, m1] = self.m[k];
            let s = self.sign[k];
            for i in 0..2 {
                let j = 1 - i;
                g[k][i] = -0.5 * ACTION_FACTOR[k] * s[i] * s[j] * (m1 - self.kappa[j] * m0);
            }
        }
        g
    }

    /// `(A, B, D)`.
    pub fn abd(&self) -> [f64; 3] {
        let [u, v, w] = self.m;
        [v[1] * w[0] - v[0] * w[1], u[1] * w[0] - u[0] * w[1], u[1] * v[0] - u[0] * v[1]]
    }

    /// `∂(A, B, D)/∂κ_i` as `d[i]`.
    pub fn abd_derivatives(&self) -> [[f64; 3]; 2] {
        let [u, v, w] = self.m;
        let mut out = [[0.0; 3]; 2];
        for (i, o) in out.iter_mut().enumerate() {
            let [du, dv, dw] = [self.dm[0][i], self.dm[1][i], self.dm[2][i]];
            let cross = |p: [f64; 2], q: [f64; 2], dp: [f64; 2], dq: [f64; 2]| {
                dp[1] * q[0] + p[1] * dq[0] - dp[0] * q[1] - p[0] * dq[1]
            };
            *o = [cross(v, w, dv, dw), cross(u, w, du, dw), cross(u, v, du, dv)];
        }
        out
    }

    /// `(Ω₁, Ω₂) = π(A, B)/D`.
    pub fn frequencies(&self) -> [f64; 2] {
        let [a, b, d] = self.abd();
        [PI * a / d, PI * b / d]
    }

    /// Signed Jacobian `det ∂(Ω₁,Ω₂)/∂(κ₁,κ₂)`.
    /// `∂Ω_l/∂κ_i` as `d[l][i]`.
    pub fn frequency_derivatives(&self) -> [[f64; 2]; 2] {
        let [a, b, d] = self.abd();
        let dd = self.abd_derivatives();
        let s = PI / (d * d);
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            out[0][i] = s * (dd[i][0] * d - a * dd[i][2]);
            out[1][i] = s * (dd[i][1] * d - b * dd[i][2]);
        }
        out
    }

    pub fn jacobian(&self) -> f64 {
        let [a, b, d] = self.abd();
        let [d1, d2] = self.abd_derivatives();
        let e11 = d1[0] * d - a * d1[2];
        let e12 = d2[0] * d - a * d2[2];
        let e21 = d1[1] * d - b * d1[2];
        let e22 = d2[1] * d - b * d2[2];
        PI * PI / d.powi(4) * (e11 * e22 - e12 * e21)
    }
}

/// `∂J_k/∂κ_i` as `grad[k][i]`.
pub fn action_grad(t: &ProfileTriple, k1: f64, k2: f64) -> Result<[[f64; 2]; 3], FrequencyError> {
    Ok(moments(t, k1, k2)?.action_grad())
}

/// Solves `Σ_l ∂J_l/∂κ_i Ω_l = −2π ∂J₃/∂κ_i` for `(Ω₁, Ω₂)`.
pub fn solve_frequencies(grad: &[[f64; 2]; 3]) -> Result<[f64; 2], FrequencyError> {
    let (a11, a12, a21, a22) = (grad[0][0], grad[1][0], grad[0][1], grad[1][1]);
    let (b1, b2) = (-2.0 * PI * grad[2][0], -2.0 * PI * grad[2][1]);
    let det = a11 * a22 - a12 * a21;
    let scale = a11.abs().max(a12.abs()).max(a21.abs()).max(a22.abs()).powi(2);
    if !(det.abs() >= 1e-12 * scale) {
        return Err(FrequencyError::SingularSystem { det });
    }
    Ok([(b1 * a22 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det])
}

/// `(Ω₁, Ω₂)` from the linear system on the action gradients.
pub fn frequencies(t: &ProfileTriple, k1: f64, k2: f64) -> Result<[f64; 2], FrequencyError> {
    solve_frequencies(&action_grad(t, k1, k2)?)
}

/// `(A, B, D)` as double integrals over pairs of segments, without the
/// moment factorization.
pub fn abd_double(t: &ProfileTriple, k1: f64, k2: f64) -> Result<[f64; 3], FrequencyError> {
    let (_, segs) = segments(t, k1, k2)?;
    let pair = |s: &Segment, r: &Segment| -> Result<f64, QuadError> {
        let xs = s.spec.with_n(32).with_tol(1e-14, 1e-12);
        let ys = r.spec.with_n(32).with_tol(1e-14, 1e-12);
        let f = |p: Point, q: Point| {
            let wp = (s.d(&p, 0) * s.d(&p, 1)).sqrt();
            let wq = (r.d(&q, 0) * r.d(&q, 1)).sqrt();
            (p.x - q.x) * s.rho(t, &p) * r.rho(t, &q) / (wp * wq)
        };
        Ok(integrate_2d(f, &xs, &ys)?.value)
    };
    let [u, v, w] = &segs;
    Ok([pair(v, w)?, pair(u, w)?, pair(u, v)?])
}

/// `(Ω₁, Ω₂)` from the double integrals `A`, `B`, `D`.
pub fn frequencies_double(t: &ProfileTriple, k1: f64, k2: f64) -> Result<[f64; 2], FrequencyError> {
    let [a, b, d] = abd_double(t, k1, k2)?;
    if d == 0.0 {
        return Err(FrequencyError::SingularSystem { det: d });
    }
    Ok([PI * a / d, PI * b / d])
}

/// Signed Jacobian of `(κ₁,κ₂) ↦ (Ω₁,Ω₂)`.
pub fn jacobian(t: &ProfileTriple, k1: f64, k2: f64) -> Result<f64, FrequencyError> {
    Ok(moments_with_derivatives(t, k1, k2)?.jacobian())
}

/// Everything computed at one grid point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyRecord {
    pub kappa1: f64,
    pub kappa2: f64,
    pub case: CaseTag,
    pub actions: [f64; 3],
    /// `grad[k][i] = ∂J_{k+1}/∂κ_{i+1}`.
    pub grad: [[f64; 2]; 3],
    pub omega: [f64; 2],
    pub jacobian: f64,
}

pub fn frequency_record(t: &ProfileTriple, k1: f64, k2: f64) -> Result<FrequencyRecord, FrequencyError> {
    let m = moments_with_derivatives(t, k1, k2)?;
    let grad = m.action_grad();
    let omega = solve_frequencies(&grad)?;
    if !(omega[0].is_finite() && omega[1].is_finite()) {
        return Err(FrequencyError::SingularSystem { det: m.abd()[2] });
    }
    Ok(FrequencyRecord {
        kappa1: k1,
        kappa2: k2,
        case: m.case,
        actions: actions(t, k1, k2)?,
        grad,
        omega,
        jacobian: m.jacobian(),
    })
}

/// Boundary integrals `I₁(κ) = ∫_{ν₁}^{ν₀} √(x−ν₃) ρ₁/√(x−κ)` and
/// `I₂(κ) = ∫_0^κ √(x−ν₃) ρ₂/√(κ−x)`.
pub fn boundary_integrals(t: &ProfileTriple, kappa: f64) -> Result<[f64; 2], FrequencyError> {
    let segs = boundary_segments(t, kappa)?;
    let n3 = t.nu3();
    let u = segs[0].moments(t)?;
    let v = segs[1].moments(t)?;
    Ok([u[1] - n3 * u[0], v[1] - n3 * v[0]])
}

fn boundary_segments(t: &ProfileTriple, kappa: f64) -> Result<[Segment; 2], FrequencyError> {
    if !(kappa > 0.0 && kappa < t.nu1()) {
        return Err(FrequencyError::OutOfRange(kappa));
    }
    let n3 = t.nu3();
    Ok([Segment::new(t, 1, t.nu1(), t.nu0(), n3, kappa), Segment::new(t, 2, 0.0, kappa, n3, kappa)])
}

/// Rotation function `ρ(κ) = 2 I₁(κ) / I₂(κ)` of the boundary geodesic flow.
pub fn boundary_rotation(t: &ProfileTriple, kappa: f64) -> Result<f64, FrequencyError> {
    let [i1, i2] = boundary_integrals(t, kappa)?;
    Ok(2.0 * i1 / i2)
}

/// Actions of the boundary geodesic flow,
/// `J₁(κ) = (8/π)∫√((x−ν₃)(x−κ))ρ₁` and `J₂(κ) = (4/π)∫√((x−ν₃)(κ−x))ρ₂`.
pub fn boundary_actions(t: &ProfileTriple, kappa: f64) -> Result<[f64; 2], FrequencyError> {
    let segs = boundary_segments(t, kappa)?;
    Ok([8.0 / PI * segs[0].root_integral(t)?, 4.0 / PI * segs[1].root_integral(t)?])
}

/// `δ(κ₂) = lim_{κ₁→ν₃} π⁻² D² 𝒥`, evaluated in closed form as
/// `2 ρ₃(ν₃)²/(κ₂−ν₃) · I₂² · d/dκ₂ (I₁/I₂)`.
///
/// The derivative uses central differences with `h = 10⁻⁴ ν₁` and one
/// Richardson step.
pub fn delta_limit(t: &ProfileTriple, k2: f64) -> Result<f64, FrequencyError> {
    let n1 = t.nu1();
    let h = 1e-4 * n1;
    if !(k2 - 2.0 * h > 0.0 && k2 + 2.0 * h < n1) {
        return Err(FrequencyError::OutOfRange(k2));
    }
    let ratio = |k: f64| -> Result<f64, FrequencyError> {
        let [i1, i2] = boundary_integrals(t, k)?;
        Ok(i1 / i2)
    };
    let c1 = (ratio(k2 + h)? - ratio(k2 - h)?) / (2.0 * h);
    let c2 = (ratio(k2 + 2.0 * h)? - ratio(k2 - 2.0 * h)?) / (4.0 * h);
    let dr = (4.0 * c1 - c2) / 3.0;
    let [_, i2] = boundary_integrals(t, k2)?;
    let r3 = t.branch(3).density_from(0.0, -t.nu3());
    Ok(2.0 * r3 * r3 / (k2 - t.nu3()) * i2 * i2 * dr)
}

/// `π⁻² D² 𝒥` at an interior point; tends to [`delta_limit`] as `κ₁ → ν₃`.
pub fn scaled_jacobian(t: &ProfileTriple, k1: f64, k2: f64) -> Result<f64, FrequencyError> {
    let m = moments_with_derivatives(t, k1, k2)?;
    let d = m.abd()[2];
    Ok(d * d * m.jacobian() / (PI * PI))
}

/// Phase tracker for the librating coordinate of a torus.
struct Phase {
    centre: f64,
    half_width: f64,
    p_scale: f64,
    last: f64,
    total: f64,
}

impl Phase {
    fn angle(&self, theta: f64, p: f64) -> f64 {
        (-p / self.p_scale).atan2((theta - self.centre) / self.half_width)
    }

    fn start(&mut self, theta: f64, p: f64) {
        self.last = self.angle(theta, p);
        self.total = 0.0;
    }

    fn update(&mut self, theta: f64, p: f64) {
        let a = self.angle(theta, p);
        let mut d = a - self.last;
        d -= 2.0 * PI * (d / (2.0 * PI)).round();
        self.total += d;
        self.last = a;
    }
}

/// Smooth weight `exp(−1/(s(1−s)))` for weighted Birkhoff averages.
fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (-1.0 / (s * (1.0 - s))).exp()
    }
}

/// Weighted Birkhoff average of a sequence of per-iterate displacements.
pub fn weighted_average(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for (k, x) in xs.iter().enumerate() {
        let w = bump((k as f64 + 0.5) / n);
        num += w * x;
        den += w;
    }
    num / den
}

/// Per-bounce winding `(w₁, w₂)` in cycles of the θ₁-cycle and θ₂-cycle
/// from `n` iterates of the billiard map, starting at the torus point over
/// `(θ₁, θ₂)`. Returns the raw per-bounce displacements.
pub fn winding_increments(
    t: &ProfileTriple,
    spec: &TorusSpec,
    start: (f64, f64),
    n: usize,
    opts: &FlowOptions,
) -> Result<Vec<[f64; 2]>, FrequencyError> {
    let (k1, k2) = (spec.kappa1, spec.kappa2);
    let xi0 = torus_point(t, spec, start.0, start.1)?;
    let mut phase = match spec.case {
        CaseTag::A => {
            let half = 0.5 * t.omega2();
            Phase {
                centre: half * (start.1 / half).round(),
                half_width: t.inverse_branch(2, k2).map_err(|_| FrequencyError::OutsideDomain(k1, k2))?,
                p_scale: (-k1 * k2).sqrt(),
                last: 0.0,
                total: 0.0,
            }
        }
        CaseTag::B => {
            let (q, f) = (0.25 * t.omega1(), t.inverse_branch(1, k2).map_err(|_| FrequencyError::OutsideDomain(k1, k2))?);
            let half = 0.5 * t.omega1();
            Phase {
                centre: q + half * ((start.0 - q) / half).round(),
                half_width: q - f,
                p_scale: ((t.nu0() - k1) * (t.nu0() - k2)).sqrt(),
                last: 0.0,
                total: 0.0,
            }
        }
        _ => return Err(FrequencyError::OutsideDomain(k1, k2)),
    };
    let lib = if spec.case == CaseTag::A { 1 } else { 0 };
    let circ = 1 - lib;
    let period = [t.omega1(), t.omega2()][circ];

    // one bounce to size the step cap
    let mut z = lift(t, &xi0)?;
    let (_, t_bounce) = integrate_to_boundary_observed(t, &z, opts, &mut |_, _| {})?;
    let opts = FlowOptions { max_step: Some(opts.max_step.unwrap_or(f64::INFINITY).min(t_bounce / 32.0)), ..*opts };

    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        phase.start(z.theta[lib], z.p[lib]);
        let c0 = z.theta[circ];
        let mut obs = |_: f64, y: &PhasePoint| phase.update(y.theta[lib], y.p[lib]);
        let (zb, _) = integrate_to_boundary_observed(t, &z, &opts, &mut obs)?;
        let mut w = [0.0; 2];
        w[circ] = (zb.theta[circ] - c0) / period;
        w[lib] = phase.total / (2.0 * PI);
        out.push(w);
        let xi = project(&reflect(t, &zb)?);
        z = lift(t, &xi)?;
    }
    Ok(out)
}

/// Empirical rotation vector `(w₁, w₂)` in cycles per bounce: a weighted
/// Birkhoff average of the winding increments. Converges to `Ω/2π`.
pub fn empirical_rotation(t: &ProfileTriple, spec: &TorusSpec, n: usize, opts: &FlowOptions) -> Result<[f64; 2], FrequencyError> {
    let start = match spec.case {
        CaseTag::A => (0.1 * t.omega1(), 0.0),
        _ => (0.25 * t.omega1(), 0.1 * t.omega2()),
    };
    empirical_rotation_from(t, spec, start, n, opts)
}

pub fn empirical_rotation_from(
    t: &ProfileTriple,
    spec: &TorusSpec,
    start: (f64, f64),
    n: usize,
    opts: &FlowOptions,
) -> Result<[f64; 2], FrequencyError> {
    let inc = winding_increments(t, spec, start, n, opts)?;
    let w1: Vec<f64> = inc.iter().map(|w| w[0]).collect();
    let w2: Vec<f64> = inc.iter().map(|w| w[1]).collect();
    Ok([weighted_average(&w1), weighted_average(&w2)])
}

/// Plain torus spec at `(κ₁, κ₂)`, checked to be case A or B.
pub fn boundary_torus(t: &ProfileTriple, k1: f64, k2: f64) -> Result<TorusSpec, FrequencyError> {
    let spec = TorusSpec::new(t, k1, k2)?;
    match spec.case {
        CaseTag::A | CaseTag::B => Ok(spec),
        _ => Err(FrequencyError::OutsideDomain(k1, k2)),
    }
}
