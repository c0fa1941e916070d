//! The billiard flow on `T*C` with reflection at `θ₃ = ±N`, and the
//! billiard ball map on the coball bundle of the boundary torus.
//!
//! The Hamiltonian is `H = Σ p_k²/Π_k` (no factor ½) with integrals
//! `I₁ = Σ s_k p_k²/Π_k`, `s = (φ₂+φ₃, φ₁+φ₃, φ₁+φ₂)`, and
//! `I₂ = Σ q_k p_k²/Π_k`, `q = (φ₂φ₃, φ₁φ₃, φ₁φ₂)`.
//!
//! Boundary hits are located by switching the independent variable to `θ₃`
//! for the final step, so the returned state lies on `|θ₃| = N` to rounding.

use std::cell::Cell;

use thiserror::Error;

use crate::covering::{branch_distance, MetricCoeffs};
use crate::ode::{gbs_step, step_factor};
use crate::profiles::ProfileTriple;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("state lies on the branch set")]
    BranchSetEvaluation,
    #[error("trajectory passed within {distance:e} of the branch set at t = {time}")]
    BranchProximity { time: f64, distance: f64 },
    #[error("step size underflow at t = {time}")]
    StepFailure { time: f64 },
    #[error("no boundary hit within {steps} steps")]
    MaxSteps { steps: usize },
    #[error("state is not on the boundary")]
    NotOnBoundary,
    #[error("momentum does not point into the table")]
    NotInward,
    #[error("covector too close to the unit cosphere (margin {margin:e})")]
    GlancingRay { margin: f64 },
    #[error("zero energy")]
    ZeroEnergy,
}

/// A point of `T*C`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub theta: [f64; 3],
    pub p: [f64; 3],
}

impl PhasePoint {
    pub fn new(theta: [f64; 3], p: [f64; 3]) -> Self {
        PhasePoint { theta, p }
    }

    fn to_array(self) -> [f64; 6] {
        [self.theta[0], self.theta[1], self.theta[2], self.p[0], self.p[1], self.p[2]]
    }

    fn from_slice(y: &[f64]) -> Self {
        PhasePoint { theta: [y[0], y[1], y[2]], p: [y[3], y[4], y[5]] }
    }
}

/// Boundary component `θ₃ = +N` or `θ₃ = −N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundarySide {
    Plus,
    Minus,
}

impl BoundarySide {
    pub fn sign(self) -> f64 {
        match self {
            BoundarySide::Plus => 1.0,
            BoundarySide::Minus => -1.0,
        }
    }
}

/// A covector of the boundary torus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryCovector {
    pub theta1: f64,
    pub theta2: f64,
    pub p1: f64,
    pub p2: f64,
    pub side: BoundarySide,
}

/// Integrator settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowOptions {
    pub tol: f64,
    pub max_step: Option<f64>,
    /// Minimum allowed distance to the branch set.
    pub branch_guard: f64,
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { tol: 1e-10, max_step: None, branch_guard: 1e-7, max_steps: 200_000 }
    }
}

impl FlowOptions {
    pub fn with_tol(tol: f64) -> Self {
        FlowOptions { tol, ..Default::default() }
    }

    // local error target; the step count per crossing is O(10), so a
    // margin of 1/1000 keeps the accumulated drift well below `tol`
    fn local_tol(&self) -> f64 {
        (1e-3 * self.tol).max(2e-14)
    }
}

fn coeffs(t: &ProfileTriple, y: &[f64]) -> MetricCoeffs {
    MetricCoeffs::from_phi([t.phi(1, y[0]), t.phi(2, y[1]), t.phi(3, y[2])])
}

/// `(H, I₁, I₂)` at a phase point.
pub fn hamiltonian_values(t: &ProfileTriple, z: &PhasePoint) -> Result<[f64; 3], DynamicsError> {
    let m = coeffs(t, &z.theta);
    if m.pi.iter().any(|&v| !(v > 0.0)) {
        return Err(DynamicsError::BranchSetEvaluation);
    }
    Ok(values_from(&m, &z.p))
}

fn values_from(m: &MetricCoeffs, p: &[f64; 3]) -> [f64; 3] {
    let [a, b, c] = m.phi;
    let w = [p[0] * p[0] / m.pi[0], p[1] * p[1] / m.pi[1], p[2] * p[2] / m.pi[2]];
    [
        w[0] + w[1] + w[2],
        (b + c) * w[0] + (a + c) * w[1] + (a + b) * w[2],
        b * c * w[0] + a * c * w[1] + a * b * w[2],
    ]
}

/// `∂Π_j/∂φ_k`, indexed `[j][k]`.
fn dpi_dphi(phi: &[f64; 3]) -> [[f64; 3]; 3] {
    let [a, b, c] = *phi;
    [
        [(a - c) + (a - b), -(a - c), -(a - b)],
        [b - c, (a - b) - (b - c), -(a - b)],
        [b - c, a - c, -(b - c) - (a - c)],
    ]
}

/// Hamilton's equations; `false` on the branch set or for non-finite input.
pub fn vector_field(t: &ProfileTriple, y: &[f64; 6], d: &mut [f64; 6]) -> bool {
    let m = coeffs(t, y);
    if m.pi.iter().any(|&v| !(v > 0.0)) {
        return false;
    }
    let dphi = [t.dphi(1, y[0]), t.dphi(2, y[1]), t.dphi(3, y[2])];
    let dp = dpi_dphi(&m.phi);
    let u = [y[3] / m.pi[0], y[4] / m.pi[1], y[5] / m.pi[2]];
    for k in 0..3 {
        d[k] = 2.0 * u[k];
        let mut s = 0.0;
        for j in 0..3 {
            s += u[j] * u[j] * dp[j][k];
        }
        d[3 + k] = s * dphi[k];
    }
    d.iter().all(|v| v.is_finite())
}

/// Gradients `(∂F/∂θ, ∂F/∂p)` of `H`, `I₁`, `I₂`.
pub fn analytic_gradients(t: &ProfileTriple, z: &PhasePoint) -> Result<[[f64; 6]; 3], DynamicsError> {
    let m = coeffs(t, &z.theta);
    if m.pi.iter().any(|&v| !(v > 0.0)) {
        return Err(DynamicsError::BranchSetEvaluation);
    }
    let [a, b, c] = m.phi;
    let dphi = [t.dphi(1, z.theta[0]), t.dphi(2, z.theta[1]), t.dphi(3, z.theta[2])];
    let dp = dpi_dphi(&m.phi);
    // numerator coefficients n_j and ∂n_j/∂φ_k for each function
    let nums: [[f64; 3]; 3] = [[1.0, 1.0, 1.0], [b + c, a + c, a + b], [b * c, a * c, a * b]];
    let dnums: [[[f64; 3]; 3]; 3] = [
        [[0.0; 3]; 3],
        [[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]],
        [[0.0, c, b], [c, 0.0, a], [b, a, 0.0]],
    ];
    let mut out = [[0.0; 6]; 3];
    for f in 0..3 {
        for k in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                let pj2 = z.p[j] * z.p[j];
                let pi = m.pi[j];
                s += pj2 * (dnums[f][j][k] * pi - nums[f][j] * dp[j][k]) / (pi * pi);
            }
            out[f][k] = s * dphi[k];
            out[f][3 + k] = 2.0 * nums[f][k] * z.p[k] / m.pi[k];
        }
    }
    Ok(out)
}

/// Central-difference gradients of `H`, `I₁`, `I₂` with step `h`.
pub fn fd_gradients(t: &ProfileTriple, z: &PhasePoint, h: f64) -> Result<[[f64; 6]; 3], DynamicsError> {
    let y = z.to_array();
    let mut out = [[0.0; 6]; 3];
    for i in 0..6 {
        let (mut yp, mut ym) = (y, y);
        yp[i] += h;
        ym[i] -= h;
        let vp = hamiltonian_values(t, &PhasePoint::from_slice(&yp))?;
        let vm = hamiltonian_values(t, &PhasePoint::from_slice(&ym))?;
        for f in 0..3 {
            out[f][i] = (vp[f] - vm[f]) / (2.0 * h);
        }
    }
    Ok(out)
}

/// `({H,I₁}, {H,I₂}, {I₁,I₂})` from gradients.
pub fn poisson_brackets(grad: &[[f64; 6]; 3]) -> [f64; 3] {
    let br = |f: &[f64; 6], g: &[f64; 6]| (0..3).map(|k| f[k] * g[3 + k] - f[3 + k] * g[k]).sum::<f64>();
    [br(&grad[0], &grad[1]), br(&grad[0], &grad[2]), br(&grad[1], &grad[2])]
}

/// What stops the flow.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Stop {
    Boundary,
    Time(f64),
}

struct Guarded<'a> {
    table: &'a ProfileTriple,
    min_dist: Cell<f64>,
}

impl Guarded<'_> {
    fn field(&self, y: &[f64; 6], d: &mut [f64; 6]) -> bool {
        let p = self.table.params();
        self.min_dist.set(self.min_dist.get().min(branch_distance(p, y[0], y[1], y[2])));
        vector_field(self.table, y, d)
    }

    // θ₃ as independent variable, time as the seventh component
    fn henon_field(&self, y: &[f64; 7], d: &mut [f64; 7]) -> bool {
        let mut s = [0.0; 6];
        let mut yy = [0.0; 6];
        yy.copy_from_slice(&y[..6]);
        if !self.field(&yy, &mut s) || s[2] == 0.0 {
            return false;
        }
        let inv = 1.0 / s[2];
        for i in 0..6 {
            d[i] = s[i] * inv;
        }
        d[6] = inv;
        true
    }

    fn reset(&self) {
        self.min_dist.set(f64::INFINITY);
    }
}

/// Observer of accepted states `(time, state)`.
pub type Observer<'a> = &'a mut dyn FnMut(f64, &PhasePoint);

fn initial_step(t: &ProfileTriple, y: &[f64; 6]) -> f64 {
    let mut d = [0.0; 6];
    if !vector_field(t, y, &mut d) {
        return 1e-3;
    }
    let speed = d[..3].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let len = t.n_half().min(t.omega1()).min(t.omega2());
    if speed > 0.0 {
        0.05 * len / speed
    } else {
        0.05 * len
    }
}

fn run(
    t: &ProfileTriple,
    z: &PhasePoint,
    stop: Stop,
    opts: &FlowOptions,
    mut observer: Option<Observer<'_>>,
) -> Result<(PhasePoint, f64), DynamicsError> {
    let n = t.n_half();
    let tol = opts.local_tol();
    let g = Guarded { table: t, min_dist: Cell::new(f64::INFINITY) };
    let mut y = z.to_array();
    if hamiltonian_values(t, z)?[0] <= 0.0 {
        return Err(DynamicsError::ZeroEnergy);
    }
    if y[2].abs() >= n && y[2] * y[5] >= 0.0 {
        match stop {
            Stop::Boundary => return Err(DynamicsError::NotInward),
            Stop::Time(_) => y[5] = -y[5],
        }
    }
    let mut time = 0.0;
    let mut h = initial_step(t, &y);
    let h_min = 1e-14 * h.max(1e-300);
    let mut field = |u: &[f64; 6], d: &mut [f64; 6]| g.field(u, d);
    for _ in 0..opts.max_steps {
        let mut hh = h;
        if let Some(m) = opts.max_step {
            hh = hh.min(m);
        }
        if let Stop::Time(total) = stop {
            let rest = total - time;
            if rest <= 0.0 {
                return Ok((PhasePoint::from_slice(&y), time));
            }
            hh = hh.min(rest);
        }
        g.reset();
        let Some(step) = gbs_step(&mut field, &y, hh, tol) else {
            h = 0.25 * hh;
            if h < h_min {
                return Err(fail(&g, opts, time));
            }
            continue;
        };
        if step.err > 1.0 {
            h = hh * step_factor(step.err);
            if h < h_min {
                return Err(fail(&g, opts, time));
            }
            continue;
        }
        if g.min_dist.get() < opts.branch_guard {
            return Err(DynamicsError::BranchProximity { time, distance: g.min_dist.get() });
        }
        let yn = step.y;
        if yn[2].abs() > n {
            let side = yn[2].signum();
            if yn[5].signum() != y[5].signum() {
                h = 0.5 * hh;
                if h < h_min {
                    return Err(DynamicsError::StepFailure { time });
                }
                continue;
            }
            let (yb, dt) = henon_to(&g, &y, side * n, tol, opts)?;
            time += dt;
            let zb = PhasePoint::from_slice(&yb);
            if let Some(obs) = observer.as_mut() {
                obs(time, &zb);
            }
            match stop {
                Stop::Boundary => return Ok((zb, time)),
                Stop::Time(_) => {
                    y = yb;
                    y[5] = -y[5];
                    h = hh;
                    continue;
                }
            }
        }
        y = yn;
        time += hh;
        if let Some(obs) = observer.as_mut() {
            obs(time, &PhasePoint::from_slice(&y));
        }
        h = hh * step_factor(step.err);
        if let Stop::Time(total) = stop {
            if time >= total {
                return Ok((PhasePoint::from_slice(&y), total));
            }
        }
    }
    Err(DynamicsError::MaxSteps { steps: opts.max_steps })
}

fn fail(g: &Guarded<'_>, opts: &FlowOptions, time: f64) -> DynamicsError {
    if g.min_dist.get() < opts.branch_guard {
        DynamicsError::BranchProximity { time, distance: g.min_dist.get() }
    } else {
        DynamicsError::StepFailure { time }
    }
}

/// Integrates in `θ₃` from `y` to `θ₃ = target`, returning the state on the
/// boundary and the elapsed time.
fn henon_to(
    g: &Guarded<'_>,
    y: &[f64; 6],
    target: f64,
    tol: f64,
    opts: &FlowOptions,
) -> Result<([f64; 6], f64), DynamicsError> {
    let mut u = [y[0], y[1], y[2], y[3], y[4], y[5], 0.0];
    let mut field = |v: &[f64; 7], d: &mut [f64; 7]| g.henon_field(v, d);
    let mut hs = target - u[2];
    let h_min = 1e-14 * hs.abs().max(1e-300);
    for _ in 0..1000 {
        let rest = target - u[2];
        if rest == 0.0 {
            break;
        }
        if hs.abs() > rest.abs() {
            hs = rest;
        }
        g.reset();
        match gbs_step(&mut field, &u, hs, tol) {
            Some(s) if s.err <= 1.0 && s.y[5].signum() == y[5].signum() => {
                if g.min_dist.get() < opts.branch_guard {
                    return Err(DynamicsError::BranchProximity { time: u[6], distance: g.min_dist.get() });
                }
                let last = hs == rest;
                u = s.y;
                if last {
                    u[2] = target;
                    break;
                }
                hs *= step_factor(s.err);
            }
            Some(s) if s.err > 1.0 => hs *= step_factor(s.err),
            _ => hs *= 0.25,
        }
        if hs.abs() < h_min {
            return Err(DynamicsError::StepFailure { time: u[6] });
        }
    }
    let mut out = [0.0; 6];
    out.copy_from_slice(&u[..6]);
    out[2] = target;
    Ok((out, u[6]))
}

/// Flows until `|θ₃| = N`; returns the boundary state (before reflection)
/// and the elapsed time.
pub fn integrate_to_boundary(
    t: &ProfileTriple,
    z: &PhasePoint,
    opts: &FlowOptions,
) -> Result<(PhasePoint, f64), DynamicsError> {
    run(t, z, Stop::Boundary, opts, None)
}

/// As [`integrate_to_boundary`], calling `observer` after each accepted step.
pub fn integrate_to_boundary_observed(
    t: &ProfileTriple,
    z: &PhasePoint,
    opts: &FlowOptions,
    observer: Observer<'_>,
) -> Result<(PhasePoint, f64), DynamicsError> {
    run(t, z, Stop::Boundary, opts, Some(observer))
}

/// Flows for a fixed time, reflecting at the boundary.
pub fn flow_for(t: &ProfileTriple, z: &PhasePoint, duration: f64, opts: &FlowOptions) -> Result<PhasePoint, DynamicsError> {
    run(t, z, Stop::Time(duration), opts, None).map(|r| r.0)
}

/// `p₃ ↦ −p₃` at a boundary state.
pub fn reflect(t: &ProfileTriple, z: &PhasePoint) -> Result<PhasePoint, DynamicsError> {
    let n = t.n_half();
    if (z.theta[2].abs() - n).abs() > 1e-12 * n {
        return Err(DynamicsError::NotOnBoundary);
    }
    Ok(PhasePoint { theta: z.theta, p: [z.p[0], z.p[1], -z.p[2]] })
}

/// Coball margin `1 − p₁²/Π₁ − p₂²/Π₂` on the boundary.
pub fn coball_margin(t: &ProfileTriple, xi: &BoundaryCovector) -> Result<f64, DynamicsError> {
    let m = coeffs(t, &[xi.theta1, xi.theta2, xi.side.sign() * t.n_half()]);
    if !(m.pi[0] > 0.0 && m.pi[1] > 0.0) {
        return Err(DynamicsError::BranchSetEvaluation);
    }
    Ok(1.0 - xi.p1 * xi.p1 / m.pi[0] - xi.p2 * xi.p2 / m.pi[1])
}

/// Lifts a boundary covector to the unit-energy inward phase point.
pub fn lift(t: &ProfileTriple, xi: &BoundaryCovector) -> Result<PhasePoint, DynamicsError> {
    let margin = coball_margin(t, xi)?;
    if margin < 1e-10 {
        return Err(DynamicsError::GlancingRay { margin });
    }
    let theta3 = xi.side.sign() * t.n_half();
    let m = coeffs(t, &[xi.theta1, xi.theta2, theta3]);
    let p3 = -xi.side.sign() * m.pi[2].sqrt() * margin.sqrt();
    Ok(PhasePoint { theta: [xi.theta1, xi.theta2, theta3], p: [xi.p1, xi.p2, p3] })
}

/// Projects a boundary phase point to its covector.
pub fn project(z: &PhasePoint) -> BoundaryCovector {
    let side = if z.theta[2] > 0.0 { BoundarySide::Plus } else { BoundarySide::Minus };
    BoundaryCovector { theta1: z.theta[0], theta2: z.theta[1], p1: z.p[0], p2: z.p[1], side }
}

/// `(𝓘₁, 𝓘₂)` of a boundary covector.
pub fn boundary_integrals(t: &ProfileTriple, xi: &BoundaryCovector) -> Result<[f64; 2], DynamicsError> {
    let nu3 = t.nu3();
    let m = coeffs(t, &[xi.theta1, xi.theta2, xi.side.sign() * t.n_half()]);
    if !(m.pi[0] > 0.0 && m.pi[1] > 0.0) {
        return Err(DynamicsError::BranchSetEvaluation);
    }
    let [a, b, _] = m.phi;
    let w1 = xi.p1 * xi.p1 / m.pi[0];
    let w2 = xi.p2 * xi.p2 / m.pi[1];
    Ok([a + b - (a - nu3) * w1 - (b - nu3) * w2, a * b - b * (a - nu3) * w1 - a * (b - nu3) * w2])
}

/// One bounce: lift, flow to the boundary, reflect, project.
pub fn billiard_map(t: &ProfileTriple, xi: &BoundaryCovector, opts: &FlowOptions) -> Result<BoundaryCovector, DynamicsError> {
    Ok(billiard_step(t, xi, opts)?.0)
}

fn billiard_step(
    t: &ProfileTriple,
    xi: &BoundaryCovector,
    opts: &FlowOptions,
) -> Result<(BoundaryCovector, PhasePoint, f64), DynamicsError> {
    let z = lift(t, xi)?;
    let (zb, dt) = integrate_to_boundary(t, &z, opts)?;
    Ok((project(&zb), zb, dt))
}

/// One row of a bounce log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BounceRecord {
    pub index: usize,
    pub theta1: f64,
    pub theta2: f64,
    pub p1: f64,
    pub p2: f64,
    pub side: BoundarySide,
    pub h: f64,
    pub i1: f64,
    pub i2: f64,
    pub time: f64,
}

/// Follows the flow through `n` bounces without re-normalizing, recording
/// the boundary states. Row 0 is the lifted initial state.
pub fn trajectory(
    t: &ProfileTriple,
    xi0: &BoundaryCovector,
    n: usize,
    opts: &FlowOptions,
) -> Result<Vec<BounceRecord>, DynamicsError> {
    let mut z = lift(t, xi0)?;
    let mut time = 0.0;
    let record = |index: usize, z: &PhasePoint, time: f64| -> Result<BounceRecord, DynamicsError> {
        let [h, i1, i2] = hamiltonian_values(t, z)?;
        let c = project(z);
        Ok(BounceRecord { index, theta1: c.theta1, theta2: c.theta2, p1: c.p1, p2: c.p2, side: c.side, h, i1, i2, time })
    };
    let mut out = vec![record(0, &z, 0.0)?];
    for k in 1..=n {
        let (zb, dt) = integrate_to_boundary(t, &z, opts)?;
        time += dt;
        out.push(record(k, &zb, time)?);
        z = reflect(t, &zb)?;
    }
    Ok(out)
}

/// Maximum drift of `(H, I₁, I₂)` and `(𝓘₁, 𝓘₂)` over a bounce sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservationReport {
    pub bounces: usize,
    /// `|F_n − F_0| / max(|F_0|, s^k)` with `s = |ν₀| + |ν₃|`, `k` the degree in φ.
    pub drift: [f64; 3],
    pub boundary_drift: [f64; 2],
}

impl ConservationReport {
    pub fn max_drift(&self) -> f64 {
        self.drift.iter().chain(&self.boundary_drift).fold(0.0f64, |m, v| m.max(*v))
    }
}

pub fn conservation_report(
    t: &ProfileTriple,
    xi0: &BoundaryCovector,
    n: usize,
    opts: &FlowOptions,
) -> Result<ConservationReport, DynamicsError> {
    let s = t.nu0().abs() + t.nu3().abs();
    let scale = [1.0, s, s * s];
    let rows = trajectory(t, xi0, n, opts)?;
    let first = rows[0];
    let b0 = boundary_integrals(t, xi0)?;
    let mut drift = [0.0f64; 3];
    let mut bdrift = [0.0f64; 2];
    let f0 = [first.h, first.i1, first.i2];
    for r in &rows[1..] {
        let f = [r.h, r.i1, r.i2];
        for k in 0..3 {
            drift[k] = drift[k].max((f[k] - f0[k]).abs() / f0[k].abs().max(scale[k]));
        }
        // the boundary integrals assume unit energy; compare after rescaling
        let xi = BoundaryCovector { theta1: r.theta1, theta2: r.theta2, p1: r.p1 / r.h.sqrt(), p2: r.p2 / r.h.sqrt(), side: r.side };
        let b = boundary_integrals(t, &xi)?;
        for k in 0..2 {
            bdrift[k] = bdrift[k].max((b[k] - b0[k]).abs() / b0[k].abs().max(scale[k + 1]));
        }
    }
    Ok(ConservationReport { bounces: n, drift, boundary_drift: bdrift })
}
