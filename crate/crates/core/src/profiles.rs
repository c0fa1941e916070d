//! Profile triples `(φ₁, φ₂, φ₃)` defining a table, their inverse branches
//! and densities.
//!
//! Each branch maps an interval of values back to a quarter period (or to
//! `[0, N]` for `φ₃`):
//!
//! | branch | values     | angles       |
//! |--------|------------|--------------|
//! | 1      | `[ν₁, ν₀]` | `[0, ω₁/4]`  |
//! | 2      | `[0, ν₁]`  | `[0, ω₂/4]`  |
//! | 3      | `[ν₃, 0]`  | `[N, 0]`     |
//!
//! Densities are `ρ_k = |f_k′|`. With `x = lo + L·sin²ψ` the inverse branch
//! is analytic in `ψ` up to both ends, so a branch caches Chebyshev
//! interpolants of `θ(ψ)` and `g(ψ) = |dθ/dψ|` and evaluates
//! `ρ = g(ψ) / (2√((x−lo)(hi−x)))`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::chebyshev::Chebyshev;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("incompatible parameters: order-2 matching needs {lhs} = {rhs}")]
    IncompatibleParameters { lhs: f64, rhs: f64 },
    #[error("non-positive gap between φ₁ and φ₂: min φ₁ − max φ₂ = {gap}")]
    NonPositiveGap { gap: f64 },
    #[error("monotonicity violated for φ{which} at θ = {theta}")]
    MonotonicityViolation { which: usize, theta: f64 },
    #[error("condition {name} failed with residual {residual}")]
    ConditionFailed { name: String, residual: f64 },
    #[error("x = {x} outside the range of branch {which}")]
    OutOfRange { which: usize, x: f64 },
    #[error("x = {x} is at a singular end of branch {which}")]
    EndpointSingularity { which: usize, x: f64 },
    #[error("unknown profile family {0:?}")]
    UnknownFamily(String),
}

/// A profile function with analytic first and second derivatives.
#[derive(Clone)]
pub struct Profile {
    value: RealFn,
    d1: RealFn,
    d2: RealFn,
}

impl Profile {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Profile { value: Arc::new(value), d1: Arc::new(d1), d2: Arc::new(d2) }
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    pub fn d1(&self, t: f64) -> f64 {
        (self.d1)(t)
    }

    pub fn d2(&self, t: f64) -> f64 {
        (self.d2)(t)
    }

    /// Derivative of any order; orders above two difference the analytic
    /// second derivative with step `1e-4·scale` and one Richardson step.
    pub fn derivative(&self, order: usize, t: f64, scale: f64) -> f64 {
        match order {
            0 => self.value(t),
            1 => self.d1(t),
            2 => self.d2(t),
            _ => {
                let m = order - 2;
                let h = 1e-4 * scale;
                let diff = |h: f64| -> f64 {
                    let mut acc = 0.0;
                    let mut binom = 1.0;
                    for j in 0..=m {
                        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                        acc += sign * binom * self.d2(t + (0.5 * m as f64 - j as f64) * h);
                        binom = binom * (m - j) as f64 / (j + 1) as f64;
                    }
                    acc / h.powi(m as i32)
                };
                (4.0 * diff(0.5 * h) - diff(h)) / 3.0
            }
        }
    }

    /// `c·φ`.
    pub fn scaled(&self, c: f64) -> Self {
        let (v, d1, d2) = (self.value.clone(), self.d1.clone(), self.d2.clone());
        Profile::new(move |t| c * v(t), move |t| c * d1(t), move |t| c * d2(t))
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Profile")
    }
}

/// Critical values, periods and half-height of a table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableParams {
    pub nu0: f64,
    pub nu1: f64,
    pub nu3: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// Half-height `N` of the cylinder.
    pub n: f64,
}

impl TableParams {
    pub fn check(&self) -> Result<(), ProfileError> {
        let all = [self.nu0, self.nu1, self.nu3, self.omega1, self.omega2, self.n];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ProfileError::InvalidParameters("non-finite parameter".into()));
        }
        if !(self.nu0 > self.nu1 && self.nu1 > 0.0 && self.nu3 < 0.0) {
            return Err(ProfileError::InvalidParameters(format!(
                "need ν₀ > ν₁ > 0 > ν₃, got ({}, {}, {})",
                self.nu0, self.nu1, self.nu3
            )));
        }
        if !(self.omega1 > 0.0 && self.omega2 > 0.0 && self.n > 0.0) {
            return Err(ProfileError::InvalidParameters("periods and N must be positive".into()));
        }
        Ok(())
    }

    /// Overall value scale `ν₀ − ν₃`.
    pub fn scale(&self) -> f64 {
        self.nu0 - self.nu3
    }
}

/// End of a branch interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// Leading coefficient of a density at a singular end: `ρ ≈ G(0)/√|x − e|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeData {
    pub which: usize,
    /// The critical value `e` (one of ν₀, ν₁, 0).
    pub endpoint: f64,
    pub side: Side,
    /// `lim √|x−e|·ρ(x)`, positive.
    pub g0: f64,
}

impl EdgeData {
    /// Coefficient with the sign convention `+` at lower ends, `−` at upper ends.
    pub fn signed(&self) -> f64 {
        match self.side {
            Side::Lower => self.g0,
            Side::Upper => -self.g0,
        }
    }
}

/// Cached inverse of one monotone piece of a profile.
#[derive(Clone, Debug)]
pub struct Branch {
    pub which: usize,
    pub lo: f64,
    pub hi: f64,
    theta_at_lo: f64,
    theta_at_hi: f64,
    lo_singular: bool,
    hi_singular: bool,
    regular_lo_density: f64,
    theta: Chebyshev,
    g: Chebyshev,
}

impl Branch {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lo_singular(&self) -> bool {
        self.lo_singular
    }

    pub fn hi_singular(&self) -> bool {
        self.hi_singular
    }

    fn psi(da: f64, db: f64) -> f64 {
        da.max(0.0).sqrt().atan2(db.max(0.0).sqrt())
    }

    /// Inverse branch from the distances to both ends, interpolated.
    pub fn theta_from(&self, da: f64, db: f64) -> f64 {
        self.theta.eval(Self::psi(da, db))
    }

    /// Density from the distances to both ends.
    pub fn density_from(&self, da: f64, db: f64) -> f64 {
        let g = self.g.eval(Self::psi(da, db));
        let denom = 2.0 * (da * db).sqrt();
        if denom > 0.0 {
            g / denom
        } else if da <= 0.0 && !self.lo_singular {
            self.regular_lo_density
        } else {
            f64::INFINITY
        }
    }

    /// `√(x−lo)·√(hi−x)·ρ(x)`, bounded on the closed interval.
    pub fn regular_part(&self, da: f64, db: f64) -> f64 {
        0.5 * self.g.eval(Self::psi(da, db))
    }
}

/// The profile triple of a table, with lazily built inverse branches.
pub struct ProfileTriple {
    params: TableParams,
    phi: [Profile; 3],
    branches: [OnceLock<Branch>; 3],
}

impl Clone for ProfileTriple {
    fn clone(&self) -> Self {
        let branches: [OnceLock<Branch>; 3] = Default::default();
        for (dst, src) in branches.iter().zip(&self.branches) {
            if let Some(b) = src.get() {
                let _ = dst.set(b.clone());
            }
        }
        ProfileTriple { params: self.params, phi: self.phi.clone(), branches }
    }
}

impl fmt::Debug for ProfileTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProfileTriple").field("params", &self.params).finish()
    }
}

impl ProfileTriple {
    /// Builds a triple and rejects it when a hard condition fails.
    pub fn new(params: TableParams, phi: [Profile; 3]) -> Result<Self, ProfileError> {
        let t = Self::unchecked(params, phi)?;
        validate(&t, 2)?;
        Ok(t)
    }

    /// Builds a triple checking only the parameter signs.
    pub fn unchecked(params: TableParams, phi: [Profile; 3]) -> Result<Self, ProfileError> {
        params.check()?;
        Ok(ProfileTriple { params, phi, branches: Default::default() })
    }

    pub fn params(&self) -> &TableParams {
        &self.params
    }

    pub fn nu0(&self) -> f64 {
        self.params.nu0
    }

    pub fn nu1(&self) -> f64 {
        self.params.nu1
    }

    pub fn nu3(&self) -> f64 {
        self.params.nu3
    }

    pub fn omega1(&self) -> f64 {
        self.params.omega1
    }

    pub fn omega2(&self) -> f64 {
        self.params.omega2
    }

    pub fn n_half(&self) -> f64 {
        self.params.n
    }

    pub fn profile(&self, k: usize) -> &Profile {
        &self.phi[k - 1]
    }

    #[inline]
    pub fn phi(&self, k: usize, t: f64) -> f64 {
        self.phi[k - 1].value(t)
    }

    #[inline]
    pub fn dphi(&self, k: usize, t: f64) -> f64 {
        self.phi[k - 1].d1(t)
    }

    #[inline]
    pub fn ddphi(&self, k: usize, t: f64) -> f64 {
        self.phi[k - 1].d2(t)
    }

    /// Value interval `[lo, hi]` of branch `k`.
    pub fn branch_range(&self, k: usize) -> (f64, f64) {
        match k {
            1 => (self.params.nu1, self.params.nu0),
            2 => (0.0, self.params.nu1),
            _ => (self.params.nu3, 0.0),
        }
    }

    fn theta_ends(&self, k: usize) -> (f64, f64) {
        match k {
            1 => (0.0, 0.25 * self.params.omega1),
            2 => (0.0, 0.25 * self.params.omega2),
            _ => (self.params.n, 0.0),
        }
    }

    /// Cached branch `k ∈ {1, 2, 3}`.
    pub fn branch(&self, k: usize) -> &Branch {
        assert!((1..=3).contains(&k), "branch index {k} out of 1..=3");
        self.branches[k - 1].get_or_init(|| self.build_branch(k))
    }

    fn build_branch(&self, k: usize) -> Branch {
        let (lo, hi) = self.branch_range(k);
        let (t_lo, t_hi) = self.theta_ends(k);
        let len = hi - lo;
        let solve = |psi: f64| {
            let (s, c) = psi.sin_cos();
            self.solve_theta(k, len * s * s, len * c * c, None)
        };
        let theta = Chebyshev::fit_adaptive(solve, 0.0, FRAC_PI_2, 16, 1024, 1e-14);
        let g = Chebyshev::fit_adaptive(
            |psi: f64| {
                let t = solve(psi);
                len * (2.0 * psi).sin() / self.dphi(k, t).abs()
            },
            0.0,
            FRAC_PI_2,
            16,
            1024,
            1e-14,
        );
        Branch {
            which: k,
            lo,
            hi,
            theta_at_lo: t_lo,
            theta_at_hi: t_hi,
            lo_singular: k != 3,
            hi_singular: true,
            regular_lo_density: 1.0 / self.dphi(k, t_lo).abs(),
            theta,
            g,
        }
    }

    /// Solves `φ_k(θ) = lo + da = hi − db` on the branch by safeguarded Newton.
    fn solve_theta(&self, k: usize, da: f64, db: f64, guess: Option<f64>) -> f64 {
        let (lo, hi) = self.branch_range(k);
        let (t_lo, t_hi) = self.theta_ends(k);
        if da <= 0.0 {
            return t_lo;
        }
        if db <= 0.0 {
            return t_hi;
        }
        let near_lo = da <= db;
        // residual increasing in the direction from t_lo to t_hi
        let resid = |t: f64| {
            if near_lo {
                (self.phi(k, t) - lo) - da
            } else {
                db - (hi - self.phi(k, t))
            }
        };
        let dir = (t_hi - t_lo).signum();
        let normal_form = |end_t: f64, dist: f64, toward: f64| {
            let c2 = self.ddphi(k, end_t).abs();
            if c2 > 0.0 {
                end_t + toward * (2.0 * dist / c2).sqrt()
            } else {
                end_t + toward * dist / self.dphi(k, end_t).abs().max(f64::MIN_POSITIVE)
            }
        };
        let mut t = guess.unwrap_or_else(|| {
            if near_lo {
                if k == 3 {
                    t_lo + dir * da / self.dphi(k, t_lo).abs()
                } else {
                    normal_form(t_lo, da, dir)
                }
            } else {
                normal_form(t_hi, db, -dir)
            }
        });
        let (mut a, mut b) = if dir > 0.0 { (t_lo, t_hi) } else { (t_hi, t_lo) };
        // in increasing-θ coordinates the residual has sign `dir`
        let f = |t: f64| dir * resid(t);
        if !(t > a && t < b) {
            t = 0.5 * (a + b);
        }
        for _ in 0..200 {
            let ft = f(t);
            if ft == 0.0 {
                return t;
            }
            if ft > 0.0 {
                b = t;
            } else {
                a = t;
            }
            let slope = dir * self.dphi(k, t);
            let mut next = if slope != 0.0 { t - ft / slope } else { f64::NAN };
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - t).abs() <= 2.0 * f64::EPSILON * t.abs().max(1e-300) || (b - a) <= 4.0 * f64::EPSILON * b.abs() {
                return next;
            }
            t = next;
        }
        t
    }

    fn check_branch_input(&self, k: usize, x: f64) -> Result<(f64, f64), ProfileError> {
        if !(1..=3).contains(&k) {
            return Err(ProfileError::OutOfRange { which: k, x });
        }
        let (lo, hi) = self.branch_range(k);
        if !(x >= lo && x <= hi) {
            return Err(ProfileError::OutOfRange { which: k, x });
        }
        Ok((x - lo, hi - x))
    }

    /// `f_k(x)`: the angle in the branch range with `φ_k(θ) = x`.
    pub fn inverse_branch(&self, k: usize, x: f64) -> Result<f64, ProfileError> {
        let (da, db) = self.check_branch_input(k, x)?;
        let guess = self.branch(k).theta_from(da, db);
        Ok(self.solve_theta(k, da, db, Some(guess)))
    }

    /// `ρ_k(x) = |f_k′(x)|` for `x` inside the branch interval.
    pub fn density(&self, k: usize, x: f64) -> Result<f64, ProfileError> {
        let (da, db) = self.check_branch_input(k, x)?;
        let b = self.branch(k);
        let (lo, hi) = self.branch_range(k);
        let tol = |e: f64| 1e-14 * (1.0 + e.abs());
        if (b.lo_singular && da <= tol(lo)) || (b.hi_singular && db <= tol(hi)) {
            return Err(ProfileError::EndpointSingularity { which: k, x });
        }
        Ok(b.density_from(da, db))
    }

    /// Leading density coefficients at all singular branch ends.
    pub fn edge_data(&self) -> Vec<EdgeData> {
        let mut out = Vec::with_capacity(5);
        for k in 1..=3 {
            let b = self.branch(k);
            let root_len = 2.0 * b.len().sqrt();
            if b.lo_singular {
                out.push(EdgeData { which: k, endpoint: b.lo, side: Side::Lower, g0: b.g.eval(0.0) / root_len });
            }
            if b.hi_singular {
                out.push(EdgeData { which: k, endpoint: b.hi, side: Side::Upper, g0: b.g.eval(FRAC_PI_2) / root_len });
            }
        }
        out
    }

    /// The table with every profile and critical value multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self, ProfileError> {
        let p = self.params;
        let params = TableParams { nu0: c * p.nu0, nu1: c * p.nu1, nu3: c * p.nu3, ..p };
        Self::unchecked(params, [self.phi[0].scaled(c), self.phi[1].scaled(c), self.phi[2].scaled(c)])
    }

    /// Angle of branch `k` at the end with value `x_end`, for diagnostics.
    pub fn branch_angles(&self, k: usize) -> (f64, f64) {
        let b = self.branch(k);
        (b.theta_at_lo, b.theta_at_hi)
    }
}

/// Outcome class of a validation check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Hard,
    Warning,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub severity: Severity,
    pub passed: bool,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub order: usize,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn hard_failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed && c.severity == Severity::Hard)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed && c.severity == Severity::Warning)
    }

    pub fn all_hard_pass(&self) -> bool {
        self.hard_failures().next().is_none()
    }
}

const SAMPLES: usize = 2001;

fn grid(a: f64, b: f64) -> impl Iterator<Item = f64> {
    (0..SAMPLES).map(move |i| a + (b - a) * i as f64 / (SAMPLES - 1) as f64)
}

/// Evaluates the table conditions on sample grids.
///
/// Parity, periodicity, symmetry, range and monotonicity checks are hard;
/// the derivative matching at the branch contacts is reported as a warning.
/// Derivative matching is checked for even orders up to `min(order, 4)`.
pub fn validation_report(t: &ProfileTriple, order: usize) -> ValidationReport {
    let p = *t.params();
    let scale = p.scale();
    let tol = 1e-10 * scale;
    let mut checks = Vec::new();
    let mut push = |name: &str, severity, residual: f64, ok: bool| {
        checks.push(Check { name: name.to_string(), severity, passed: ok, residual })
    };
    let max_over = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0f64, |m, v| m.max(v));
    let (w1, w2, n) = (p.omega1, p.omega2, p.n);

    // range and gap
    let min1 = grid(0.0, w1).map(|s| t.phi(1, s)).fold(f64::INFINITY, f64::min);
    let max1 = grid(0.0, w1).map(|s| t.phi(1, s)).fold(f64::NEG_INFINITY, f64::max);
    let min2 = grid(0.0, w2).map(|s| t.phi(2, s)).fold(f64::INFINITY, f64::min);
    let max2 = grid(0.0, w2).map(|s| t.phi(2, s)).fold(f64::NEG_INFINITY, f64::max);
    let max3 = grid(-n, n).map(|s| t.phi(3, s)).fold(f64::NEG_INFINITY, f64::max);
    let gap = min1 - max2;
    push("A1 gap min φ₁ − max φ₂ ≥ 0", Severity::Hard, gap, gap >= -tol);
    let order_res = (-min2).max(max3).max(0.0);
    push("A1 ordering φ₂ ≥ 0 ≥ φ₃", Severity::Hard, order_res, order_res <= tol);

    // monotonicity on open quarter periods and on (0, N]
    let mono1 = grid(0.0, 0.25 * w1).skip(1).take(SAMPLES - 2).map(|s| -t.dphi(1, s)).fold(f64::NEG_INFINITY, f64::max);
    let mono2 = grid(0.0, 0.25 * w2).skip(1).take(SAMPLES - 2).map(|s| -t.dphi(2, s)).fold(f64::NEG_INFINITY, f64::max);
    let mono3 = grid(0.0, n).skip(1).map(|s| t.dphi(3, s)).fold(f64::NEG_INFINITY, f64::max);
    push("A5 φ₁′ > 0 on (0, ω₁/4)", Severity::Hard, mono1, mono1 < 0.0);
    push("A5 φ₂′ > 0 on (0, ω₂/4)", Severity::Hard, mono2, mono2 < 0.0);
    push("A5 φ₃′ < 0 on (0, N]", Severity::Hard, mono3, mono3 < 0.0);

    // parity, periodicity, symmetry
    let even = |k: usize, a: f64| max_over(&mut grid(0.0, a).map(|s| (t.phi(k, s) - t.phi(k, -s)).abs()));
    for (k, a) in [(1, w1), (2, w2), (3, n)] {
        let r = even(k, a);
        push(&format!("A1 φ{k} even"), Severity::Hard, r, r <= tol);
    }
    for (k, w) in [(1, w1), (2, w2)] {
        let r = max_over(&mut grid(0.0, w).map(|s| (t.phi(k, s + w) - t.phi(k, s)).abs()));
        push(&format!("A1 φ{k} period ω{k}"), Severity::Hard, r, r <= tol);
    }
    let r = max_over(&mut grid(0.0, w2).map(|s| (t.phi(2, 0.5 * w2 - s) - t.phi(2, s)).abs()));
    push("A1 φ₂(ω₂/2 − θ) = φ₂(θ)", Severity::Hard, r, r <= tol);
    let r = max_over(&mut grid(0.0, w1).map(|s| (t.phi(1, 0.5 * w1 - s) - t.phi(1, s)).abs()));
    push("A4 φ₁(ω₁/2 − θ) = φ₁(θ)", Severity::Hard, r, r <= tol);

    // critical values
    let crit = [
        ("A2 φ₁(0) = ν₁", t.phi(1, 0.0) - p.nu1),
        ("A2 φ₁(ω₁/4) = ν₀", t.phi(1, 0.25 * w1) - p.nu0),
        ("A2 φ₂(0) = 0", t.phi(2, 0.0)),
        ("A2 φ₂(ω₂/4) = ν₁", t.phi(2, 0.25 * w2) - p.nu1),
        ("A2 φ₃(0) = 0", t.phi(3, 0.0)),
        ("A2 φ₃(N) = ν₃", t.phi(3, n) - p.nu3),
        ("A2 max φ₁ = ν₀", max1 - p.nu0),
        ("A2 min φ₁ = ν₁", min1 - p.nu1),
    ];
    for (name, r) in crit {
        push(name, Severity::Hard, r.abs(), r.abs() <= 1e-9 * scale);
    }
    let nondeg = [
        ("A2 φ₁″(ω₁/4) < 0", t.ddphi(1, 0.25 * w1)),
        ("A2 φ₂″(ω₂/4) < 0", t.ddphi(2, 0.25 * w2)),
        ("A2 φ₃″(0) < 0", t.ddphi(3, 0.0)),
    ];
    for (name, v) in nondeg {
        push(name, Severity::Hard, v, v < 0.0);
    }

    // compatibility at the contacts
    for l in 1..=(order.min(4) / 2) {
        let o = 2 * l;
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        let d = |k: usize, s: f64, sc: f64| t.profile(k).derivative(o, s, sc);
        let a = d(1, 0.0, w1);
        let b = d(2, 0.25 * w2, w2);
        let c = d(2, 0.0, w2);
        let e = d(3, 0.0, n);
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1e-300);
        let ftol = if o == 2 { 1e-9 } else { 1e-5 };
        let r = rel(a, sign * b);
        push(&format!("A3 φ₁^({o})(0) = (−1)^{l} φ₂^({o})(ω₂/4)"), Severity::Warning, r, r <= ftol);
        let r = rel(c, sign * e);
        push(&format!("A3 φ₂^({o})(0) = (−1)^{l} φ₃^({o})(0)"), Severity::Warning, r, r <= ftol);
        for (k, w) in [(1, w1), (2, w2)] {
            let r = rel(d(k, 0.0, w), d(k, 0.5 * w, w));
            let positive = o != 2 || d(k, 0.0, w) > 0.0;
            push(&format!("A3 φ{k}^({o})(0) = φ{k}^({o})(ω{k}/2)"), Severity::Warning, r, r <= ftol && positive);
        }
    }
    ValidationReport { order, checks }
}

/// Validates a triple; hard failures become errors.
pub fn validate(t: &ProfileTriple, order: usize) -> Result<ValidationReport, ProfileError> {
    let report = validation_report(t, order);
    if let Some(c) = report.hard_failures().find(|c| c.name.contains("gap")) {
        return Err(ProfileError::NonPositiveGap { gap: c.residual });
    }
    for (k, tag) in [(1, "φ₁′"), (2, "φ₂′"), (3, "φ₃′")] {
        if report.hard_failures().any(|c| c.name.contains(tag)) {
            let (a, b) = match k {
                1 => (0.0, 0.25 * t.omega1()),
                2 => (0.0, 0.25 * t.omega2()),
                _ => (0.0, t.n_half()),
            };
            let sign = if k == 3 { 1.0 } else { -1.0 };
            let theta = grid(a, b)
                .skip(1)
                .find(|&s| sign * t.dphi(k, s) >= 0.0)
                .unwrap_or(b);
            return Err(ProfileError::MonotonicityViolation { which: k, theta });
        }
    }
    if let Some(c) = report.hard_failures().next() {
        return Err(ProfileError::ConditionFailed { name: c.name.clone(), residual: c.residual });
    }
    Ok(report)
}

/// `φ₁ = ν₁ + (ν₀−ν₁) sin²(2πθ/ω₁)`, `φ₂ = ν₁ sin²(2πθ/ω₂)`, `φ₃ = −cθ²`
/// with `c = −ν₃/N²`.
pub fn make_trig_family(
    nu0: f64,
    nu1: f64,
    nu3: f64,
    omega1: f64,
    omega2: f64,
    n: f64,
) -> Result<ProfileTriple, ProfileError> {
    let params = TableParams { nu0, nu1, nu3, omega1, omega2, n };
    params.check()?;
    let lhs = (nu0 - nu1) / (omega1 * omega1);
    let rhs = nu1 / (omega2 * omega2);
    if (lhs - rhs).abs() > 1e-12 * lhs.abs().max(rhs.abs()) {
        return Err(ProfileError::IncompatibleParameters { lhs, rhs });
    }
    let (k1, k2) = (2.0 * PI / omega1, 2.0 * PI / omega2);
    let amp = nu0 - nu1;
    let c = -nu3 / (n * n);
    let phi1 = Profile::new(
        move |t| nu1 + amp * (k1 * t).sin().powi(2),
        move |t| amp * k1 * (2.0 * k1 * t).sin(),
        move |t| 2.0 * amp * k1 * k1 * (2.0 * k1 * t).cos(),
    );
    let phi2 = Profile::new(
        move |t| nu1 * (k2 * t).sin().powi(2),
        move |t| nu1 * k2 * (2.0 * k2 * t).sin(),
        move |t| 2.0 * nu1 * k2 * k2 * (2.0 * k2 * t).cos(),
    );
    let phi3 = Profile::new(move |t| -c * t * t, move |t| -2.0 * c * t, move |_| -2.0 * c);
    ProfileTriple::new(params, [phi1, phi2, phi3])
}

/// The reference table `(ν₀,ν₁,ν₃,ω₁,ω₂,N) = (2,1,−1,2π,2π,1)`:
/// `φ₁ = 1 + sin²θ`, `φ₂ = sin²θ`, `φ₃ = −θ²`.
pub fn cf1() -> ProfileTriple {
    make_trig_family(2.0, 1.0, -1.0, 2.0 * PI, 2.0 * PI, 1.0).expect("reference table is valid")
}

/// A family with non-constant branch densities:
/// `S(u) = sin²u (1 + β sin²u)/(1 + β)`, `φ₁ = ν₁ + (ν₀−ν₁) S(2πθ/ω₁)`,
/// `φ₂ = ν₁ S(2πθ/ω₂)`, `φ₃ = −cθ²` with `c = −ν₃/N²`.
/// Order-2 matching needs `(ν₀−ν₁)/ω₁² = ν₁(1+2β)/ω₂²`.
pub fn make_quartic_family(params: TableParams, beta: f64) -> Result<ProfileTriple, ProfileError> {
    params.check()?;
    if !(beta > -0.5) {
        return Err(ProfileError::InvalidParameters(format!("β = {beta} must exceed −1/2")));
    }
    let TableParams { nu0, nu1, nu3, omega1, omega2, n } = params;
    let lhs = (nu0 - nu1) / (omega1 * omega1);
    let rhs = nu1 * (1.0 + 2.0 * beta) / (omega2 * omega2);
    if (lhs - rhs).abs() > 1e-12 * lhs.abs().max(rhs.abs()) {
        return Err(ProfileError::IncompatibleParameters { lhs, rhs });
    }
    let norm = 1.0 / (1.0 + beta);
    // S = (s² + β s⁴)/(1+β), s = sin u
    let s0 = move |u: f64| {
        let s2 = u.sin().powi(2);
        norm * (s2 + beta * s2 * s2)
    };
    let s1 = move |u: f64| {
        let (s, c) = u.sin_cos();
        norm * (2.0 * s * c + 4.0 * beta * s * s * s * c)
    };
    let s2 = move |u: f64| {
        let (s, c) = u.sin_cos();
        let (s2, c2) = (s * s, c * c);
        norm * (2.0 * (c2 - s2) + 4.0 * beta * (3.0 * s2 * c2 - s2 * s2))
    };
    let (k1, k2) = (2.0 * PI / omega1, 2.0 * PI / omega2);
    let amp = nu0 - nu1;
    let c = -nu3 / (n * n);
    let phi1 = Profile::new(
        move |t| nu1 + amp * s0(k1 * t),
        move |t| amp * k1 * s1(k1 * t),
        move |t| amp * k1 * k1 * s2(k1 * t),
    );
    let phi2 = Profile::new(
        move |t| nu1 * s0(k2 * t),
        move |t| nu1 * k2 * s1(k2 * t),
        move |t| nu1 * k2 * k2 * s2(k2 * t),
    );
    let phi3 = Profile::new(move |t| -c * t * t, move |t| -2.0 * c * t, move |_| -2.0 * c);
    ProfileTriple::new(params, [phi1, phi2, phi3])
}

/// Builder of a named family from table parameters and extra numeric keys.
pub type FamilyBuilder =
    Arc<dyn Fn(&TableParams, &BTreeMap<String, f64>) -> Result<ProfileTriple, ProfileError> + Send + Sync>;

/// Named profile families.
#[derive(Clone)]
pub struct FamilyRegistry {
    builders: BTreeMap<String, FamilyBuilder>,
}

impl Default for FamilyRegistry {
    fn default() -> Self {
        let mut r = FamilyRegistry { builders: BTreeMap::new() };
        r.register("trig", |p, _| make_trig_family(p.nu0, p.nu1, p.nu3, p.omega1, p.omega2, p.n));
        r.register("quartic", |p, extra| {
            make_quartic_family(*p, extra.get("beta").copied().unwrap_or(0.25))
        });
        r
    }
}

impl FamilyRegistry {
    pub fn register(
        &mut self,
        name: &str,
        builder: impl Fn(&TableParams, &BTreeMap<String, f64>) -> Result<ProfileTriple, ProfileError>
            + Send
            + Sync
            + 'static,
    ) {
        self.builders.insert(name.to_string(), Arc::new(builder));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.builders.keys().map(String::as_str)
    }

    pub fn build(
        &self,
        name: &str,
        params: &TableParams,
        extra: &BTreeMap<String, f64>,
    ) -> Result<ProfileTriple, ProfileError> {
        let b = self.builders.get(name).ok_or_else(|| ProfileError::UnknownFamily(name.to_string()))?;
        b(params, extra)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cf1_values() {
        let t = cf1();
        assert!((t.phi(1, FRAC_PI_2) - 2.0).abs() < 1e-15);
        assert!((t.phi(3, 0.5) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn branch_interpolants_are_compact_for_cf1() {
        let t = cf1();
        for k in 1..=3 {
            let b = t.branch(k);
            assert!(b.g.coeffs().len() < 40, "branch {k}: {}", b.g.coeffs().len());
        }
    }

    #[test]
    fn higher_derivative_by_differences() {
        let t = cf1();
        let d4 = t.profile(2).derivative(4, 0.0, 1.0);
        assert!((d4 + 8.0).abs() < 1e-5, "{d4}");
        let d3 = t.profile(2).derivative(3, 0.3, 1.0);
        assert!((d3 + 4.0 * (0.6f64).sin()).abs() < 1e-6);
    }
}
