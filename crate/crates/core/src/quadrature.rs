//! Gauss–Legendre quadrature for integrands with half-integer power
//! singularities at, or just outside, the ends of a finite interval.
//!
//! Integrands receive a [`Point`] carrying the abscissa together with its
//! distances to both ends. Those distances come straight out of the
//! substitution, so factors such as `1/sqrt(b - x)` can be formed without
//! cancellation however close the node sits to `b`.
//!
//! Each end of the interval is described by an [`Edge`]:
//!
//! * `Smooth`: the integrand is analytic up to the end;
//! * `InvSqrt`: the integrand behaves like `d^(k/2)` for an odd `k` in the
//!   distance `d` to the end (the common case is `k = -1`);
//! * `Near(g)`: a half-integer singularity sits a distance `g` beyond the
//!   end, possibly in addition to an `InvSqrt` behaviour at the end itself.
//!
//! Near singularities closer than a tenth of the half-interval are absorbed
//! by `d = g·sinh²v`, which makes `d^(-1/2)`, `(d+g)^(-1/2)` and
//! `(d+g)^(-3/2)` all analytic and bounded in `v`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use thiserror::Error;

/// Abscissa with exact distances to the interval ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    /// `x - a`, accurate to relative rounding.
    pub da: f64,
    /// `b - x`, accurate to relative rounding.
    pub db: f64,
}

/// Behaviour of the integrand at one end of the interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Edge {
    Smooth,
    InvSqrt,
    /// A singular point at the given positive distance outside the end.
    Near(f64),
}

/// Change of variables applied before Gauss–Legendre.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Substitution {
    /// Endpoint-adapted maps (`sin²ψ`, `s²`, `sinh²v`) chosen from the edges.
    Trig,
    /// Plain Gauss–Legendre on `[a, b]`.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub a: f64,
    pub b: f64,
    pub left: Edge,
    pub right: Edge,
    /// Initial node count per panel.
    pub n: usize,
    pub substitution: Substitution,
    pub max_doublings: u32,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl QuadratureSpec {
    pub fn new(a: f64, b: f64, left: Edge, right: Edge) -> Self {
        QuadratureSpec {
            a,
            b,
            left,
            right,
            n: 64,
            substitution: Substitution::Trig,
            max_doublings: 4,
            abs_tol: 1e-11,
            rel_tol: 1e-9,
        }
    }

    pub fn smooth(a: f64, b: f64) -> Self {
        Self::new(a, b, Edge::Smooth, Edge::Smooth)
    }

    pub fn inv_sqrt(a: f64, b: f64) -> Self {
        Self::new(a, b, Edge::InvSqrt, Edge::InvSqrt)
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_tol(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_substitution(mut self, s: Substitution) -> Self {
        self.substitution = s;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not converge on [{a}, {b}]: last two values {prev} and {last}")]
    NonConvergent { a: f64, b: f64, prev: f64, last: f64 },
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
    #[error("integrand is not finite at x = {0}")]
    NonFinite(f64),
}

struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * t * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, dp)
}

fn compute_gauss_legendre(n: usize) -> GaussLegendre {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, t);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, t);
        let w = 2.0 / ((1.0 - t * t) * dp * dp);
        nodes[i] = -t;
        nodes[n - 1 - i] = t;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussLegendre { nodes, weights }
}

fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(g) = cache.read().expect("node cache poisoned").get(&n) {
        return g.clone();
    }
    let g = Arc::new(compute_gauss_legendre(n));
    cache
        .write()
        .expect("node cache poisoned")
        .entry(n)
        .or_insert(g)
        .clone()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let g = gauss_legendre(n);
    (g.nodes.clone(), g.weights.clone())
}

/// A fixed quadrature rule: integrand samples times weights give the integral.
#[derive(Clone, Debug, Default)]
pub struct Rule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn apply<F: Fn(Point) -> f64>(&self, f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    fn push(&mut self, p: Point, w: f64) {
        self.points.push(p);
        self.weights.push(w);
    }
}

/// Push the nodes of one half-interval measured from an end.
/// `d` is the distance from the end; `from_a` tells which end.
fn half_rule(rule: &mut Rule, spec: &QuadratureSpec, edge: Edge, from_a: bool, h: f64, n: usize) {
    let len = spec.b - spec.a;
    let gl = gauss_legendre(n);
    let mut emit = |d: f64, w: f64| {
        let p = if from_a {
            Point { x: spec.a + d, da: d, db: len - d }
        } else {
            Point { x: spec.b - d, da: len - d, db: d }
        };
        rule.push(p, w);
    };
    let sinh_gap = match edge {
        Edge::Near(g) if g < 0.1 * h => Some(g),
        _ => None,
    };
    if let Some(g) = sinh_gap {
        let vmax = (h / g).sqrt().asinh();
        let panels = (vmax / 2.0).ceil().max(1.0) as usize;
        let width = vmax / panels as f64;
        for k in 0..panels {
            let v0 = k as f64 * width;
            for (t, wt) in gl.nodes.iter().zip(&gl.weights) {
                let v = v0 + 0.5 * width * (1.0 + t);
                let s = v.sinh();
                let d = g * s * s;
                let jac = g * (2.0 * v).sinh() * 0.5 * width;
                emit(d, wt * jac);
            }
        }
        return;
    }
    let sqrt_map = matches!(edge, Edge::InvSqrt | Edge::Near(_));
    for (t, wt) in gl.nodes.iter().zip(&gl.weights) {
        if sqrt_map {
            let s = 0.5 * (1.0 + t);
            emit(h * s * s, wt * h * s);
        } else {
            emit(0.5 * h * (1.0 + t), wt * 0.5 * h);
        }
    }
}

/// Builds the rule for `spec` with `n` nodes per panel.
pub fn rule(spec: &QuadratureSpec, n: usize) -> Rule {
    let mut r = Rule::default();
    let len = spec.b - spec.a;
    match spec.substitution {
        Substitution::None => {
            let gl = gauss_legendre(n);
            for (t, w) in gl.nodes.iter().zip(&gl.weights) {
                let da = 0.5 * len * (1.0 + t);
                let db = 0.5 * len * (1.0 - t);
                r.push(Point { x: spec.a + da, da, db }, w * 0.5 * len);
            }
        }
        Substitution::Trig
            if spec.left == Edge::InvSqrt && spec.right == Edge::InvSqrt =>
        {
            // x = a + L sin²ψ, dx = L sin 2ψ dψ on [0, π/2]
            let gl = gauss_legendre(n);
            for (t, w) in gl.nodes.iter().zip(&gl.weights) {
                let psi = 0.25 * std::f64::consts::PI * (1.0 + t);
                let (s, c) = psi.sin_cos();
                let da = len * s * s;
                let db = len * c * c;
                r.push(
                    Point { x: spec.a + da, da, db },
                    w * len * (2.0 * psi).sin() * 0.25 * std::f64::consts::PI,
                );
            }
        }
        Substitution::Trig if spec.left == Edge::Smooth && spec.right == Edge::Smooth => {
            let whole = QuadratureSpec { substitution: Substitution::None, ..*spec };
            return rule(&whole, n);
        }
        Substitution::Trig => {
            let h = 0.5 * len;
            half_rule(&mut r, spec, spec.left, true, h, n);
            half_rule(&mut r, spec, spec.right, false, h, n);
        }
    }
    r
}

fn check_spec(spec: &QuadratureSpec) -> Result<(), QuadError> {
    if !(spec.a < spec.b) || !spec.a.is_finite() || !spec.b.is_finite() {
        return Err(QuadError::InvalidSpec(format!("need a < b, got [{}, {}]", spec.a, spec.b)));
    }
    if spec.n < 4 {
        return Err(QuadError::InvalidSpec(format!("node count {} < 4", spec.n)));
    }
    for e in [spec.left, spec.right] {
        if let Edge::Near(g) = e {
            if !(g > 0.0) {
                return Err(QuadError::InvalidSpec(format!("near-singularity gap {g} must be positive")));
            }
        }
    }
    Ok(())
}

fn converged(prev: f64, last: f64, spec: &QuadratureSpec) -> bool {
    (last - prev).abs() <= spec.abs_tol.max(spec.rel_tol * last.abs())
}

/// Integrates `f` over the spec interval; error estimated by node doubling.
pub fn integrate<F: Fn(Point) -> f64>(f: F, spec: &QuadratureSpec) -> Result<Integral, QuadError> {
    check_spec(spec)?;
    let eval = |n: usize| -> Result<f64, QuadError> {
        let r = rule(spec, n);
        let mut acc = 0.0;
        for (p, w) in r.points.iter().zip(&r.weights) {
            let v = f(*p);
            if !v.is_finite() {
                return Err(QuadError::NonFinite(p.x));
            }
            acc += w * v;
        }
        Ok(acc)
    };
    let mut n = spec.n;
    let mut prev = eval(n)?;
    for _ in 0..spec.max_doublings {
        n *= 2;
        let last = eval(n)?;
        if converged(prev, last, spec) {
            return Ok(Integral { value: last, error: (last - prev).abs() });
        }
        prev = last;
    }
    let last = eval(2 * n)?;
    if converged(prev, last, spec) {
        return Ok(Integral { value: last, error: (last - prev).abs() });
    }
    Err(QuadError::NonConvergent { a: spec.a, b: spec.b, prev, last })
}

/// Tensor-product integral over a rectangle with doubling in both directions.
pub fn integrate_2d<F: Fn(Point, Point) -> f64>(
    f: F,
    xs: &QuadratureSpec,
    ys: &QuadratureSpec,
) -> Result<Integral, QuadError> {
    check_spec(xs)?;
    check_spec(ys)?;
    let eval = |nx: usize, ny: usize| -> Result<f64, QuadError> {
        let rx = rule(xs, nx);
        let ry = rule(ys, ny);
        let mut acc = 0.0;
        for (px, wx) in rx.points.iter().zip(&rx.weights) {
            let mut inner = 0.0;
            for (py, wy) in ry.points.iter().zip(&ry.weights) {
                inner += wy * f(*px, *py);
            }
            acc += wx * inner;
        }
        if acc.is_finite() {
            Ok(acc)
        } else {
            Err(QuadError::NonFinite(f64::NAN))
        }
    };
    let (mut nx, mut ny) = (xs.n / 2, ys.n / 2);
    let mut prev = eval(nx, ny)?;
    let tol = QuadratureSpec {
        abs_tol: xs.abs_tol.min(ys.abs_tol),
        rel_tol: xs.rel_tol.min(ys.rel_tol),
        ..*xs
    };
    for _ in 0..=xs.max_doublings.max(ys.max_doublings) {
        nx *= 2;
        ny *= 2;
        let last = eval(nx, ny)?;
        if converged(prev, last, &tol) {
            return Ok(Integral { value: last, error: (last - prev).abs() });
        }
        prev = last;
    }
    Err(QuadError::NonConvergent { a: xs.a, b: xs.b, prev, last: prev })
}

/// Residual profile of the square-root expansion `F(κ) ≈ 2 f(a,κ) √(κ−a)`.
#[derive(Clone, Debug)]
pub struct SqrtExpansionReport {
    /// Rows of `(κ, F(κ), 2 f(a,κ)√(κ−a), residual)`.
    pub rows: Vec<(f64, f64, f64, f64)>,
    /// Largest `|residual| / (κ−a)^{3/2}` over the grid.
    pub constant: f64,
    /// Log–log slope of `|residual|` against `κ−a`, when residuals are nonzero.
    pub exponent: Option<f64>,
    /// Largest `|F'(κ) − f(a,κ)/√(κ−a)| / √(κ−a)` over the grid.
    pub derivative_constant: f64,
}

fn sqrt_transform<F: Fn(f64, f64) -> f64>(f: &F, a: f64, kappa: f64) -> Result<f64, QuadError> {
    let spec = QuadratureSpec::new(a, kappa, Edge::Smooth, Edge::InvSqrt).with_tol(1e-15, 1e-13);
    Ok(integrate(|p| f(p.x, kappa) / p.db.sqrt(), &spec)?.value)
}

/// Checks `F(κ) = ∫_a^κ f(x,κ)/√(κ−x) dx = 2 f(a,κ)√(κ−a) + O((κ−a)^{3/2})`
/// and its derivative form on the supplied grid of `κ > a`.
pub fn check_sqrt_expansion<F: Fn(f64, f64) -> f64>(
    f: F,
    a: f64,
    kappas: &[f64],
) -> Result<SqrtExpansionReport, QuadError> {
    let mut rows = Vec::with_capacity(kappas.len());
    let mut constant: f64 = 0.0;
    let mut derivative_constant: f64 = 0.0;
    for &k in kappas {
        let d = k - a;
        let big_f = sqrt_transform(&f, a, k)?;
        let lead = 2.0 * f(a, k) * d.sqrt();
        let res = big_f - lead;
        constant = constant.max(res.abs() / d.powf(1.5));
        let h = 1e-3 * d;
        let dfk = (sqrt_transform(&f, a, k + h)? - sqrt_transform(&f, a, k - h)?) / (2.0 * h);
        derivative_constant = derivative_constant.max((dfk - f(a, k) / d.sqrt()).abs() / d.sqrt());
        rows.push((k, big_f, lead, res));
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.3.abs() > 1e-14 * r.1.abs().max(1e-300))
        .map(|r| ((r.0 - a).ln(), r.3.abs().ln()))
        .collect();
    let exponent = (pts.len() >= 2 && pts.len() == rows.len()).then(|| linear_fit(&pts).0);
    Ok(SqrtExpansionReport { rows, constant, exponent, derivative_constant })
}

/// The two integral shapes whose blow-up rate is logarithmic as `α → 0⁻`.
pub enum LogForm<'a> {
    /// `∫_0^M F(√t) / (√t √(t−α)) dt`.
    First { f: &'a dyn Fn(f64) -> f64, upper: f64 },
    /// `∫_m^α F(√−t) / (√−t √(α−t)) dt`.
    Second { f: &'a dyn Fn(f64) -> f64, lower: f64 },
}

#[derive(Clone, Debug)]
pub struct LogFit {
    /// Coefficient of `log √(−α)`.
    pub c: f64,
    pub d: f64,
    /// `−2 F(0)` for both forms.
    pub expected: f64,
    pub relative_error: f64,
}

impl LogForm<'_> {
    pub fn evaluate(&self, alpha: f64) -> Result<f64, QuadError> {
        let gap = -alpha;
        match *self {
            LogForm::First { f, upper } => {
                let spec = QuadratureSpec::new(0.0, upper, Edge::Near(gap), Edge::Smooth)
                    .with_tol(1e-14, 1e-13);
                Ok(integrate(|p| f(p.da.sqrt()) / (p.da.sqrt() * (p.da + gap).sqrt()), &spec)?.value)
            }
            LogForm::Second { f, lower } => {
                let spec = QuadratureSpec::new(lower, alpha, Edge::Smooth, Edge::Near(gap))
                    .with_tol(1e-14, 1e-13);
                Ok(integrate(
                    |p| {
                        let mt = p.db + gap;
                        f(mt.sqrt()) / (mt.sqrt() * p.db.sqrt())
                    },
                    &spec,
                )?
                .value)
            }
        }
    }

    fn f0(&self) -> f64 {
        match *self {
            LogForm::First { f, .. } | LogForm::Second { f, .. } => f(0.0),
        }
    }
}

/// Fits `c·log√(−α) + d` to the form on a grid of negative `α`.
pub fn check_log_asymptotics(form: &LogForm<'_>, alphas: &[f64]) -> Result<LogFit, QuadError> {
    let pts = alphas
        .iter()
        .map(|&a| Ok(((-a).sqrt().ln(), form.evaluate(a)?)))
        .collect::<Result<Vec<_>, QuadError>>()?;
    let (c, d) = linear_fit(&pts);
    let expected = -2.0 * form.f0();
    Ok(LogFit { c, d, expected, relative_error: ((c - expected) / expected).abs() })
}

/// Least-squares line `y = slope·x + intercept`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
