//! Radon transforms of boundary functions over Liouville tori.
//!
//! Two routes compute the same normalized average of `𝒦·μ`:
//!
//! * angle space: quadrature of `𝒦 μ λ` over the projection region of the
//!   torus (see [`crate::tori::theta_rule`]);
//! * value space: for G-invariant `𝒦`, the substitution `x = φ(θ)` reduces
//!   the integral to sixteen copies of
//!
//! ```text
//! M_case(κ₁,κ₂) = ∫∫ K̃₁(x₁,x₂) / √(|x₁−κ₁||x₁−κ₂||x₂−κ₁||x₂−κ₂|) dx₁dx₂,
//! K̃₁(x₁,x₂) = 𝒦(f₁(x₁), f₂(x₂)) (x₁−x₂) ρ₁(x₁) ρ₂(x₂)
//! ```
//!
//! over the case rectangle. The normal-incidence weight factors as
//! `μ = √((φ₁−ν₃)(φ₂−ν₃)) / √((κ₁−ν₃)(κ₂−ν₃))`; the numerator is absorbed
//! into the reduced kernel and the torus constant stays outside.
//!
//! The moments `∫∫ K̃₁ s₁^{m−2r} s₂^{2r}` over `[ν₁,ν₀]×[0,ν₁]`, with
//! `s₁ = (x₁+x₂)/2` and `s₂² = x₁x₂`, determine the invariant part of `𝒦`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::covering::{dist_to_lattice, symmetry_orbit_boundary};
use crate::dynamics::{billiard_map, BoundaryCovector, BoundarySide, DynamicsError, FlowOptions};
use crate::frequency::{moments_with_derivatives, FrequencyError};
use crate::profiles::{ProfileTriple, TableParams};
use crate::quadrature::{integrate_2d, Edge, Point, QuadError, QuadratureSpec};
use crate::tori::{case_specs, classify_case, dist, theta_integral, torus_point, CaseTag, ToriError, TorusSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadonError {
    #[error(transparent)]
    Tori(#[from] ToriError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Frequency(#[from] FrequencyError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("moment index out of range: m={m}, r={r}")]
    InvalidIndex { m: usize, r: usize },
    #[error("degree {0} exceeds 12")]
    DegreeTooHigh(usize),
    #[error("(κ₁, κ₂) = ({0}, {1}) is not in the region of case {2:?}")]
    WrongCase(f64, f64, CaseTag),
    #[error("no case A torus with rotation vector ({p}/{n}, {q}/{n}); best residual {residual:e}")]
    NoRoot { p: i64, q: i64, n: i64, residual: f64 },
    #[error("orbit does not close after {period} bounces: gap {gap:e}")]
    NotPeriodic { period: usize, gap: f64 },
}

pub type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A function `𝒦(θ₁, θ₂)` on the boundary torus.
#[derive(Clone)]
pub struct BoundaryFunction {
    eval: KernelFn,
    invariant: bool,
}

impl fmt::Debug for BoundaryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryFunction").field("invariant", &self.invariant).finish_non_exhaustive()
    }
}

impl BoundaryFunction {
    pub fn new<F>(f: F, invariant: bool) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        BoundaryFunction { eval: Arc::new(f), invariant }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_, _| c, true)
    }

    /// `Σ c·cos(4πjθ₁/ω₁)·cos(4πlθ₂/ω₂)` over `(j, l, c)`.
    pub fn trig(p: &TableParams, terms: &[(u32, u32, f64)]) -> Self {
        let (a, b) = (4.0 * std::f64::consts::PI / p.omega1, 4.0 * std::f64::consts::PI / p.omega2);
        let terms = terms.to_vec();
        Self::new(
            move |t1, t2| terms.iter().map(|&(j, l, c)| c * (a * j as f64 * t1).cos() * (b * l as f64 * t2).cos()).sum(),
            true,
        )
    }

    /// `g(φ₁(θ₁), φ₂(θ₂))`; always invariant.
    pub fn of_profiles<G>(t: &ProfileTriple, g: G) -> Self
    where
        G: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let t = t.clone();
        Self::new(move |t1, t2| g(t.phi(1, t1), t.phi(2, t2)), true)
    }

    /// `a(θ₁)·b(θ₂)`.
    pub fn product<A, B>(a: A, b: B, invariant: bool) -> Self
    where
        A: Fn(f64) -> f64 + Send + Sync + 'static,
        B: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(move |t1, t2| a(t1) * b(t2), invariant)
    }

    pub fn eval(&self, t1: f64, t2: f64) -> f64 {
        (self.eval)(t1, t2)
    }

    pub fn is_invariant(&self) -> bool {
        self.invariant
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &BoundaryFunction, b: f64) -> Self {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        BoundaryFunction { eval: Arc::new(move |x, y| a * f(x, y) + b * g(x, y)), invariant: self.invariant && other.invariant }
    }

    /// Average of `𝒦` over the 16 images of the symmetry group; a clone when
    /// the function is already flagged invariant.
    pub fn symmetrized(&self, p: &TableParams) -> Self {
        if self.invariant {
            return self.clone();
        }
        let f = self.eval.clone();
        let (w1, w2) = (p.omega1, p.omega2);
        Self::new(
            move |t1, t2| {
                let a = [t1, -t1, 0.5 * w1 - t1, t1 + 0.5 * w1];
                let b = [t2, -t2, 0.5 * w2 - t2, t2 + 0.5 * w2];
                a.iter().map(|&x| b.iter().map(|&y| f(x, y)).sum::<f64>()).sum::<f64>() / 16.0
            },
            true,
        )
    }

    /// Largest spread of `𝒦` over symmetry orbits on an `n × n` grid.
    pub fn invariance_defect(&self, p: &TableParams, n: usize) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let t1 = (i as f64 + 0.37) / n as f64 * p.omega1;
                let t2 = (j as f64 + 0.61) / n as f64 * p.omega2;
                let v = self.eval(t1, t2);
                for (a, b) in symmetry_orbit_boundary(p, t1, t2) {
                    worst = worst.max((self.eval(a, b) - v).abs());
                }
            }
        }
        worst
    }

    /// Whether the invariance flag is consistent with the evaluator.
    pub fn check_invariance(&self, p: &TableParams) -> bool {
        !self.invariant || self.invariance_defect(p, 12) <= 1e-12
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MuChoice {
    Unit,
    NormalIncidence,
}

/// `1/√((κ₁−ν₃)(κ₂−ν₃))`, the torus constant of the normal-incidence weight.
fn normal_constant(t: &ProfileTriple, spec: &TorusSpec) -> f64 {
    let n3 = t.nu3();
    1.0 / ((spec.kappa1 - n3) * (spec.kappa2 - n3)).sqrt()
}

fn normal_numerator(t: &ProfileTriple, t1: f64, t2: f64) -> f64 {
    let n3 = t.nu3();
    ((t.phi(1, t1) - n3) * (t.phi(2, t2) - n3)).sqrt()
}

/// The weight `μ` at `(θ₁, θ₂)` on the torus `spec`.
pub fn mu_weight(t: &ProfileTriple, choice: MuChoice, spec: &TorusSpec, t1: f64, t2: f64) -> f64 {
    match choice {
        MuChoice::Unit => 1.0,
        MuChoice::NormalIncidence => normal_numerator(t, t1, t2) * normal_constant(t, spec),
    }
}

fn require_boundary(spec: &TorusSpec) -> Result<(), RadonError> {
    match spec.case {
        CaseTag::A | CaseTag::B => Ok(()),
        c => Err(ToriError::Unsupported(c).into()),
    }
}

/// `∫ 𝒦 μ λ` over the torus by angle-space quadrature with `n_periodic`
/// trapezoid nodes and `n_gl` Gauss–Legendre nodes.
pub fn radon_numerator(
    t: &ProfileTriple,
    k: &BoundaryFunction,
    mu: MuChoice,
    spec: &TorusSpec,
    n_periodic: usize,
    n_gl: usize,
) -> Result<f64, RadonError> {
    require_boundary(spec)?;
    let k = k.symmetrized(t.params());
    Ok(theta_integral(t, spec, n_periodic, n_gl, |a, b| k.eval(a, b) * mu_weight(t, mu, spec, a, b))?)
}

// Turning-point nodes lose a few digits to cancellation in `p²`, so the
// doubling stops at this level.
const RADON_RTOL: f64 = 1e-10;

/// Normalized Leray average of `𝒦·μ` over the torus, in angle space,
/// doubling the rule until successive values agree.
///
/// The canonical component need not be symmetric, so data not flagged
/// invariant is first averaged over the symmetry group. This is the average
/// over the full preimage of the torus, and it vanishes for odd data.
pub fn radon_torus(t: &ProfileTriple, k: &BoundaryFunction, mu: MuChoice, spec: &TorusSpec) -> Result<f64, RadonError> {
    require_boundary(spec)?;
    let raw = k;
    let k = k.symmetrized(t.params());
    let (mut np, mut ng) = (32, 24);
    // returns the average and the average of |𝒦μ| for the raw data, which
    // sets the scale for the stopping test when the average cancels to zero
    let ratio = |np: usize, ng: usize| -> Result<(f64, f64), RadonError> {
        let rule = crate::tori::theta_rule(t, spec, np, ng)?;
        let (mut num, mut abs, mut den) = (0.0, 0.0, 0.0);
        for (t1, t2, w) in rule {
            let (q1, q2) = spec.momenta_squared(t, t1, t2);
            let lam = w * (t.phi(1, t1) - t.phi(2, t2)) / (q1.max(0.0).sqrt() * q2.max(0.0).sqrt());
            let m = mu_weight(t, mu, spec, t1, t2);
            let f = k.eval(t1, t2) * m;
            num += lam * f;
            abs += lam * if raw.is_invariant() { f.abs() } else { (raw.eval(t1, t2) * m).abs() };
            den += lam;
        }
        Ok((num / den, abs / den))
    };
    let (mut prev, _) = ratio(np, ng)?;
    for _ in 0..5 {
        np *= 2;
        ng *= 2;
        let (v, scale) = ratio(np, ng)?;
        if (v - prev).abs() <= RADON_RTOL * v.abs().max(scale).max(f64::MIN_POSITIVE) {
            return Ok(v);
        }
        prev = v;
    }
    let (last, _) = ratio(2 * np, 2 * ng)?;
    Err(QuadError::NonConvergent { a: spec.kappa1, b: spec.kappa2, prev, last }.into())
}

/// The reduced kernel `K̃₁` of a boundary function.
#[derive(Clone)]
pub struct ReducedKernel {
    table: ProfileTriple,
    k: BoundaryFunction,
    mu: MuChoice,
}

impl fmt::Debug for ReducedKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReducedKernel").field("k", &self.k).field("mu", &self.mu).finish_non_exhaustive()
    }
}

pub fn reduce_kernel(t: &ProfileTriple, k: &BoundaryFunction, mu: MuChoice) -> ReducedKernel {
    ReducedKernel { table: t.clone(), k: k.symmetrized(t.params()), mu }
}

impl ReducedKernel {
    /// `𝒦(θ₁,θ₂)`, times `√((φ₁−ν₃)(φ₂−ν₃))` for normal incidence.
    fn core(&self, t1: f64, t2: f64) -> f64 {
        let v = self.k.eval(t1, t2);
        match self.mu {
            MuChoice::Unit => v,
            MuChoice::NormalIncidence => v * normal_numerator(&self.table, t1, t2),
        }
    }

    /// `𝒦(f₁(x₁), f₂(x₂))` (with the normal-incidence factor) from the
    /// distances of `x₁` to `ν₁, ν₀` and of `x₂` to `0, ν₁`.
    fn core_at(&self, d1: (f64, f64), d2: (f64, f64)) -> f64 {
        let t1 = self.table.branch(1).theta_from(d1.0, d1.1);
        let t2 = self.table.branch(2).theta_from(d2.0, d2.1);
        self.core(t1, t2)
    }

    fn value_at(&self, x1: f64, x2: f64, d1: (f64, f64), d2: (f64, f64)) -> f64 {
        let r1 = self.table.branch(1).density_from(d1.0, d1.1);
        let r2 = self.table.branch(2).density_from(d2.0, d2.1);
        self.core_at(d1, d2) * (x1 - x2) * r1 * r2
    }

    /// `K̃₁(x₁, x₂)` on the open rectangle `(ν₁,ν₀)×(0,ν₁)`.
    pub fn value(&self, x1: f64, x2: f64) -> f64 {
        let t = &self.table;
        let (n0, n1) = (t.nu0(), t.nu1());
        self.value_at(x1, x2, (x1 - n1, n0 - x1), (x2, n1 - x2))
    }

    /// `√((x₁−ν₁)(ν₀−x₁)x₂(ν₁−x₂))·K̃₁`, continuous on the closed rectangle.
    pub fn regularized(&self, x1: f64, x2: f64) -> f64 {
        let t = &self.table;
        let (n0, n1) = (t.nu0(), t.nu1());
        let (d1, d2) = ((x1 - n1, n0 - x1), (x2, n1 - x2));
        let g1 = t.branch(1).regular_part(d1.0, d1.1);
        let g2 = t.branch(2).regular_part(d2.0, d2.1);
        self.core_at(d1, d2) * (x1 - x2) * g1 * g2
    }

    pub fn mu(&self) -> MuChoice {
        self.mu
    }
}

/// Parameter region of each case integral. Cases A and B allow any
/// `κ₁ < 0`, not only the table range `κ₁ > ν₃`.
fn in_case_region(t: &ProfileTriple, tag: CaseTag, k1: f64, k2: f64) -> bool {
    let (n0, n1) = (t.nu0(), t.nu1());
    let open = |a: f64, x: f64, b: f64| a < x && x < b;
    match tag {
        CaseTag::A => k1 < 0.0 && open(0.0, k2, n1),
        CaseTag::B => k1 < 0.0 && open(n1, k2, n0),
        CaseTag::C => 0.0 < k1 && k1 < k2 && k2 < n1,
        CaseTag::D => open(0.0, k1, n1) && open(n1, k2, n0),
    }
}

/// `M_case(κ₁, κ₂)` for the reduced kernel.
pub fn m_case(kernel: &ReducedKernel, tag: CaseTag, k1: f64, k2: f64) -> Result<f64, RadonError> {
    let t = &kernel.table;
    if !in_case_region(t, tag, k1, k2) {
        return Err(RadonError::WrongCase(k1, k2, tag));
    }
    let (xs, ys) = case_specs(t, tag, k1, k2, 48);
    let (n0, n1) = (t.nu0(), t.nu1());
    let f = |p: Point, q: Point| {
        let d1 = (dist(&p, xs.a, xs.b, n1), dist(&p, xs.a, xs.b, n0));
        let d2 = (dist(&q, ys.a, ys.b, 0.0), dist(&q, ys.a, ys.b, n1));
        let w1 = dist(&p, xs.a, xs.b, k1) * dist(&p, xs.a, xs.b, k2);
        let w2 = dist(&q, ys.a, ys.b, k1) * dist(&q, ys.a, ys.b, k2);
        kernel.value_at(p.x, q.x, d1, d2) / (w1.sqrt() * w2.sqrt())
    };
    Ok(integrate_2d(f, &xs, &ys)?.value)
}

/// The Radon transform through the value-space reduction. Agrees with
/// [`radon_torus`] for G-invariant functions.
pub fn radon_reduced(t: &ProfileTriple, k: &BoundaryFunction, mu: MuChoice, spec: &TorusSpec) -> Result<f64, RadonError> {
    require_boundary(spec)?;
    let (k1, k2) = (spec.kappa1, spec.kappa2);
    let num = m_case(&reduce_kernel(t, k, mu), spec.case, k1, k2)?;
    let den = m_case(&reduce_kernel(t, &BoundaryFunction::constant(1.0), MuChoice::Unit), spec.case, k1, k2)?;
    let c = match mu {
        MuChoice::Unit => 1.0,
        MuChoice::NormalIncidence => normal_constant(t, spec),
    };
    Ok(c * num / den)
}

fn full_rectangle_specs(t: &ProfileTriple, n: usize) -> (QuadratureSpec, QuadratureSpec) {
    let edge = |singular: bool| if singular { Edge::InvSqrt } else { Edge::Smooth };
    let (b1, b2) = (t.branch(1), t.branch(2));
    let xs = QuadratureSpec::new(t.nu1(), t.nu0(), edge(b1.lo_singular()), edge(b1.hi_singular()))
        .with_n(n)
        .with_tol(1e-14, 1e-12);
    let ys = QuadratureSpec::new(0.0, t.nu1(), edge(b2.lo_singular()), edge(b2.hi_singular()))
        .with_n(n)
        .with_tol(1e-14, 1e-12);
    (xs, ys)
}

/// `s₁^{m−2r} (s₂²)^r` at `(x₁, x₂)`.
pub fn monomial(m: usize, r: usize, x1: f64, x2: f64) -> f64 {
    (0.5 * (x1 + x2)).powi((m - 2 * r) as i32) * (x1 * x2).powi(r as i32)
}

/// `∫₀^{ν₁}∫_{ν₁}^{ν₀} K̃₁ s₁^{m−2r} s₂^{2r} dx₁dx₂`.
pub fn moment(kernel: &ReducedKernel, m: usize, r: usize) -> Result<f64, RadonError> {
    if 2 * r > m {
        return Err(RadonError::InvalidIndex { m, r });
    }
    let t = &kernel.table;
    let (xs, ys) = full_rectangle_specs(t, 32);
    let f = |p: Point, q: Point| kernel.value_at(p.x, q.x, (p.da, p.db), (q.da, q.db)) * monomial(m, r, p.x, q.x);
    Ok(integrate_2d(f, &xs, &ys)?.value)
}

/// Index pairs `(m, r)` of the monomials up to degree `d`, ordered by `m`.
pub fn monomials(d: usize) -> Vec<(usize, usize)> {
    (0..=d).flat_map(|m| (0..=m / 2).map(move |r| (m, r))).collect()
}

/// All moments up to degree `d`, in [`monomials`] order.
pub fn moments(kernel: &ReducedKernel, d: usize) -> Result<Vec<f64>, RadonError> {
    monomials(d).into_iter().map(|(m, r)| moment(kernel, m, r)).collect()
}

/// Weight of the Gram pairing on `[ν₁,ν₀]×[0,ν₁]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramWeight {
    /// `1/√((x₁−ν₁)(ν₀−x₁)x₂(ν₁−x₂))`.
    Edge,
    /// `(x₁−x₂)ρ₁ρ₂`, the weight of the moment pairing for `𝒦 = P(s₁, s₂²)∘φ`.
    Kernel,
}

/// Rows `√w_i · (monomials at node i)` of a tensor Gauss–Chebyshev rule
/// with `n` nodes per direction, so that `VᵀV` is the Gram matrix.
pub fn design_matrix(t: &ProfileTriple, d: usize, weight: GramWeight, n: usize) -> DMatrix<f64> {
    let idx = monomials(d);
    let (n0, n1) = (t.nu0(), t.nu1());
    let nodes = |a: f64, b: f64| -> Vec<(f64, f64, f64)> {
        // Chebyshev points of the first kind as (x, x−a, b−x)
        (0..n)
            .map(|i| {
                let half = (2 * i + 1) as f64 * FRAC_PI_2 / (2 * n) as f64;
                let (da, db) = ((b - a) * half.cos().powi(2), (b - a) * half.sin().powi(2));
                (a + da, da, db)
            })
            .collect()
    };
    let (u, v) = (nodes(n1, n0), nodes(0.0, n1));
    let w = (std::f64::consts::PI / n as f64).powi(2);
    let mut out = DMatrix::zeros(n * n, idx.len());
    for (i, &(x1, d1a, d1b)) in u.iter().enumerate() {
        for (j, &(x2, d2a, d2b)) in v.iter().enumerate() {
            let pw = match weight {
                GramWeight::Edge => w,
                // ρ = regular_part/√(da·db); the square roots are the Chebyshev weight
                GramWeight::Kernel => {
                    w * (x1 - x2) * t.branch(1).regular_part(d1a, d1b) * t.branch(2).regular_part(d2a, d2b)
                }
            };
            let sw = pw.max(0.0).sqrt();
            for (c, &(m, r)) in idx.iter().enumerate() {
                out[(i * n + j, c)] = sw * monomial(m, r, x1, x2);
            }
        }
    }
    out
}

/// Gram matrix of the monomials up to degree `d` in the weighted pairing.
pub fn gram_matrix(t: &ProfileTriple, d: usize, weight: GramWeight, n: usize) -> DMatrix<f64> {
    let v = design_matrix(t, d, weight, n);
    v.transpose() * v
}

/// Outcome of a finite-degree rigidity check.
#[derive(Clone, Debug, PartialEq)]
pub struct RigidityCertificate {
    pub degree: usize,
    pub count: usize,
    pub min_singular_value: f64,
    pub max_singular_value: f64,
    /// Set when the smallest singular value is below `1e-12` of the largest.
    pub ill_conditioned: bool,
}

impl RigidityCertificate {
    pub fn certifies(&self) -> bool {
        self.min_singular_value > 0.0
    }
}

/// Smallest singular value of the edge-weighted monomial Gram matrix.
/// Node count `2d+2` per direction makes the Gauss–Chebyshev Gram exact.
pub fn rigidity_certificate(t: &ProfileTriple, d: usize) -> Result<RigidityCertificate, RadonError> {
    if d > 12 {
        return Err(RadonError::DegreeTooHigh(d));
    }
    // singular values of the Gram matrix are the squares of those of the
    // design matrix, which resolves them far below the Gram's own rounding
    let sv = design_matrix(t, d, GramWeight::Edge, 2 * d + 2).singular_values();
    let max = sv.max().powi(2);
    let min = sv.min().powi(2);
    Ok(RigidityCertificate {
        degree: d,
        count: sv.len(),
        min_singular_value: min,
        max_singular_value: max,
        ill_conditioned: min < 1e-12 * max,
    })
}

/// Coefficients `c` of `𝒦 = Σ c_{(m,r)} s₁^{m−2r}(s₂²)^r ∘ φ` recovered from
/// its moments up to degree `d` through the kernel-weighted Gram matrix.
pub fn reconstruct_coefficients(t: &ProfileTriple, d: usize, moments: &[f64]) -> Result<Vec<f64>, RadonError> {
    if d > 12 {
        return Err(RadonError::DegreeTooHigh(d));
    }
    let g = gram_matrix(t, d, GramWeight::Kernel, 96);
    let b = DVector::from_column_slice(moments);
    let svd = g.svd(true, true);
    let c = svd.solve(&b, 0.0).map_err(|_| RadonError::DegreeTooHigh(d))?;
    Ok(c.iter().copied().collect())
}

/// `𝒦` evaluated at a covector, using `(θ₁, −θ₂)` on the `−N` sheet.
fn eval_on_sheet(k: &BoundaryFunction, xi: &BoundaryCovector) -> (f64, f64, f64) {
    let t2 = match xi.side {
        BoundarySide::Plus => xi.theta2,
        BoundarySide::Minus => -xi.theta2,
    };
    (k.eval(xi.theta1, t2), xi.theta1, t2)
}

/// Distance between two covectors, with angles compared modulo the periods.
pub fn covector_gap(p: &TableParams, a: &BoundaryCovector, b: &BoundaryCovector) -> f64 {
    if a.side != b.side {
        return f64::INFINITY;
    }
    dist_to_lattice(a.theta1 - b.theta1, 0.0, p.omega1)
        .max(dist_to_lattice(a.theta2 - b.theta2, 0.0, p.omega2))
        .max((a.p1 - b.p1).abs())
        .max((a.p2 - b.p2).abs())
}

const CLOSURE_TOL: f64 = 1e-6;

/// `(1/m) Σ_{j<m} (𝒦μ)(B^j ξ₀)` along a periodic orbit of the torus `spec`.
pub fn periodic_orbit_mean(
    t: &ProfileTriple,
    k: &BoundaryFunction,
    mu: MuChoice,
    spec: &TorusSpec,
    xi0: &BoundaryCovector,
    m: usize,
    opts: &FlowOptions,
) -> Result<f64, RadonError> {
    let mut xi = *xi0;
    let mut acc = 0.0;
    for _ in 0..m {
        let (v, t1, t2) = eval_on_sheet(k, &xi);
        acc += v * mu_weight(t, mu, spec, t1, t2);
        xi = billiard_map(t, &xi, opts)?;
    }
    let gap = covector_gap(t.params(), &xi, xi0);
    if !(gap < CLOSURE_TOL) {
        return Err(RadonError::NotPeriodic { period: m, gap });
    }
    Ok(acc / m as f64)
}

/// Leray-weighted average of periodic-orbit means over the starts of an
/// angle-space rule with both signs of the free momentum.
#[allow(clippy::too_many_arguments)]
pub fn torus_orbit_average(
    t: &ProfileTriple,
    k: &BoundaryFunction,
    mu: MuChoice,
    spec: &TorusSpec,
    m: usize,
    n_periodic: usize,
    n_gl: usize,
    opts: &FlowOptions,
) -> Result<f64, RadonError> {
    require_boundary(spec)?;
    let k = &k.symmetrized(t.params());
    let rule = crate::tori::theta_rule(t, spec, n_periodic, n_gl)?;
    let (mut num, mut den) = (0.0, 0.0);
    for &(t1, t2, w) in &rule {
        let (q1, q2) = spec.momenta_squared(t, t1, t2);
        let lam = w * (t.phi(1, t1) - t.phi(2, t2)) / (q1.max(0.0).sqrt() * q2.max(0.0).sqrt());
        for sign in [1.0, -1.0] {
            let s = match spec.case {
                CaseTag::A => spec.with_signs(spec.eps1, sign),
                _ => spec.with_signs(sign, spec.eps2),
            };
            let xi = torus_point(t, &s, t1, t2)?;
            num += lam * periodic_orbit_mean(t, k, mu, spec, &xi, m, opts)?;
            den += lam;
        }
    }
    Ok(num / den)
}

/// Case A torus whose rotation vector `Ω/2π` equals `(p/n, q/n)`: a grid
/// search seeds a damped Newton iteration on the frequency map.
pub fn find_rational_torus(t: &ProfileTriple, p: i64, q: i64, n: i64) -> Result<TorusSpec, RadonError> {
    let target = [p as f64 / n as f64, q as f64 / n as f64];
    let two_pi = 2.0 * std::f64::consts::PI;
    let (n3, n1) = (t.nu3(), t.nu1());
    let residual = |k1: f64, k2: f64| -> Option<([f64; 2], [[f64; 2]; 2])> {
        if classify_case(k1, k2, t) != Some(CaseTag::A) {
            return None;
        }
        let mo = moments_with_derivatives(t, k1, k2).ok()?;
        let w = mo.frequencies();
        let r = [w[0] / two_pi - target[0], w[1] / two_pi - target[1]];
        let d = mo.frequency_derivatives();
        r.iter().all(|v| v.is_finite()).then_some((r, d))
    };
    let norm = |r: &[f64; 2]| r[0].abs().max(r[1].abs());

    let g = 12;
    let mut best: Option<(f64, f64, f64)> = None;
    for i in 0..g {
        for j in 0..g {
            let k1 = n3 * (1.0 - (i as f64 + 0.5) / g as f64);
            let k2 = n1 * (j as f64 + 0.5) / g as f64;
            if let Some((r, _)) = residual(k1, k2) {
                if best.is_none_or(|b| norm(&r) < b.2) {
                    best = Some((k1, k2, norm(&r)));
                }
            }
        }
    }
    let (mut k1, mut k2, mut res) = best.ok_or(RadonError::NoRoot { p, q, n, residual: f64::INFINITY })?;
    for _ in 0..60 {
        let (r, d) = residual(k1, k2).ok_or(RadonError::NoRoot { p, q, n, residual: res })?;
        res = norm(&r);
        if res < 1e-12 {
            return Ok(TorusSpec::new(t, k1, k2)?);
        }
        let j = [[d[0][0] / two_pi, d[0][1] / two_pi], [d[1][0] / two_pi, d[1][1] / two_pi]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.abs() > 0.0) {
            break;
        }
        let s1 = -(r[0] * j[1][1] - j[0][1] * r[1]) / det;
        let s2 = -(j[0][0] * r[1] - j[1][0] * r[0]) / det;
        let mut lam = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let (c1, c2) = (k1 + lam * s1, k2 + lam * s2);
            if let Some((rc, _)) = residual(c1, c2) {
                if norm(&rc) < res {
                    k1 = c1;
                    k2 = c2;
                    moved = true;
                    break;
                }
            }
            lam *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Err(RadonError::NoRoot { p, q, n, residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::cf1;

    #[test]
    fn monomial_count() {
        for d in 0..=12 {
            let expect: usize = (0..=d).map(|m| m / 2 + 1).sum();
            assert_eq!(monomials(d).len(), expect);
        }
        assert_eq!(monomials(4).len(), 9);
    }

    #[test]
    fn reduced_kernel_at_the_midpoint() {
        let t = cf1();
        let k = reduce_kernel(&t, &BoundaryFunction::constant(1.0), MuChoice::Unit);
        assert!((k.value(1.5, 0.5) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn normal_incidence_example() {
        let t = cf1();
        let spec = TorusSpec::new(&t, -0.5, 0.5).unwrap();
        let h = FRAC_PI_2;
        let v = mu_weight(&t, MuChoice::NormalIncidence, &spec, h, h);
        assert!((v - 6f64.sqrt() / 0.75f64.sqrt()).abs() < 1e-12);
    }
}
