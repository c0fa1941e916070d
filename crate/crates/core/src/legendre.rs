//! Legendre polynomials and the symmetric-function identities behind the
//! moment method.
//!
//! For `0 < x₂ ≤ x₁` write `s₁ = (x₁+x₂)/2` and `s₂ = √(x₁x₂)`. Then
//!
//! ```text
//! ∫_{x₂}^{x₁} z^k dz / √((x₁−z)(z−x₂)) = π s₂^k P_k(s₁/s₂),
//! 1/√((x₁−κ)(x₂−κ)) = Σ_{j≥1} Q_j κ^{−j},  Q_j = −s₂^{j−1} P_{j−1}(s₁/s₂)  (|κ| large, κ < 0).
//! ```
//!
//! The homogeneous form `s₂^k P_k(s₁/s₂)` is evaluated by its own three-term
//! recurrence, which never divides by `s₂`.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LegendreError {
    #[error("index out of range: m={m}, k={k}, r={r}")]
    IndexOutOfRange { m: usize, k: usize, r: usize },
}

/// `(s₁, s₂)` for `0 < x₂ ≤ x₁`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetricPoint {
    pub s1: f64,
    pub s2: f64,
}

impl SymmetricPoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        let (hi, lo) = if x1 >= x2 { (x1, x2) } else { (x2, x1) };
        SymmetricPoint { s1: 0.5 * (hi + lo), s2: (hi * lo).sqrt() }
    }

    /// Roots of `x² − 2s₁x + s₂² = 0`, larger first.
    pub fn roots(&self) -> (f64, f64) {
        let disc = ((self.s1 - self.s2) * (self.s1 + self.s2)).max(0.0).sqrt();
        let hi = self.s1 + disc;
        let lo = if hi > 0.0 { self.s2 * self.s2 / hi } else { self.s1 - disc };
        (hi, lo)
    }
}

/// `P_k(z)` by the three-term recurrence.
pub fn legendre_p(k: usize, z: f64) -> f64 {
    homogeneous_p(k, z, 1.0)
}

/// All of `P_0(z), …, P_k(z)`.
pub fn legendre_p_all(k: usize, z: f64) -> Vec<f64> {
    homogeneous_p_all(k, z, 1.0)
}

/// `s₂^k P_k(s₁/s₂)`, a polynomial in `s₁` and `s₂²`.
pub fn homogeneous_p(k: usize, s1: f64, s2: f64) -> f64 {
    let s2sq = s2 * s2;
    let (mut p0, mut p1) = (1.0, s1);
    if k == 0 {
        return p0;
    }
    for j in 1..k {
        let j = j as f64;
        let p2 = ((2.0 * j + 1.0) * s1 * p1 - j * s2sq * p0) / (j + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

fn homogeneous_p_all(k: usize, s1: f64, s2: f64) -> Vec<f64> {
    let s2sq = s2 * s2;
    let mut out = Vec::with_capacity(k + 1);
    out.push(1.0);
    if k >= 1 {
        out.push(s1);
    }
    for j in 1..k {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0) * s1 * out[j] - jf * s2sq * out[j - 1]) / (jf + 1.0);
        out.push(next);
    }
    out
}

/// `R_k(x₁, x₂) = π s₂^k P_k(s₁/s₂)`.
pub fn r_k(x1: f64, x2: f64, k: usize) -> f64 {
    let p = SymmetricPoint::new(x1, x2);
    PI * homogeneous_p(k, p.s1, p.s2)
}

/// `Q_j(x₁, x₂) = −s₂^{j−1} P_{j−1}(s₁/s₂)` for `j ≥ 1`.
pub fn inverse_sqrt_series_coeff(j: usize, x1: f64, x2: f64) -> f64 {
    assert!(j >= 1, "series starts at j = 1");
    let p = SymmetricPoint::new(x1, x2);
    -homogeneous_p(j - 1, p.s1, p.s2)
}

/// `ln A_k` with `A_k = (1·3·5⋯(2k−1))/k!`; `A_0 = 1`.
fn ln_a(k: usize) -> f64 {
    (1..=k).map(|i| ((2 * i - 1) as f64 / i as f64).ln()).sum()
}

/// `A_k = (1·3·5⋯(2k−1))/k!`, zero for negative `k`.
pub fn adams_a(k: i64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let k = k as usize;
    if k <= 15 {
        (1..=k).map(|i| (2 * i - 1) as f64 / i as f64).product()
    } else {
        ln_a(k).exp()
    }
}

/// Linearization coefficient in `P_k P_{m−k} = Σ_r c^m_{k,r} P_{m−2r}`.
pub fn adams_coeff(m: usize, k: usize, r: usize) -> Result<f64, LegendreError> {
    if k > m || r > m / 2 {
        return Err(LegendreError::IndexOutOfRange { m, k, r });
    }
    let (m, k, r) = (m as i64, k as i64, r as i64);
    let a = [k - r, r, m - k - r];
    if a.iter().any(|&v| v < 0) {
        return Ok(0.0);
    }
    let ratio = (2 * m - 4 * r + 1) as f64 / (2 * m - 2 * r + 1) as f64;
    if m <= 15 {
        Ok(adams_a(k - r) * adams_a(r) * adams_a(m - k - r) / adams_a(m - r) * ratio)
    } else {
        let l = ln_a((k - r) as usize) + ln_a(r as usize) + ln_a((m - k - r) as usize)
            - ln_a((m - r) as usize);
        Ok(l.exp() * ratio)
    }
}

/// Coefficients `a_r` with `z^m = Σ_r a_r P_{m−2r}(z)`, `r = 0..=m/2`.
pub fn monomial_in_legendre(m: usize) -> Vec<f64> {
    // z^m = Σ_r m! (2m−4r+1) / (2^r r! (2m−2r+1)!!) P_{m−2r}
    (0..=m / 2)
        .map(|r| {
            let l = m - 2 * r;
            let mut v = (2 * l + 1) as f64;
            // m! / (r! 2^r (2m−2r+1)!!) = Π over factors, accumulated stably
            for i in 1..=m {
                v *= i as f64;
            }
            for i in 1..=r {
                v /= 2.0 * i as f64;
            }
            let mut df = 1.0;
            let mut j = 2 * (m - r) + 1;
            while j > 1 {
                df *= j as f64;
                j -= 2;
            }
            v / df
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_values() {
        assert_eq!(legendre_p(0, 0.3), 1.0);
        assert_eq!(legendre_p(1, 0.3), 0.3);
        assert!((legendre_p(2, 0.5) + 0.125).abs() < 1e-16);
        for k in 0..40 {
            assert!((legendre_p(k, 1.0) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn small_adams_coefficients() {
        assert!((adams_coeff(2, 1, 0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((adams_coeff(2, 1, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        for m in 0..20 {
            assert!((adams_coeff(m, 0, 0).unwrap() - 1.0).abs() < 1e-13);
        }
        assert!(adams_coeff(4, 5, 0).is_err());
        assert!(adams_coeff(4, 1, 3).is_err());
    }

    #[test]
    fn log_domain_matches_direct_product() {
        for k in 0..=15 {
            assert!((ln_a(k).exp() / adams_a(k as i64) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn low_order_monomials() {
        assert_eq!(monomial_in_legendre(0), vec![1.0]);
        assert_eq!(monomial_in_legendre(1), vec![1.0]);
        let c = monomial_in_legendre(2);
        assert!((c[0] - 2.0 / 3.0).abs() < 1e-15 && (c[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_point_roundtrip() {
        let p = SymmetricPoint::new(2.0, 0.5);
        let (a, b) = p.roots();
        assert!((a - 2.0).abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
    }
}
