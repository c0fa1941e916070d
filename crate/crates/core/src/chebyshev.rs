//! Chebyshev interpolation on an interval.

use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolates `f` at `n` first-kind Chebyshev points of `[a, b]`.
    pub fn fit<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> Self {
        let values: Vec<f64> = (0..n)
            .map(|j| {
                let t = (PI * (j as f64 + 0.5) / n as f64).cos();
                f(0.5 * (a + b) + 0.5 * (b - a) * t)
            })
            .collect();
        let coeffs = (0..n)
            .map(|k| {
                let s: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos())
                    .sum();
                if k == 0 {
                    s / n as f64
                } else {
                    2.0 * s / n as f64
                }
            })
            .collect();
        Chebyshev { a, b, coeffs }
    }

    /// Doubles the degree from `n0` until the trailing coefficients fall
    /// below `tol` relative to the largest one, up to `n_max` points.
    /// Stops early at a noise plateau, when doubling no longer shrinks the
    /// tail, and keeps the smaller fit.
    pub fn fit_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n0: usize, n_max: usize, tol: f64) -> Self {
        let mut n = n0;
        let mut prev: Option<Self> = None;
        loop {
            let c = Self::fit(&f, a, b, n);
            let tail = c.tail_ratio();
            if tail < tol {
                return c.trimmed(tol);
            }
            if let Some(p) = prev.take() {
                let ptail = p.tail_ratio();
                if tail > 0.1 * ptail && ptail < 1e3 * tol {
                    return p.trimmed(ptail);
                }
            }
            if n >= n_max {
                return c.trimmed(tol);
            }
            prev = Some(c);
            n *= 2;
        }
    }

    /// Ratio of the last three coefficients to the largest coefficient.
    pub fn tail_ratio(&self) -> f64 {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let n = self.coeffs.len();
        self.coeffs[n.saturating_sub(3)..].iter().fold(0.0f64, |m, c| m.max(c.abs())) / scale
    }

    fn trimmed(mut self, tol: f64) -> Self {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(|c| c.abs() < 0.01 * tol * scale) {
            self.coeffs.pop();
        }
        self
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }
}
