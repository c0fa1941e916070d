//! Gragg–Bulirsch–Stoer extrapolation steps.

/// Substep counts of the modified midpoint rule.
const SEQ: [usize; 8] = [2, 4, 6, 8, 10, 12, 14, 16];

/// Result of one extrapolated step.
pub struct Step<const D: usize> {
    pub y: [f64; D],
    /// Scaled error; the step is acceptable when `err ≤ 1`.
    pub err: f64,
}

fn midpoint<const D: usize, F>(f: &mut F, y: &[f64; D], dy0: &[f64; D], h: f64, n: usize) -> Option<[f64; D]>
where
    F: FnMut(&[f64; D], &mut [f64; D]) -> bool,
{
    let hh = h / n as f64;
    let mut z0 = *y;
    let mut z1 = [0.0; D];
    for i in 0..D {
        z1[i] = y[i] + hh * dy0[i];
    }
    let mut d = [0.0; D];
    for _ in 1..n {
        if !f(&z1, &mut d) {
            return None;
        }
        for i in 0..D {
            let z2 = z0[i] + 2.0 * hh * d[i];
            z0[i] = z1[i];
            z1[i] = z2;
        }
    }
    if !f(&z1, &mut d) {
        return None;
    }
    let mut out = [0.0; D];
    for i in 0..D {
        out[i] = 0.5 * (z1[i] + z0[i] + hh * d[i]);
    }
    Some(out)
}

/// One step of size `h` from `y`. Returns `None` when the right-hand side
/// reports an invalid state.
///
/// The error is the difference of the last two extrapolation columns,
/// scaled by `tol·(1 + |y|)` componentwise.
pub fn gbs_step<const D: usize, F>(f: &mut F, y: &[f64; D], h: f64, tol: f64) -> Option<Step<D>>
where
    F: FnMut(&[f64; D], &mut [f64; D]) -> bool,
{
    let mut dy0 = [0.0; D];
    if !f(y, &mut dy0) {
        return None;
    }
    let k = SEQ.len();
    let mut table: Vec<[f64; D]> = Vec::with_capacity(k);
    let mut prev_diag = [0.0; D];
    for (j, &n) in SEQ.iter().enumerate() {
        let mut t = midpoint(f, y, &dy0, h, n)?;
        // Aitken–Neville in h²: row j built in place over the previous row
        for m in 1..=j {
            let r = (n as f64 / SEQ[j - m] as f64).powi(2) - 1.0;
            let prev = table[m - 1];
            let mut next = [0.0; D];
            for i in 0..D {
                next[i] = t[i] + (t[i] - prev[i]) / r;
            }
            table[m - 1] = t;
            t = next;
            if j == k - 1 && m == j - 1 {
                prev_diag = t;
            }
        }
        table.push(t);
    }
    let best = table[k - 1];
    let mut err = 0.0f64;
    for i in 0..D {
        if !best[i].is_finite() {
            return None;
        }
        let e = (best[i] - prev_diag[i]).abs() / (tol * (1.0 + y[i].abs()));
        err = err.max(e);
    }
    Some(Step { y: best, err })
}

/// Step-size factor after a step with scaled error `err`.
pub fn step_factor(err: f64) -> f64 {
    let order = 2 * SEQ.len() - 1;
    if err == 0.0 {
        4.0
    } else {
        (0.9 * err.powf(-1.0 / order as f64)).clamp(0.2, 4.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_step() {
        let mut f = |y: &[f64; 2], d: &mut [f64; 2]| {
            d[0] = y[1];
            d[1] = -y[0];
            true
        };
        let s = gbs_step(&mut f, &[1.0, 0.0], 0.5, 1e-12).unwrap();
        assert!((s.y[0] - 0.5f64.cos()).abs() < 1e-14);
        assert!((s.y[1] + 0.5f64.sin()).abs() < 1e-14);
        assert!(s.err < 1.0);
    }
}
