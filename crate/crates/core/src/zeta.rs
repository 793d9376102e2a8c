//! Riemann and Hurwitz zeta functions for real arguments `s > 1`.
//!
//! Both are evaluated by Euler–Maclaurin summation: a short direct sum,
//! the integral tail, and ten Bernoulli correction terms. With the
//! direct sum running to `q + 20` the truncation error is below `1e-16`
//! relative for every `s` in `(1, 40]`.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

const DIRECT_TERMS: usize = 20;

/// `B_{2j} / (2j)!` for `j = 1..=10`.
const BERNOULLI_OVER_FACTORIAL: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
];

/// Hurwitz zeta `ζ(s, q) = Σ_{k≥0} (k + q)^{-s}` for `s > 1`, `q > 0`.
pub fn hurwitz_zeta(s: f64, q: f64) -> Result<f64> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(invalid(format!("zeta needs s > 1, got {s}")));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(invalid(format!("hurwitz zeta needs q > 0, got {q}")));
    }
    // smallest terms first
    let mut direct = 0.0;
    for k in (0..DIRECT_TERMS).rev() {
        direct += (q + k as f64).powf(-s);
    }
    let a = q + DIRECT_TERMS as f64;
    let a_pow = a.powf(-s);
    let mut tail = a * a_pow / (s - 1.0) + 0.5 * a_pow;

    // rising factorial s(s+1)...(s+2j-2) times a^{-s-2j+1}
    let inv_a2 = 1.0 / (a * a);
    let mut factor = s * a_pow / a;
    for (j, coeff) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        tail += coeff * factor;
        let m = 2.0 * (j as f64 + 1.0);
        factor *= (s + m - 1.0) * (s + m) * inv_a2;
    }
    Ok(direct + tail)
}

/// Riemann zeta `ζ(s)` for `s > 1`; exact closed forms at 2, 4 and 6.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    if s == 2.0 {
        Ok(PI * PI / 6.0)
    } else if s == 4.0 {
        Ok(PI.powi(4) / 90.0)
    } else if s == 6.0 {
        Ok(PI.powi(6) / 945.0)
    } else {
        hurwitz_zeta(s, 1.0)
    }
}
