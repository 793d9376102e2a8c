//! Weighted Korobov space parameters and the decay function `r`.
//!
//! A frequency `h ∈ Z^d` is penalised by
//! `r_{α,γ}(h) = ∏_j max{1, |h_j|^α / γ_j}`; the space norm weights the
//! Fourier coefficient `f̂(h)` by this product. Everything in this module
//! is a pure function of its arguments.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sum::pairwise_sum;
use crate::zeta::riemann_zeta;

/// Non-increasing product weights `1 ≥ γ_1 ≥ γ_2 ≥ … > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(invalid("weights must not be empty"));
        }
        for (j, &g) in gammas.iter().enumerate() {
            if !(g > 0.0 && g <= 1.0) {
                return Err(invalid(format!(
                    "weight gamma_{} = {g} not in (0,1]",
                    j + 1
                )));
            }
        }
        if gammas.windows(2).any(|w| w[1] > w[0]) {
            return Err(invalid("weights must be non-increasing"));
        }
        Ok(Weights(gammas))
    }

    /// `d` copies of the same weight.
    pub fn constant(gamma: f64, d: usize) -> Result<Self> {
        Weights::new(vec![gamma; d])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> Result<f64> {
        self.0.get(j).copied().ok_or(Error::WeightIndex {
            index: j,
            len: self.0.len(),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// The first `d` weights, or an error if fewer are stored.
    pub fn prefix(&self, d: usize) -> Result<&[f64]> {
        if d > self.0.len() {
            return Err(Error::WeightIndex {
                index: d - 1,
                len: self.0.len(),
            });
        }
        Ok(&self.0[..d])
    }

    /// Elementwise `γ_j^e` for `e > 0`; stays in `(0,1]` and non-increasing.
    pub fn powf(&self, e: f64) -> Weights {
        debug_assert!(e > 0.0);
        Weights(self.0.iter().map(|g| g.powf(e)).collect())
    }
}

impl TryFrom<Vec<f64>> for Weights {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Weights::new(v)
    }
}

impl From<Weights> for Vec<f64> {
    fn from(w: Weights) -> Self {
        w.0
    }
}

/// The space `H_{d,α,γ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub d: usize,
    pub alpha: f64,
    pub weights: Weights,
}

impl SpaceParams {
    pub fn new(d: usize, alpha: f64, weights: Weights) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(invalid(format!("alpha must be >= 0, got {alpha}")));
        }
        weights.prefix(d)?;
        Ok(SpaceParams { d, alpha, weights })
    }

    /// The `d` weights actually in use.
    pub fn gammas(&self) -> &[f64] {
        &self.weights.as_slice()[..self.d]
    }

    /// The space `H_{d, α/λ, γ^{1/λ}}` used to phrase the `λ`-dependent bounds.
    pub fn rescaled(&self, lambda: f64) -> SpaceParams {
        SpaceParams {
            d: self.d,
            alpha: self.alpha / lambda,
            weights: self.weights.powf(1.0 / lambda),
        }
    }
}

/// Parameters of the randomized algorithm: `λ` selects the accepted set,
/// `δ` only enters the error bounds, `τ` is the acceptance fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmParams {
    pub lambda: f64,
    pub delta: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
}

fn default_tau() -> f64 {
    0.5
}

impl AlgorithmParams {
    pub fn new(lambda: f64, delta: f64) -> Self {
        AlgorithmParams {
            lambda,
            delta,
            tau: 0.5,
        }
    }

    /// `λ = α - 0.05`, clipped into `(1/2, α)` (unshifted) or `(0, α)` (shifted).
    pub fn default_for(alpha: f64, shifted: bool) -> Result<Self> {
        let lo = if shifted { 0.0 } else { 0.5 };
        if !(alpha > lo) {
            return Err(invalid(format!(
                "alpha = {alpha} admits no lambda in ({lo}, alpha)"
            )));
        }
        let mut lambda = alpha - 0.05;
        if lambda <= lo {
            lambda = 0.5 * (lo + alpha);
        }
        let delta = if shifted {
            0.1
        } else {
            (0.5 * (lambda - 0.5)).min(0.1)
        };
        Ok(AlgorithmParams::new(lambda, delta))
    }

    /// Checks `λ ∈ (0, α)` (or `(1/2, α)` without shift) and the matching `δ` range.
    pub fn validate(&self, alpha: f64, shifted: bool) -> Result<()> {
        let lo = if shifted { 0.0 } else { 0.5 };
        if !(self.lambda > lo && self.lambda < alpha) {
            return Err(invalid(format!(
                "lambda = {} not in ({lo}, {alpha})",
                self.lambda
            )));
        }
        if !(self.delta > 0.0) {
            return Err(invalid(format!("delta = {} must be positive", self.delta)));
        }
        if !shifted && !(self.delta < self.lambda - 0.5) {
            return Err(invalid(format!(
                "delta = {} must be below lambda - 1/2 = {}",
                self.delta,
                self.lambda - 0.5
            )));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(invalid(format!("tau = {} not in (0,1)", self.tau)));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn abs_pow(h: i64, alpha: f64) -> f64 {
    let a = h.unsigned_abs() as f64;
    if alpha.fract() == 0.0 && alpha <= 64.0 {
        a.powi(alpha as i32)
    } else {
        a.powf(alpha)
    }
}

/// Unchecked one-dimensional factor; `r(0) = 1` for every `α` including 0.
#[inline]
pub(crate) fn r_factor(alpha: f64, gamma: f64, h: i64) -> f64 {
    if h == 0 {
        1.0
    } else {
        (abs_pow(h, alpha) / gamma).max(1.0)
    }
}

/// `r_{α,γ}(h) = max{1, |h|^α / γ}`.
pub fn r_value(alpha: f64, gamma: f64, h: i64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(format!("gamma = {gamma} not in (0,1]")));
    }
    if !(alpha >= 0.0) {
        return Err(invalid(format!("alpha = {alpha} must be >= 0")));
    }
    Ok(r_factor(alpha, gamma, h))
}

/// Product `r_{α,γ}(h) = ∏_j r_{α,γ_j}(h_j)` over the space dimension.
pub fn r_vector(space: &SpaceParams, h: &[i64]) -> Result<f64> {
    if h.len() != space.d {
        return Err(Error::DimensionMismatch {
            expected: space.d,
            got: h.len(),
        });
    }
    Ok(r_product(space.alpha, space.gammas(), h))
}

#[inline]
pub(crate) fn r_product(alpha: f64, gammas: &[f64], h: &[i64]) -> f64 {
    h.iter()
        .zip(gammas)
        .map(|(&hj, &g)| r_factor(alpha, g, hj))
        .product()
}

/// `V_d(β, γ) = 3 ∏_{j≤d} (1 + 2 γ_j ζ(β))`.
pub fn v_d(beta: f64, weights: &Weights, d: usize) -> Result<f64> {
    let zeta = riemann_zeta(beta)?;
    let gammas = weights.prefix(d)?;
    Ok(3.0 * gammas.iter().map(|g| 1.0 + 2.0 * g * zeta).product::<f64>())
}

/// Certified enclosure of an exact value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Slack for accumulated float rounding in the brute-force sums.
const ROUNDING_SLACK: f64 = 1e-12;

/// Brute-force `Σ_{h ∈ [-H,H]^d} 1/r_{β,γ}(h)` widened by the tail
/// `Σ_{|h|>H} γ|h|^{-β} ≤ 2γ H^{1-β}/(β-1)` per coordinate.
///
/// The returned interval contains the full lattice sum over `Z^d`.
pub fn sum_inverse_r_oracle(
    beta: f64,
    weights: &Weights,
    d: usize,
    truncation: u64,
) -> Result<Interval> {
    if !(beta > 1.0) {
        return Err(invalid(format!("beta = {beta} must exceed 1")));
    }
    if truncation == 0 {
        return Err(invalid("truncation must be at least 1"));
    }
    let gammas = weights.prefix(d)?;
    let bound = i64::try_from(truncation).map_err(|_| invalid("truncation too large"))?;

    // Iterate the box in odometer order; each innermost row is summed
    // pairwise, row sums are summed pairwise at the end.
    let width = (2 * bound + 1) as usize;
    let mut outer = vec![-bound; d.saturating_sub(1)];
    let mut row_sums = Vec::new();
    let mut row = Vec::with_capacity(width);
    loop {
        let outer_r = r_product(beta, gammas, &outer);
        let g_last = gammas[d - 1];
        row.clear();
        for h in -bound..=bound {
            row.push(1.0 / (outer_r * r_factor(beta, g_last, h)));
        }
        row_sums.push(pairwise_sum(&row));
        if !advance(&mut outer, bound) {
            break;
        }
    }
    let boxed = pairwise_sum(&row_sums);
    let tail_factor: f64 = gammas
        .iter()
        .map(|g| 1.0 + 2.0 * g * (truncation as f64).powf(1.0 - beta) / (beta - 1.0))
        .product();
    Ok(Interval {
        lower: boxed * (1.0 - ROUNDING_SLACK),
        upper: boxed * tail_factor * (1.0 + ROUNDING_SLACK),
    })
}

/// Odometer increment over `[-bound, bound]^k`; false after the last vector.
fn advance(v: &mut [i64], bound: i64) -> bool {
    for x in v.iter_mut().rev() {
        if *x < bound {
            *x += 1;
            return true;
        }
        *x = -bound;
    }
    false
}

/// Exact `|{h ∈ Z^d : r_{β,γ}(h) ≤ T}|` by pruned enumeration.
///
/// Vectors with `r` exactly equal to `T` are counted. `budget` caps the
/// number of visited partial vectors.
pub fn count_small_r(
    beta: f64,
    weights: &Weights,
    d: usize,
    threshold: f64,
    budget: u64,
) -> Result<u64> {
    if !(beta > 0.0) {
        return Err(invalid(format!("beta = {beta} must be positive")));
    }
    if !(threshold > 0.0) {
        return Err(invalid(format!("T = {threshold} must be positive")));
    }
    let gammas = weights.prefix(d)?;
    let mut visited = 0u64;
    let mut count = 0u64;
    count_rec(
        beta,
        gammas,
        threshold,
        1.0,
        &mut visited,
        &mut count,
        budget,
    )?;
    Ok(count)
}

fn count_rec(
    beta: f64,
    gammas: &[f64],
    threshold: f64,
    partial: f64,
    visited: &mut u64,
    count: &mut u64,
    budget: u64,
) -> Result<()> {
    let Some((&g, rest)) = gammas.split_first() else {
        *count += 1;
        return Ok(());
    };
    let remaining = threshold / partial;
    if remaining < 1.0 {
        return Ok(());
    }
    let max_h = (remaining * g).powf(1.0 / beta).floor() as i64 + 1;
    for h in -max_h..=max_h {
        let r = partial * r_factor(beta, g, h);
        if r > threshold {
            continue;
        }
        *visited += 1;
        if *visited > budget {
            return Err(Error::BudgetExceeded { budget });
        }
        count_rec(beta, rest, threshold, r, visited, count, budget)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn space(d: usize, alpha: f64, g: &[f64]) -> SpaceParams {
        SpaceParams::new(d, alpha, Weights::new(g.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn r_value_examples() {
        assert_eq!(r_value(1.0, 0.5, 3).unwrap(), 6.0);
        assert_eq!(r_value(2.0, 1.0, 0).unwrap(), 1.0);
        assert_eq!(r_value(0.0, 1.0, 7).unwrap(), 1.0);
        assert!(r_value(1.0, 0.0, 1).is_err());
        assert!(r_value(1.0, 1.5, 1).is_err());
    }

    #[test]
    fn r_vector_examples() {
        assert_eq!(r_vector(&space(2, 1.0, &[1.0, 1.0]), &[1, 2]).unwrap(), 2.0);
        assert_eq!(r_vector(&space(2, 1.0, &[1.0, 1.0]), &[0, 0]).unwrap(), 1.0);
        assert_eq!(
            r_vector(&space(2, 2.0, &[1.0, 0.25]), &[3, 2]).unwrap(),
            144.0
        );
        assert!(matches!(
            r_vector(&space(2, 1.0, &[1.0, 1.0]), &[1]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn weights_validation() {
        assert!(Weights::new(vec![1.0, 0.5, 0.5]).is_ok());
        assert!(Weights::new(vec![0.5, 1.0]).is_err());
        assert!(Weights::new(vec![1.0, 0.0]).is_err());
        assert!(Weights::new(vec![]).is_err());
        let w = Weights::new(vec![1.0]).unwrap();
        assert!(matches!(
            w.get(1),
            Err(Error::WeightIndex { index: 1, len: 1 })
        ));
        assert!(SpaceParams::new(2, 1.0, w).is_err());
    }

    #[test]
    fn default_lambda_is_clipped() {
        let a = AlgorithmParams::default_for(1.0, false).unwrap();
        assert_relative_eq!(a.lambda, 0.95);
        a.validate(1.0, false).unwrap();
        let b = AlgorithmParams::default_for(0.52, false).unwrap();
        assert_relative_eq!(b.lambda, 0.51);
        b.validate(0.52, false).unwrap();
        let c = AlgorithmParams::default_for(0.75, true).unwrap();
        assert_relative_eq!(c.lambda, 0.70);
        c.validate(0.75, true).unwrap();
        assert!(AlgorithmParams::default_for(0.5, false).is_err());
        assert_eq!(a.tau, 0.5);
    }

    #[test]
    fn v_d_examples() {
        let one = Weights::new(vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(
            v_d(2.0, &one, 1).unwrap(),
            3.0 * (1.0 + PI * PI / 3.0),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            v_d(2.0, &one, 2).unwrap(),
            55.208905813512862983,
            max_relative = 1e-14
        );
        let tiny = Weights::new(vec![1e-300; 4]).unwrap();
        assert_relative_eq!(v_d(4.0, &tiny, 4).unwrap(), 3.0);
        assert!(v_d(1.0, &one, 1).is_err());
    }

    #[test]
    fn lemma_sum_examples() {
        let w = Weights::new(vec![1.0]).unwrap();
        let i = sum_inverse_r_oracle(2.0, &w, 1, 1_000_000).unwrap();
        assert!(i.contains(1.0 + PI * PI / 3.0), "{i:?}");
        assert!(i.width() < 1e-5);
        let i = sum_inverse_r_oracle(4.0, &w, 1, 1000).unwrap();
        assert!(i.contains(1.0 + PI.powi(4) / 45.0), "{i:?}");
        let w = Weights::new(vec![1.0, 0.5]).unwrap();
        let i = sum_inverse_r_oracle(2.0, &w, 2, 1000).unwrap();
        let exact = (1.0 + PI * PI / 3.0) * (1.0 + PI * PI / 6.0);
        assert!(i.contains(exact), "{i:?}");
    }

    #[test]
    fn count_small_r_examples() {
        let w = Weights::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(count_small_r(2.0, &w, 1, 9.0, 1000).unwrap(), 7);
        assert_eq!(count_small_r(2.0, &w, 1, 0.5, 1000).unwrap(), 0);
        // |h_j| = 1 gives r = 1 on the boundary, so the ±1 axes and diagonals count
        assert_eq!(count_small_r(2.0, &w, 2, 1.0, 1000).unwrap(), 9);
        assert!(matches!(
            count_small_r(2.0, &w, 2, 1e6, 10),
            Err(Error::BudgetExceeded { budget: 10 })
        ));
    }

    proptest! {
        #[test]
        fn rescaling_identity(h in proptest::collection::vec(-50i64..50, 1..4),
                              lambda in 0.05f64..0.99,
                              alpha in 0.1f64..4.0,
                              g in 0.01f64..1.0) {
            let d = h.len();
            let weights = Weights::new((0..d).map(|j| g.powi(j as i32)).collect()).unwrap();
            let s = SpaceParams::new(d, alpha, weights).unwrap();
            let direct = r_vector(&s, &h).unwrap();
            let via = r_vector(&s.rescaled(lambda), &h).unwrap().powf(lambda);
            prop_assert!((direct - via).abs() <= 1e-12 * direct);
            prop_assert!(direct >= 1.0);
        }

        #[test]
        fn counting_bound(t in 0.5f64..200.0, g1 in 0.1f64..1.0, ratio in 0.1f64..1.0,
                          d in 1usize..4, beta in 1.2f64..4.0) {
            let weights = Weights::new(vec![g1, g1 * ratio, g1 * ratio * ratio]).unwrap();
            let count = count_small_r(beta, &weights, d, t, 10_000_000).unwrap();
            let v = v_d(beta, &weights, d).unwrap();
            prop_assert!((count as f64) <= t * v);
        }
    }
}
