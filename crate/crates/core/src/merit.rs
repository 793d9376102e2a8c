//! Figures of merit of a lattice rule.
//!
//! `P_{β,γ}(p,z)` sums `1/r_{β,γ}(h)` over the nonzero dual lattice
//! `{h : h·z ≡ 0 mod p}`; the worst-case error in `H_{d,α,γ}` is
//! `sqrt(P_{2α,γ²})`. `ρ_{α,γ}(p,z)` is the minimum of `r_{α,γ}` over the
//! same set.
//!
//! Because `1/r_{β,γ}(h) = γ|h|^{-β}` for every `h ≠ 0`, the dual sum
//! factorises through the one-dimensional kernel
//! `K_β(t) = Σ_{h≠0} e^{2πiht} |h|^{-β}`:
//!
//! `P = -1 + (1/p) Σ_k ∏_j (1 + γ_j K_β({k z_j / p}))`.
//!
//! For even `β ≤ 6` the kernel is a Bernoulli polynomial. For any other
//! `β > 1` only the values `K_β(m/p)` are needed; they are the discrete
//! cosine transform of the residue-class sums
//! `Σ_{h ≡ a (p), h≠0} |h|^{-β} = p^{-β}(ζ(β, a/p) + ζ(β, 1 - a/p))`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::korobov::{r_factor, r_product, AlgorithmParams, SpaceParams, Weights};
use crate::lattice::{inv_mod, is_prime, mul_mod, residue, LatticeRule};
use crate::sum::{pairwise_sum, CHUNK};
use crate::zeta::{hurwitz_zeta, riemann_zeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeritMethod {
    /// Bernoulli-polynomial kernel, `β ∈ {2, 4, 6}`.
    ClosedForm,
    /// Hurwitz-zeta residue-class kernel, any `β > 1`.
    HurwitzKernel,
    /// Truncated sum over a box of dual vectors plus a certified tail.
    TruncatedOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeritResult {
    pub value: f64,
    pub method: MeritMethod,
    /// Zero unless `method` is `TruncatedOracle`; the exact merit lies in
    /// `[value, value + tail_bound]`.
    pub tail_bound: f64,
}

/// JSON record of one merit evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeritRecord {
    pub p: u64,
    pub z: Vec<u64>,
    pub beta: f64,
    pub gammas: Vec<f64>,
    pub value: f64,
    pub method: MeritMethod,
    pub tail_bound: f64,
}

impl MeritRecord {
    pub fn new(rule: &LatticeRule, beta: f64, gammas: &[f64], m: MeritResult) -> Self {
        MeritRecord {
            p: rule.p(),
            z: rule.z().to_vec(),
            beta,
            gammas: gammas.to_vec(),
            value: m.value,
            method: m.method,
            tail_bound: m.tail_bound,
        }
    }
}

/// A nonzero dual-lattice vector and its `r_{α,γ}` value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVector {
    pub h: Vec<i64>,
    pub r: f64,
}

/// Bernoulli polynomials `B_2`, `B_4`, `B_6` on `[0,1]`.
pub fn bernoulli_poly(order: u32, x: f64) -> Result<f64> {
    let x2 = x * x;
    match order {
        2 => Ok(x2 - x + 1.0 / 6.0),
        4 => Ok(x2 * x2 - 2.0 * x2 * x + x2 - 1.0 / 30.0),
        6 => Ok(x2 * x2 * x2 - 3.0 * x2 * x2 * x + 2.5 * x2 * x2 - 0.5 * x2 + 1.0 / 42.0),
        _ => Err(Error::Unsupported(format!(
            "Bernoulli polynomial of order {order}"
        ))),
    }
}

/// `(-1)^{β/2+1} (2π)^β / β!`, so that `K_β(x) = c · B_β({x})`.
pub fn bernoulli_kernel_scale(beta: u32) -> f64 {
    let sign = if (beta / 2) % 2 == 1 { 1.0 } else { -1.0 };
    let fact: f64 = (1..=beta).map(f64::from).product();
    sign * (2.0 * PI).powi(beta as i32) / fact
}

/// `β` as an even integer in `{2,4,6}`, if it is one.
pub fn closed_form_order(beta: f64) -> Option<u32> {
    [2u32, 4, 6].into_iter().find(|&b| beta == f64::from(b))
}

/// Values `K_β(m/p)` for `m = 0, …, p-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    p: u64,
    beta: f64,
    method: MeritMethod,
    values: Vec<f64>,
}

impl KernelTable {
    /// Bernoulli closed form; `β` must be 2, 4 or 6.
    pub fn bernoulli(p: u64, beta: f64) -> Result<Self> {
        let order = closed_form_order(beta).ok_or_else(|| {
            Error::Unsupported(format!(
                "closed-form merit needs beta in {{2,4,6}}, got {beta}"
            ))
        })?;
        let c = bernoulli_kernel_scale(order);
        let values = (0..p)
            .map(|m| bernoulli_poly(order, m as f64 / p as f64).map(|b| c * b))
            .collect::<Result<_>>()?;
        Ok(KernelTable {
            p,
            beta,
            method: MeritMethod::ClosedForm,
            values,
        })
    }

    /// Residue-class transform for any `β > 1`; `O(p²)` time.
    pub fn hurwitz(p: u64, beta: f64) -> Result<Self> {
        if !(beta > 1.0) {
            return Err(invalid(format!("beta = {beta} must exceed 1")));
        }
        if p < 2 {
            return Err(invalid("p must be at least 2"));
        }
        let pf = p as f64;
        let scale = pf.powf(-beta);
        let mut class_sums = Vec::with_capacity(p as usize);
        class_sums.push(2.0 * riemann_zeta(beta)? * scale);
        for a in 1..p {
            let q = a as f64 / pf;
            class_sums.push(scale * (hurwitz_zeta(beta, q)? + hurwitz_zeta(beta, 1.0 - q)?));
        }
        let values = if p == 2 {
            vec![class_sums[0] + class_sums[1], class_sums[0] - class_sums[1]]
        } else {
            // odd p: S_a = S_{p-a} and K(m/p) = K((p-m)/p), so only half is summed
            let cos_table: Vec<f64> = (0..p).map(|i| (2.0 * PI * i as f64 / pf).cos()).collect();
            let half = (p - 1) / 2;
            let lower: Vec<f64> = (0..=half)
                .into_par_iter()
                .map(|m| {
                    let mut terms = Vec::with_capacity(half as usize);
                    let mut idx = 0u64;
                    for a in 1..=half {
                        idx += m;
                        if idx >= p {
                            idx -= p;
                        }
                        terms.push(class_sums[a as usize] * cos_table[idx as usize]);
                    }
                    class_sums[0] + 2.0 * pairwise_sum(&terms)
                })
                .collect();
            (0..p).map(|m| lower[m.min(p - m) as usize]).collect()
        };
        Ok(KernelTable {
            p,
            beta,
            method: MeritMethod::HurwitzKernel,
            values,
        })
    }

    /// Closed form when available, Hurwitz transform otherwise.
    pub fn for_beta(p: u64, beta: f64) -> Result<Self> {
        if closed_form_order(beta).is_some() {
            KernelTable::bernoulli(p, beta)
        } else {
            KernelTable::hurwitz(p, beta)
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn method(&self) -> MeritMethod {
        self.method
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `P_{β,γ}(p, z)` for the tabulated `p` and `β`.
    pub fn merit(&self, z: &[u64], gammas: &[f64]) -> Result<f64> {
        if gammas.len() < z.len() {
            return Err(Error::DimensionMismatch {
                expected: z.len(),
                got: gammas.len(),
            });
        }
        let p = self.p;
        // q = ∏(1 + a_j) - 1 accumulated as q + a + q a to avoid cancellation
        let term = |k: u64| -> f64 {
            let mut q = 0.0;
            for (&zj, &g) in z.iter().zip(gammas) {
                let a = g * self.values[mul_mod(k, zj, p) as usize];
                q += a + q * a;
            }
            q
        };
        let chunk = |start: u64| -> f64 {
            let end = (start + CHUNK as u64).min(p);
            let terms: Vec<f64> = (start..end).map(term).collect();
            pairwise_sum(&terms)
        };
        let starts: Vec<u64> = (0..p).step_by(CHUNK).collect();
        let sums: Vec<f64> = if starts.len() == 1 {
            vec![chunk(0)]
        } else {
            starts.into_par_iter().map(chunk).collect()
        };
        Ok(pairwise_sum(&sums) / p as f64)
    }
}

fn check_rule_weights(rule: &LatticeRule, weights: &Weights) -> Result<()> {
    weights.prefix(rule.d()).map(|_| ())
}

/// `P_{β,γ}(p,z)` through the Bernoulli kernel, `β ∈ {2,4,6}`, in `O(p d)`.
pub fn p_merit_closed(rule: &LatticeRule, beta: f64, weights: &Weights) -> Result<MeritResult> {
    check_rule_weights(rule, weights)?;
    let table = KernelTable::bernoulli(rule.p(), beta)?;
    Ok(MeritResult {
        value: table.merit(rule.z(), weights.as_slice())?,
        method: MeritMethod::ClosedForm,
        tail_bound: 0.0,
    })
}

/// `P_{β,γ}(p,z)` for any `β > 1`; closed form when `β ∈ {2,4,6}`.
pub fn p_merit(rule: &LatticeRule, beta: f64, weights: &Weights) -> Result<MeritResult> {
    check_rule_weights(rule, weights)?;
    let table = KernelTable::for_beta(rule.p(), beta)?;
    Ok(MeritResult {
        value: table.merit(rule.z(), weights.as_slice())?,
        method: table.method(),
        tail_bound: 0.0,
    })
}

/// Truncated dual sum over `[-H, H]^d` with a certified tail.
///
/// The tail is bounded by the sum over all of `Z^d` outside the box:
/// `∏_j (S_j + T_j) - ∏_j S_j` with `S_j = 1 + 2γ_jζ(β)` and
/// `T_j = 2γ_j H^{1-β}/(β-1)`.
pub fn p_merit_oracle(
    rule: &LatticeRule,
    beta: f64,
    weights: &Weights,
    truncation: u64,
    budget: u64,
) -> Result<MeritResult> {
    if !(beta > 1.0) {
        return Err(invalid(format!("beta = {beta} must exceed 1")));
    }
    if truncation < rule.p() {
        return Err(invalid(format!(
            "truncation {truncation} must be at least p = {}",
            rule.p()
        )));
    }
    let d = rule.d();
    let gammas = weights.prefix(d)?;
    let bound = truncation as i64;
    let mut terms = Vec::new();
    let mut visited = 0u64;
    let mut h = vec![0i64; d];
    dual_in_box(rule, bound, 0, 0, &mut h, &mut visited, budget, &mut |h| {
        if h.iter().any(|&x| x != 0) {
            terms.push(1.0 / r_product(beta, gammas, h));
        }
    })?;
    let zeta = riemann_zeta(beta)?;
    let t = (truncation as f64).powf(1.0 - beta) / (beta - 1.0);
    let full: f64 = gammas.iter().map(|g| 1.0 + 2.0 * g * zeta).product();
    let padded: f64 = gammas.iter().map(|g| 1.0 + 2.0 * g * (zeta + t)).product();
    Ok(MeritResult {
        value: pairwise_sum(&terms),
        method: MeritMethod::TruncatedOracle,
        tail_bound: padded - full,
    })
}

/// Visits every dual vector in `[-bound, bound]^d` (including 0).
#[allow(clippy::too_many_arguments)]
fn dual_in_box(
    rule: &LatticeRule,
    bound: i64,
    j: usize,
    acc: u64,
    h: &mut Vec<i64>,
    visited: &mut u64,
    budget: u64,
    visit: &mut dyn FnMut(&[i64]),
) -> Result<()> {
    let p = rule.p();
    let d = rule.d();
    if j + 1 == d {
        let zl = rule.z()[j];
        let target = mul_mod((p - acc) % p, inv_mod(zl, p), p) as i64;
        let pi = p as i64;
        // smallest h ≡ target (mod p) with h ≥ -bound
        let mut x = target - ((target + bound) / pi) * pi;
        while x <= bound {
            *visited += 1;
            if *visited > budget {
                return Err(Error::BudgetExceeded { budget });
            }
            h[j] = x;
            visit(h);
            x += pi;
        }
        return Ok(());
    }
    for x in -bound..=bound {
        h[j] = x;
        let next = (acc + mul_mod(residue(x, p), rule.z()[j], p)) % p;
        dual_in_box(rule, bound, j + 1, next, h, visited, budget, visit)?;
    }
    Ok(())
}

/// Worst-case error `sqrt(P_{2α,γ²}(p,z))` of a single rule in `H_{d,α,γ}`.
pub fn worst_case_error(rule: &LatticeRule, space: &SpaceParams) -> Result<f64> {
    check_dims(rule, space)?;
    if !(space.alpha > 0.5) {
        return Err(Error::Unsupported(format!(
            "worst-case error is infinite for alpha = {} <= 1/2",
            space.alpha
        )));
    }
    let m = p_merit(rule, 2.0 * space.alpha, &space.weights.powf(2.0))?;
    Ok(m.value.sqrt())
}

fn check_dims(rule: &LatticeRule, space: &SpaceParams) -> Result<()> {
    if rule.d() != space.d {
        return Err(Error::DimensionMismatch {
            expected: space.d,
            got: rule.d(),
        });
    }
    Ok(())
}

/// All nonzero dual vectors with `r_{α,γ}(h) ≤ r_bound`, in lexicographic order.
///
/// Free coordinates range over `|h_j| ≤ (R γ_j)^{1/α}` with the remaining
/// budget pruned by the partial product; the last coordinate is solved
/// from the congruence.
pub fn enumerate_dual(
    rule: &LatticeRule,
    r_bound: f64,
    space: &SpaceParams,
    budget: u64,
) -> Result<Vec<DualVector>> {
    check_dims(rule, space)?;
    if !(space.alpha > 0.0) {
        return Err(invalid("alpha = 0 gives an unbounded enumeration box"));
    }
    if !(r_bound >= 1.0) {
        return Err(invalid(format!("r_bound = {r_bound} must be >= 1")));
    }
    enumerate_counted(rule, r_bound, space, budget).map(|(v, _)| v)
}

fn enumerate_counted(
    rule: &LatticeRule,
    r_bound: f64,
    space: &SpaceParams,
    budget: u64,
) -> Result<(Vec<DualVector>, u64)> {
    let mut out = Vec::new();
    let mut visited = 0u64;
    let mut h = vec![0i64; rule.d()];
    enumerate_rec(
        rule,
        space,
        r_bound,
        0,
        0,
        1.0,
        &mut h,
        &mut visited,
        budget,
        &mut out,
    )?;
    Ok((out, visited))
}

#[allow(clippy::too_many_arguments)]
fn enumerate_rec(
    rule: &LatticeRule,
    space: &SpaceParams,
    r_bound: f64,
    j: usize,
    acc: u64,
    partial: f64,
    h: &mut Vec<i64>,
    visited: &mut u64,
    budget: u64,
    out: &mut Vec<DualVector>,
) -> Result<()> {
    let p = rule.p();
    let pi = p as i64;
    let alpha = space.alpha;
    let g = space.gammas()[j];
    let remaining = r_bound / partial;
    let max_h = ((remaining * g).powf(1.0 / alpha).floor() as i64).saturating_add(1);
    if j + 1 == rule.d() {
        let target = mul_mod((p - acc) % p, inv_mod(rule.z()[j], p), p) as i64;
        let mut x = target - ((target + max_h) / pi) * pi;
        while x <= max_h {
            *visited += 1;
            if *visited > budget {
                return Err(Error::BudgetExceeded { budget });
            }
            let r = partial * r_factor(alpha, g, x);
            h[j] = x;
            if r <= r_bound && h.iter().any(|&v| v != 0) {
                out.push(DualVector { h: h.clone(), r });
            }
            x += pi;
        }
        return Ok(());
    }
    for x in -max_h..=max_h {
        let r = partial * r_factor(alpha, g, x);
        if r > r_bound {
            continue;
        }
        *visited += 1;
        if *visited > budget {
            return Err(Error::BudgetExceeded { budget });
        }
        h[j] = x;
        let next = (acc + mul_mod(residue(x, p), rule.z()[j], p)) % p;
        enumerate_rec(
            rule,
            space,
            r_bound,
            j + 1,
            next,
            r,
            h,
            visited,
            budget,
            out,
        )?;
    }
    h[j] = 0;
    Ok(())
}

/// Weighted Zaremba index `ρ_{α,γ}(p,z) = min_{h dual, h≠0} r_{α,γ}(h)`.
///
/// Doubles the enumeration bound from 1 until a dual vector appears; the
/// axis vector `(p, 0, …, 0)` caps the bound at `p^α/γ_1`.
/// `search_cap` limits the total enumeration work.
pub fn rho_index(rule: &LatticeRule, space: &SpaceParams, search_cap: u64) -> Result<f64> {
    check_dims(rule, space)?;
    if !(space.alpha > 0.0) {
        return Err(invalid("rho index needs alpha > 0"));
    }
    let axis = r_factor(space.alpha, space.gammas()[0], rule.p() as i64);
    let mut bound = 1.0f64;
    let mut spent = 0u64;
    loop {
        let capped = bound.min(axis);
        let (found, visited) =
            enumerate_counted(rule, capped, space, search_cap - spent).map_err(|e| match e {
                Error::BudgetExceeded { .. } => Error::BudgetExceeded { budget: search_cap },
                other => other,
            })?;
        if let Some(best) = found.iter().map(|v| v.r).min_by(f64::total_cmp) {
            return Ok(best);
        }
        spent += visited;
        debug_assert!(capped < axis, "axis vector must be found at the cap");
        bound *= 2.0;
    }
}

/// `#{z ∈ {1,…,p-1}^d : h·z ≡ 0 (mod p)}`.
///
/// With `m` coordinates of `h` nonzero mod `p`, the count is
/// `(p-1)^{d-m} · ((p-1)^m + (-1)^m (p-1)) / p`.
pub fn divisor_count(p: u64, h: &[i64]) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let d = h.len() as u32;
    let m = h.iter().filter(|&&x| residue(x, p) != 0).count() as u32;
    let q = (p - 1) as i128;
    let sign: i128 = if m.is_multiple_of(2) { 1 } else { -1 };
    let active = if m == 0 {
        1
    } else {
        (q.pow(m) + sign * q) / p as i128
    };
    u64::try_from(q.pow(d - m) * active).map_err(|_| invalid("count overflows u64"))
}

/// `ω_n(h)`, exactly or by Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaWeight {
    pub value: f64,
    /// False when the value is a Monte Carlo estimate.
    pub exact: bool,
    /// Standard error of the estimate; 0 when exact.
    pub std_error: f64,
}

/// Largest `(p-1)^d` enumerated exactly by [`omega_weight`].
pub const OMEGA_EXACT_LIMIT: u64 = 1_000_000;

/// `ω_n(h)`: probability that `h` lies in the dual lattice of the rule
/// drawn by the randomized algorithm (uniform `p ∈ 𝒫_n`, uniform `z` in
/// the accepted set `Z_{p,λ}`).
///
/// Exact by enumerating every candidate `z` when `(p-1)^d ≤ 10^6` for all
/// `p`; otherwise each prime contributes a Monte Carlo estimate from
/// `mc_samples` accepted draws and the result is flagged as inexact.
pub fn omega_weight(
    n: u64,
    h: &[i64],
    space: &SpaceParams,
    alg: &AlgorithmParams,
    mc_samples: u32,
    seed: u64,
) -> Result<OmegaWeight> {
    if n < 2 {
        return Err(invalid("omega needs n >= 2"));
    }
    if h.len() != space.d {
        return Err(Error::DimensionMismatch {
            expected: space.d,
            got: h.len(),
        });
    }
    if h.iter().all(|&x| x == 0) {
        return Err(invalid("omega is defined for h != 0"));
    }
    let primes = crate::sampler::sieve_primes(n)?;
    if primes.primes().is_empty() {
        return Err(invalid(format!("no primes in the range for n = {n}")));
    }
    let criterion = crate::sampler::GoodVectorCriterion::with_tau(space, alg.lambda, alg.tau)?;
    let mut total = 0.0;
    let mut var = 0.0;
    let mut exact = true;
    for &p in primes.primes() {
        let all = ((p - 1) as f64).powi(space.d as i32);
        if all <= OMEGA_EXACT_LIMIT as f64 {
            let accepted = criterion.accepted_vectors(p)?;
            let hits = accepted.iter().filter(|z| dot_mod(h, z, p) == 0).count();
            total += hits as f64 / accepted.len() as f64;
        } else {
            exact = false;
            let mut rng = crate::sampler::stream_rng(seed, p);
            let table = criterion.table(p)?;
            let mut hits = 0u32;
            for _ in 0..mc_samples {
                let (z, _) = criterion.draw_vector(&table, space.d, &mut rng, u32::MAX)?;
                if dot_mod(h, &z, p) == 0 {
                    hits += 1;
                }
            }
            let frac = f64::from(hits) / f64::from(mc_samples);
            total += frac;
            var += frac * (1.0 - frac) / f64::from(mc_samples);
        }
    }
    let np = primes.primes().len() as f64;
    Ok(OmegaWeight {
        value: total / np,
        exact,
        std_error: var.sqrt() / np,
    })
}

pub(crate) fn dot_mod(h: &[i64], z: &[u64], p: u64) -> u64 {
    h.iter().zip(z).fold(0u64, |acc, (&hj, &zj)| {
        (acc + mul_mod(residue(hj, p), zj, p)) % p
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::korobov::Weights;
    use approx::assert_relative_eq;

    fn w(g: &[f64]) -> Weights {
        Weights::new(g.to_vec()).unwrap()
    }

    fn rule(p: u64, z: &[u64]) -> LatticeRule {
        LatticeRule::new(p, z.to_vec()).unwrap()
    }

    fn space(d: usize, alpha: f64, g: &[f64]) -> SpaceParams {
        SpaceParams::new(d, alpha, w(g)).unwrap()
    }

    /// Dual sum over [-H,H]^d by scanning every vector.
    fn brute_dual_sum(rule: &LatticeRule, beta: f64, g: &[f64], bound: i64) -> f64 {
        let d = rule.d();
        let mut h = vec![-bound; d];
        let mut s = 0.0;
        loop {
            if h.iter().any(|&x| x != 0) && rule.is_dual(&h) {
                s += 1.0 / r_product(beta, g, &h);
            }
            let mut j = d;
            loop {
                if j == 0 {
                    return s;
                }
                j -= 1;
                if h[j] < bound {
                    h[j] += 1;
                    break;
                }
                h[j] = -bound;
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let m = p_merit_closed(&rule(3, &[1]), 2.0, &w(&[1.0])).unwrap();
        assert_relative_eq!(m.value, PI * PI / 27.0, max_relative = 1e-12);
        assert_eq!(m.method, MeritMethod::ClosedForm);
        assert_eq!(m.tail_bound, 0.0);
        let m = p_merit_closed(&rule(2, &[1]), 2.0, &w(&[1.0])).unwrap();
        assert_relative_eq!(m.value, PI * PI / 12.0, max_relative = 1e-12);
        let m = p_merit_closed(&rule(13, &[1, 5]), 2.0, &w(&[1e-12, 1e-12])).unwrap();
        assert!(m.value.abs() < 1e-10);
        assert!(matches!(
            p_merit_closed(&rule(3, &[1]), 3.0, &w(&[1.0])),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn bernoulli_constants() {
        // K_β(0) = 2ζ(β)
        for beta in [2u32, 4, 6] {
            let k0 = bernoulli_kernel_scale(beta) * bernoulli_poly(beta, 0.0).unwrap();
            assert_relative_eq!(
                k0,
                2.0 * riemann_zeta(f64::from(beta)).unwrap(),
                max_relative = 1e-14
            );
        }
        // B_β(1 - x) = B_β(x) for even β
        for beta in [2u32, 4, 6] {
            for x in [0.1, 0.37, 0.5] {
                assert_relative_eq!(
                    bernoulli_poly(beta, x).unwrap(),
                    bernoulli_poly(beta, 1.0 - x).unwrap(),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn hurwitz_kernel_matches_bernoulli() {
        for p in [2u64, 3, 7, 13, 101] {
            for beta in [2.0, 4.0, 6.0] {
                let a = KernelTable::bernoulli(p, beta).unwrap();
                let b = KernelTable::hurwitz(p, beta).unwrap();
                for (x, y) in a.values().iter().zip(b.values()) {
                    assert!(
                        (x - y).abs() < 1e-12 * (1.0 + x.abs()),
                        "p={p} beta={beta}: {x} vs {y}"
                    );
                }
            }
        }
    }

    #[test]
    fn hurwitz_kernel_matches_brute_force() {
        // β = 3 and β = 1.5 against direct dual sums with a generous box
        for (p, z, beta, bound) in [
            (5u64, vec![1u64, 2], 3.0, 400i64),
            (7, vec![1, 3], 2.5, 600),
        ] {
            let r = rule(p, &z);
            let g = [1.0, 0.5];
            let m = p_merit(&r, beta, &w(&g)).unwrap();
            assert_eq!(m.method, MeritMethod::HurwitzKernel);
            let brute = brute_dual_sum(&r, beta, &g, bound);
            let o = p_merit_oracle(&r, beta, &w(&g), bound as u64, u64::MAX).unwrap();
            assert!((brute - o.value).abs() < 1e-12);
            assert!(m.value >= o.value - 1e-12 && m.value <= o.value + o.tail_bound + 1e-12);
        }
    }

    #[test]
    fn oracle_examples() {
        let o = p_merit_oracle(&rule(3, &[1]), 2.0, &w(&[1.0]), 100_000, u64::MAX).unwrap();
        let exact = PI * PI / 27.0;
        assert!(o.value <= exact && exact <= o.value + o.tail_bound);
        assert!(o.tail_bound < 3e-5);
        let r = rule(5, &[1, 2]);
        let o = p_merit_oracle(&r, 2.0, &w(&[1.0, 1.0]), 200, u64::MAX).unwrap();
        let c = p_merit_closed(&r, 2.0, &w(&[1.0, 1.0])).unwrap();
        assert!((c.value - o.value).abs() <= o.tail_bound);
        assert!(c.value >= o.value);
        let o = p_merit_oracle(&rule(2, &[1]), 4.0, &w(&[1.0]), 1000, u64::MAX).unwrap();
        let exact = PI.powi(4) / 720.0;
        assert!(o.value <= exact && exact <= o.value + o.tail_bound);
        assert!(p_merit_oracle(&rule(5, &[1]), 2.0, &w(&[1.0]), 4, u64::MAX).is_err());
        assert!(matches!(
            p_merit_oracle(&r, 2.0, &w(&[1.0, 1.0]), 200, 10),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn oracle_box_enumeration_matches_brute_force() {
        let r = rule(7, &[1, 3, 2]);
        let g = [1.0, 0.7, 0.3];
        let o = p_merit_oracle(&r, 2.0, &w(&g), 12, u64::MAX).unwrap();
        assert!((o.value - brute_dual_sum(&r, 2.0, &g, 12)).abs() < 1e-13);
    }

    #[test]
    fn worst_case_examples() {
        let s = space(1, 1.0, &[1.0]);
        assert_relative_eq!(
            worst_case_error(&rule(3, &[1]), &s).unwrap(),
            0.604599788078072617,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            worst_case_error(&rule(2, &[1]), &s).unwrap(),
            0.906899682117108925,
            max_relative = 1e-12
        );
        let tiny = space(2, 1.0, &[1e-9, 1e-9]);
        assert!(worst_case_error(&rule(13, &[1, 5]), &tiny).unwrap() < 1e-8);
        assert!(worst_case_error(&rule(13, &[1, 5]), &space(2, 0.5, &[1.0, 1.0])).is_err());
        // α = 1.5 routes through the Hurwitz kernel with β = 3
        let v = worst_case_error(&rule(13, &[1, 5]), &space(2, 1.5, &[1.0, 1.0])).unwrap();
        let brute = brute_dual_sum(&rule(13, &[1, 5]), 3.0, &[1.0, 1.0], 800).sqrt();
        // the truncated sum misses a tail of about 1e-6
        assert!(v > brute && v - brute < 1e-5, "{v} {brute}");
    }

    #[test]
    fn enumerate_dual_examples() {
        let s = space(2, 1.0, &[1.0, 1.0]);
        let r = rule(5, &[1, 2]);
        let v = enumerate_dual(&r, 2.0, &s, u64::MAX).unwrap();
        let hs: Vec<Vec<i64>> = v.iter().map(|d| d.h.clone()).collect();
        assert!(hs.contains(&vec![1, 2]));
        assert!(hs.contains(&vec![2, -1]));
        for d in &v {
            assert!(r.is_dual(&d.h));
            assert_eq!(d.r, 2.0);
        }
        assert!(enumerate_dual(&r, 1.5, &s, u64::MAX).unwrap().is_empty());
        let s1 = space(1, 1.0, &[1.0]);
        let v = enumerate_dual(&rule(2, &[1]), 2.0, &s1, u64::MAX).unwrap();
        assert_eq!(
            v,
            vec![
                DualVector {
                    h: vec![-2],
                    r: 2.0
                },
                DualVector { h: vec![2], r: 2.0 }
            ]
        );
        assert!(enumerate_dual(&rule(2, &[1]), 2.0, &space(1, 0.0, &[1.0]), u64::MAX).is_err());
    }

    #[test]
    fn enumerate_dual_is_complete() {
        for (p, z) in [(7u64, vec![1u64, 3]), (11, vec![1, 4]), (13, vec![2, 7])] {
            let r = rule(p, &z);
            let s = space(2, 1.3, &[0.9, 0.4]);
            let bound = 40.0;
            let got: Vec<Vec<i64>> = enumerate_dual(&r, bound, &s, u64::MAX)
                .unwrap()
                .into_iter()
                .map(|d| d.h)
                .collect();
            let mut want = Vec::new();
            for h1 in -60i64..=60 {
                for h2 in -60i64..=60 {
                    let h = [h1, h2];
                    if (h1, h2) != (0, 0)
                        && r.is_dual(&h)
                        && r_product(1.3, &[0.9, 0.4], &h) <= bound
                    {
                        want.push(h.to_vec());
                    }
                }
            }
            assert_eq!(got, want);
        }
    }

    #[test]
    fn rho_examples() {
        let s = space(2, 1.0, &[1.0, 1.0]);
        assert_eq!(rho_index(&rule(5, &[1, 2]), &s, 1_000_000).unwrap(), 2.0);
        assert_eq!(rho_index(&rule(7, &[1, 1]), &s, 1_000_000).unwrap(), 1.0);
        assert_eq!(
            rho_index(&rule(2, &[1]), &space(1, 1.0, &[1.0]), 1000).unwrap(),
            2.0
        );
        assert!(matches!(
            rho_index(&rule(1009, &[1, 380]), &s, 3),
            Err(Error::BudgetExceeded { budget: 3 })
        ));
    }

    #[test]
    fn zaremba_inequality() {
        for (p, z) in [
            (5u64, vec![1u64, 2]),
            (13, vec![1, 5]),
            (101, vec![1, 40]),
            (11, vec![1, 3, 7]),
        ] {
            let r = rule(p, &z);
            let g = vec![1.0, 0.5, 0.25][..z.len()].to_vec();
            let s = space(z.len(), 2.0, &g);
            let rho = rho_index(&r, &s, 100_000_000).unwrap();
            let pm = p_merit_closed(&r, 2.0, &w(&g)).unwrap().value;
            assert!(1.0 / rho < pm, "p={p}: 1/rho={} P={pm}", 1.0 / rho);
        }
    }

    #[test]
    fn divisor_examples() {
        assert_eq!(divisor_count(5, &[5, 10]).unwrap(), 16);
        assert_eq!(divisor_count(5, &[1, 2]).unwrap(), 4);
        assert_eq!(divisor_count(3, &[1]).unwrap(), 0);
        assert!(divisor_count(4, &[1]).is_err());
    }

    #[test]
    fn divisor_count_matches_enumeration() {
        for p in [2u64, 3, 5, 7, 11] {
            for h in [
                vec![1i64, 1, 1],
                vec![0, 3, -2],
                vec![p as i64, 0, 4],
                vec![2, -5, 7],
            ] {
                let mut count = 0;
                for z1 in 1..p {
                    for z2 in 1..p {
                        for z3 in 1..p {
                            if dot_mod(&h, &[z1, z2, z3], p) == 0 {
                                count += 1;
                            }
                        }
                    }
                }
                assert_eq!(divisor_count(p, &h).unwrap(), count, "p={p} h={h:?}");
            }
        }
    }

    #[test]
    fn omega_examples() {
        let s = space(2, 1.0, &[1.0, 1.0]);
        let alg = AlgorithmParams::new(0.95, 0.2);
        let o = omega_weight(10, &[7, 0], &s, &alg, 0, 0).unwrap();
        assert!(o.exact);
        assert_eq!(o.value, 1.0);
        let o = omega_weight(10, &[1, 2], &s, &alg, 0, 0).unwrap();
        assert!(o.value <= 4.0 / 10.0);
        assert!(omega_weight(10, &[0, 0], &s, &alg, 0, 0).is_err());
    }

    #[test]
    fn omega_monte_carlo_is_flagged() {
        let s = space(2, 1.0, &[1.0, 0.5]);
        let alg = AlgorithmParams::new(0.95, 0.2);
        // (p-1)^2 > 10^6 for every p in (1500, 3000]
        let o = omega_weight(3000, &[1, 1], &s, &alg, 200, 9).unwrap();
        assert!(!o.exact);
        assert!(o.std_error >= 0.0);
        assert!(o.value <= 0.05);
    }
}
