//! Exhaustive small-instance checks of the counting lemmas, the averaging
//! argument, the merit identities and the lower-bound construction.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::korobov::{
    count_small_r, sum_inverse_r_oracle, v_d, AlgorithmParams, SpaceParams, Weights,
};
use crate::lattice::LatticeRule;
use crate::merit::{
    divisor_count, omega_weight, p_merit, p_merit_oracle, rho_index, worst_case_error,
};
use crate::sampler::{sieve_primes, stream_rng};
use crate::testfns::{lower_bound_error, lower_bound_fn, worst_case_fn};

/// Computes `P_{β,γ}(p,z)`; swapped out by the mutation test.
pub type MeritFn<'a> = dyn Fn(&LatticeRule, f64, &Weights) -> Result<f64> + Sync + 'a;

/// Instances the suite runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyGrid {
    pub primes: Vec<u64>,
    pub dims: Vec<usize>,
    pub betas: Vec<u32>,
    /// Weight sequences; dimension `d` uses the first `d` entries.
    pub weight_sets: Vec<Vec<f64>>,
    /// Moduli for the divisor-count check.
    pub divisor_primes: Vec<u64>,
    pub divisor_dims: Vec<usize>,
    /// Random closed-form vs oracle comparisons.
    pub oracle_instances: usize,
    /// Random rules for the worst-case equality.
    pub worst_case_rules: usize,
    /// `n` values of the lower-bound check.
    pub lower_bound_n: Vec<u64>,
    /// `n` and dimensions of the `ω_n` check.
    pub omega_n: u64,
    pub omega_dims: Vec<usize>,
    pub seed: u64,
}

impl Default for VerifyGrid {
    fn default() -> Self {
        VerifyGrid {
            primes: vec![3, 5, 7],
            dims: vec![1, 2],
            betas: vec![2, 4],
            weight_sets: vec![vec![1.0, 1.0, 1.0], vec![1.0, 0.5, 0.25]],
            divisor_primes: vec![3, 5, 7, 11],
            divisor_dims: vec![1, 2, 3],
            oracle_instances: 50,
            worst_case_rules: 20,
            lower_bound_n: vec![10, 20, 50],
            omega_n: 10,
            omega_dims: vec![1, 2],
            seed: 2024,
        }
    }
}

impl VerifyGrid {
    /// The smallest grid: `p = 3`, `d = 1`.
    pub fn smoke() -> Self {
        VerifyGrid {
            primes: vec![3],
            dims: vec![1],
            betas: vec![2],
            weight_sets: vec![vec![1.0]],
            divisor_primes: vec![3],
            divisor_dims: vec![1],
            oracle_instances: 3,
            worst_case_rules: 3,
            lower_bound_n: vec![10],
            omega_n: 10,
            omega_dims: vec![1],
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub instances: usize,
    /// Offending instances, at most 20.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

struct Check {
    name: &'static str,
    instances: usize,
    failures: Vec<String>,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Check {
            name,
            instances: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.instances += 1;
        if !ok && self.failures.len() < 20 {
            self.failures.push(what());
        }
    }

    fn error(&mut self, what: String) {
        self.instances += 1;
        if self.failures.len() < 20 {
            self.failures.push(what);
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.to_string(),
            passed: self.failures.is_empty() && self.instances > 0,
            instances: self.instances,
            failures: self.failures,
        }
    }
}

fn weights(set: &[f64], d: usize) -> Option<Weights> {
    (set.len() >= d)
        .then(|| Weights::new(set[..d].to_vec()).ok())
        .flatten()
}

fn all_vectors(p: u64, d: usize) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|v| {
                (1..p).map(move |c| {
                    let mut w = v.clone();
                    w.push(c);
                    w
                })
            })
            .collect();
    }
    out
}

fn all_frequencies(bound: i64, d: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-bound..=bound).map(move |c| {
                    let mut w = v.clone();
                    w.push(c);
                    w
                })
            })
            .collect();
    }
    out.retain(|h| h.iter().any(|&x| x != 0));
    out
}

fn lemma_sum(grid: &VerifyGrid) -> CheckResult {
    let mut check = Check::new("sum_inverse_r");
    for &d in &grid.dims {
        for &beta in &grid.betas {
            for set in &grid.weight_sets {
                let Some(w) = weights(set, d) else { continue };
                let h = if d == 1 { 100_000 } else { 1000 };
                let b = f64::from(beta);
                match (sum_inverse_r_oracle(b, &w, d, h), v_d(b, &w, d)) {
                    (Ok(i), Ok(v)) => check.record(i.contains(v / 3.0), || {
                        format!(
                            "d={d} beta={beta} gammas={:?}: {:?} misses {}",
                            w.as_slice(),
                            i,
                            v / 3.0
                        )
                    }),
                    (Err(e), _) | (_, Err(e)) => check.error(e.to_string()),
                }
            }
        }
    }
    check.finish()
}

fn counting(grid: &VerifyGrid) -> CheckResult {
    let mut check = Check::new("small_r_count_bound");
    for &d in &grid.dims {
        for &beta in &grid.betas {
            for set in &grid.weight_sets {
                let Some(w) = weights(set, d) else { continue };
                let b = f64::from(beta);
                for t in [0.5, 1.0, 2.0, 7.5, 40.0, 300.0] {
                    match (count_small_r(b, &w, d, t, 10_000_000), v_d(b, &w, d)) {
                        (Ok(count), Ok(v)) => check.record(count as f64 <= t * v, || {
                            format!("d={d} beta={beta} T={t}: {count} > {}", t * v)
                        }),
                        (Err(e), _) | (_, Err(e)) => check.error(e.to_string()),
                    }
                }
            }
        }
    }
    check.finish()
}

fn divisors(grid: &VerifyGrid) -> CheckResult {
    let mut check = Check::new("divisor_count");
    for &p in &grid.divisor_primes {
        for &d in &grid.divisor_dims {
            let zs = all_vectors(p, d);
            for h in all_frequencies(6, d) {
                let brute = zs
                    .iter()
                    .filter(|z| {
                        h.iter()
                            .zip(z.iter())
                            .map(|(&a, &b)| a as i128 * b as i128)
                            .sum::<i128>()
                            .rem_euclid(p as i128)
                            == 0
                    })
                    .count() as u64;
                match divisor_count(p, &h) {
                    Ok(c) => check.record(c == brute, || format!("p={p} h={h:?}: {c} != {brute}")),
                    Err(e) => check.error(e.to_string()),
                }
            }
        }
    }
    check.finish()
}

fn averaging(grid: &VerifyGrid, merit: &MeritFn) -> (CheckResult, CheckResult) {
    let mut avg = Check::new("mean_merit_bound");
    let mut many = Check::new("good_vector_abundance");
    for &p in &grid.primes {
        for &d in &grid.dims {
            for &beta in &grid.betas {
                for set in &grid.weight_sets {
                    let Some(w) = weights(set, d) else { continue };
                    let b = f64::from(beta);
                    let v = match v_d(b, &w, d) {
                        Ok(v) => v,
                        Err(e) => {
                            avg.error(e.to_string());
                            continue;
                        }
                    };
                    let values: Result<Vec<f64>> = all_vectors(p, d)
                        .into_iter()
                        .map(|z| merit(&LatticeRule::new(p, z)?, b, &w))
                        .collect();
                    let values = match values {
                        Ok(v) => v,
                        Err(e) => {
                            avg.error(e.to_string());
                            many.error(e.to_string());
                            continue;
                        }
                    };
                    let total = values.len();
                    let mean = values.iter().sum::<f64>() / total as f64;
                    avg.record(mean < v / p as f64, || {
                        format!(
                            "p={p} d={d} beta={beta} gammas={:?}: mean {mean} >= {}",
                            w.as_slice(),
                            v / p as f64
                        )
                    });
                    let good = values.iter().filter(|&&x| x <= 2.0 * v / p as f64).count();
                    let need = total.div_ceil(2);
                    many.record(good >= need, || {
                        format!(
                            "p={p} d={d} beta={beta} gammas={:?}: {good} < {need}",
                            w.as_slice()
                        )
                    });
                }
            }
        }
    }
    (avg.finish(), many.finish())
}

fn random_rule<R: Rng>(rng: &mut R, primes: &[u64], max_d: usize) -> (LatticeRule, usize) {
    let p = primes[rng.random_range(0..primes.len())];
    let d = rng.random_range(1..=max_d);
    let z = (0..d).map(|_| rng.random_range(1..p)).collect();
    (LatticeRule::new(p, z).expect("valid rule"), d)
}

fn oracle(grid: &VerifyGrid, merit: &MeritFn) -> CheckResult {
    let mut check = Check::new("closed_form_vs_oracle");
    let mut rng = stream_rng(grid.seed, 1);
    let primes = [2u64, 3, 5, 7, 11, 13];
    let max_d = grid.dims.iter().copied().max().unwrap_or(1).clamp(1, 3);
    let gset = [1.0, 0.7, 0.4];
    for i in 0..grid.oracle_instances {
        let (rule, d) = random_rule(&mut rng, &primes, max_d);
        let beta = f64::from(grid.betas[i % grid.betas.len()]);
        let w = Weights::new(gset[..d].to_vec()).expect("weights");
        let h = match d {
            1 => 100_000,
            2 => 600,
            _ => 120,
        };
        match (
            merit(&rule, beta, &w),
            p_merit_oracle(&rule, beta, &w, h, 100_000_000),
        ) {
            (Ok(c), Ok(o)) => check.record(
                (c - o.value).abs() <= o.tail_bound && c >= o.value - 1e-12,
                || {
                    format!(
                        "p={} z={:?} beta={beta}: closed {c}, oracle {} + {}",
                        rule.p(),
                        rule.z(),
                        o.value,
                        o.tail_bound
                    )
                },
            ),
            (Err(e), _) | (_, Err(e)) => check.error(e.to_string()),
        }
    }
    let one = Weights::new(vec![1.0]).expect("weights");
    match merit(&LatticeRule::new(3, vec![1]).expect("rule"), 2.0, &one) {
        Ok(v) => check.record((v - PI * PI / 27.0).abs() <= 1e-12, || {
            format!("P(3,(1)) = {v}")
        }),
        Err(e) => check.error(e.to_string()),
    }
    check.finish()
}

fn zaremba(grid: &VerifyGrid, merit: &MeritFn) -> CheckResult {
    let mut check = Check::new("zaremba_inequality");
    for &p in &grid.primes {
        for &d in &grid.dims {
            for set in &grid.weight_sets {
                let Some(w) = weights(set, d) else { continue };
                for &beta in &grid.betas {
                    let alpha = f64::from(beta);
                    let space = SpaceParams::new(d, alpha, w.clone()).expect("space");
                    for z in all_vectors(p, d) {
                        let rule = LatticeRule::new(p, z).expect("rule");
                        match (
                            rho_index(&rule, &space, 10_000_000),
                            merit(&rule, alpha, &w),
                        ) {
                            (Ok(rho), Ok(pm)) => check.record(1.0 / rho < pm, || {
                                format!(
                                    "p={p} z={:?} alpha={alpha}: 1/rho = {} >= P = {pm}",
                                    rule.z(),
                                    1.0 / rho
                                )
                            }),
                            (Err(e), _) | (_, Err(e)) => check.error(e.to_string()),
                        }
                    }
                }
            }
        }
    }
    check.finish()
}

fn worst_case(grid: &VerifyGrid) -> CheckResult {
    let mut check = Check::new("worst_case_equality");
    let mut rng = stream_rng(grid.seed, 2);
    let primes = [5u64, 7, 11, 13, 31, 61, 101, 251];
    let gset = [1.0, 0.6, 0.3];
    for _ in 0..grid.worst_case_rules {
        let (rule, d) = random_rule(&mut rng, &primes, 3);
        let space =
            SpaceParams::new(d, 1.0, Weights::new(gset[..d].to_vec()).expect("w")).expect("space");
        let out = worst_case_fn(&rule, &space).and_then(|f| {
            let err = (rule.apply(f.evaluator()) - f.exact_integral()).norm();
            Ok((err, worst_case_error(&rule, &space)?))
        });
        match out {
            Ok((err, wce)) => check.record(((err - wce) / wce).abs() <= 1e-9, || {
                format!("p={} z={:?}: error {err} vs {wce}", rule.p(), rule.z())
            }),
            Err(e) => check.error(e.to_string()),
        }
    }
    check.finish()
}

fn lower_bound(grid: &VerifyGrid) -> CheckResult {
    let mut check = Check::new("lower_bound_formula");
    let mut rng = stream_rng(grid.seed, 3);
    for &n in &grid.lower_bound_n {
        for alpha in [0.0, 1.0] {
            let d = 2;
            let space = SpaceParams::new(d, alpha, Weights::new(vec![0.8, 0.5]).expect("w"))
                .expect("space");
            let (f, primes) = match (lower_bound_fn(n, &space), sieve_primes(n)) {
                (Ok(f), Ok(p)) => (f, p),
                (Err(e), _) | (_, Err(e)) => {
                    check.error(e.to_string());
                    continue;
                }
            };
            let mut mean = 0.0;
            for &p in primes.primes() {
                let want = lower_bound_error(n, p, &space).unwrap_or(f64::NAN);
                mean += want / primes.len() as f64;
                for _ in 0..3 {
                    let z = vec![rng.random_range(1..p), rng.random_range(1..p)];
                    let rule = LatticeRule::new(p, z).expect("rule");
                    let got = rule.apply(f.evaluator()).norm();
                    check.record((got - want).abs() <= 1e-12, || {
                        format!(
                            "n={n} alpha={alpha} p={p} z={:?}: {got} vs {want}",
                            rule.z()
                        )
                    });
                }
            }
            let floor = 0.8 * (n as f64).ln().sqrt() / (2.0 * (n as f64).powf(alpha + 0.5));
            check.record(mean >= floor, || {
                format!("n={n} alpha={alpha}: mean {mean} < {floor}")
            });
        }
    }
    check.finish()
}

fn omega(grid: &VerifyGrid) -> CheckResult {
    let mut check = Check::new("omega_bound");
    let n = grid.omega_n;
    let primes = match sieve_primes(n) {
        Ok(p) => p,
        Err(e) => {
            check.error(e.to_string());
            return check.finish();
        }
    };
    for &d in &grid.omega_dims {
        let space =
            SpaceParams::new(d, 1.0, Weights::new(vec![1.0; d]).expect("w")).expect("space");
        let alg = AlgorithmParams::new(0.9, 0.1);
        for h in all_frequencies(8, d) {
            let hits = primes
                .primes()
                .iter()
                .filter(|&&p| h.iter().all(|&x| x.rem_euclid(p as i64) == 0))
                .count() as f64;
            let bound = hits / primes.len() as f64 + 4.0 / n as f64;
            match omega_weight(n, &h, &space, &alg, 0, grid.seed) {
                Ok(w) => check.record(w.exact && w.value <= bound + 1e-15, || {
                    format!("n={n} h={h:?}: omega {} > {bound}", w.value)
                }),
                Err(e) => check.error(e.to_string()),
            }
        }
    }
    check.finish()
}

/// Runs every check with the library's merit evaluator.
pub fn verify_suite(grid: &VerifyGrid) -> VerifyReport {
    let merit =
        |rule: &LatticeRule, beta: f64, w: &Weights| p_merit(rule, beta, w).map(|m| m.value);
    verify_suite_with(grid, &merit)
}

/// Runs every check, computing `P_{β,γ}` with `merit`.
pub fn verify_suite_with(grid: &VerifyGrid, merit: &MeritFn) -> VerifyReport {
    let (avg, many) = averaging(grid, merit);
    let checks = vec![
        lemma_sum(grid),
        counting(grid),
        divisors(grid),
        avg,
        many,
        oracle(grid, merit),
        zaremba(grid, merit),
        worst_case(grid),
        lower_bound(grid),
        omega(grid),
    ];
    VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}
