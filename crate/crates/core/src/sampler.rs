//! The randomized lattice algorithm.
//!
//! One draw picks a prime `p` uniformly from `𝒫_n = {p prime : n/2 + 1 ≤ p ≤ n}`,
//! then draws `z ∈ {1,…,p-1}^d` uniformly until it passes the acceptance
//! test `P_{α/λ, γ^{1/λ}}(p, z) ≤ V_d(α/λ, γ^{1/λ}) / ((1-τ) p)`, and
//! finally (shifted variant only) a uniform shift `u ∈ [0,1)^d`.
//!
//! Randomness comes from ChaCha8 streams: a 64-bit seed selects the key
//! and every replication uses its own stream number, so replications are
//! independent and reproducible regardless of execution order.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::korobov::{v_d, AlgorithmParams, SpaceParams, Weights};
use crate::lattice::{LatticeRule, Shift};
use crate::merit::KernelTable;
use crate::sum::Summand;

/// Default cap on rejection tries; failure probability `≤ 2^{-64}`.
pub const DEFAULT_TRY_CAP: u32 = 64;

/// The random number generator used for every draw.
pub type DrawRng = ChaCha8Rng;

/// Stream `stream` of the generator keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> DrawRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream number of replication `rep` at grid point `n`.
pub fn replication_stream(n: u64, rep: u64) -> u64 {
    (n << 32) | (rep & 0xffff_ffff)
}

/// The primes `𝒫_n` in `[n/2 + 1, n]`, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeRange {
    n: u64,
    primes: Vec<u64>,
}

impl PrimeRange {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }
}

/// Segmented sieve of Eratosthenes over `[⌈n/2⌉ + 1, n]` (for even `n`
/// this is exactly `[n/2 + 1, n]`).
pub fn sieve_primes(n: u64) -> Result<PrimeRange> {
    if n < 2 {
        return Err(invalid(format!("n = {n} must be at least 2")));
    }
    let lo = n.div_ceil(2) + 1;
    let lo = lo.min(n).max(2);
    let root = (n as f64).sqrt() as u64 + 1;
    let mut small = vec![true; (root + 1) as usize];
    let mut base = Vec::new();
    for i in 2..=root {
        if small[i as usize] {
            base.push(i);
            let mut j = i * i;
            while j <= root {
                small[j as usize] = false;
                j += i;
            }
        }
    }
    let mut segment = vec![true; (n - lo + 1) as usize];
    for &q in &base {
        let start = (q * q).max(lo.div_ceil(q) * q);
        let mut j = start;
        while j <= n {
            segment[(j - lo) as usize] = false;
            j += q;
        }
    }
    let primes = segment
        .iter()
        .enumerate()
        .filter(|(_, &is)| is)
        .map(|(i, _)| lo + i as u64)
        .filter(|&p| p >= 2)
        .collect();
    Ok(PrimeRange { n, primes })
}

/// The relaxed good-vector test for one fixed `λ`.
#[derive(Debug, Clone)]
pub struct GoodVectorCriterion {
    lambda: f64,
    tau: f64,
    beta: f64,
    weights: Weights,
    d: usize,
    v: f64,
}

impl GoodVectorCriterion {
    pub fn new(space: &SpaceParams, lambda: f64) -> Result<Self> {
        GoodVectorCriterion::with_tau(space, lambda, 0.5)
    }

    pub fn with_tau(space: &SpaceParams, lambda: f64, tau: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < space.alpha) {
            return Err(invalid(format!(
                "lambda = {lambda} not in (0, alpha = {})",
                space.alpha
            )));
        }
        if !(tau > 0.0 && tau < 1.0) {
            return Err(invalid(format!("tau = {tau} not in (0,1)")));
        }
        let rescaled = space.rescaled(lambda);
        let v = v_d(rescaled.alpha, &rescaled.weights, space.d)?;
        Ok(GoodVectorCriterion {
            lambda,
            tau,
            beta: rescaled.alpha,
            weights: rescaled.weights,
            d: space.d,
            v,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `α/λ`, the smoothness of the merit that is tested.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `V_d(α/λ, γ^{1/λ})`.
    pub fn v(&self) -> f64 {
        self.v
    }

    /// Largest accepted merit for modulus `p`.
    pub fn merit_threshold(&self, p: u64) -> f64 {
        self.v / ((1.0 - self.tau) * p as f64)
    }

    /// Lower bound on `ρ_{α,γ}(p,z)` guaranteed for accepted vectors,
    /// `((1-τ) p / V)^λ`.
    pub fn rho_threshold(&self, p: u64) -> f64 {
        ((1.0 - self.tau) * p as f64 / self.v).powf(self.lambda)
    }

    pub fn table(&self, p: u64) -> Result<KernelTable> {
        KernelTable::for_beta(p, self.beta)
    }

    pub fn accepts(&self, table: &KernelTable, z: &[u64]) -> Result<bool> {
        if z.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: z.len(),
            });
        }
        let merit = table.merit(z, self.weights.as_slice())?;
        Ok(merit <= self.merit_threshold(table.p()))
    }

    /// Every accepted vector for `p`, in lexicographic order.
    pub fn accepted_vectors(&self, p: u64) -> Result<Vec<Vec<u64>>> {
        let table = self.table(p)?;
        let mut out = Vec::new();
        let mut z = vec![1u64; self.d];
        loop {
            if self.accepts(&table, &z)? {
                out.push(z.clone());
            }
            let mut j = self.d;
            loop {
                if j == 0 {
                    return Ok(out);
                }
                j -= 1;
                if z[j] < p - 1 {
                    z[j] += 1;
                    break;
                }
                z[j] = 1;
            }
        }
    }

    /// Rejection sampling of an accepted vector; returns it with the tries used.
    pub fn draw_vector<R: Rng>(
        &self,
        table: &KernelTable,
        d: usize,
        rng: &mut R,
        try_cap: u32,
    ) -> Result<(Vec<u64>, u32)> {
        let p = table.p();
        for tries in 1..=try_cap {
            let z: Vec<u64> = (0..d).map(|_| rng.random_range(1..p)).collect();
            if self.accepts(table, &z)? {
                return Ok((z, tries));
            }
        }
        Err(Error::DrawFailed { tries: try_cap })
    }
}

/// Whether `z` is accepted for modulus `p` at the given `λ` (with `τ = 1/2`).
pub fn acceptance_test(p: u64, z: &[u64], space: &SpaceParams, lambda: f64) -> Result<bool> {
    let crit = GoodVectorCriterion::new(space, lambda)?;
    crit.accepts(&crit.table(p)?, z)
}

/// Outcome of one draw of the randomized algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub rule: LatticeRule,
    pub shift: Option<Shift>,
    pub tries: u32,
}

/// Reproducibility record of a draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawRecord {
    pub n: u64,
    pub p: u64,
    pub z: Vec<u64>,
    pub shift: Option<Vec<f64>>,
    pub tries: u32,
    pub seed: u64,
    pub stream: u64,
}

impl Draw {
    pub fn record(&self, n: u64, seed: u64, stream: u64) -> DrawRecord {
        DrawRecord {
            n,
            p: self.rule.p(),
            z: self.rule.z().to_vec(),
            shift: self.shift.as_ref().map(|s| s.as_slice().to_vec()),
            tries: self.tries,
            seed,
            stream,
        }
    }
}

type TableSlot = Arc<OnceLock<Result<Arc<KernelTable>>>>;

/// The algorithm `M_n` (or `M̃_n` when `shifted`) for one `n`, with a
/// per-prime cache of kernel tables shared by concurrent draws.
#[derive(Debug)]
pub struct Sampler {
    n: u64,
    d: usize,
    shifted: bool,
    try_cap: u32,
    primes: PrimeRange,
    criterion: GoodVectorCriterion,
    tables: Mutex<HashMap<u64, TableSlot>>,
}

impl Sampler {
    pub fn new(
        n: u64,
        space: &SpaceParams,
        alg: &AlgorithmParams,
        shifted: bool,
        try_cap: u32,
    ) -> Result<Self> {
        if n < 4 {
            return Err(invalid(format!("n = {n} must be at least 4")));
        }
        if try_cap == 0 {
            return Err(invalid("try cap must be at least 1"));
        }
        if !(alg.lambda > 0.0 && alg.lambda < space.alpha) {
            return Err(invalid(format!(
                "lambda = {} not in (0, alpha = {})",
                alg.lambda, space.alpha
            )));
        }
        let primes = sieve_primes(n)?;
        let criterion = GoodVectorCriterion::with_tau(space, alg.lambda, alg.tau)?;
        Ok(Sampler {
            n,
            d: space.d,
            shifted,
            try_cap,
            primes,
            criterion,
            tables: Mutex::new(HashMap::new()),
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn primes(&self) -> &PrimeRange {
        &self.primes
    }

    pub fn criterion(&self) -> &GoodVectorCriterion {
        &self.criterion
    }

    pub fn table(&self, p: u64) -> Result<Arc<KernelTable>> {
        let slot = {
            let mut map = self.tables.lock().unwrap_or_else(|e| e.into_inner());
            map.entry(p).or_default().clone()
        };
        slot.get_or_init(|| self.criterion.table(p).map(Arc::new))
            .clone()
    }

    /// One draw: prime, accepted vector, then the shift if enabled.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> Result<Draw> {
        let idx = rng.random_range(0..self.primes.len());
        let p = self.primes.primes()[idx];
        let table = self.table(p)?;
        let (z, tries) = self
            .criterion
            .draw_vector(&table, self.d, rng, self.try_cap)?;
        let shift = if self.shifted {
            let u: Vec<f64> = (0..self.d).map(|_| rng.random::<f64>()).collect();
            Some(Shift::new(u)?)
        } else {
            None
        };
        Ok(Draw {
            rule: LatticeRule::new(p, z)?,
            shift,
            tries,
        })
    }

    /// One realization of `M_n(f)` or `M̃_n(f)`; at most `n` evaluations of `f`.
    pub fn integrate_once<T, F, R>(&self, f: F, rng: &mut R) -> Result<(T, Draw)>
    where
        T: Summand,
        F: Fn(&[f64]) -> T + Sync,
        R: Rng,
    {
        let draw = self.draw(rng)?;
        let estimate = match &draw.shift {
            Some(u) => draw.rule.apply_shifted(u, f)?,
            None => draw.rule.apply(f),
        };
        Ok((estimate, draw))
    }
}

/// One draw of the randomized algorithm.
pub fn draw<R: Rng>(
    n: u64,
    space: &SpaceParams,
    alg: &AlgorithmParams,
    rng: &mut R,
    try_cap: u32,
    shifted: bool,
) -> Result<Draw> {
    Sampler::new(n, space, alg, shifted, try_cap)?.draw(rng)
}

/// One realization of the randomized algorithm applied to `f`.
pub fn integrate_once<T, F, R>(
    f: F,
    n: u64,
    space: &SpaceParams,
    alg: &AlgorithmParams,
    rng: &mut R,
    shifted: bool,
) -> Result<(T, Draw)>
where
    T: Summand,
    F: Fn(&[f64]) -> T + Sync,
    R: Rng,
{
    Sampler::new(n, space, alg, shifted, DEFAULT_TRY_CAP)?.integrate_once(f, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::korobov::Weights;
    use crate::lattice::is_prime;
    use crate::merit::p_merit_closed;

    fn space(d: usize, alpha: f64, g: &[f64]) -> SpaceParams {
        SpaceParams::new(d, alpha, Weights::new(g.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn sieve_examples() {
        assert_eq!(sieve_primes(10).unwrap().primes(), &[7]);
        assert_eq!(sieve_primes(20).unwrap().primes(), &[11, 13, 17, 19]);
        assert_eq!(sieve_primes(4).unwrap().primes(), &[3]);
        assert_eq!(sieve_primes(2).unwrap().primes(), &[2]);
        assert_eq!(sieve_primes(3).unwrap().primes(), &[3]);
        assert!(sieve_primes(1).is_err());
    }

    #[test]
    fn sieve_matches_trial_division() {
        for n in 4..2000u64 {
            let got = sieve_primes(n).unwrap();
            let want: Vec<u64> = (1..=n).filter(|&p| 2 * p >= n + 2 && is_prime(p)).collect();
            assert_eq!(got.primes(), want.as_slice(), "n={n}");
            assert!(!got.is_empty());
            let bound = 2.0 * n as f64 / (n as f64).ln();
            assert!((got.len() as f64) <= bound, "n={n}");
        }
    }

    #[test]
    fn acceptance_tiny_weights_accepts_everything() {
        let s = space(3, 2.0, &[1e-12, 1e-12, 1e-12]);
        for z in [[1u64, 1, 1], [1, 2, 3], [4, 4, 4]] {
            assert!(acceptance_test(5, &z, &s, 1.0).unwrap());
        }
    }

    #[test]
    fn acceptance_exhaustive_p5_d1() {
        let s = space(1, 2.0, &[1.0]);
        let passing = (1..5u64)
            .filter(|&z| acceptance_test(5, &[z], &s, 1.0).unwrap())
            .count();
        assert!(passing >= 2);
    }

    #[test]
    fn acceptance_rejects_clustered_vectors() {
        // z = (1,1) has the dual vectors (h,-h); at p = 31, α = 4, λ = 1 it fails
        let s = space(2, 4.0, &[1.0, 1.0]);
        let crit = GoodVectorCriterion::new(&s, 1.0).unwrap();
        let table = crit.table(31).unwrap();
        assert!(!crit.accepts(&table, &[1, 1]).unwrap());
        let ones = Weights::new(vec![1.0, 1.0]).unwrap();
        let merit = p_merit_closed(&LatticeRule::new(31, vec![1, 1]).unwrap(), 4.0, &ones).unwrap();
        assert!(merit.value > crit.merit_threshold(31));
        let accepted = crit.accepted_vectors(31).unwrap();
        assert!(accepted.len() >= 450);
        assert!(!accepted.contains(&vec![1, 1]));
        assert!(!accepted.contains(&vec![30, 1]));
        // at p = 5 the threshold is too generous to reject anything
        assert_eq!(crit.accepted_vectors(5).unwrap().len(), 16);
    }

    #[test]
    fn acceptance_guards() {
        let s = space(2, 1.0, &[1.0, 1.0]);
        assert!(acceptance_test(5, &[1, 2], &s, 1.0).is_err());
        assert!(acceptance_test(5, &[1, 2], &s, 0.0).is_err());
        assert!(acceptance_test(5, &[1], &s, 0.9).is_err());
    }

    #[test]
    fn draw_forces_single_prime() {
        let s = space(2, 1.0, &[1.0, 0.5]);
        let alg = AlgorithmParams::default_for(1.0, false).unwrap();
        let mut rng = stream_rng(1, 0);
        for _ in 0..20 {
            let d = draw(10, &s, &alg, &mut rng, DEFAULT_TRY_CAP, false).unwrap();
            assert_eq!(d.rule.p(), 7);
            assert!(d.shift.is_none());
            assert!(d.tries >= 1);
        }
        assert!(draw(3, &s, &alg, &mut rng, 64, false).is_err());
    }

    #[test]
    fn draw_failure_reports_tries() {
        let s = space(2, 2.0, &[1.0, 1.0]);
        let crit = GoodVectorCriterion::new(&s, 1.0).unwrap();
        let table = crit.table(211).unwrap();
        let mut failures = 0;
        for stream in 0..200 {
            match crit.draw_vector(&table, 2, &mut stream_rng(3, stream), 1) {
                Ok((z, tries)) => {
                    assert_eq!(tries, 1);
                    assert!(crit.accepts(&table, &z).unwrap());
                }
                Err(Error::DrawFailed { tries }) => {
                    assert_eq!(tries, 1);
                    failures += 1;
                }
                Err(e) => panic!("{e}"),
            }
        }
        assert!(failures > 0 && failures < 100, "{failures}");
    }

    #[test]
    fn reproducible_draws() {
        let s = space(2, 1.0, &[1.0, 0.5]);
        let alg = AlgorithmParams::default_for(1.0, true).unwrap();
        let sampler = Sampler::new(200, &s, &alg, true, 64).unwrap();
        let f = |x: &[f64]| x[0] * x[1];
        let (a, da) = sampler.integrate_once(f, &mut stream_rng(42, 7)).unwrap();
        let (b, db) = sampler.integrate_once(f, &mut stream_rng(42, 7)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(da, db);
        let (_, dc) = sampler.integrate_once(f, &mut stream_rng(42, 8)).unwrap();
        assert_ne!(da.record(200, 42, 7), dc.record(200, 42, 8));
        let rec = da.record(200, 42, 7);
        let json = serde_json::to_value(&rec).unwrap();
        for key in ["n", "p", "z", "shift", "tries", "seed"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn constant_integrand_is_exact() {
        let s = space(3, 2.0, &[1.0, 0.5, 0.25]);
        let alg = AlgorithmParams::default_for(2.0, false).unwrap();
        for shifted in [false, true] {
            let (v, d) =
                integrate_once(|_| 2.5, 100, &s, &alg, &mut stream_rng(5, 1), shifted).unwrap();
            assert_eq!(v, 2.5);
            assert!(d.rule.p() <= 100);
        }
    }
}
