//! Convergence experiments, rate fitting and the sufficient-`n` calculator.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::korobov::{v_d, AlgorithmParams, SpaceParams, Weights};
use crate::sampler::{replication_stream, stream_rng, Sampler, DEFAULT_TRY_CAP};
use crate::testfns::{TestFnSpec, TestFunction};

/// Product weights given as an explicit list, one constant, or `γ_j = j^{-decay}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    List(Vec<f64>),
    Constant { constant: f64 },
    Decay { decay: f64 },
}

impl GammaSpec {
    pub fn expand(&self, d: usize) -> Result<Weights> {
        let list = match self {
            GammaSpec::List(v) => {
                if v.len() < d {
                    return Err(Error::Config(format!(
                        "{} weights given for dimension {d}",
                        v.len()
                    )));
                }
                v[..d].to_vec()
            }
            GammaSpec::Constant { constant } => vec![*constant; d],
            GammaSpec::Decay { decay } => (1..=d).map(|j| (j as f64).powf(-decay)).collect(),
        };
        Weights::new(list).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub d: usize,
    pub alpha: f64,
    pub gammas: GammaSpec,
}

/// Unset fields fall back to [`AlgorithmParams::default_for`] and the default try cap.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AlgConfig {
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub try_cap: Option<u32>,
}

fn default_reps() -> u32 {
    1
}

/// Experiment description, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub space: SpaceConfig,
    #[serde(default)]
    pub alg: AlgConfig,
    pub n_grid: Vec<u64>,
    #[serde(default = "default_reps")]
    pub reps: u32,
    pub testfn: TestFnSpec,
    #[serde(default)]
    pub shifted: bool,
    #[serde(default)]
    pub seed: u64,
    /// Records CSV.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Aggregates and rate fit as JSON.
    #[serde(default)]
    pub summary: Option<PathBuf>,
    /// Fill the `ms` column; off by default so that output is reproducible.
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn space_params(&self) -> Result<SpaceParams> {
        let w = self.space.gammas.expand(self.space.d)?;
        SpaceParams::new(self.space.d, self.space.alpha, w)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn alg_params(&self) -> Result<AlgorithmParams> {
        let mut alg = AlgorithmParams::default_for(self.space.alpha, self.shifted)
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(l) = self.alg.lambda {
            alg.lambda = l;
            if self.alg.delta.is_none() {
                alg.delta = if self.shifted {
                    0.1
                } else {
                    (0.5 * (l - 0.5)).min(0.1)
                };
            }
        }
        if let Some(dl) = self.alg.delta {
            alg.delta = dl;
        }
        if let Some(t) = self.alg.tau {
            alg.tau = t;
        }
        alg.validate(self.space.alpha, self.shifted)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(alg)
    }

    pub fn try_cap(&self) -> u32 {
        self.alg.try_cap.unwrap_or(DEFAULT_TRY_CAP)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::Config("empty n grid".into()));
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < 4) {
            return Err(Error::Config(format!("n = {n} is below 4")));
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.try_cap() == 0 {
            return Err(Error::Config("try_cap must be at least 1".into()));
        }
        self.space_params()?;
        self.alg_params()?;
        Ok(())
    }
}

/// One replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n: u64,
    pub rep: u32,
    pub p: u64,
    pub z: Vec<u64>,
    pub shift: Option<Vec<f64>>,
    pub estimate: Complex64,
    pub abs_error: f64,
    pub sq_error: f64,
    pub tries: u32,
    pub seed: u64,
    pub stream: u64,
    pub ms: Option<f64>,
    /// Set when the draw failed; the numeric fields are then NaN or empty.
    pub failure: Option<String>,
}

impl ExperimentRecord {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

/// Per-`n` summary of the successful replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: u64,
    pub count: usize,
    pub failures: usize,
    /// Per-function randomized error: the mean of `|M_n(f) - I(f)|`.
    pub mean_abs_error: f64,
    pub rmse: f64,
    pub mean_tries: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub records: Vec<ExperimentRecord>,
    pub aggregates: Vec<Aggregate>,
}

fn run_one(
    sampler: &Sampler,
    f: &TestFunction,
    n: u64,
    rep: u32,
    seed: u64,
    timing: bool,
) -> ExperimentRecord {
    let stream = replication_stream(n, u64::from(rep));
    let mut rng = stream_rng(seed, stream);
    let start = Instant::now();
    let out = sampler.integrate_once(f.evaluator(), &mut rng);
    let ms = timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    match out {
        Ok((estimate, draw)) => {
            let err = (estimate - f.exact_integral()).norm();
            ExperimentRecord {
                n,
                rep,
                p: draw.rule.p(),
                z: draw.rule.z().to_vec(),
                shift: draw.shift.map(|s| s.as_slice().to_vec()),
                estimate,
                abs_error: err,
                sq_error: err * err,
                tries: draw.tries,
                seed,
                stream,
                ms,
                failure: None,
            }
        }
        Err(e) => ExperimentRecord {
            n,
            rep,
            p: 0,
            z: Vec::new(),
            shift: None,
            estimate: Complex64::new(f64::NAN, f64::NAN),
            abs_error: f64::NAN,
            sq_error: f64::NAN,
            tries: match e {
                Error::DrawFailed { tries } => tries,
                _ => 0,
            },
            seed,
            stream,
            ms,
            failure: Some(e.to_string()),
        },
    }
}

/// Summary of the records of one `n`.
pub fn aggregate(n: u64, records: &[ExperimentRecord]) -> Aggregate {
    let ok: Vec<&ExperimentRecord> = records.iter().filter(|r| r.ok()).collect();
    let count = ok.len();
    let mean = |v: Vec<f64>| -> f64 {
        if v.is_empty() {
            f64::NAN
        } else {
            crate::sum::pairwise_sum(&v) / v.len() as f64
        }
    };
    Aggregate {
        n,
        count,
        failures: records.len() - count,
        mean_abs_error: mean(ok.iter().map(|r| r.abs_error).collect()),
        rmse: mean(ok.iter().map(|r| r.sq_error).collect()).sqrt(),
        mean_tries: mean(ok.iter().map(|r| f64::from(r.tries)).collect()),
    }
}

/// Runs `reps` independent draws for every `n` of the grid.
///
/// Replication `rep` at `n` uses RNG stream `(n << 32) | rep`, so the
/// records do not depend on scheduling; they are returned in `(n, rep)` order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let space = config.space_params()?;
    let alg = config.alg_params()?;
    let shared_f = if config.testfn.depends_on_n() {
        None
    } else {
        Some(config.testfn.build(config.n_grid[0], &space)?)
    };
    let mut records = Vec::new();
    let mut aggregates = Vec::new();
    for &n in &config.n_grid {
        let sampler = Sampler::new(n, &space, &alg, config.shifted, config.try_cap())?;
        let local;
        let f = match &shared_f {
            Some(f) => f,
            None => {
                local = config.testfn.build(n, &space)?;
                &local
            }
        };
        let batch: Vec<ExperimentRecord> = (0..config.reps)
            .into_par_iter()
            .map(|rep| run_one(&sampler, f, n, rep, config.seed, config.timing))
            .collect();
        let agg = aggregate(n, &batch);
        if agg.count == 0 {
            return Err(Error::DrawFailed {
                tries: config.try_cap(),
            });
        }
        if agg.failures > 0 {
            warn!(
                "{} of {} draws failed at n = {n}",
                agg.failures, config.reps
            );
        }
        aggregates.push(agg);
        records.extend(batch);
    }
    Ok(ExperimentOutput {
        records,
        aggregates,
    })
}

/// CSV columns of the records file.
pub const CSV_HEADER: [&str; 11] = [
    "n",
    "rep",
    "p",
    "z",
    "shift",
    "estimate",
    "abs_error",
    "sq_error",
    "tries",
    "seed",
    "ms",
];

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

/// Writes the records as CSV. `estimate` is the real part; `abs_error` is the
/// modulus of the complex error.
pub fn write_records_csv<W: Write>(records: &[ExperimentRecord], w: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        let p = if r.ok() {
            r.p.to_string()
        } else {
            String::new()
        };
        wr.write_record([
            r.n.to_string(),
            r.rep.to_string(),
            p,
            join(&r.z),
            r.shift.as_deref().map(join).unwrap_or_default(),
            num(r.estimate.re),
            num(r.abs_error),
            num(r.sq_error),
            r.tries.to_string(),
            r.seed.to_string(),
            r.ms.map(num).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    wr.flush()?;
    Ok(())
}

/// Least-squares fit of `log(error) = intercept + slope · log(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub n_min: u64,
    pub n_max: u64,
    pub points: usize,
}

/// Fits the convergence rate of `(n, error)` pairs. Non-positive errors
/// are dropped with a warning; at least 4 distinct `n` must remain.
pub fn fit_rate(data: &[(u64, f64)]) -> Result<RateFit> {
    let kept: Vec<(f64, f64, u64)> = data
        .iter()
        .filter(|&&(n, e)| {
            let keep = e > 0.0 && e.is_finite() && n > 0;
            if !keep {
                warn!("dropping point n = {n}, error = {e} from the rate fit");
            }
            keep
        })
        .map(|&(n, e)| ((n as f64).ln(), e.ln(), n))
        .collect();
    let mut distinct: Vec<u64> = kept.iter().map(|k| k.2).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "rate fit needs at least 4 distinct n with positive error, got {}",
            distinct.len()
        )));
    }
    let m = kept.len() as f64;
    let mx = kept.iter().map(|k| k.0).sum::<f64>() / m;
    let my = kept.iter().map(|k| k.1).sum::<f64>() / m;
    let sxx: f64 = kept.iter().map(|k| (k.0 - mx).powi(2)).sum();
    let sxy: f64 = kept.iter().map(|k| (k.0 - mx) * (k.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = kept
        .iter()
        .map(|k| (k.1 - intercept - slope * k.0).powi(2))
        .sum();
    let slope_stderr = if kept.len() > 2 {
        (rss / (m - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(RateFit {
        slope,
        intercept,
        slope_stderr,
        n_min: distinct[0],
        n_max: *distinct.last().unwrap_or(&0),
        points: kept.len(),
    })
}

/// Default for the unknown absolute constant `c` of the `ω_n` bound.
pub const DEFAULT_OMEGA_CONSTANT: f64 = 6.0;

/// Result of the sufficient-`n` calculator, with every constant it used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientN {
    pub n: u64,
    pub shifted: bool,
    pub epsilon: f64,
    /// `V_d(α/λ, γ^{1/λ})`.
    pub v: f64,
    /// The absolute constant `c`.
    pub c: f64,
    /// Coefficient of `n^{-exponent}` in the error bound.
    pub coefficient: f64,
    pub exponent: f64,
    /// `⌈4 V⌉`, the smallest `n` the unshifted bound covers.
    pub floor: Option<u64>,
}

fn ceil_u64(x: f64) -> Result<u64> {
    if !x.is_finite() || x >= u64::MAX as f64 {
        return Err(Error::InvalidParameter(format!(
            "sufficient n overflows: {x}"
        )));
    }
    Ok(x.ceil().max(1.0) as u64)
}

/// `n` large enough for randomized error `≤ ε`.
///
/// Unshifted: the error is at most `C_{λ,δ} V^λ n^{-(λ+1/2-δ)}` for
/// `n ≥ 4V` with `C_{λ,δ} = c 2^{3λ-2δ-1}/δ · sqrt((λ-δ)/(λ-δ+1/2))`, so
/// `n = max(⌈4V⌉, ⌈(C V^λ / ε)^{1/(λ+1/2-δ)}⌉)`.
/// Shifted: the RMSE is at most `(c/(αδ)) (4V)^λ n^{-(λ+1/2-δλ/2)}`.
pub fn sufficient_n(
    epsilon: f64,
    space: &SpaceParams,
    alg: &AlgorithmParams,
    shifted: bool,
    c: f64,
) -> Result<SufficientN> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} not in (0,1)"
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "constant c = {c} must be positive"
        )));
    }
    let alpha = space.alpha;
    if !shifted && !(alpha > 0.5) {
        return Err(Error::InvalidParameter(format!(
            "the unshifted bound needs alpha > 1/2, got {alpha}"
        )));
    }
    if shifted && !(alpha > 0.0) {
        return Err(Error::InvalidParameter(
            "the shifted bound needs alpha > 0".into(),
        ));
    }
    alg.validate(alpha, shifted)?;
    let (lambda, delta) = (alg.lambda, alg.delta);
    let rescaled = space.rescaled(lambda);
    let v = v_d(rescaled.alpha, &rescaled.weights, space.d)?;
    if shifted {
        let coefficient = c / (alpha * delta) * (4.0 * v).powf(lambda);
        let exponent = lambda + 0.5 - delta * lambda / 2.0;
        let n = ceil_u64((coefficient / epsilon).powf(1.0 / exponent))?;
        Ok(SufficientN {
            n,
            shifted,
            epsilon,
            v,
            c,
            coefficient,
            exponent,
            floor: None,
        })
    } else {
        let big_c = c * 2f64.powf(3.0 * lambda - 2.0 * delta - 1.0) / delta
            * ((lambda - delta) / (lambda - delta + 0.5)).sqrt();
        let coefficient = big_c * v.powf(lambda);
        let exponent = lambda + 0.5 - delta;
        let floor = ceil_u64(4.0 * v)?;
        let n = ceil_u64((coefficient / epsilon).powf(1.0 / exponent))?.max(floor);
        Ok(SufficientN {
            n,
            shifted,
            epsilon,
            v,
            c,
            coefficient,
            exponent,
            floor: Some(floor),
        })
    }
}
