use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use randlat::cbc::cbc_construct;
use randlat::experiment::{
    fit_rate, run_experiment, sufficient_n, write_records_csv, AlgConfig, ExperimentConfig,
    GammaSpec, SpaceConfig, DEFAULT_OMEGA_CONSTANT,
};
use randlat::merit::{p_merit, rho_index, worst_case_error, MeritRecord};
use randlat::sampler::{replication_stream, stream_rng, Sampler};
use randlat::testfns::TestFnSpec;
use randlat::verify::{verify_suite, VerifyGrid};
use randlat::{Error, LatticeRule, Weights};

#[derive(Parser)]
#[command(
    name = "randlat",
    version,
    about = "Randomized rank-1 lattice rules with a random number of points"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One draw of the randomized algorithm applied to the test function
    Integrate {
        #[command(flatten)]
        common: Common,
        /// Target number of points (defaults to the first grid value)
        #[arg(long)]
        n: Option<u64>,
        /// Replication index selecting the RNG stream
        #[arg(long, default_value_t = 0)]
        rep: u32,
    },
    /// Replicated runs over the n grid; writes the records CSV
    Converge {
        #[command(flatten)]
        common: Common,
        /// Where to write aggregates and rate fits as JSON
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Fill the ms column with wall-clock times
        #[arg(long)]
        timing: bool,
    },
    /// Exhaustive small-instance checks of the lemmas
    Verify {
        #[command(flatten)]
        common: Common,
        /// Only the p = 3, d = 1 grid
        #[arg(long)]
        smoke: bool,
    },
    /// Component-by-component generating vector
    Cbc {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        p: u64,
    },
    /// Number of points sufficient for a target error
    SufficientN {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: f64,
        /// Absolute constant of the omega bound
        #[arg(long, default_value_t = DEFAULT_OMEGA_CONSTANT)]
        c: f64,
    },
    /// Figures of merit of one rule
    Merit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        p: u64,
        /// Generating vector, comma separated
        #[arg(long, value_delimiter = ',')]
        z: Vec<u64>,
        /// Also report P for this smoothness with the unsquared weights
        #[arg(long)]
        beta: Option<f64>,
        /// Budget for the Zaremba index search
        #[arg(long, default_value_t = 100_000_000)]
        search_cap: u64,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment config; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use the shifted algorithm
    #[arg(long)]
    shifted: bool,
    /// Comma-separated n values, or pow2:LO:HI for 2^LO..2^HI
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    reps: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Dimension d
    #[arg(long)]
    dims: Option<usize>,
    /// Comma-separated weights, const:G, or decay:A for j^-A
    #[arg(long)]
    gammas: Option<String>,
    /// product_kernel[:s], lower_bound, constant[:c], or a JSON descriptor
    #[arg(long)]
    testfn: Option<String>,
    /// Also run the lemma suite and fail if any check fails
    #[arg(long)]
    verify: bool,
}

enum Failure {
    Check(String),
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(msg) => Failure::Config(msg),
            Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::NotPrime(_)
            | Error::WeightIndex { .. }
            | Error::Unsupported(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn parse_gammas(text: &str) -> CliResult<GammaSpec> {
    let bad = |e: &dyn std::fmt::Display| Failure::Config(format!("--gammas '{text}': {e}"));
    if let Some(a) = text.strip_prefix("decay:") {
        return Ok(GammaSpec::Decay {
            decay: a.parse().map_err(|e| bad(&e))?,
        });
    }
    if let Some(g) = text.strip_prefix("const:") {
        return Ok(GammaSpec::Constant {
            constant: g.parse().map_err(|e| bad(&e))?,
        });
    }
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| bad(&e)))
        .collect::<CliResult<Vec<_>>>()
        .map(GammaSpec::List)
}

fn parse_grid(text: &str) -> CliResult<Vec<u64>> {
    let bad = |e: &dyn std::fmt::Display| Failure::Config(format!("--n-grid '{text}': {e}"));
    if let Some(range) = text.strip_prefix("pow2:") {
        let (lo, hi) = range
            .split_once(':')
            .ok_or_else(|| bad(&"expected pow2:LO:HI"))?;
        let lo: u32 = lo.parse().map_err(|e| bad(&e))?;
        let hi: u32 = hi.parse().map_err(|e| bad(&e))?;
        if hi >= 63 || lo > hi {
            return Err(bad(&"bad exponent range"));
        }
        return Ok((lo..=hi).map(|k| 1u64 << k).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|e| bad(&e)))
        .collect()
}

impl Common {
    fn experiment(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                ExperimentConfig::from_json(&text)?
            }
            None => ExperimentConfig {
                space: SpaceConfig {
                    d: 2,
                    alpha: 1.0,
                    gammas: GammaSpec::Decay { decay: 1.0 },
                },
                alg: AlgConfig::default(),
                n_grid: (5..=12).map(|k| 1u64 << k).collect(),
                reps: 100,
                testfn: TestFnSpec::ProductKernel { smoothness: None },
                shifted: false,
                seed: 0,
                out: None,
                summary: None,
                timing: false,
            },
        };
        if let Some(d) = self.dims {
            cfg.space.d = d;
        }
        if let Some(a) = self.alpha {
            cfg.space.alpha = a;
        }
        if let Some(g) = &self.gammas {
            cfg.space.gammas = parse_gammas(g)?;
        }
        if let Some(l) = self.lambda {
            cfg.alg.lambda = Some(l);
        }
        if let Some(dl) = self.delta {
            cfg.alg.delta = Some(dl);
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.shifted {
            cfg.shifted = true;
        }
        if let Some(g) = &self.n_grid {
            cfg.n_grid = parse_grid(g)?;
        }
        if let Some(r) = self.reps {
            cfg.reps = r;
        }
        if let Some(t) = &self.testfn {
            cfg.testfn = TestFnSpec::parse(t)?;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        Ok(cfg)
    }
}

fn open_out(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> CliResult {
    let mut w = open_out(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Runtime(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run_verify(grid: &VerifyGrid, out: Option<&Path>) -> CliResult {
    let report = verify_suite(grid);
    write_json(&report, out)?;
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        Err(Failure::Check(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}

fn pre_verify(common: &Common) -> CliResult {
    if common.verify {
        let report = verify_suite(&VerifyGrid::default());
        if !report.passed {
            write_json(&report, None)?;
            return Err(Failure::Check("lemma suite failed".into()));
        }
    }
    Ok(())
}

fn integrate(common: &Common, n: Option<u64>, rep: u32) -> CliResult {
    let cfg = common.experiment()?;
    let n = n
        .or_else(|| cfg.n_grid.first().copied())
        .ok_or_else(|| Failure::Config("no n given".into()))?;
    let space = cfg.space_params()?;
    let alg = cfg.alg_params()?;
    let f = cfg.testfn.build(n, &space)?;
    let sampler = Sampler::new(n, &space, &alg, cfg.shifted, cfg.try_cap())?;
    let stream = replication_stream(n, u64::from(rep));
    let (estimate, draw) =
        sampler.integrate_once(f.evaluator(), &mut stream_rng(cfg.seed, stream))?;
    let exact = f.exact_integral();
    let out = json!({
        "draw": draw.record(n, cfg.seed, stream),
        "estimate": {"re": estimate.re, "im": estimate.im},
        "exact": {"re": exact.re, "im": exact.im},
        "abs_error": (estimate - exact).norm(),
        "lambda": alg.lambda,
    });
    write_json(&out, cfg.out.as_deref())
}

fn converge(common: &Common, summary: Option<&Path>, timing: bool) -> CliResult {
    let mut cfg = common.experiment()?;
    if let Some(s) = summary {
        cfg.summary = Some(s.to_path_buf());
    }
    cfg.timing |= timing;
    let alg = cfg.alg_params()?;
    let output = run_experiment(&cfg)?;
    let mut w = open_out(cfg.out.as_deref())?;
    write_records_csv(&output.records, &mut w)?;
    w.flush()?;
    drop(w);
    let fit = |pick: fn(&randlat::experiment::Aggregate) -> f64| {
        let data: Vec<(u64, f64)> = output.aggregates.iter().map(|a| (a.n, pick(a))).collect();
        fit_rate(&data).ok()
    };
    let report = json!({
        "label": "per-function randomized error",
        "lambda": alg.lambda,
        "delta": alg.delta,
        "tau": alg.tau,
        "shifted": cfg.shifted,
        "seed": cfg.seed,
        "aggregates": output.aggregates,
        "fit_mean_abs_error": fit(|a| a.mean_abs_error),
        "fit_rmse": fit(|a| a.rmse),
    });
    if let Some(path) = &cfg.summary {
        write_json(&report, Some(path))?;
    } else if cfg.out.is_some() {
        write_json(&report, None)?;
    }
    Ok(())
}

fn cbc(common: &Common, p: u64) -> CliResult {
    let cfg = common.experiment()?;
    let space = cfg.space_params()?;
    let result = cbc_construct(p, space.d, &space)?;
    write_json(&result, cfg.out.as_deref())
}

fn suff_n(common: &Common, epsilon: f64, c: f64) -> CliResult {
    let cfg = common.experiment()?;
    let space = cfg.space_params()?;
    let alg = cfg.alg_params()?;
    let r = sufficient_n(epsilon, &space, &alg, cfg.shifted, c)?;
    write_json(
        &json!({"result": r, "lambda": alg.lambda, "delta": alg.delta}),
        cfg.out.as_deref(),
    )
}

fn merit(common: &Common, p: u64, z: Vec<u64>, beta: Option<f64>, cap: u64) -> CliResult {
    let mut cfg = common.experiment()?;
    if common.dims.is_none() {
        cfg.space.d = z.len();
    }
    let space = cfg.space_params()?;
    let rule = LatticeRule::new(p, z)?;
    let g2 = Weights::new(space.gammas().iter().map(|g| g * g).collect())?;
    let beta2 = 2.0 * space.alpha;
    let squared = MeritRecord::new(&rule, beta2, g2.as_slice(), p_merit(&rule, beta2, &g2)?);
    let extra = match beta {
        Some(b) => Some(MeritRecord::new(
            &rule,
            b,
            space.gammas(),
            p_merit(&rule, b, &space.weights)?,
        )),
        None => None,
    };
    let rho = if space.alpha > 0.0 {
        Some(rho_index(&rule, &space, cap)?)
    } else {
        None
    };
    let out = json!({
        "p": rule.p(),
        "z": rule.z(),
        "alpha": space.alpha,
        "gammas": space.gammas(),
        "worst_case_error": worst_case_error(&rule, &space).ok(),
        "merit_squared": squared,
        "merit": extra,
        "rho": rho,
    });
    write_json(&out, cfg.out.as_deref())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Integrate { common, n, rep } => {
            pre_verify(&common)?;
            integrate(&common, n, rep)
        }
        Command::Converge {
            common,
            summary,
            timing,
        } => {
            pre_verify(&common)?;
            converge(&common, summary.as_deref(), timing)
        }
        Command::Verify { common, smoke } => {
            let mut grid = if smoke {
                VerifyGrid::smoke()
            } else {
                VerifyGrid::default()
            };
            if let Some(s) = common.seed {
                grid.seed = s;
            }
            run_verify(&grid, common.out.as_deref())
        }
        Command::Cbc { common, p } => {
            pre_verify(&common)?;
            cbc(&common, p)
        }
        Command::SufficientN { common, epsilon, c } => {
            pre_verify(&common)?;
            suff_n(&common, epsilon, c)
        }
        Command::Merit {
            common,
            p,
            z,
            beta,
            search_cap,
        } => {
            pre_verify(&common)?;
            merit(&common, p, z, beta, search_cap)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
