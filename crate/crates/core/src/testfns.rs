//! Test integrands with known integral and Korobov norm.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::korobov::{r_product, SpaceParams};
use crate::lattice::LatticeRule;
use crate::merit::{bernoulli_kernel_scale, bernoulli_poly, closed_form_order, KernelTable};
use crate::sampler::sieve_primes;
use crate::zeta::riemann_zeta;

type Evaluator = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// Which family a test function belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TestFnKind {
    WorstCase { p: u64, z: Vec<u64> },
    LowerBound { n: u64 },
    ProductKernel { smoothness: u32 },
    TrigPoly { terms: usize },
}

/// An integrand on `[0,1)^d` with its exact integral and norm in `H_{d,α,γ}`.
#[derive(Clone)]
pub struct TestFunction {
    kind: TestFnKind,
    d: usize,
    integral: Complex64,
    norm: f64,
    eval: Evaluator,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("kind", &self.kind)
            .field("d", &self.d)
            .field("integral", &self.integral)
            .field("norm", &self.norm)
            .finish_non_exhaustive()
    }
}

impl TestFunction {
    pub fn kind(&self) -> &TestFnKind {
        &self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn exact_integral(&self) -> Complex64 {
        self.integral
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        (self.eval)(x)
    }

    /// The evaluator as a closure usable with [`LatticeRule::apply`].
    pub fn evaluator(&self) -> impl Fn(&[f64]) -> Complex64 + Sync + '_ {
        move |x| (self.eval)(x)
    }
}

fn check_space_dim(space: &SpaceParams, d: usize) -> Result<()> {
    if space.d != d {
        return Err(Error::DimensionMismatch {
            expected: space.d,
            got: d,
        });
    }
    Ok(())
}

/// The unit-norm integrand with the largest error for `rule`.
///
/// Its Fourier coefficients are `c / r_{2α,γ²}(h)` on the nonzero dual
/// lattice with `c = P_{2α,γ²}^{-1/2}`, so `Q(f) - I(f) = sqrt(P_{2α,γ²})`.
/// The dual sum is evaluated exactly through the Bernoulli kernel,
/// `f(x) = c ((1/p) Σ_k ∏_j (1 + γ_j² K_{2α}({x_j + k z_j/p})) - 1)`,
/// which needs `2α ∈ {2,4,6}` and costs `O(p d)` per evaluation.
pub fn worst_case_fn(rule: &LatticeRule, space: &SpaceParams) -> Result<TestFunction> {
    check_space_dim(space, rule.d())?;
    let beta = 2.0 * space.alpha;
    let order = closed_form_order(beta).ok_or_else(|| {
        Error::Unsupported(format!(
            "worst-case function needs alpha in {{1,2,3}}, got {}",
            space.alpha
        ))
    })?;
    let g2: Vec<f64> = space.gammas().iter().map(|g| g * g).collect();
    let table = KernelTable::bernoulli(rule.p(), beta)?;
    let merit = table.merit(rule.z(), &g2)?;
    if !(merit > 0.0) {
        return Err(invalid("worst-case function needs a positive merit"));
    }
    let c = merit.sqrt().recip();
    let scale = bernoulli_kernel_scale(order);
    let p = rule.p();
    let z = rule.z().to_vec();
    let eval = move |x: &[f64]| -> Complex64 {
        let pf = p as f64;
        let mut terms = Vec::with_capacity(p as usize);
        for k in 0..p {
            let mut q = 0.0;
            for ((&xj, &zj), &g) in x.iter().zip(&z).zip(&g2) {
                let t = (xj + ((k as u128 * zj as u128) % p as u128) as f64 / pf).fract();
                let a = g * scale * bernoulli_poly(order, t).unwrap_or(f64::NAN);
                q += a + q * a;
            }
            terms.push(q);
        }
        Complex64::new(c * crate::sum::pairwise_sum(&terms) / pf, 0.0)
    };
    Ok(TestFunction {
        kind: TestFnKind::WorstCase {
            p,
            z: rule.z().to_vec(),
        },
        d: rule.d(),
        integral: Complex64::new(0.0, 0.0),
        norm: 1.0,
        eval: Arc::new(eval),
    })
}

/// The unit-norm function used for the lower bound at `n`:
/// `f̂(h) = 1/(r_{α,γ}(h) sqrt|𝒫_n|)` for `h = (q,0,…,0)`, `q ∈ 𝒫_n`.
///
/// Every rule with `p ∈ 𝒫_n` integrates it to `γ_1 / (p^α sqrt|𝒫_n|)`
/// (the real part is the cosine series; the imaginary part integrates to 0).
pub fn lower_bound_fn(n: u64, space: &SpaceParams) -> Result<TestFunction> {
    let primes = sieve_primes(n)?;
    if primes.is_empty() {
        return Err(invalid(format!("no primes in the range for n = {n}")));
    }
    let sqrt_count = (primes.len() as f64).sqrt();
    let gamma1 = space.gammas()[0];
    let modes: Vec<(f64, f64)> = primes
        .primes()
        .iter()
        .map(|&q| {
            let r = crate::korobov::r_factor(space.alpha, gamma1, q as i64);
            (q as f64, 1.0 / (r * sqrt_count))
        })
        .collect();
    let eval = move |x: &[f64]| -> Complex64 {
        let mut re = Vec::with_capacity(modes.len());
        let mut im = Vec::with_capacity(modes.len());
        for &(q, a) in &modes {
            let (s, c) = (2.0 * PI * (q * x[0]).fract()).sin_cos();
            re.push(a * c);
            im.push(a * s);
        }
        Complex64::new(crate::sum::pairwise_sum(&re), crate::sum::pairwise_sum(&im))
    };
    Ok(TestFunction {
        kind: TestFnKind::LowerBound { n },
        d: space.d,
        integral: Complex64::new(0.0, 0.0),
        norm: 1.0,
        eval: Arc::new(eval),
    })
}

/// The error `γ_1 / (p^α sqrt|𝒫_n|)` of any rule with modulus `p` on [`lower_bound_fn`].
pub fn lower_bound_error(n: u64, p: u64, space: &SpaceParams) -> Result<f64> {
    let primes = sieve_primes(n)?;
    if !primes.primes().contains(&p) {
        return Err(invalid(format!(
            "{p} is not in the prime range for n = {n}"
        )));
    }
    let r = crate::korobov::r_factor(space.alpha, space.gammas()[0], p as i64);
    Ok(1.0 / (r * (primes.len() as f64).sqrt()))
}

/// `f(x) = ∏_j (1 + γ_j c_s B_{2s}({x_j}))` with `f̂(h) = ∏_{h_j≠0} γ_j |h_j|^{-2s}`.
///
/// Its norm in `H_{d,α,γ}` is `∏_j (1 + 2ζ(4s - 2α))^{1/2}`, finite when
/// `4s - 2α > 1`. `smoothness = None` takes `s = α`, which must then be 1, 2 or 3.
pub fn product_kernel_fn(space: &SpaceParams, smoothness: Option<u32>) -> Result<TestFunction> {
    let s = match smoothness {
        Some(s) => s,
        None => {
            let a = space.alpha;
            if a.fract() != 0.0 {
                return Err(Error::Unsupported(format!(
                    "product kernel needs an explicit smoothness for alpha = {a}"
                )));
            }
            a as u32
        }
    };
    let order = closed_form_order(f64::from(2 * s)).ok_or_else(|| {
        Error::Unsupported(format!(
            "product kernel smoothness must be 1, 2 or 3, got {s}"
        ))
    })?;
    let exponent = f64::from(4 * s) - 2.0 * space.alpha;
    if !(exponent > 1.0) {
        return Err(invalid(format!(
            "product kernel of smoothness {s} is not in the space with alpha = {}",
            space.alpha
        )));
    }
    let factor = 1.0 + 2.0 * riemann_zeta(exponent)?;
    let norm = factor.powf(space.d as f64 / 2.0);
    let scale = bernoulli_kernel_scale(order);
    let gammas = space.gammas().to_vec();
    let eval = move |x: &[f64]| -> Complex64 {
        let v = x
            .iter()
            .zip(&gammas)
            .map(|(&xj, &g)| {
                1.0 + g * scale * bernoulli_poly(order, xj.fract()).unwrap_or(f64::NAN)
            })
            .product::<f64>();
        Complex64::new(v, 0.0)
    };
    Ok(TestFunction {
        kind: TestFnKind::ProductKernel { smoothness: s },
        d: space.d,
        integral: Complex64::new(1.0, 0.0),
        norm,
        eval: Arc::new(eval),
    })
}

/// One Fourier coefficient of a trigonometric polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub h: Vec<i64>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl TrigTerm {
    pub fn new(h: Vec<i64>, c: Complex64) -> Self {
        TrigTerm {
            h,
            re: c.re,
            im: c.im,
        }
    }

    pub fn coeff(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// `f(x) = Σ f̂(h) e^{2πi h·x}` over a finite list of terms; repeated
/// frequencies are merged.
pub fn trig_poly_fn(terms: &[TrigTerm], space: &SpaceParams) -> Result<TestFunction> {
    let mut merged: Vec<(Vec<i64>, Complex64)> = Vec::new();
    for t in terms {
        check_space_dim(space, t.h.len())?;
        match merged.iter_mut().find(|(h, _)| *h == t.h) {
            Some((_, c)) => *c += t.coeff(),
            None => merged.push((t.h.clone(), t.coeff())),
        }
    }
    let gammas = space.gammas();
    let zero = vec![0i64; space.d];
    let integral = merged
        .iter()
        .find(|(h, _)| *h == zero)
        .map_or(Complex64::new(0.0, 0.0), |(_, c)| *c);
    let norm = merged
        .iter()
        .map(|(h, c)| (r_product(space.alpha, gammas, h) * c.norm()).powi(2))
        .sum::<f64>()
        .sqrt();
    let eval = {
        let merged = merged.clone();
        move |x: &[f64]| -> Complex64 {
            merged
                .iter()
                .map(|(h, c)| {
                    let phase = h
                        .iter()
                        .zip(x)
                        .map(|(&hj, &xj)| (hj as f64 * xj).fract())
                        .sum::<f64>();
                    c * Complex64::from_polar(1.0, 2.0 * PI * phase)
                })
                .sum()
        }
    };
    Ok(TestFunction {
        kind: TestFnKind::TrigPoly {
            terms: merged.len(),
        },
        d: space.d,
        integral,
        norm,
        eval: Arc::new(eval),
    })
}

/// JSON descriptor of a test function, resolved per `n` by [`TestFnSpec::build`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TestFnSpec {
    ProductKernel {
        #[serde(default)]
        smoothness: Option<u32>,
    },
    LowerBound,
    WorstCase {
        p: u64,
        z: Vec<u64>,
    },
    TrigPoly {
        terms: Vec<TrigTerm>,
    },
    Constant {
        value: f64,
    },
}

impl TestFnSpec {
    pub fn build(&self, n: u64, space: &SpaceParams) -> Result<TestFunction> {
        match self {
            TestFnSpec::ProductKernel { smoothness } => product_kernel_fn(space, *smoothness),
            TestFnSpec::LowerBound => lower_bound_fn(n, space),
            TestFnSpec::WorstCase { p, z } => {
                worst_case_fn(&LatticeRule::new(*p, z.clone())?, space)
            }
            TestFnSpec::TrigPoly { terms } => trig_poly_fn(terms, space),
            TestFnSpec::Constant { value } => trig_poly_fn(
                &[TrigTerm::new(vec![0; space.d], Complex64::new(*value, 0.0))],
                space,
            ),
        }
    }

    /// Whether the function changes with `n`.
    pub fn depends_on_n(&self) -> bool {
        matches!(self, TestFnSpec::LowerBound)
    }

    /// Short names accepted on the command line: `product_kernel[:s]`,
    /// `lower_bound`, `constant[:c]`; anything else is parsed as JSON.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, arg) = match text.split_once(':') {
            Some((a, b)) if !text.starts_with('{') => (a, Some(b)),
            _ => (text, None),
        };
        let bad = |e: &dyn fmt::Display| Error::Config(format!("test function '{text}': {e}"));
        match name {
            "product_kernel" => Ok(TestFnSpec::ProductKernel {
                smoothness: arg.map(|s| s.parse()).transpose().map_err(|e| bad(&e))?,
            }),
            "lower_bound" => Ok(TestFnSpec::LowerBound),
            "constant" => Ok(TestFnSpec::Constant {
                value: arg.map_or(Ok(1.0), |s| s.parse()).map_err(|e| bad(&e))?,
            }),
            _ => serde_json::from_str(text).map_err(|e| bad(&e)),
        }
    }
}
