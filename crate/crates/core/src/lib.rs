//! Randomized rank-1 lattice rules with a random prime number of points
//! for integration in weighted Korobov spaces.
//!
//! The randomized algorithm draws a prime `p` uniformly from the primes in
//! `[n/2 + 1, n]`, a generating vector `z` uniformly from the vectors that
//! pass a figure-of-merit test, and optionally a uniform shift, then applies
//! the lattice rule `Q_{d,p,z}(f) = (1/p) Σ_k f({k z / p})`.

// Negated comparisons are used on purpose so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cbc;
pub mod error;
pub mod experiment;
pub mod korobov;
pub mod lattice;
pub mod merit;
pub mod sampler;
pub mod sum;
pub mod testfns;
pub mod verify;
pub mod zeta;

pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentRecord, RateFit};
pub use korobov::{AlgorithmParams, SpaceParams, Weights};
pub use lattice::{LatticeRule, Shift};
pub use merit::{MeritMethod, MeritResult};
pub use sampler::{Draw, DrawRecord, PrimeRange, Sampler};
pub use testfns::{TestFnSpec, TestFunction};
pub use verify::{verify_suite, VerifyGrid, VerifyReport};
