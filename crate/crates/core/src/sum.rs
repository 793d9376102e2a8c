//! Deterministic pairwise summation.
//!
//! Every reduction in the crate goes through these helpers so that a
//! result depends only on the order of its terms, never on thread count.

use std::ops::Add;

use num_complex::Complex64;

/// Additive values that can be summed pairwise.
pub trait Summand: Copy + Add<Output = Self> + Send + Sync {
    fn zero() -> Self;
    fn scale(self, s: f64) -> Self;
}

impl Summand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Summand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

const LEAF: usize = 32;

/// Recursive pairwise sum; blocks of 32 are summed left to right.
pub fn pairwise_sum<T: Summand>(xs: &[T]) -> T {
    if xs.len() <= LEAF {
        xs.iter().fold(T::zero(), |acc, &x| acc + x)
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Fixed chunk length used by the parallel reductions.
pub const CHUNK: usize = 4096;
