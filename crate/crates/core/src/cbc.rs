//! Component-by-component construction of a generating vector.
//!
//! Coordinate `s` is chosen to minimize `P_{2α,γ²}(p, (z_1,…,z_s))` with the
//! previous coordinates fixed. Each stage keeps the products
//! `∏_{j<s} (1 + γ_j² K_{2α}({k z_j/p}))` for every `k`, so a candidate costs
//! `O(p)` and the whole construction `O(p² d)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::korobov::SpaceParams;
use crate::lattice::{is_prime, mul_mod};
use crate::merit::{closed_form_order, KernelTable};
use crate::sum::pairwise_sum;

/// Candidates whose merit is within this relative distance of the best tie.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbcResult {
    pub p: u64,
    pub z: Vec<u64>,
    /// `P_{2α,γ²}` of the prefix `(z_1,…,z_s)` for `s = 1,…,d`.
    pub merit_per_dim: Vec<f64>,
}

pub fn cbc_construct(p: u64, d: usize, space: &SpaceParams) -> Result<CbcResult> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if d == 0 || d > space.d {
        return Err(Error::DimensionMismatch {
            expected: space.d,
            got: d,
        });
    }
    let beta = 2.0 * space.alpha;
    if closed_form_order(beta).is_none() {
        return Err(Error::Unsupported(format!(
            "CBC needs alpha in {{1,2,3}}, got {}",
            space.alpha
        )));
    }
    let table = KernelTable::bernoulli(p, beta)?;
    let kernel = table.values();
    let g2: Vec<f64> = space.gammas().iter().map(|g| g * g).collect();

    // q[k] = ∏_{j<s}(1 + a_j(k)) - 1
    let mut q = vec![0.0; p as usize];
    let mut z = Vec::with_capacity(d);
    let mut merit_per_dim = Vec::with_capacity(d);
    for &g in g2.iter().take(d) {
        let stage = |c: u64| -> f64 {
            let terms: Vec<f64> = (0..p)
                .map(|k| {
                    let a = g * kernel[mul_mod(k, c, p) as usize];
                    let qk = q[k as usize];
                    qk + a + qk * a
                })
                .collect();
            pairwise_sum(&terms) / p as f64
        };
        let merits: Vec<f64> = (1..p).into_par_iter().map(stage).collect();
        let best = merits.iter().copied().fold(f64::INFINITY, f64::min);
        let pick = merits
            .iter()
            .position(|&m| m <= best + TIE_TOLERANCE * best.abs())
            .expect("at least one candidate");
        let c = pick as u64 + 1;
        for (k, qk) in q.iter_mut().enumerate() {
            let a = g * kernel[mul_mod(k as u64, c, p) as usize];
            *qk += a + *qk * a;
        }
        z.push(c);
        merit_per_dim.push(table.merit(&z, &g2)?);
    }
    Ok(CbcResult {
        p,
        z,
        merit_per_dim,
    })
}
