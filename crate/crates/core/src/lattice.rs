//! Rank-1 lattice rules `Q_{d,p,z}(f) = (1/p) Σ_k f({k z / p})`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sum::{pairwise_sum, Summand, CHUNK};

/// Deterministic Miller–Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse modulo a prime via Fermat.
pub(crate) fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// `h mod p` in `[0, p)`.
#[inline]
pub(crate) fn residue(h: i64, p: u64) -> u64 {
    (h as i128).rem_euclid(p as i128) as u64
}

/// A rank-1 lattice rule with prime modulus `p` and generating vector `z`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRule")]
pub struct LatticeRule {
    p: u64,
    z: Vec<u64>,
}

#[derive(Deserialize)]
struct RawRule {
    p: u64,
    z: Vec<u64>,
}

impl TryFrom<RawRule> for LatticeRule {
    type Error = Error;
    fn try_from(r: RawRule) -> Result<Self> {
        LatticeRule::new(r.p, r.z)
    }
}

impl LatticeRule {
    pub fn new(p: u64, z: Vec<u64>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if z.is_empty() {
            return Err(invalid("generating vector must not be empty"));
        }
        if let Some(bad) = z.iter().find(|&&zj| zj == 0 || zj >= p) {
            return Err(invalid(format!("component {bad} of z not in 1..{}", p - 1)));
        }
        Ok(LatticeRule { p, z })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn z(&self) -> &[u64] {
        &self.z
    }

    pub fn d(&self) -> usize {
        self.z.len()
    }

    /// `h·z ≡ 0 (mod p)`.
    pub fn is_dual(&self, h: &[i64]) -> bool {
        debug_assert_eq!(h.len(), self.z.len());
        let mut acc = 0u64;
        for (&hj, &zj) in h.iter().zip(&self.z) {
            acc = (acc + mul_mod(residue(hj, self.p), zj, self.p)) % self.p;
        }
        acc == 0
    }

    /// Writes point `k` into `out`; coordinates are `(k z_j mod p) / p`.
    #[inline]
    pub fn point_into(&self, k: u64, out: &mut [f64]) {
        let pf = self.p as f64;
        for (o, &zj) in out.iter_mut().zip(&self.z) {
            *o = mul_mod(k, zj, self.p) as f64 / pf;
        }
    }

    /// All `p` points in order `k = 0, …, p-1`.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.p)
            .map(|k| {
                let mut x = vec![0.0; self.d()];
                self.point_into(k, &mut x);
                x
            })
            .collect()
    }

    /// `Q_{d,p,z}(f)`.
    pub fn apply<T, F>(&self, f: F) -> T
    where
        T: Summand,
        F: Fn(&[f64]) -> T + Sync,
    {
        self.mean_over_points(None, |x| Ok::<T, std::convert::Infallible>(f(x)))
            .unwrap_or_else(|e| match e {})
    }

    /// `Q_{d,p,z}(f)` for a fallible evaluator; the first failure is returned.
    pub fn try_apply<T, E, F>(&self, f: F) -> Result<T>
    where
        T: Summand,
        E: std::fmt::Display + Send,
        F: Fn(&[f64]) -> std::result::Result<T, E> + Sync,
    {
        self.mean_over_points(None, f)
            .map_err(|e| Error::Evaluator(e.to_string()))
    }

    /// `Q_{d,p,z}(f(· + u mod 1))`.
    pub fn apply_shifted<T, F>(&self, shift: &Shift, f: F) -> Result<T>
    where
        T: Summand,
        F: Fn(&[f64]) -> T + Sync,
    {
        if shift.d() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: shift.d(),
            });
        }
        Ok(self
            .mean_over_points(Some(shift), |x| Ok::<T, std::convert::Infallible>(f(x)))
            .unwrap_or_else(|e| match e {}))
    }

    /// Mean of `f` over the (optionally shifted) point set, computed as
    /// `f(x_0) + Σ (f(x_k) - f(x_0)) / p` with chunked pairwise sums, which
    /// is exact for constants and independent of the thread count.
    fn mean_over_points<T, E, F>(&self, shift: Option<&Shift>, f: F) -> std::result::Result<T, E>
    where
        T: Summand,
        E: Send,
        F: Fn(&[f64]) -> std::result::Result<T, E> + Sync,
    {
        let d = self.d();
        let place = |k: u64, x: &mut [f64]| {
            self.point_into(k, x);
            if let Some(s) = shift {
                for (xj, &uj) in x.iter_mut().zip(&s.u) {
                    let y = *xj + uj;
                    *xj = if y >= 1.0 { y - 1.0 } else { y };
                }
            }
        };
        let mut x0 = vec![0.0; d];
        place(0, &mut x0);
        let reference = f(&x0)?;
        let neg_ref = reference.scale(-1.0);

        let chunk_sum = |start: u64| -> std::result::Result<T, E> {
            let end = (start + CHUNK as u64).min(self.p);
            let mut x = vec![0.0; d];
            let mut vals = Vec::with_capacity((end - start) as usize);
            for k in start..end {
                place(k, &mut x);
                vals.push(f(&x)? + neg_ref);
            }
            Ok(pairwise_sum(&vals))
        };
        let starts: Vec<u64> = (0..self.p).step_by(CHUNK).collect();
        let sums: Vec<T> = if starts.len() == 1 {
            vec![chunk_sum(0)?]
        } else {
            starts
                .into_par_iter()
                .map(chunk_sum)
                .collect::<std::result::Result<_, E>>()?
        };
        Ok(reference + pairwise_sum(&sums).scale(1.0 / self.p as f64))
    }

    /// Plain-text export: one point per line, coordinates separated by a
    /// space, each printed with 17 significant digits.
    pub fn write_points<W: Write>(&self, mut w: W) -> Result<()> {
        let mut x = vec![0.0; self.d()];
        for k in 0..self.p {
            self.point_into(k, &mut x);
            let line: Vec<String> = x.iter().map(|&v| format_sig17(v)).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// `x` with 17 significant digits, fixed notation for `x ∈ [1e-4, 1)`
/// and scientific notation below.
pub fn format_sig17(x: f64) -> String {
    if x == 0.0 {
        return format!("{:.16}", 0.0);
    }
    let e = x.abs().log10().floor() as i32;
    if (-4..17).contains(&e) {
        format!("{:.*}", (16 - e).max(0) as usize, x)
    } else {
        format!("{:.16e}", x)
    }
}

/// A shift vector `u ∈ [0,1)^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shift {
    u: Vec<f64>,
}

impl Shift {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if let Some(bad) = u.iter().find(|&&x| !(0.0..1.0).contains(&x)) {
            return Err(invalid(format!("shift coordinate {bad} not in [0,1)")));
        }
        Ok(Shift { u })
    }

    pub fn zero(d: usize) -> Self {
        Shift { u: vec![0.0; d] }
    }

    pub fn d(&self) -> usize {
        self.u.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.u
    }
}
