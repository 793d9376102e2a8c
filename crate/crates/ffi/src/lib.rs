//! C interface to `randlat`.
//!
//! Every fallible function returns a [`RandlatStatus`]; on failure the
//! message is available from [`randlat_last_error`] on the same thread.
//! Objects are opaque handles created by `*_new` and released by `*_free`.
//! Integrand callbacks may be invoked concurrently from several threads.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use randlat::cbc::cbc_construct;
use randlat::experiment::sufficient_n;
use randlat::merit::{p_merit, rho_index, worst_case_error};
use randlat::sampler::{sieve_primes, stream_rng};
use randlat::{
    AlgorithmParams, Error, LatticeRule, MeritMethod, Sampler, Shift, SpaceParams, Weights,
};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandlatStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    NotPrime = 3,
    DimensionMismatch = 4,
    Unsupported = 5,
    BudgetExceeded = 6,
    DrawFailed = 7,
    CallbackFailed = 8,
    BufferTooSmall = 9,
    Internal = 10,
}

/// How a merit value was computed.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandlatMeritMethod {
    ClosedForm = 0,
    HurwitzKernel = 1,
    TruncatedOracle = 2,
}

/// Weighted Korobov space: dimension, smoothness and weights.
pub struct RandlatSpace(SpaceParams);

/// Rank-1 lattice rule with prime modulus.
pub struct RandlatRule(LatticeRule);

/// Randomized lattice-rule sampler for a fixed `n` and space.
pub struct RandlatSampler {
    inner: Sampler,
    d: usize,
}

/// Integrand: receives a point of length `d` and the user pointer.
/// Returning a non-finite value is reported as `CallbackFailed`.
pub type RandlatIntegrand =
    Option<extern "C" fn(x: *const f64, d: usize, user: *mut c_void) -> f64>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RandlatStatus {
    match e {
        Error::InvalidParameter(_) | Error::WeightIndex { .. } | Error::Config(_) => {
            RandlatStatus::InvalidArgument
        }
        Error::DimensionMismatch { .. } => RandlatStatus::DimensionMismatch,
        Error::NotPrime(_) => RandlatStatus::NotPrime,
        Error::Unsupported(_) => RandlatStatus::Unsupported,
        Error::BudgetExceeded { .. } => RandlatStatus::BudgetExceeded,
        Error::DrawFailed { .. } => RandlatStatus::DrawFailed,
        Error::Evaluator(_) => RandlatStatus::CallbackFailed,
        Error::Io(_) => RandlatStatus::Internal,
    }
}

struct Fail(RandlatStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(RandlatStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RandlatStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RandlatStatus::Ok
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            RandlatStatus::Internal
        }
    }
}

unsafe fn read<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn write<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn alg(lambda: f64, delta: f64, tau: f64) -> AlgorithmParams {
    AlgorithmParams { lambda, delta, tau }
}

#[derive(Clone, Copy)]
struct Callback {
    f: extern "C" fn(*const f64, usize, *mut c_void) -> f64,
    user: *mut c_void,
}

// The caller promises the callback and its user data tolerate concurrent calls.
unsafe impl Send for Callback {}
unsafe impl Sync for Callback {}

impl Callback {
    fn call(&self, x: &[f64]) -> Result<f64, String> {
        let v = (self.f)(x.as_ptr(), x.len(), self.user);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("integrand returned {v}"))
        }
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn randlat_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn randlat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a space with `d` dimensions, smoothness `alpha` and `d` weights.
///
/// # Safety
/// `gammas` must point to `d` doubles and `out_space` must be writable.
#[no_mangle]
pub unsafe extern "C" fn randlat_space_new(
    d: usize,
    alpha: f64,
    gammas: *const f64,
    out_space: *mut *mut RandlatSpace,
) -> RandlatStatus {
    guard(|| {
        let slot = out(out_space, "out_space")?;
        *slot = ptr::null_mut();
        let g = read(gammas, d, "gammas")?.to_vec();
        let space = SpaceParams::new(d, alpha, Weights::new(g)?)?;
        *slot = Box::into_raw(Box::new(RandlatSpace(space)));
        Ok(())
    })
}

/// # Safety
/// `space` must come from [`randlat_space_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn randlat_space_free(space: *mut RandlatSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Creates the rule with prime modulus `p` and generating vector `z` of length `d`.
///
/// # Safety
/// `z` must point to `d` values and `out_rule` must be writable.
#[no_mangle]
pub unsafe extern "C" fn randlat_rule_new(
    p: u64,
    z: *const u64,
    d: usize,
    out_rule: *mut *mut RandlatRule,
) -> RandlatStatus {
    guard(|| {
        let slot = out(out_rule, "out_rule")?;
        *slot = ptr::null_mut();
        let z = read(z, d, "z")?.to_vec();
        *slot = Box::into_raw(Box::new(RandlatRule(LatticeRule::new(p, z)?)));
        Ok(())
    })
}

/// # Safety
/// `rule` must come from a `randlat` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn randlat_rule_free(rule: *mut RandlatRule) {
    if !rule.is_null() {
        drop(Box::from_raw(rule));
    }
}

/// Modulus of `rule`, or 0 for a null handle.
///
/// # Safety
/// `rule` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn randlat_rule_p(rule: *const RandlatRule) -> u64 {
    rule.as_ref().map_or(0, |r| r.0.p())
}

/// Dimension of `rule`, or 0 for a null handle.
///
/// # Safety
/// `rule` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn randlat_rule_d(rule: *const RandlatRule) -> usize {
    rule.as_ref().map_or(0, |r| r.0.d())
}

/// Writes the generating vector into `z`, which holds `len >= d` values.
///
/// # Safety
/// `z` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn randlat_rule_z(
    rule: *const RandlatRule,
    z: *mut u64,
    len: usize,
) -> RandlatStatus {
    guard(|| {
        let r = &handle(rule, "rule")?.0;
        if len < r.d() {
            return Err(Fail(
                RandlatStatus::BufferTooSmall,
                format!("need {} values, got {len}", r.d()),
            ));
        }
        write(z, len, "z")?[..r.d()].copy_from_slice(r.z());
        Ok(())
    })
}

/// Writes the `p` points row by row into `points` (`p * d` doubles).
///
/// # Safety
/// `points` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn randlat_rule_points(
    rule: *const RandlatRule,
    points: *mut f64,
    len: usize,
) -> RandlatStatus {
    guard(|| {
        let r = &handle(rule, "rule")?.0;
        let d = r.d();
        let need = (r.p() as usize)
            .checked_mul(d)
            .ok_or_else(|| Fail(RandlatStatus::InvalidArgument, "point set too large".into()))?;
        if len < need {
            return Err(Fail(
                RandlatStatus::BufferTooSmall,
                format!("need {need} doubles, got {len}"),
            ));
        }
        let buf = write(points, len, "points")?;
        for (k, row) in buf[..need].chunks_exact_mut(d).enumerate() {
            r.point_into(k as u64, row);
        }
        Ok(())
    })
}

/// Applies the rule to `f`, optionally shifted by `shift` (null for none).
///
/// # Safety
/// `shift` must be null or hold `d` doubles; `f` must be safe to call
/// concurrently with `user`.
#[no_mangle]
pub unsafe extern "C" fn randlat_rule_apply(
    rule: *const RandlatRule,
    shift: *const f64,
    f: RandlatIntegrand,
    user: *mut c_void,
    out_value: *mut f64,
) -> RandlatStatus {
    guard(|| {
        let r = &handle(rule, "rule")?.0;
        let f = f.ok_or_else(|| null("f"))?;
        let slot = out(out_value, "out_value")?;
        let cb = Callback { f, user };
        let value = if shift.is_null() {
            r.try_apply(|x| cb.call(x))?
        } else {
            let u = Shift::new(read(shift, r.d(), "shift")?.to_vec())?;
            let failed = std::sync::OnceLock::new();
            let v = r.apply_shifted(&u, |x| {
                cb.call(x).unwrap_or_else(|e| {
                    let _ = failed.set(e);
                    0.0
                })
            })?;
            if let Some(e) = failed.into_inner() {
                return Err(Fail(RandlatStatus::CallbackFailed, e));
            }
            v
        };
        *slot = value;
        Ok(())
    })
}

/// `P_{β,γ}(p, z)` of `rule` with `d` weights. `out_tail` (nullable) receives
/// the certified tail bound, zero unless the truncated oracle was used.
///
/// # Safety
/// `gammas` must hold the rule's `d` weights; outputs must be writable or null
/// where stated.
#[no_mangle]
pub unsafe extern "C" fn randlat_merit(
    rule: *const RandlatRule,
    beta: f64,
    gammas: *const f64,
    out_value: *mut f64,
    out_tail: *mut f64,
    out_method: *mut RandlatMeritMethod,
) -> RandlatStatus {
    guard(|| {
        let r = &handle(rule, "rule")?.0;
        let slot = out(out_value, "out_value")?;
        let w = Weights::new(read(gammas, r.d(), "gammas")?.to_vec())?;
        let m = p_merit(r, beta, &w)?;
        *slot = m.value;
        if let Some(t) = out_tail.as_mut() {
            *t = m.tail_bound;
        }
        if let Some(k) = out_method.as_mut() {
            *k = match m.method {
                MeritMethod::ClosedForm => RandlatMeritMethod::ClosedForm,
                MeritMethod::HurwitzKernel => RandlatMeritMethod::HurwitzKernel,
                MeritMethod::TruncatedOracle => RandlatMeritMethod::TruncatedOracle,
            };
        }
        Ok(())
    })
}

/// Worst-case error of `rule` in `space`.
///
/// # Safety
/// Handles must be live and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn randlat_worst_case_error(
    rule: *const RandlatRule,
    space: *const RandlatSpace,
    out_value: *mut f64,
) -> RandlatStatus {
    guard(|| {
        let r = &handle(rule, "rule")?.0;
        let s = &handle(space, "space")?.0;
        let slot = out(out_value, "out_value")?;
        *slot = worst_case_error(r, s)?;
        Ok(())
    })
}

/// Zaremba-type index `ρ` of `rule` in `space`, enumerating at most `search_cap` vectors.
///
/// # Safety
/// Handles must be live and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn randlat_rho(
    rule: *const RandlatRule,
    space: *const RandlatSpace,
    search_cap: u64,
    out_value: *mut f64,
) -> RandlatStatus {
    guard(|| {
        let r = &handle(rule, "rule")?.0;
        let s = &handle(space, "space")?.0;
        let slot = out(out_value, "out_value")?;
        *slot = rho_index(r, s, search_cap)?;
        Ok(())
    })
}

/// Primes in `(n/2, n]` in increasing order. `out_count` always receives the
/// count; the primes are written when `primes` is non-null and `len` suffices.
///
/// # Safety
/// `primes` must be null or writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn randlat_sieve(
    n: u64,
    primes: *mut u64,
    len: usize,
    out_count: *mut usize,
) -> RandlatStatus {
    guard(|| {
        let count = out(out_count, "out_count")?;
        let range = sieve_primes(n)?;
        *count = range.len();
        if primes.is_null() {
            return Ok(());
        }
        if len < range.len() {
            return Err(Fail(
                RandlatStatus::BufferTooSmall,
                format!("need {} values, got {len}", range.len()),
            ));
        }
        write(primes, len, "primes")?[..range.len()].copy_from_slice(range.primes());
        Ok(())
    })
}

/// Sampler for budget `n`. `try_cap` bounds the rejection loop per draw.
///
/// # Safety
/// `space` must be live and `out_sampler` writable.
#[no_mangle]
pub unsafe extern "C" fn randlat_sampler_new(
    n: u64,
    space: *const RandlatSpace,
    lambda: f64,
    delta: f64,
    tau: f64,
    shifted: bool,
    try_cap: u32,
    out_sampler: *mut *mut RandlatSampler,
) -> RandlatStatus {
    guard(|| {
        let slot = out(out_sampler, "out_sampler")?;
        *slot = ptr::null_mut();
        let s = &handle(space, "space")?.0;
        let inner = Sampler::new(n, s, &alg(lambda, delta, tau), shifted, try_cap)?;
        *slot = Box::into_raw(Box::new(RandlatSampler { inner, d: s.d }));
        Ok(())
    })
}

/// # Safety
/// `sampler` must come from [`randlat_sampler_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn randlat_sampler_free(sampler: *mut RandlatSampler) {
    if !sampler.is_null() {
        drop(Box::from_raw(sampler));
    }
}

/// One draw from stream `(seed, stream)`. Returns a new rule handle; the shift
/// (if the sampler is shifted and `out_shift` is non-null) fills `d` doubles.
///
/// # Safety
/// `out_shift` must be null or writable for `d` doubles; other outputs
/// writable or null where stated.
#[no_mangle]
pub unsafe extern "C" fn randlat_sampler_draw(
    sampler: *const RandlatSampler,
    seed: u64,
    stream: u64,
    out_rule: *mut *mut RandlatRule,
    out_shift: *mut f64,
    out_tries: *mut u32,
) -> RandlatStatus {
    guard(|| {
        let s = handle(sampler, "sampler")?;
        let slot = out(out_rule, "out_rule")?;
        *slot = ptr::null_mut();
        let draw = s.inner.draw(&mut stream_rng(seed, stream))?;
        if let (Some(u), false) = (&draw.shift, out_shift.is_null()) {
            write(out_shift, s.d, "out_shift")?.copy_from_slice(u.as_slice());
        }
        if let Some(t) = out_tries.as_mut() {
            *t = draw.tries;
        }
        *slot = Box::into_raw(Box::new(RandlatRule(draw.rule)));
        Ok(())
    })
}

/// One realization of the randomized algorithm on `f`, from stream
/// `(seed, stream)`. `out_p` and `out_tries` are optional.
///
/// # Safety
/// `f` must be safe to call concurrently with `user`; outputs writable or null
/// where stated.
#[no_mangle]
pub unsafe extern "C" fn randlat_sampler_integrate(
    sampler: *const RandlatSampler,
    f: RandlatIntegrand,
    user: *mut c_void,
    seed: u64,
    stream: u64,
    out_value: *mut f64,
    out_p: *mut u64,
    out_tries: *mut u32,
) -> RandlatStatus {
    guard(|| {
        let s = handle(sampler, "sampler")?;
        let f = f.ok_or_else(|| null("f"))?;
        let slot = out(out_value, "out_value")?;
        let cb = Callback { f, user };
        let draw = s.inner.draw(&mut stream_rng(seed, stream))?;
        let value = match &draw.shift {
            None => draw.rule.try_apply(|x| cb.call(x))?,
            Some(u) => {
                let failed = std::sync::OnceLock::new();
                let v = draw.rule.apply_shifted(u, |x| {
                    cb.call(x).unwrap_or_else(|e| {
                        let _ = failed.set(e);
                        0.0
                    })
                })?;
                if let Some(e) = failed.into_inner() {
                    return Err(Fail(RandlatStatus::CallbackFailed, e));
                }
                v
            }
        };
        *slot = value;
        if let Some(p) = out_p.as_mut() {
            *p = draw.rule.p();
        }
        if let Some(t) = out_tries.as_mut() {
            *t = draw.tries;
        }
        Ok(())
    })
}

/// Smallest `n` whose error bound is at most `epsilon`, with constant `c`.
///
/// # Safety
/// `space` must be live and `out_n` writable.
#[no_mangle]
pub unsafe extern "C" fn randlat_sufficient_n(
    epsilon: f64,
    space: *const RandlatSpace,
    lambda: f64,
    delta: f64,
    tau: f64,
    shifted: bool,
    c: f64,
    out_n: *mut u64,
) -> RandlatStatus {
    guard(|| {
        let s = &handle(space, "space")?.0;
        let slot = out(out_n, "out_n")?;
        *slot = sufficient_n(epsilon, s, &alg(lambda, delta, tau), shifted, c)?.n;
        Ok(())
    })
}

/// Component-by-component rule with modulus `p` for `space`.
///
/// # Safety
/// `space` must be live and `out_rule` writable.
#[no_mangle]
pub unsafe extern "C" fn randlat_cbc(
    p: u64,
    space: *const RandlatSpace,
    out_rule: *mut *mut RandlatRule,
) -> RandlatStatus {
    guard(|| {
        let slot = out(out_rule, "out_rule")?;
        *slot = ptr::null_mut();
        let s = &handle(space, "space")?.0;
        let res = cbc_construct(p, s.d, s)?;
        *slot = Box::into_raw(Box::new(RandlatRule(LatticeRule::new(res.p, res.z)?)));
        Ok(())
    })
}
