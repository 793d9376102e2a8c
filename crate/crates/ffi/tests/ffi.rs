use std::ffi::{c_void, CStr};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use randlat_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(randlat_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn space(d: usize, alpha: f64, g: &[f64]) -> *mut RandlatSpace {
    let mut s = ptr::null_mut();
    let st = unsafe { randlat_space_new(d, alpha, g.as_ptr(), &mut s) };
    assert_eq!(st, RandlatStatus::Ok, "{}", last_error());
    s
}

fn rule(p: u64, z: &[u64]) -> *mut RandlatRule {
    let mut r = ptr::null_mut();
    let st = unsafe { randlat_rule_new(p, z.as_ptr(), z.len(), &mut r) };
    assert_eq!(st, RandlatStatus::Ok, "{}", last_error());
    r
}

extern "C" fn coordinate_sum(x: *const f64, d: usize, _: *mut c_void) -> f64 {
    unsafe { std::slice::from_raw_parts(x, d) }.iter().sum()
}

extern "C" fn constant(_: *const f64, _: usize, user: *mut c_void) -> f64 {
    unsafe { *(user as *const f64) }
}

extern "C" fn nan(_: *const f64, _: usize, _: *mut c_void) -> f64 {
    f64::NAN
}

#[test]
fn rule_points_and_apply() {
    let r = rule(5, &[1, 2]);
    unsafe {
        assert_eq!(randlat_rule_p(r), 5);
        assert_eq!(randlat_rule_d(r), 2);
        let mut z = [0u64; 2];
        assert_eq!(randlat_rule_z(r, z.as_mut_ptr(), 2), RandlatStatus::Ok);
        assert_eq!(z, [1, 2]);
        let mut pts = vec![0.0; 10];
        assert_eq!(
            randlat_rule_points(r, pts.as_mut_ptr(), 10),
            RandlatStatus::Ok
        );
        assert_eq!(&pts[2..4], &[0.2, 0.4]);
        assert_eq!(&pts[6..8], &[0.6, 0.2]);
        assert_eq!(
            randlat_rule_points(r, pts.as_mut_ptr(), 9),
            RandlatStatus::BufferTooSmall
        );
        assert!(last_error().contains("need 10"));

        let mut v = 0.0;
        let st = randlat_rule_apply(
            r,
            ptr::null(),
            Some(coordinate_sum),
            ptr::null_mut(),
            &mut v,
        );
        assert_eq!(st, RandlatStatus::Ok);
        assert!((v - 0.8).abs() < 1e-15);
        assert!(last_error().is_empty());

        let shift = [0.5, 0.25];
        let st = randlat_rule_apply(
            r,
            shift.as_ptr(),
            Some(coordinate_sum),
            ptr::null_mut(),
            &mut v,
        );
        assert_eq!(st, RandlatStatus::Ok);
        assert!((v - 0.95).abs() < 1e-15, "{v}");

        let c = 2.5f64;
        let st = randlat_rule_apply(
            r,
            ptr::null(),
            Some(constant),
            &c as *const f64 as *mut c_void,
            &mut v,
        );
        assert_eq!(st, RandlatStatus::Ok);
        assert_eq!(v, 2.5);

        for shift in [ptr::null(), shift.as_ptr()] {
            let st = randlat_rule_apply(r, shift, Some(nan), ptr::null_mut(), &mut v);
            assert_eq!(st, RandlatStatus::CallbackFailed);
        }
        assert_eq!(
            randlat_rule_apply(r, ptr::null(), None, ptr::null_mut(), &mut v),
            RandlatStatus::NullPointer
        );
        randlat_rule_free(r);
        randlat_rule_free(ptr::null_mut());
    }
}

#[test]
fn constructor_errors() {
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(
            randlat_rule_new(6, [1u64].as_ptr(), 1, &mut r),
            RandlatStatus::NotPrime
        );
        assert!(r.is_null());
        assert!(last_error().contains('6'));
        assert_eq!(
            randlat_rule_new(5, ptr::null(), 2, &mut r),
            RandlatStatus::NullPointer
        );
        assert_eq!(
            randlat_rule_new(5, [1u64].as_ptr(), 1, ptr::null_mut()),
            RandlatStatus::NullPointer
        );
        let mut s = ptr::null_mut();
        assert_eq!(
            randlat_space_new(1, -1.0, [1.0].as_ptr(), &mut s),
            RandlatStatus::InvalidArgument
        );
        assert!(s.is_null());
        assert_eq!(randlat_rule_p(ptr::null()), 0);
    }
}

#[test]
fn merit_matches_known_value() {
    let r = rule(3, &[1]);
    let (mut v, mut tail, mut m) = (0.0, 1.0, RandlatMeritMethod::TruncatedOracle);
    unsafe {
        let st = randlat_merit(r, 2.0, [1.0].as_ptr(), &mut v, &mut tail, &mut m);
        assert_eq!(st, RandlatStatus::Ok);
        assert!((v - std::f64::consts::PI.powi(2) / 27.0).abs() < 1e-12);
        assert_eq!(tail, 0.0);
        assert_eq!(m, RandlatMeritMethod::ClosedForm);
        assert_eq!(
            randlat_merit(r, 2.5, [1.0].as_ptr(), &mut v, ptr::null_mut(), &mut m),
            RandlatStatus::Ok
        );
        assert_eq!(m, RandlatMeritMethod::HurwitzKernel);
        randlat_rule_free(r);
    }
}

#[test]
fn worst_case_and_rho() {
    let s = space(2, 1.0, &[1.0, 0.5]);
    let r = rule(13, &[1, 5]);
    let (mut e, mut rho) = (0.0, 0.0);
    unsafe {
        assert_eq!(randlat_worst_case_error(r, s, &mut e), RandlatStatus::Ok);
        let mut p = 0.0;
        randlat_merit(
            r,
            2.0,
            [1.0, 0.25].as_ptr(),
            &mut p,
            ptr::null_mut(),
            ptr::null_mut(),
        );
        assert!((e - p.sqrt()).abs() < 1e-14);
        assert_eq!(randlat_rho(r, s, 1_000_000, &mut rho), RandlatStatus::Ok);
        assert!((1.0..=13.0).contains(&rho));
        let bad = space(3, 1.0, &[1.0, 1.0, 1.0]);
        assert_eq!(
            randlat_worst_case_error(r, bad, &mut e),
            RandlatStatus::DimensionMismatch
        );
        randlat_space_free(bad);
        randlat_space_free(s);
        randlat_rule_free(r);
    }
}

#[test]
fn sieve_two_call_pattern() {
    let mut count = 0usize;
    unsafe {
        assert_eq!(
            randlat_sieve(30, ptr::null_mut(), 0, &mut count),
            RandlatStatus::Ok
        );
        assert_eq!(count, 4);
        let mut buf = vec![0u64; count];
        assert_eq!(
            randlat_sieve(30, buf.as_mut_ptr(), buf.len(), &mut count),
            RandlatStatus::Ok
        );
        assert_eq!(buf, [17, 19, 23, 29]);
        assert_eq!(
            randlat_sieve(30, buf.as_mut_ptr(), 3, &mut count),
            RandlatStatus::BufferTooSmall
        );
        assert_eq!(
            randlat_sieve(1, ptr::null_mut(), 0, &mut count),
            RandlatStatus::InvalidArgument
        );
    }
}

#[test]
fn sampler_is_reproducible() {
    let s = space(2, 1.0, &[1.0, 0.5]);
    let mut smp = ptr::null_mut();
    unsafe {
        assert_eq!(
            randlat_sampler_new(64, s, 0.9, 0.1, 0.5, true, 64, &mut smp),
            RandlatStatus::Ok
        );
        let mut draws = Vec::new();
        for _ in 0..2 {
            let mut r = ptr::null_mut();
            let mut u = [0.0; 2];
            let mut tries = 0;
            assert_eq!(
                randlat_sampler_draw(smp, 7, 3, &mut r, u.as_mut_ptr(), &mut tries),
                RandlatStatus::Ok
            );
            let mut z = [0u64; 2];
            randlat_rule_z(r, z.as_mut_ptr(), 2);
            draws.push((randlat_rule_p(r), z, u, tries));
            randlat_rule_free(r);
        }
        assert_eq!(draws[0], draws[1]);
        let (p, _, u, tries) = draws[0];
        assert!((33..=64).contains(&p) && tries >= 1);
        assert!(u.iter().all(|x| (0.0..1.0).contains(x)));

        let c = 1.25f64;
        let (mut v, mut pp, mut t) = (0.0, 0u64, 0u32);
        let st = randlat_sampler_integrate(
            smp,
            Some(constant),
            &c as *const f64 as *mut c_void,
            7,
            3,
            &mut v,
            &mut pp,
            &mut t,
        );
        assert_eq!(st, RandlatStatus::Ok);
        assert_eq!(v, 1.25);
        assert_eq!(pp, p);
        randlat_sampler_free(smp);

        assert_eq!(
            randlat_sampler_new(2, s, 0.9, 0.1, 0.5, false, 64, &mut smp),
            RandlatStatus::InvalidArgument
        );
        assert!(smp.is_null());
        randlat_space_free(s);
    }
}

#[test]
fn sufficient_n_and_cbc() {
    let s = space(2, 1.0, &[1.0, 0.5]);
    unsafe {
        let (mut a, mut b) = (0u64, 0u64);
        assert_eq!(
            randlat_sufficient_n(1e-2, s, 0.9, 0.1, 0.5, false, 6.0, &mut a),
            RandlatStatus::Ok
        );
        assert_eq!(
            randlat_sufficient_n(1e-3, s, 0.9, 0.1, 0.5, false, 6.0, &mut b),
            RandlatStatus::Ok
        );
        assert!(b > a && a > 0);
        assert_eq!(
            randlat_sufficient_n(2.0, s, 0.9, 0.1, 0.5, false, 6.0, &mut a),
            RandlatStatus::InvalidArgument
        );

        let mut r = ptr::null_mut();
        assert_eq!(randlat_cbc(13, s, &mut r), RandlatStatus::Ok);
        let mut z = [0u64; 2];
        randlat_rule_z(r, z.as_mut_ptr(), 2);
        assert_eq!(z[0], 1);
        randlat_rule_free(r);
        assert_eq!(randlat_cbc(12, s, &mut r), RandlatStatus::NotPrime);
        randlat_space_free(s);
    }
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(randlat_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("randlat.h").exists());
    let dir = tempfile_dir();
    let src = dir.join("use_header.c");
    std::fs::write(
        &src,
        "#include \"randlat.h\"\n\
         static double one(const double *x, size_t d, void *u) { (void)x; (void)d; (void)u; return 1.0; }\n\
         int probe(void) {\n\
           RandlatRule *r = 0; uint64_t z[1] = {1}; double v = 0;\n\
           if (randlat_rule_new(5, z, 1, &r) != RANDLAT_STATUS_OK) return 1;\n\
           RandlatStatus s = randlat_rule_apply(r, 0, one, 0, &v);\n\
           randlat_rule_free(r);\n\
           return s == RANDLAT_STATUS_OK && v == 1.0 ? 0 : 2;\n\
         }\n",
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = match Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler ({cc}); header check skipped");
            return;
        }
    };
    assert!(status.success());
}

fn tempfile_dir() -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("ffi-header");
    std::fs::create_dir_all(&d).unwrap();
    d
}
