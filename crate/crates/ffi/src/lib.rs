//! C ABI over the kbump library.
//!
//! Every entry point returns a [`KbStatus`]; results come back through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`kb_last_error`] until the next failing call on that thread. Profiles are
//! opaque handles released with [`kb_profile_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use kbump::energy::interaction_integral;
use kbump::geometry::{admissible_radii, PotentialSpec};
use kbump::pipeline::{run_pipeline, RunConfig, RunError, Stage};
use kbump::radial::{expansion_constants, solve_ground_state, RadialProfile};
use kbump::reduced::{reduced_energy, ReductionSetup};
use kbump::Error;

/// Result codes shared by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Supercritical = 3,
    NumericalFailure = 4,
    Io = 5,
    Panic = 6,
}

/// Radial ground state `U` of `-ΔU + U = U^p`.
pub struct KbProfile {
    inner: RadialProfile,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> KbStatus {
    match e {
        Error::InvalidParameter(_) | Error::OutsideSector { .. } | Error::GridMismatch => KbStatus::InvalidArgument,
        Error::Supercritical { .. } => KbStatus::Supercritical,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Format(_) => KbStatus::Io,
        _ => KbStatus::NumericalFailure,
    }
}

fn fail(status: KbStatus, msg: String) -> KbStatus {
    set_error(msg);
    status
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard<F>(f: F) -> KbStatus
where
    F: FnOnce() -> Result<(), KbStatus>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KbStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(KbStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

fn lift<T>(r: kbump::Result<T>) -> Result<T, KbStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, KbStatus> {
    // SAFETY: non-null checked; the caller owns the storage for the call
    unsafe { p.as_mut() }.ok_or_else(|| fail(KbStatus::NullPointer, format!("{what} is null")))
}

fn handle<'a>(p: *const KbProfile) -> Result<&'a KbProfile, KbStatus> {
    // SAFETY: handles come from kb_ground_state and stay valid until freed
    unsafe { p.as_ref() }.ok_or_else(|| fail(KbStatus::NullPointer, "profile handle is null".into()))
}

fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, KbStatus> {
    if p.is_null() {
        return Err(fail(KbStatus::NullPointer, format!("{what} is null")));
    }
    // SAFETY: non-null, nul-terminated by contract
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| fail(KbStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn potential(a: f64, m: f64) -> Result<PotentialSpec, KbStatus> {
    lift(PotentialSpec::new(a, m))
}

/// Message of the last failure on this thread, or NULL. Owned by the
/// library; valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static string.
#[no_mangle]
pub extern "C" fn kb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Solves for the ground state in dimension `dimension` with exponent `p`.
/// On success `*out_profile` receives a new handle.
#[no_mangle]
pub extern "C" fn kb_ground_state(dimension: usize, p: f64, tol: f64, out_profile: *mut *mut KbProfile) -> KbStatus {
    guard(|| {
        let slot = out(out_profile, "out_profile")?;
        *slot = ptr::null_mut();
        let inner = lift(solve_ground_state(dimension, p, tol))?;
        *slot = Box::into_raw(Box::new(KbProfile { inner }));
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
#[no_mangle]
pub extern "C" fn kb_profile_free(profile: *mut KbProfile) {
    if !profile.is_null() {
        // SAFETY: produced by Box::into_raw in kb_ground_state
        drop(unsafe { Box::from_raw(profile) });
    }
}

/// `U(s)` and `U'(s)`; either out pointer may be NULL.
#[no_mangle]
pub extern "C" fn kb_profile_eval(profile: *const KbProfile, s: f64, value: *mut f64, derivative: *mut f64) -> KbStatus {
    guard(|| {
        let h = handle(profile)?;
        if !(s >= 0.0) {
            return Err(fail(KbStatus::InvalidArgument, format!("s = {s} must be ≥ 0")));
        }
        let (u, du) = h.inner.eval(s);
        // SAFETY: optional out pointers, checked for null
        unsafe {
            if let Some(v) = value.as_mut() {
                *v = u;
            }
            if let Some(d) = derivative.as_mut() {
                *d = du;
            }
        }
        Ok(())
    })
}

/// `U(0)`.
#[no_mangle]
pub extern "C" fn kb_profile_peak(profile: *const KbProfile, peak: *mut f64) -> KbStatus {
    guard(|| {
        let h = handle(profile)?;
        *out(peak, "peak")? = h.inner.peak();
        Ok(())
    })
}

/// `A` and `B1` for `V = 1 + a(1+r²)^{-m/2}`.
#[no_mangle]
pub extern "C" fn kb_expansion_constants(profile: *const KbProfile, a: f64, m: f64, a_out: *mut f64, b1_out: *mut f64) -> KbStatus {
    guard(|| {
        let h = handle(profile)?;
        let pot = potential(a, m)?;
        let c = lift(expansion_constants(&h.inner, &pot))?;
        *out(a_out, "a_out")? = c.a;
        *out(b1_out, "b1_out")? = c.b1;
        Ok(())
    })
}

/// Pair interaction `Ψ(d) = ∫U^p(y)U(y - d e_1)`.
#[no_mangle]
pub extern "C" fn kb_interaction(profile: *const KbProfile, d: f64, psi: *mut f64) -> KbStatus {
    guard(|| {
        let h = handle(profile)?;
        let slot = out(psi, "psi")?;
        *slot = lift(interaction_integral(&h.inner, d))?;
        Ok(())
    })
}

/// Admissible ring radii `[lower, upper]` for `k` bumps.
#[no_mangle]
pub extern "C" fn kb_admissible_radii(k: usize, m: f64, beta: f64, lower: *mut f64, upper: *mut f64) -> KbStatus {
    guard(|| {
        let s = lift(admissible_radii(k, m, beta))?;
        *out(lower, "lower")? = s.lower;
        *out(upper, "upper")? = s.upper;
        Ok(())
    })
}

/// Reduced energy `F(r)` for `k` bumps on a ring of radius `r`, sector grid
/// spacing `h`. The profile must be two-dimensional.
#[no_mangle]
pub extern "C" fn kb_reduced_energy(
    profile: *const KbProfile,
    a: f64,
    m: f64,
    k: usize,
    r: f64,
    h: f64,
    f_out: *mut f64,
) -> KbStatus {
    guard(|| {
        let p = handle(profile)?;
        let slot = out(f_out, "f_out")?;
        if p.inner.dimension() != 2 {
            return Err(fail(KbStatus::InvalidArgument, "reduced energy needs a planar (N = 2) profile".into()));
        }
        let mut setup = ReductionSetup::new(&p.inner, potential(a, m)?);
        setup.h = h;
        *slot = lift(reduced_energy(k, r, &setup))?.f;
        Ok(())
    })
}

/// Runs every stage of the pipeline for the JSON config at `config_path`
/// into `out_dir`.
#[no_mangle]
pub extern "C" fn kb_run_pipeline(config_path: *const c_char, out_dir: *const c_char) -> KbStatus {
    guard(|| {
        let cfg = text(config_path, "config_path")?;
        let dir = text(out_dir, "out_dir")?;
        let run = RunConfig::load(Path::new(cfg)).and_then(|c| run_pipeline(c, Path::new(dir), &Stage::ALL));
        run.map_err(|e| {
            let status = match e.exit_code() {
                2 => KbStatus::InvalidArgument,
                3 => KbStatus::NumericalFailure,
                _ => KbStatus::Io,
            };
            if let RunError::Stage { source, .. } = &e {
                if matches!(source, Error::Supercritical { .. }) {
                    return fail(KbStatus::Supercritical, e.to_string());
                }
            }
            fail(status, e.to_string())
        })
    })
}
