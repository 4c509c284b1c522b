//! C ABI for `kr-steer`.
//!
//! Every function returns a [`KrsStatus`]; on failure the message is
//! available from [`krs_last_error`] on the same thread. Chains and plans are
//! opaque handles released with their `_free` function. JSON strings
//! returned through `char **` are released with [`krs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use kr_steer::conversion::{build_chain, domain_window, two_trailer_map, ConversionChain};
use kr_steer::kr_forms::{build_kr, KrWord};
use kr_steer::nilpotency::nilpotency_report;
use kr_steer::planner::{plan, reachable, RootChoice, SteeringPlan};
use kr_steer::sim::verify_plan;
use kr_steer::trailer::Configuration;
use kr_steer::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KrsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DimensionMismatch = 3,
    Pole = 4,
    OutsideDomain = 5,
    Degenerate = 6,
    Unreachable = 7,
    BudgetExceeded = 8,
    Numeric = 9,
    NotNilpotent = 10,
    BufferTooSmall = 11,
    Panic = 12,
    Other = 13,
}

/// Opaque conversion chain of the n-trailer system.
pub struct KrsChain(ConversionChain);

/// Opaque two-trailer steering plan.
pub struct KrsPlan(SteeringPlan);

/// `root_choice` for [`krs_plan_two_trailer`]: the `a2` root of least
/// magnitude.
pub const KRS_ROOT_MIN_ABS: u32 = 0;
/// The `a2` root of largest magnitude.
pub const KRS_ROOT_MAX_ABS: u32 = 1;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> KrsStatus {
    match e {
        Error::DimensionMismatch { .. } => KrsStatus::DimensionMismatch,
        Error::Pole { .. } => KrsStatus::Pole,
        Error::AmbiguousRank { .. } | Error::NonFinite { .. } => KrsStatus::Numeric,
        Error::BudgetExceeded { .. } => KrsStatus::BudgetExceeded,
        Error::NotNilpotent { .. } => KrsStatus::NotNilpotent,
        Error::DegenerateStage { .. } | Error::AbnormalDirection => KrsStatus::Degenerate,
        Error::OutsideDomain(_) | Error::WindowMismatch { .. } => KrsStatus::OutsideDomain,
        Error::Unreachable(_) => KrsStatus::Unreachable,
        Error::InvalidWord { .. }
        | Error::InvalidInput(_)
        | Error::NonzeroSingularCoordinate { .. } => KrsStatus::InvalidInput,
        _ => KrsStatus::Other,
    }
}

struct Fail(KrsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(KrsStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> KrsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KrsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            KrsStatus::Panic
        }
    }
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    *p = v;
    Ok(())
}

unsafe fn put_string(dst: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if dst.is_null() {
        return Err(null("json"));
    }
    let c = CString::new(s).map_err(|_| Fail(KrsStatus::Other, "string contains NUL".into()))?;
    *dst = c.into_raw();
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn krs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn krs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds the KR conversion chain for `n` trailers at the configuration
/// `(xi1, xi2, thetas[0..=n])`.
///
/// # Safety
/// `thetas` must point to `thetas_len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn krs_chain_build(
    n: usize,
    xi1: f64,
    xi2: f64,
    thetas: *const f64,
    thetas_len: usize,
    out: *mut *mut KrsChain,
) -> KrsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let th = input(thetas, thetas_len, "thetas")?;
        let cfg = Configuration::new(xi1, xi2, th.to_vec())?;
        let chain = build_chain(n, &cfg)?;
        *out = Box::into_raw(Box::new(KrsChain(chain)));
        Ok(())
    })
}

/// State dimension `n + 3` of the chain, or 0 for NULL.
///
/// # Safety
/// `chain` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn krs_chain_dim(chain: *const KrsChain) -> usize {
    chain.as_ref().map_or(0, |c| c.0.dim())
}

/// Evaluates the KR coordinates `x1..x_{n+3}` at a trailer state.
///
/// # Safety
/// `state` and `out` must point to `len` doubles each.
#[no_mangle]
pub unsafe extern "C" fn krs_chain_forward_map(
    chain: *const KrsChain,
    state: *const f64,
    out: *mut f64,
    len: usize,
) -> KrsStatus {
    guard(|| {
        let chain = chain.as_ref().ok_or_else(|| null("chain"))?;
        let s = input(state, len, "state")?;
        let x = chain.0.forward_map(s)?;
        let dst = output(out, len, "out")?;
        dst.copy_from_slice(&x);
        Ok(())
    })
}

/// Finite-difference residual of the pushed-forward trailer fields against
/// the KR fields, after feedback, at `state`.
///
/// # Safety
/// `state` must point to `len` doubles and `residual` must be writable.
#[no_mangle]
pub unsafe extern "C" fn krs_chain_pushforward_residual(
    chain: *const KrsChain,
    state: *const f64,
    len: usize,
    residual: *mut f64,
) -> KrsStatus {
    guard(|| {
        let chain = chain.as_ref().ok_or_else(|| null("chain"))?;
        let r = chain.0.pushforward_residual(input(state, len, "state")?)?;
        write_out(residual, r, "residual")
    })
}

/// Chain report as JSON; release with [`krs_string_free`].
///
/// # Safety
/// `chain` must be a live handle and `json` writable.
#[no_mangle]
pub unsafe extern "C" fn krs_chain_report_json(
    chain: *const KrsChain,
    json: *mut *mut c_char,
) -> KrsStatus {
    guard(|| {
        let chain = chain.as_ref().ok_or_else(|| null("chain"))?;
        let text = serde_json::to_string(&chain.0.report()?).map_err(Error::from)?;
        put_string(json, text)
    })
}

/// # Safety
/// `chain` must be NULL or a handle from [`krs_chain_build`], freed once.
#[no_mangle]
pub unsafe extern "C" fn krs_chain_free(chain: *mut KrsChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Closed-form two-trailer coordinates of `state[5]` into `out[5]`.
///
/// # Safety
/// `state` and `out` must point to 5 doubles.
#[no_mangle]
pub unsafe extern "C" fn krs_two_trailer_map(state: *const f64, out: *mut f64) -> KrsStatus {
    guard(|| {
        let x = two_trailer_map(input(state, 5, "state")?)?;
        output(out, 5, "out")?.copy_from_slice(&x);
        Ok(())
    })
}

/// Window `(gamma, delta)` of the two-trailer domain for relative angles
/// `t0 = theta0`, `t1 = theta1 - theta0`.
///
/// # Safety
/// `gamma` and `delta` must be writable.
#[no_mangle]
pub unsafe extern "C" fn krs_domain_window(
    t0: f64,
    t1: f64,
    gamma: *mut f64,
    delta: *mut f64,
) -> KrsStatus {
    guard(|| {
        let w = domain_window(t0, t1)?;
        write_out(gamma, w.gamma, "gamma")?;
        write_out(delta, w.delta, "delta")
    })
}

/// Whether the KR target `q[5]` is reachable from the origin with the
/// two-trailer polynomial controls.
///
/// # Safety
/// `q` must point to 5 doubles and `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn krs_reachable(q: *const f64, result: *mut bool) -> KrsStatus {
    guard(|| {
        let r = reachable(input(q, 5, "q")?)?;
        write_out(result, r, "result")
    })
}

/// Plans a two-trailer maneuver between states `zeta0[5]` and `zeta_t[5]`.
/// `root_choice` is [`KRS_ROOT_MIN_ABS`] or [`KRS_ROOT_MAX_ABS`].
///
/// # Safety
/// `zeta0` and `zeta_t` must point to 5 doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn krs_plan_two_trailer(
    zeta0: *const f64,
    zeta_t: *const f64,
    root_choice: u32,
    out: *mut *mut KrsPlan,
) -> KrsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let z0 = Configuration::from_state(input(zeta0, 5, "zeta0")?)?;
        let zt = Configuration::from_state(input(zeta_t, 5, "zeta_t")?)?;
        let choice = match root_choice {
            KRS_ROOT_MIN_ABS => RootChoice::MinAbs,
            KRS_ROOT_MAX_ABS => RootChoice::MaxAbs,
            other => {
                return Err(Fail(
                    KrsStatus::InvalidInput,
                    format!("unknown root choice {other}"),
                ))
            }
        };
        *out = Box::into_raw(Box::new(KrsPlan(plan(&z0, &zt, choice)?)));
        Ok(())
    })
}

/// Control law of a plan: `u1(t) = sum u1[k] t^k`, constant `u2`, on
/// `[0, horizon]`. `u1_len` always receives the number of coefficients;
/// when `u1_cap` is smaller the call fails with `BUFFER_TOO_SMALL`.
///
/// # Safety
/// `u1` must point to `u1_cap` doubles; the other outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn krs_plan_controls(
    plan: *const KrsPlan,
    u1: *mut f64,
    u1_cap: usize,
    u1_len: *mut usize,
    u2: *mut f64,
    horizon: *mut f64,
) -> KrsStatus {
    guard(|| {
        let p = &plan.as_ref().ok_or_else(|| null("plan"))?.0;
        let c = &p.controls;
        write_out(u1_len, c.u1.len(), "u1_len")?;
        if u1_cap < c.u1.len() {
            return Err(Fail(
                KrsStatus::BufferTooSmall,
                format!("u1 needs {} entries, got {u1_cap}", c.u1.len()),
            ));
        }
        output(u1, c.u1.len(), "u1")?.copy_from_slice(&c.u1);
        write_out(u2, c.u2, "u2")?;
        write_out(horizon, c.horizon, "horizon")
    })
}

/// Simulates the plan in closed loop with `steps` RK4 steps. `passed` is
/// true when the trajectory stayed in the domain window and met the
/// terminal tolerance.
///
/// # Safety
/// `plan` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn krs_plan_verify(
    plan: *const KrsPlan,
    steps: usize,
    terminal_error: *mut f64,
    passed: *mut bool,
) -> KrsStatus {
    guard(|| {
        let p = &plan.as_ref().ok_or_else(|| null("plan"))?.0;
        let (report, _) = verify_plan(p, steps)?;
        write_out(terminal_error, report.trailer_error, "terminal_error")?;
        write_out(passed, report.passed, "passed")
    })
}

/// The plan as JSON; release with [`krs_string_free`].
///
/// # Safety
/// `plan` must be a live handle and `json` writable.
#[no_mangle]
pub unsafe extern "C" fn krs_plan_json(plan: *const KrsPlan, json: *mut *mut c_char) -> KrsStatus {
    guard(|| {
        let p = &plan.as_ref().ok_or_else(|| null("plan"))?.0;
        let text = serde_json::to_string(p).map_err(Error::from)?;
        put_string(json, text)
    })
}

/// # Safety
/// `plan` must be NULL or a handle from [`krs_plan_two_trailer`], freed once.
#[no_mangle]
pub unsafe extern "C" fn krs_plan_free(plan: *mut KrsPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Nilpotency report of the KR form named by `word` (e.g. `"R(0).S"`) as
/// JSON; release with [`krs_string_free`].
///
/// # Safety
/// `word` must be a NUL-terminated string and `json` writable.
#[no_mangle]
pub unsafe extern "C" fn krs_nilpotency_report(
    word: *const c_char,
    max_dim: usize,
    json: *mut *mut c_char,
) -> KrsStatus {
    guard(|| {
        if word.is_null() {
            return Err(null("word"));
        }
        let w: KrWord = CStr::from_ptr(word)
            .to_str()
            .map_err(|_| Fail(KrsStatus::InvalidInput, "word is not UTF-8".into()))?
            .parse()?;
        let report = nilpotency_report(&build_kr(&w), max_dim)?;
        let text = serde_json::to_string(&report).map_err(Error::from)?;
        put_string(json, text)
    })
}
