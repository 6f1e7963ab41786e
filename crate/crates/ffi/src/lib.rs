//! C interface to polymerlab.
//!
//! Objects are opaque handles created by `pl_*_new` and released by the
//! matching `pl_*_free`. Every fallible call returns a [`PlStatus`]; on
//! failure the message is kept per thread and read back with
//! [`pl_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use polymerlab::diagnostics::{free_energy, Ensemble};
use polymerlab::environment::{EnvField, EnvFamily, EnvModel, Environment, DEFAULT_BETA_MAX};
use polymerlab::harness::{self, Kind, Overrides};
use polymerlab::polymer::{PathConstraint, Propagator, DEFAULT_LEAK_BUDGET};
use polymerlab::walk::{Recurrence, SlowlyVarying, WalkModel};
use polymerlab::Error;

/// Result codes; 0 is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BetaOutOfRange = 3,
    BudgetExhausted = 4,
    HorizonExceeded = 5,
    NotApplicable = 6,
    TieDetected = 7,
    CriteriaConflict = 8,
    Config = 9,
    Io = 10,
    Panic = 11,
}

/// Slowly varying factor of the jump law.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlEll {
    Constant = 0,
    /// (log(e + x))^gamma.
    LogPower = 1,
}

/// Environment law.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlEnvFamily {
    Gaussian = 0,
    Rademacher = 1,
}

/// Heavy-tailed jump law with its truncated kernel.
pub struct PlWalk {
    inner: WalkModel,
}

/// Environment law.
pub struct PlEnv {
    inner: Arc<EnvModel>,
}

/// One seed-keyed environment realization.
pub struct PlField {
    inner: EnvField,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PlStatus {
    match e {
        Error::InvalidParameter { .. } => PlStatus::InvalidArgument,
        Error::BetaOutOfRange { .. } => PlStatus::BetaOutOfRange,
        Error::BudgetExhausted { .. } => PlStatus::BudgetExhausted,
        Error::HorizonExceeded { .. } => PlStatus::HorizonExceeded,
        Error::NotApplicable(_) => PlStatus::NotApplicable,
        Error::TieDetected { .. } => PlStatus::TieDetected,
        Error::CriteriaConflict { .. } => PlStatus::CriteriaConflict,
        Error::Config(_) => PlStatus::Config,
        Error::Io(_) | Error::Json(_) => PlStatus::Io,
    }
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (PlStatus, String)>) -> PlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            PlStatus::Panic
        }
    }
}

fn lib(e: Error) -> (PlStatus, String) {
    let s = status_of(&e);
    let msg = match e {
        Error::Config(list) => list.join("; "),
        e => e.to_string(),
    };
    (s, msg)
}

fn null(what: &str) -> (PlStatus, String) {
    (PlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (PlStatus, String)> {
    // SAFETY: the caller passes a live handle or null
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (PlStatus, String)> {
    // SAFETY: the caller passes writable storage or null
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (PlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null, and the caller promises a nul-terminated string
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| (PlStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn pl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// always nul-terminated when `len > 0`). Returns the full message length
/// including the terminator, or 0 when there is no message.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = (bytes.len() - 1).min(len - 1);
            // SAFETY: n + 1 ≤ len bytes are writable at buf
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Builds a normalized jump law. `gamma` is ignored for the constant family.
/// `tail_cut` > 0 fixes the support; 0 chooses it from `tail_tolerance`.
///
/// # Safety
/// `out` must point to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn pl_walk_new(
    alpha: f64,
    ell: PlEll,
    gamma: f64,
    p0: f64,
    tail_tolerance: f64,
    tail_cut: u64,
    out_walk: *mut *mut PlWalk,
) -> PlStatus {
    guard(|| {
        let slot = unsafe { out(out_walk, "out_walk")? };
        let ell = match ell {
            PlEll::Constant => SlowlyVarying::constant(),
            PlEll::LogPower => SlowlyVarying::log_power(gamma),
        };
        let w = if tail_cut > 0 {
            WalkModel::with_tail_cut(alpha, ell, p0, tail_cut)
        } else {
            WalkModel::build(alpha, ell, p0, tail_tolerance)
        }
        .map_err(lib)?;
        *slot = Box::into_raw(Box::new(PlWalk { inner: w }));
        Ok(())
    })
}

/// # Safety
/// `walk` must be null or a handle from [`pl_walk_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pl_walk_free(walk: *mut PlWalk) {
    if !walk.is_null() {
        // SAFETY: allocated by Box::into_raw in pl_walk_new
        drop(unsafe { Box::from_raw(walk) });
    }
}

/// Untruncated q(k) for |k| ≤ K and 0 beyond; these sum to 1 − ε_tail
/// (see [`pl_walk_info`]). NaN for a null handle.
///
/// # Safety
/// `walk` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_walk_pmf(walk: *const PlWalk, k: i64) -> f64 {
    match unsafe { walk.as_ref() } {
        Some(w) => w.inner.pmf(k),
        None => f64::NAN,
    }
}

/// Support bound K, the analytic tail mass beyond it and the normalizing
/// constant c. Any output pointer may be null.
///
/// # Safety
/// `walk` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_walk_info(
    walk: *const PlWalk,
    out_tail_cut: *mut u64,
    out_eps_tail: *mut f64,
    out_c: *mut f64,
) -> PlStatus {
    guard(|| {
        let w = &unsafe { as_ref(walk, "walk")? }.inner;
        if let Some(p) = unsafe { out_tail_cut.as_mut() } {
            *p = w.tail_cut();
        }
        if let Some(p) = unsafe { out_eps_tail.as_mut() } {
            *p = w.eps_tail();
        }
        if let Some(p) = unsafe { out_c.as_mut() } {
            *p = w.c();
        }
        Ok(())
    })
}

/// Minimal a with n·P(|X| > a) ≤ 1.
///
/// # Safety
/// `walk` must be a live handle and `out_a` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_walk_scaling(walk: *const PlWalk, n: u64, out_a: *mut u64) -> PlStatus {
    guard(|| {
        let w = &unsafe { as_ref(walk, "walk")? }.inner;
        let slot = unsafe { out(out_a, "out_a")? };
        if n == 0 {
            return Err((PlStatus::InvalidArgument, "n must be at least 1".into()));
        }
        *slot = w.scaling_at(n);
        Ok(())
    })
}

/// Entropy of the truncated law and the analytic bound on the neglected tail.
///
/// # Safety
/// `walk` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn pl_walk_entropy(
    walk: *const PlWalk,
    out_truncated: *mut f64,
    out_tail: *mut f64,
) -> PlStatus {
    guard(|| {
        let w = &unsafe { as_ref(walk, "walk")? }.inner;
        let h = w.entropy();
        *unsafe { out(out_truncated, "out_truncated")? } = h.truncated;
        *unsafe { out(out_tail, "out_tail")? } = h.tail;
        Ok(())
    })
}

/// Writes 1 for a recurrent walk and 0 for a transient one.
///
/// # Safety
/// `walk` must be a live handle and `out_recurrent` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_walk_is_recurrent(
    walk: *const PlWalk,
    out_recurrent: *mut i32,
) -> PlStatus {
    guard(|| {
        let w = &unsafe { as_ref(walk, "walk")? }.inner;
        *unsafe { out(out_recurrent, "out_recurrent")? } =
            (w.classify_recurrence() == Recurrence::Recurrent) as i32;
        Ok(())
    })
}

/// `beta_max` ≤ 0 selects the default finiteness interval.
///
/// # Safety
/// `out_env` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_env_new(
    family: PlEnvFamily,
    beta_max: f64,
    out_env: *mut *mut PlEnv,
) -> PlStatus {
    guard(|| {
        let slot = unsafe { out(out_env, "out_env")? };
        let fam = match family {
            PlEnvFamily::Gaussian => EnvFamily::Gaussian,
            PlEnvFamily::Rademacher => EnvFamily::Rademacher,
        };
        let bm = if beta_max > 0.0 { beta_max } else { DEFAULT_BETA_MAX };
        let e = EnvModel::new(fam, bm).map_err(lib)?;
        *slot = Box::into_raw(Box::new(PlEnv { inner: Arc::new(e) }));
        Ok(())
    })
}

/// Finite law given by `len` values and probabilities; standardized to mean
/// 0 and variance 1.
///
/// # Safety
/// `values` and `probs` must each point to `len` readable doubles;
/// `out_env` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_env_new_tabulated(
    values: *const f64,
    probs: *const f64,
    len: usize,
    beta_max: f64,
    out_env: *mut *mut PlEnv,
) -> PlStatus {
    guard(|| {
        let slot = unsafe { out(out_env, "out_env")? };
        if values.is_null() || probs.is_null() {
            return Err(null("values/probs"));
        }
        // SAFETY: caller promises len readable elements
        let v = unsafe { std::slice::from_raw_parts(values, len) }.to_vec();
        let p = unsafe { std::slice::from_raw_parts(probs, len) }.to_vec();
        let bm = if beta_max > 0.0 { beta_max } else { DEFAULT_BETA_MAX };
        let e = EnvModel::new(EnvFamily::Tabulated { values: v, probs: p }, bm).map_err(lib)?;
        *slot = Box::into_raw(Box::new(PlEnv { inner: Arc::new(e) }));
        Ok(())
    })
}

/// # Safety
/// `env` must be null or a handle not yet freed. Fields created from it
/// stay valid after it is freed.
#[no_mangle]
pub unsafe extern "C" fn pl_env_free(env: *mut PlEnv) {
    if !env.is_null() {
        // SAFETY: allocated by Box::into_raw
        drop(unsafe { Box::from_raw(env) });
    }
}

/// λ(β) = log E[exp(βω)].
///
/// # Safety
/// `env` must be a live handle and `out_lambda` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_env_lambda(env: *const PlEnv, beta: f64, out_lambda: *mut f64) -> PlStatus {
    guard(|| {
        let e = &unsafe { as_ref(env, "env")? }.inner;
        *unsafe { out(out_lambda, "out_lambda")? } = e.lambda(beta).map_err(lib)?;
        Ok(())
    })
}

/// # Safety
/// `env` must be a live handle and `out_field` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_field_new(
    env: *const PlEnv,
    seed: u64,
    replica: u64,
    out_field: *mut *mut PlField,
) -> PlStatus {
    guard(|| {
        let e = &unsafe { as_ref(env, "env")? }.inner;
        let slot = unsafe { out(out_field, "out_field")? };
        *slot = Box::into_raw(Box::new(PlField {
            inner: EnvField::new(e.clone(), seed, replica),
        }));
        Ok(())
    })
}

/// # Safety
/// `field` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pl_field_free(field: *mut PlField) {
    if !field.is_null() {
        // SAFETY: allocated by Box::into_raw
        drop(unsafe { Box::from_raw(field) });
    }
}

/// ω(n, x); NaN for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_field_omega(field: *const PlField, n: u64, x: i64) -> f64 {
    match unsafe { field.as_ref() } {
        Some(f) => f.inner.omega(n, x),
        None => f64::NAN,
    }
}

/// Runs the polymer for `n` steps and writes log Ẑ_k and the overlap I_k for
/// k = 1..=n. Either output array may be null.
///
/// # Safety
/// Handles must be live; non-null outputs must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn pl_polymer_trace(
    walk: *const PlWalk,
    field: *const PlField,
    beta: f64,
    n: u64,
    out_log_zhat: *mut f64,
    out_overlap: *mut f64,
) -> PlStatus {
    guard(|| {
        let w = &unsafe { as_ref(walk, "walk")? }.inner;
        let f = &unsafe { as_ref(field, "field")? }.inner;
        let lambda = f.model().lambda(beta).map_err(lib)?;
        let mut prop = Propagator::new(w, beta, lambda, DEFAULT_LEAK_BUDGET);
        let run = prop.run(f, n, &PathConstraint::None).map_err(lib)?;
        for (i, s) in run.trace.iter().enumerate() {
            if !out_log_zhat.is_null() {
                // SAFETY: caller provides n slots
                unsafe { *out_log_zhat.add(i) = s.log_zhat };
            }
            if !out_overlap.is_null() {
                unsafe { *out_overlap.add(i) = s.overlap };
            }
        }
        Ok(())
    })
}

/// Endpoint law after `n` steps on the window starting at `*out_x_lo`.
/// Writes the window length to `*out_len`; when it exceeds `cap` nothing
/// else is written and the call fails with `PL_STATUS_INVALID_ARGUMENT`, so
/// callers can size a buffer with a first call using `cap = 0`.
///
/// # Safety
/// Handles must be live; `buf` must hold `cap` doubles (or be null with
/// `cap = 0`); `out_x_lo` and `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_endpoint_law(
    walk: *const PlWalk,
    field: *const PlField,
    beta: f64,
    n: u64,
    buf: *mut f64,
    cap: usize,
    out_x_lo: *mut i64,
    out_len: *mut usize,
) -> PlStatus {
    guard(|| {
        let w = &unsafe { as_ref(walk, "walk")? }.inner;
        let f = &unsafe { as_ref(field, "field")? }.inner;
        let x_lo = unsafe { out(out_x_lo, "out_x_lo")? };
        let len = unsafe { out(out_len, "out_len")? };
        let lambda = f.model().lambda(beta).map_err(lib)?;
        let mut prop = Propagator::new(w, beta, lambda, DEFAULT_LEAK_BUDGET);
        let run = prop.run(f, n, &PathConstraint::None).map_err(lib)?;
        let rho = &run.state.rho;
        *len = rho.len();
        *x_lo = run.state.x_lo;
        if rho.len() > cap {
            return Err((
                PlStatus::InvalidArgument,
                format!("buffer holds {cap} values, {} needed", rho.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        // SAFETY: rho.len() ≤ cap slots are writable
        unsafe { std::ptr::copy_nonoverlapping(rho.as_ptr(), buf, rho.len()) };
        Ok(())
    })
}

/// Replica mean of (1/N) log Ẑ_N over `replicas` fields keyed by `seed`,
/// with its standard error.
///
/// # Safety
/// Handles must be live; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn pl_free_energy(
    walk: *const PlWalk,
    env: *const PlEnv,
    seed: u64,
    replicas: u64,
    beta: f64,
    n: u64,
    out_mean: *mut f64,
    out_se: *mut f64,
) -> PlStatus {
    guard(|| {
        let w = &unsafe { as_ref(walk, "walk")? }.inner;
        let e = &unsafe { as_ref(env, "env")? }.inner;
        let mean = unsafe { out(out_mean, "out_mean")? };
        let se = unsafe { out(out_se, "out_se")? };
        let ens = Ensemble::new(e.clone(), seed, replicas);
        let fe = free_energy(&ens, w, beta, n).map_err(lib)?;
        *mean = fe.p_hat.mean;
        *se = fe.p_hat.se;
        Ok(())
    })
}

/// Runs a batch experiment as the command-line tool would. `kind` is the
/// experiment name (e.g. "free-energy"), `config_toml` the config text;
/// `out_dir` may be null to use the directory named in the config.
/// Fails with `PL_STATUS_CONFIG` on validation errors and with
/// `PL_STATUS_NOT_APPLICABLE` when some cells failed (outputs are written).
///
/// # Safety
/// String arguments must be null or nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn pl_run_experiment(
    kind: *const c_char,
    config_toml: *const c_char,
    out_dir: *const c_char,
) -> PlStatus {
    guard(|| {
        let kind: Kind = unsafe { str_arg(kind, "kind")? }
            .parse()
            .map_err(|m| (PlStatus::Config, m))?;
        let text = unsafe { str_arg(config_toml, "config_toml")? };
        let ov = Overrides {
            out: if out_dir.is_null() {
                None
            } else {
                Some(unsafe { str_arg(out_dir, "out_dir")? }.into())
            },
            ..Default::default()
        };
        let cfg = harness::load(text, kind, &ov).map_err(lib)?;
        let (manifest, _) = harness::run(&cfg).map_err(lib)?;
        if manifest.partial {
            let cells: Vec<_> = manifest
                .failures
                .iter()
                .map(|f| format!("{}: {}", f.cell, f.error))
                .collect();
            return Err((PlStatus::NotApplicable, cells.join("; ")));
        }
        Ok(())
    })
}
