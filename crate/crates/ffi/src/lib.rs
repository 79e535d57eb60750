//! C ABI over the `mixed-hk` library.
//!
//! Every fallible call returns an [`MhkStatus`]. On failure the message is kept
//! per thread and can be fetched with [`mhk_last_error`]. Strings handed out by
//! the library are released with [`mhk_string_free`]; handles have their own
//! `_free` functions. Opinion arrays are row-major `n * d` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use mixed_hk::dynamics::{simulate, step, ModelConfig, OpinionState, Trajectory};
use mixed_hk::io::{parse_config, parse_config_str, read_any, write_trajectory, write_trajectory_json};
use mixed_hk::monitors::{beta, check_trajectory, energy};
use mixed_hk::profile::build_profile;
use mixed_hk::spectral::spectral_report;
use mixed_hk::HkError;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum MhkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Parse = 4,
    ScheduleExhausted = 5,
    Domain = 6,
    Precondition = 7,
    SizeLimit = 8,
    Numerical = 9,
    Integrity = 10,
    Io = 11,
    Json = 12,
    Panic = 13,
}

/// Opaque model configuration.
pub struct MhkConfig {
    inner: ModelConfig,
}

/// Opaque simulated or loaded trajectory.
pub struct MhkTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &HkError) -> MhkStatus {
    match e {
        HkError::Config(_) => MhkStatus::Config,
        HkError::Parse { .. } => MhkStatus::Parse,
        HkError::ScheduleExhausted { .. } => MhkStatus::ScheduleExhausted,
        HkError::Domain(_) => MhkStatus::Domain,
        HkError::Precondition(_) => MhkStatus::Precondition,
        HkError::SizeLimit { .. } => MhkStatus::SizeLimit,
        HkError::Numerical { .. } => MhkStatus::Numerical,
        HkError::Integrity { .. } => MhkStatus::Integrity,
        HkError::Io { .. } => MhkStatus::Io,
        HkError::Json(_) => MhkStatus::Json,
    }
}

struct Fail(MhkStatus, String);

impl From<HkError> for Fail {
    fn from(e: HkError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail(MhkStatus::Json, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MhkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MhkStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("panic inside mixed-hk".into());
            MhkStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(MhkStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(MhkStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn state_arg(n: usize, d: usize, epsilon: f64, x: *const f64) -> Result<OpinionState, Fail> {
    let len = n.checked_mul(d).ok_or_else(|| Fail(MhkStatus::Config, "n * d overflows".into()))?;
    let coords = slice_arg(x, len, "x")?;
    Ok(OpinionState::new(0, d, epsilon, coords.to_vec())?)
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(MhkStatus::Json, "interior NUL in output".into()))?;
    put(out, c.into_raw(), "out")
}

/// Message of the last failed call on this thread, or NULL. Free with [`mhk_string_free`].
#[no_mangle]
pub extern "C" fn mhk_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mhk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a TOML model config. Relative initial-state paths resolve against the working directory.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhk_config_from_toml(toml: *const c_char, out: *mut *mut MhkConfig) -> MhkStatus {
    guard(|| {
        let text = str_arg(toml, "toml")?;
        let inner = parse_config_str(text, None)?;
        put(out, Box::into_raw(Box::new(MhkConfig { inner })), "out")
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhk_config_from_file(path: *const c_char, out: *mut *mut MhkConfig) -> MhkStatus {
    guard(|| {
        let path = PathBuf::from(str_arg(path, "path")?);
        let inner = parse_config(path)?;
        put(out, Box::into_raw(Box::new(MhkConfig { inner })), "out")
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mhk_config_set_seed(config: *mut MhkConfig, seed: u64) -> MhkStatus {
    guard(|| {
        let c = config.as_mut().ok_or_else(|| null("config"))?;
        c.inner.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `config` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mhk_config_free(config: *mut MhkConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhk_simulate(config: *const MhkConfig, out: *mut *mut MhkTrajectory) -> MhkStatus {
    guard(|| {
        let c = config.as_ref().ok_or_else(|| null("config"))?;
        let inner = simulate(&c.inner)?;
        put(out, Box::into_raw(Box::new(MhkTrajectory { inner })), "out")
    })
}

/// Read a CSV (with sidecar) or JSON trajectory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhk_trajectory_read(path: *const c_char, out: *mut *mut MhkTrajectory) -> MhkStatus {
    guard(|| {
        let path = PathBuf::from(str_arg(path, "path")?);
        let inner = read_any(path)?;
        put(out, Box::into_raw(Box::new(MhkTrajectory { inner })), "out")
    })
}

/// Write as JSON when `json` is nonzero, otherwise CSV plus a `.json` sidecar.
///
/// # Safety
/// `traj` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mhk_trajectory_write(
    traj: *const MhkTrajectory,
    path: *const c_char,
    json: c_int,
) -> MhkStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null("trajectory"))?;
        let path = PathBuf::from(str_arg(path, "path")?);
        if json != 0 {
            write_trajectory_json(&t.inner, path)?;
        } else {
            write_trajectory(&t.inner, path)?;
        }
        Ok(())
    })
}

/// Number of recorded states and the dimensions of each.
///
/// # Safety
/// `traj` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhk_trajectory_shape(
    traj: *const MhkTrajectory,
    states: *mut usize,
    n: *mut usize,
    d: *mut usize,
) -> MhkStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null("trajectory"))?;
        put(states, t.inner.states.len(), "states")?;
        put(n, t.inner.header.n, "n")?;
        put(d, t.inner.header.d, "d")
    })
}

/// Copy state `k` into `out`, which must hold `n * d` doubles.
///
/// # Safety
/// `traj` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mhk_trajectory_state(
    traj: *const MhkTrajectory,
    k: usize,
    out: *mut f64,
    len: usize,
) -> MhkStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null("trajectory"))?;
        let s = t.inner.states.get(k).ok_or_else(|| {
            Fail(MhkStatus::Domain, format!("state {k} out of range ({} recorded)", t.inner.states.len()))
        })?;
        let coords = s.coords();
        if len != coords.len() {
            return Err(Fail(MhkStatus::Domain, format!("buffer holds {len} doubles, state has {}", coords.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(coords.as_ptr(), out, len);
        Ok(())
    })
}

/// Post-hoc check report as JSON. A NaN `delta` means epsilon / 4.
///
/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhk_check_json(traj: *const MhkTrajectory, delta: f64, out: *mut *mut c_char) -> MhkStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null("trajectory"))?;
        let delta = if delta.is_nan() { t.inner.header.epsilon / 4.0 } else { delta };
        let report = check_trajectory(&t.inner, delta);
        put_string(out, serde_json::to_string(&report)?)
    })
}

/// # Safety
/// `traj` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mhk_trajectory_free(traj: *mut MhkTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// One mixed update of `n` agents in `d` dimensions.
///
/// # Safety
/// `x` and `out` must hold `n * d` doubles, `alpha` must hold `n`.
#[no_mangle]
pub unsafe extern "C" fn mhk_step(
    n: usize,
    d: usize,
    epsilon: f64,
    x: *const f64,
    alpha: *const f64,
    out: *mut f64,
) -> MhkStatus {
    guard(|| {
        let state = state_arg(n, d, epsilon, x)?;
        let alpha = slice_arg(alpha, n, "alpha")?;
        let next = step(&state, alpha)?;
        if out.is_null() && n * d > 0 {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(next.coords().as_ptr(), out, n * d);
        Ok(())
    })
}

/// Sum of truncated squared distances over ordered pairs.
///
/// # Safety
/// `x` must hold `n * d` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhk_energy(n: usize, d: usize, epsilon: f64, x: *const f64, out: *mut f64) -> MhkStatus {
    guard(|| {
        let state = state_arg(n, d, epsilon, x)?;
        put(out, energy(&state), "out")
    })
}

/// Contraction factor of a stubbornness vector; needs `n >= 2`.
///
/// # Safety
/// `alpha` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhk_beta(n: usize, alpha: *const f64, out: *mut f64) -> MhkStatus {
    guard(|| {
        let alpha = slice_arg(alpha, n, "alpha")?;
        put(out, beta(alpha)?, "out")
    })
}

/// Spectral report of the epsilon-graph of `x` as JSON.
///
/// # Safety
/// `x` must hold `n * d` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhk_spectral_json(
    n: usize,
    d: usize,
    epsilon: f64,
    x: *const f64,
    out: *mut *mut c_char,
) -> MhkStatus {
    guard(|| {
        let state = state_arg(n, d, epsilon, x)?;
        let profile = build_profile(&state);
        let report = spectral_report(&profile.graph)?;
        put_string(out, serde_json::to_string(&report)?)
    })
}
