//! C interface to `vcnls`.
//!
//! Every function returns a [`VcnlsStatus`]; on failure the message is
//! available from [`vcnls_last_error_message`] on the same thread. Handles
//! are opaque and released with their `_free` function. Panics are caught
//! at the boundary and reported as `VCNLS_STATUS_PANIC`.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vcnls::error::Error;
use vcnls::pipeline::{assemble, verify, Run};
use vcnls::scenario::{list_scenarios, load_scenario, Scenario};
use vcnls::validate::GridSpec;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VcnlsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownScenario = 3,
    MalformedScenario = 4,
    Numerical = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// A loaded scenario.
pub struct VcnlsScenario {
    inner: Scenario,
}

/// An assembled exact solution.
pub struct VcnlsRun {
    inner: Run,
}

/// Phase functions at one time.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VcnlsPhases {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eps: f64,
    pub kappa: f64,
    pub mu: f64,
}

/// Largest deviations found by [`vcnls_run_verify`]; NaN where a check does
/// not apply.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VcnlsVerifySummary {
    pub pde_residual: f64,
    pub system_residual: f64,
    pub closed_form_deviation: f64,
    pub mass_law: f64,
    pub passed: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> VcnlsStatus {
    match e {
        Error::UnknownScenario(_) | Error::UnknownFigure(_) => VcnlsStatus::UnknownScenario,
        Error::MalformedScenario(_) | Error::MissingCoefficient(_) | Error::Json(_) => VcnlsStatus::MalformedScenario,
        Error::InvalidParameter(_) | Error::Grid(_) | Error::EmptyGrid | Error::Scheme(_) => VcnlsStatus::InvalidArgument,
        Error::Io(_) => VcnlsStatus::Io,
        _ => VcnlsStatus::Numerical,
    }
}

type Outcome = Result<(), (VcnlsStatus, String)>;

fn fail(status: VcnlsStatus, msg: impl Into<String>) -> Outcome {
    Err((status, msg.into()))
}

fn lib<T>(r: vcnls::error::Result<T>) -> Result<T, (VcnlsStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn guard(f: impl FnOnce() -> Outcome) -> VcnlsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VcnlsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            VcnlsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (VcnlsStatus, String)> {
    if p.is_null() {
        return Err((VcnlsStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (VcnlsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

macro_rules! non_null {
    ($p:expr, $what:expr) => {
        if $p.is_null() {
            return fail(VcnlsStatus::NullPointer, concat!($what, " is null"));
        }
    };
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vcnls_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Clears the last error message of this thread.
#[no_mangle]
pub extern "C" fn vcnls_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vcnls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Writes the catalog scenario names, newline-separated and NUL-terminated,
/// into `buf`. `needed` (optional) receives the required size including the
/// terminator; `VCNLS_STATUS_BUFFER_TOO_SMALL` if `len` is short.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn vcnls_list_scenarios(buf: *mut c_char, len: usize, needed: *mut usize) -> VcnlsStatus {
    guard(|| {
        let text = lib(list_scenarios())?.join("\n");
        let size = text.len() + 1;
        if !needed.is_null() {
            *needed = size;
        }
        if len < size || buf.is_null() {
            return fail(VcnlsStatus::BufferTooSmall, format!("need {size} bytes, have {len}"));
        }
        ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
        *buf.add(text.len()) = 0;
        Ok(())
    })
}

/// Loads a catalog scenario by name or a scenario file by path.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vcnls_scenario_load(name: *const c_char, out: *mut *mut VcnlsScenario) -> VcnlsStatus {
    guard(|| {
        non_null!(out, "out");
        *out = ptr::null_mut();
        let name = str_arg(name, "name")?;
        let inner = lib(load_scenario(name))?;
        *out = Box::into_raw(Box::new(VcnlsScenario { inner }));
        Ok(())
    })
}

/// Spatial dimension (1 or 2) of a scenario.
///
/// # Safety
/// `scenario` must come from [`vcnls_scenario_load`]; `dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vcnls_scenario_dimension(scenario: *const VcnlsScenario, dim: *mut u32) -> VcnlsStatus {
    guard(|| {
        non_null!(scenario, "scenario");
        non_null!(dim, "dim");
        *dim = u32::from((*scenario).inner.coefficients.dimension);
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from [`vcnls_scenario_load`] or be null.
#[no_mangle]
pub unsafe extern "C" fn vcnls_scenario_free(scenario: *mut VcnlsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Assembles the scenario's exact solution. `keys`/`values` hold `n`
/// parameter overrides (`alpha0`, `delta0`, a seed's `v`, …); both may be
/// null when `n == 0`.
///
/// # Safety
/// `keys` and `values` must be valid for `n` elements; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vcnls_run_assemble(
    scenario: *const VcnlsScenario,
    keys: *const *const c_char,
    values: *const f64,
    n: usize,
    out: *mut *mut VcnlsRun,
) -> VcnlsStatus {
    guard(|| {
        non_null!(scenario, "scenario");
        non_null!(out, "out");
        *out = ptr::null_mut();
        let mut overrides = BTreeMap::new();
        if n > 0 {
            non_null!(keys, "keys");
            non_null!(values, "values");
            for i in 0..n {
                let k = str_arg(*keys.add(i), "parameter name")?;
                overrides.insert(k.to_string(), *values.add(i));
            }
        }
        let inner = lib(assemble(&(*scenario).inner, &overrides))?;
        *out = Box::into_raw(Box::new(VcnlsRun { inner }));
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`vcnls_run_assemble`] or be null.
#[no_mangle]
pub unsafe extern "C" fn vcnls_run_free(run: *mut VcnlsRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// `ψ(t, x, y)`; `y` is ignored for 1D solutions.
///
/// # Safety
/// `run` must be a live handle; `re` and `im` writable.
#[no_mangle]
pub unsafe extern "C" fn vcnls_run_psi(run: *const VcnlsRun, t: f64, x: f64, y: f64, re: *mut f64, im: *mut f64) -> VcnlsStatus {
    guard(|| {
        non_null!(run, "run");
        non_null!(re, "re");
        non_null!(im, "im");
        let r = &(*run).inner;
        let (lo, hi) = r.exact.domain;
        if !(t >= lo && t <= hi) {
            return fail(VcnlsStatus::InvalidArgument, format!("t = {t} outside [{lo}, {hi}]"));
        }
        let v = r.exact.at(t)(x, y);
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}

/// Phase functions at `t`.
///
/// # Safety
/// `run` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vcnls_run_phases(run: *const VcnlsRun, t: f64, out: *mut VcnlsPhases) -> VcnlsStatus {
    guard(|| {
        non_null!(run, "run");
        non_null!(out, "out");
        let p = (*run).inner.phases.phases(t);
        *out = VcnlsPhases {
            alpha: p.alpha,
            beta: p.beta,
            gamma: p.gamma,
            delta: p.delta,
            eps: p.eps,
            kappa: p.kappa,
            mu: p.mu,
        };
        Ok(())
    })
}

/// Predicted blow-up time; `*found` is false (and `*t_star` NaN) when `μ`
/// keeps its sign.
///
/// # Safety
/// `run` must be a live handle; `t_star` and `found` writable.
#[no_mangle]
pub unsafe extern "C" fn vcnls_run_blowup_time(run: *const VcnlsRun, t_star: *mut f64, found: *mut bool) -> VcnlsStatus {
    guard(|| {
        non_null!(run, "run");
        non_null!(t_star, "t_star");
        non_null!(found, "found");
        let b = (*run).inner.blowup.as_ref();
        *found = b.is_some();
        *t_star = b.map_or(f64::NAN, |b| b.t_star);
        Ok(())
    })
}

/// Residual checks on `grid` (`"t0:t1:nt,x0:x1:nx[,y0:y1:ny]"`, or null for
/// the scenario grid) with PDE threshold `threshold`.
///
/// # Safety
/// `run` must be a live handle; `grid` null or NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vcnls_run_verify(
    run: *const VcnlsRun,
    grid: *const c_char,
    threshold: f64,
    out: *mut VcnlsVerifySummary,
) -> VcnlsStatus {
    guard(|| {
        non_null!(run, "run");
        non_null!(out, "out");
        let grid: Option<GridSpec> = if grid.is_null() {
            None
        } else {
            Some(lib(str_arg(grid, "grid")?.parse())?)
        };
        let v = lib(verify(&(*run).inner, grid.as_ref(), threshold))?;
        let worst = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NAN, f64::max);
        *out = VcnlsVerifySummary {
            pde_residual: v.pde.max_abs,
            system_residual: worst(&mut v.system.iter().map(|s| s.max_abs)),
            closed_form_deviation: worst(&mut v.regression.iter().map(|r| r.max_dev)),
            mass_law: v.mass.as_ref().map_or(f64::NAN, |m| m.max_abs),
            passed: v.passed,
        };
        Ok(())
    })
}
