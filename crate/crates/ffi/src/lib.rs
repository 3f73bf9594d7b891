//! C ABI for the vadm solver.
//!
//! Every exported function returns an [`AdmStatus`]; on failure the message
//! is available from [`adm_last_error`] on the same thread. Solver handles are
//! opaque and must be released with [`adm_solver_free`].

#![deny(unsafe_op_in_unsafe_fn)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vadm::checkpoint::Checkpoint;
use vadm::config::parse_config;
use vadm::diagnostics::{budget_residual, EnergyRecord};
use vadm::filter::{DeconvSpec, FilterSpec};
use vadm::solver::{Solver, SolverState};
use vadm::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    CflViolation = 4,
    NonFinite = 5,
    Io = 6,
    Checkpoint = 7,
    Panic = 8,
}

/// Energy terms at the current state. `budget_residual` is NaN until the
/// solver has taken a step.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmEnergyRecord {
    pub t: f64,
    pub step: u64,
    pub model_energy: f64,
    pub dissipation: f64,
    pub forcing_power: f64,
    pub budget_residual: f64,
    pub gronwall_integrand: f64,
    pub l2_norm: f64,
    pub theta_seminorm: f64,
}

impl From<&EnergyRecord> for AdmEnergyRecord {
    fn from(r: &EnergyRecord) -> Self {
        Self {
            t: r.t,
            step: r.step,
            model_energy: r.model_energy,
            dissipation: r.dissipation,
            forcing_power: r.forcing_power,
            budget_residual: r.budget_residual,
            gronwall_integrand: r.gronwall_integrand,
            l2_norm: r.l2_norm,
            theta_seminorm: r.theta_seminorm,
        }
    }
}

/// Opaque solver handle.
pub struct AdmSolver {
    solver: Solver,
    state: SolverState,
    previous: Option<EnergyRecord>,
    config_hash: [u8; 32],
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(e: &Error) -> AdmStatus {
    match e {
        Error::Cfl { .. } => AdmStatus::CflViolation,
        Error::NonFinite { .. } => AdmStatus::NonFinite,
        Error::Io(_) => AdmStatus::Io,
        Error::Checkpoint(_) => AdmStatus::Checkpoint,
        _ => AdmStatus::InvalidArgument,
    }
}

fn guard(body: impl FnOnce() -> Result<(), (AdmStatus, String)>) -> AdmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => AdmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AdmStatus::Panic
        }
    }
}

fn fail(e: Error) -> (AdmStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (AdmStatus, String) {
    (AdmStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `s` must be null or point to a nul-terminated string.
unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, (AdmStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    unsafe { CStr::from_ptr(s) }
        .to_str()
        .map_err(|_| (AdmStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn adm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn adm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a solver from TOML configuration text (same format as the CLI).
///
/// # Safety
/// `config_toml` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn adm_solver_new(config_toml: *const c_char, out: *mut *mut AdmSolver) -> AdmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { *out = ptr::null_mut() };
        let text = unsafe { str_arg(config_toml, "config") }?;
        let cfg = parse_config(text).map_err(|errs| (AdmStatus::InvalidConfig, errs.join("; ")))?;
        let solver = Solver::new(cfg.solver.clone()).map_err(fail)?;
        let handle = AdmSolver {
            state: solver.initial_state(),
            solver,
            previous: None,
            config_hash: cfg.hash(),
        };
        unsafe { *out = Box::into_raw(Box::new(handle)) };
        Ok(())
    })
}

/// Releases a solver; null is ignored.
///
/// # Safety
/// `solver` must come from [`adm_solver_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn adm_solver_free(solver: *mut AdmSolver) {
    if !solver.is_null() {
        drop(unsafe { Box::from_raw(solver) });
    }
}

/// Advances `steps` time steps. On a CFL or non-finite abort the state stays
/// at the last good step.
///
/// # Safety
/// `solver` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn adm_solver_step(solver: *mut AdmSolver, steps: u64) -> AdmStatus {
    guard(|| {
        let h = unsafe { solver.as_mut() }.ok_or_else(|| null("solver"))?;
        for _ in 0..steps {
            let before = h.solver.record(&h.state).map_err(fail)?;
            h.state = h.solver.step(&h.state).map_err(fail)?;
            h.previous = Some(before);
        }
        Ok(())
    })
}

/// # Safety
/// `solver` must be a live handle and `t` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn adm_solver_time(solver: *const AdmSolver, t: *mut f64) -> AdmStatus {
    guard(|| {
        let h = unsafe { solver.as_ref() }.ok_or_else(|| null("solver"))?;
        let t = unsafe { t.as_mut() }.ok_or_else(|| null("t"))?;
        *t = h.state.t;
        Ok(())
    })
}

/// # Safety
/// `solver` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn adm_solver_energy(solver: *const AdmSolver, out: *mut AdmEnergyRecord) -> AdmStatus {
    guard(|| {
        let h = unsafe { solver.as_ref() }.ok_or_else(|| null("solver"))?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let mut r = h.solver.record(&h.state).map_err(fail)?;
        if let Some(p) = &h.previous {
            r.budget_residual = budget_residual(p, &r, r.t - p.t).map_err(fail)?;
        }
        *out = AdmEnergyRecord::from(&r);
        Ok(())
    })
}

/// Writes the current state in the versioned checkpoint format.
///
/// # Safety
/// `solver` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn adm_solver_write_checkpoint(solver: *const AdmSolver, path: *const c_char) -> AdmStatus {
    guard(|| {
        let h = unsafe { solver.as_ref() }.ok_or_else(|| null("solver"))?;
        let path = unsafe { str_arg(path, "path") }?;
        Checkpoint::from_state(&h.state, h.config_hash).save(path).map_err(fail)
    })
}

/// Filter symbol `1 + (alpha |k3|)^(2 theta)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn adm_filter_symbol(alpha: f64, theta: f64, k3: f64, out: *mut f64) -> AdmStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = FilterSpec::new(alpha, theta).map_err(fail)?.symbol_at(k3);
        Ok(())
    })
}

/// Deconvolution symbol of order `order`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn adm_deconv_symbol(alpha: f64, theta: f64, order: u32, k3: f64, out: *mut f64) -> AdmStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = DeconvSpec::new(FilterSpec::new(alpha, theta).map_err(fail)?, order).symbol_at(k3);
        Ok(())
    })
}
