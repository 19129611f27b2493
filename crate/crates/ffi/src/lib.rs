//! C ABI for the simulator.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every call returns a [`CrsStatus`]; on
//! failure, [`crs_last_error_message`] describes the error on the calling
//! thread. Strings returned through out-parameters are owned by the caller
//! and released with [`crs_string_free`]. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use crs_core::chemistry::{Chemistry, ChemistryParams};
use crs_core::cli_io::{
    chemistry_to_json, load_chemistry, load_config, save_chemistry, trajectory_csv, RunConfig,
};
use crs_core::engine::{run_simulation, Trajectory};
use crs_core::experiments::{EnsembleOptions, RunSummary};
use crs_core::Error;

/// Outcome of an API call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8, or an index was out of range.
    InvalidArgument = 2,
    /// Configuration or input failed validation.
    Validation = 3,
    /// Reading or writing a file failed.
    Io = 4,
    /// The simulation failed while running.
    Runtime = 5,
    /// An internal panic was caught.
    Panic = 6,
}

/// Chemistry: species registry plus catalyzed reactions.
pub struct CrsChemistry {
    inner: Chemistry,
}

/// Validated run configuration.
pub struct CrsConfig {
    inner: RunConfig,
}

/// Completed simulation run.
pub struct CrsTrajectory {
    inner: Trajectory,
    summary: RunSummary,
}

/// One point of the observation grid.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CrsObservation {
    pub t: f64,
    pub total_mass: u64,
    pub richness: usize,
    pub max_len: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(CrsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => CrsStatus::Io,
            e if e.is_validation() => CrsStatus::Validation,
            _ => CrsStatus::Runtime,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CrsStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CrsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CrsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            CrsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller passes a NUL-terminated string valid for this call.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure(CrsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller passes a live handle obtained from this library.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: out is non-null and points to writable storage for T.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c =
        CString::new(s).map_err(|_| Failure(CrsStatus::Runtime, "string contains NUL".into()))?;
    unsafe { write_out(out, c.into_raw()) }
}

unsafe fn write_box<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    unsafe { write_out(out, Box::into_raw(Box::new(value))) }
}

/// Message for the last failed call on this thread, or null after a
/// successful call. Valid until the next API call on the same thread.
#[no_mangle]
pub extern "C" fn crs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn crs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn crs_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: s came from CString::into_raw in write_string.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Generates a chemistry over the binary alphabet with default product
/// length cap.
///
/// # Safety
/// `out` must point to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn crs_chemistry_generate(
    p: f64,
    chem_seed: u64,
    initial_max_len: usize,
    out: *mut *mut CrsChemistry,
) -> CrsStatus {
    guard(|| {
        let mut params = ChemistryParams::new(p, chem_seed);
        params.initial_max_len = initial_max_len;
        let inner = Chemistry::generate(params)?;
        unsafe { write_box(out, CrsChemistry { inner }) }
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crs_chemistry_load(
    path: *const c_char,
    out: *mut *mut CrsChemistry,
) -> CrsStatus {
    guard(|| {
        let path = unsafe { str_arg(path, "path") }?;
        let inner = load_chemistry(Path::new(path))?;
        unsafe { write_box(out, CrsChemistry { inner }) }
    })
}

/// # Safety
/// `chem` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn crs_chemistry_save(
    chem: *const CrsChemistry,
    path: *const c_char,
) -> CrsStatus {
    guard(|| {
        let chem = unsafe { handle(chem, "chem") }?;
        let path = unsafe { str_arg(path, "path") }?;
        Ok(save_chemistry(&chem.inner, Path::new(path))?)
    })
}

/// Canonical JSON form; free with [`crs_string_free`].
///
/// # Safety
/// `chem` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crs_chemistry_to_json(
    chem: *const CrsChemistry,
    out: *mut *mut c_char,
) -> CrsStatus {
    guard(|| {
        let chem = unsafe { handle(chem, "chem") }?;
        unsafe { write_string(out, chemistry_to_json(&chem.inner)) }
    })
}

/// Number of registered species.
///
/// # Safety
/// `chem` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crs_chemistry_species_count(
    chem: *const CrsChemistry,
    out: *mut usize,
) -> CrsStatus {
    guard(|| {
        let chem = unsafe { handle(chem, "chem") }?;
        unsafe { write_out(out, chem.inner.registered().len()) }
    })
}

/// # Safety
/// `chem` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crs_chemistry_catalysis_count(
    chem: *const CrsChemistry,
    out: *mut usize,
) -> CrsStatus {
    guard(|| {
        let chem = unsafe { handle(chem, "chem") }?;
        unsafe { write_out(out, chem.inner.catalyses().len()) }
    })
}

/// # Safety
/// `chem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn crs_chemistry_free(chem: *mut CrsChemistry) {
    if !chem.is_null() {
        // SAFETY: chem came from Box::into_raw in write_box.
        drop(unsafe { Box::from_raw(chem) });
    }
}

/// Reference-scenario configuration.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crs_config_default(out: *mut *mut CrsConfig) -> CrsStatus {
    guard(|| unsafe {
        write_box(
            out,
            CrsConfig {
                inner: RunConfig::default(),
            },
        )
    })
}

/// Parses and validates a JSON config. A relative `chemistry_path` resolves
/// against the working directory.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crs_config_from_json(
    json: *const c_char,
    out: *mut *mut CrsConfig,
) -> CrsStatus {
    guard(|| {
        let text = unsafe { str_arg(json, "json") }?;
        let inner = RunConfig::from_json(text, Path::new("<json>"), Path::new("."))?;
        unsafe { write_box(out, CrsConfig { inner }) }
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crs_config_load(
    path: *const c_char,
    out: *mut *mut CrsConfig,
) -> CrsStatus {
    guard(|| {
        let path = unsafe { str_arg(path, "path") }?;
        let inner = load_config(Path::new(path))?;
        unsafe { write_box(out, CrsConfig { inner }) }
    })
}

/// Canonical JSON echo; free with [`crs_string_free`].
///
/// # Safety
/// `config` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crs_config_to_json(
    config: *const CrsConfig,
    out: *mut *mut c_char,
) -> CrsStatus {
    guard(|| {
        let config = unsafe { handle(config, "config") }?;
        unsafe { write_string(out, config.inner.to_canonical_json()) }
    })
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn crs_config_free(config: *mut CrsConfig) {
    if !config.is_null() {
        // SAFETY: config came from Box::into_raw in write_box.
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Runs one simulation. `chem` may be null to use the configuration's own
/// chemistry. `compare_arm` selects `compare_reactor` instead of `reactor`.
///
/// # Safety
/// `config` must be a live handle, `chem` null or a live handle, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn crs_simulate(
    config: *const CrsConfig,
    chem: *const CrsChemistry,
    seed: u64,
    compare_arm: bool,
    out: *mut *mut CrsTrajectory,
) -> CrsStatus {
    guard(|| {
        let cfg = &unsafe { handle(config, "config") }?.inner;
        let owned;
        let chemistry = match unsafe { chem.as_ref() } {
            Some(c) => &c.inner,
            None => {
                owned = cfg.chemistry()?;
                &owned
            }
        };
        let reactor = if compare_arm {
            &cfg.compare_reactor
        } else {
            &cfg.reactor
        };
        let inner = run_simulation(
            chemistry,
            reactor,
            &cfg.kinetics,
            &cfg.initial_counts,
            &cfg.run_options(seed),
        )?;
        let summary = RunSummary::from_trajectory(&inner, reactor, &EnsembleOptions::default())?;
        unsafe { write_box(out, CrsTrajectory { inner, summary }) }
    })
}

/// Number of observations.
///
/// # Safety
/// `tr` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crs_trajectory_len(
    tr: *const CrsTrajectory,
    out: *mut usize,
) -> CrsStatus {
    guard(|| {
        let tr = unsafe { handle(tr, "trajectory") }?;
        unsafe { write_out(out, tr.inner.observations.len()) }
    })
}

/// # Safety
/// `tr` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crs_trajectory_observation(
    tr: *const CrsTrajectory,
    index: usize,
    out: *mut CrsObservation,
) -> CrsStatus {
    guard(|| {
        let tr = unsafe { handle(tr, "trajectory") }?;
        let o = tr.inner.observations.get(index).ok_or_else(|| {
            Failure(
                CrsStatus::InvalidArgument,
                format!("observation {index} out of range"),
            )
        })?;
        let obs = CrsObservation {
            t: o.t,
            total_mass: o.total_mass,
            richness: o.richness,
            max_len: o.max_len,
        };
        unsafe { write_out(out, obs) }
    })
}

/// Total number of events fired.
///
/// # Safety
/// `tr` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crs_trajectory_event_count(
    tr: *const CrsTrajectory,
    out: *mut u64,
) -> CrsStatus {
    guard(|| {
        let tr = unsafe { handle(tr, "trajectory") }?;
        unsafe { write_out(out, tr.inner.stats.total) }
    })
}

/// Trajectory CSV (`t,total_mass,richness,max_len`); free with
/// [`crs_string_free`].
///
/// # Safety
/// `tr` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crs_trajectory_to_csv(
    tr: *const CrsTrajectory,
    out: *mut *mut c_char,
) -> CrsStatus {
    guard(|| {
        let tr = unsafe { handle(tr, "trajectory") }?;
        let bytes = trajectory_csv(&tr.inner)?;
        let text = String::from_utf8(bytes).expect("CSV is UTF-8");
        unsafe { write_string(out, text) }
    })
}

/// Run summary as JSON; free with [`crs_string_free`].
///
/// # Safety
/// `tr` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crs_trajectory_summary_json(
    tr: *const CrsTrajectory,
    out: *mut *mut c_char,
) -> CrsStatus {
    guard(|| {
        let tr = unsafe { handle(tr, "trajectory") }?;
        let json = serde_json::to_string_pretty(&tr.summary)
            .map_err(|e| Failure(CrsStatus::Runtime, e.to_string()))?;
        unsafe { write_string(out, json) }
    })
}

/// # Safety
/// `tr` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn crs_trajectory_free(tr: *mut CrsTrajectory) {
    if !tr.is_null() {
        // SAFETY: tr came from Box::into_raw in write_box.
        drop(unsafe { Box::from_raw(tr) });
    }
}
