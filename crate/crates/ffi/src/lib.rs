//! C interface to the `nlss` solvers.
//!
//! Every function returns an [`NlssStatus`]; on failure a message is kept
//! per thread and read with [`nlss_last_error`]. Handles are opaque and
//! released with their `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nlss::dynamics::TimeSeries;
use nlss::ensemble::{mass, random_ensemble, EnsembleState};
use nlss::harness::runs::run_evolve;
use nlss::harness::{parse_config, parse_config_str, run_stability_experiment, run_validation_suite, RunConfig};
use nlss::stationary::scf_solve;
use nlss::torus::{Convention, FrequencyLattice, TorusGeometry};
use nlss::{Alpha, Coupling, Error};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlssStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    Panic = 6,
}

/// Parsed run configuration.
pub struct NlssConfig(RunConfig);

/// Orthonormal fields with occupations.
pub struct NlssEnsemble(EnsembleState);

/// Sampled observables of one evolution.
pub struct NlssSeries(TimeSeries);

/// One row of a time series; absent observers are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlssSample {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub h1_lambda_sq: f64,
    pub gram_dev: f64,
    pub energy_casimir: f64,
    pub rho_dist: f64,
}

/// Summary of a stability experiment.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlssStability {
    pub rhs: f64,
    pub min_margin: f64,
    pub rows: usize,
    pub violated: bool,
    /// 1 holds, 0 fails, -1 not applicable (cubic).
    pub quintic_holds: i32,
    pub aborted: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> NlssStatus {
    match e {
        Error::InvalidParameter { .. } | Error::SizeMismatch(_) | Error::OutOfDomain { .. } => {
            NlssStatus::InvalidArgument
        }
        Error::Config(_) => NlssStatus::Config,
        Error::Io(_) | Error::Json(_) | Error::Snapshot { .. } => NlssStatus::Io,
        _ => NlssStatus::Numerical,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (NlssStatus, String)>) -> NlssStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            NlssStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {msg}"));
            NlssStatus::Panic
        }
    }
}

fn lift<T>(r: nlss::Result<T>) -> Result<T, (NlssStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (NlssStatus, String) {
    (NlssStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (NlssStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (NlssStatus, String)> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, (NlssStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (NlssStatus::InvalidArgument, format!("`{name}` is not UTF-8")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn nlss_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn nlss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a TOML configuration held in a string.
///
/// # Safety
/// `toml` must be a valid C string and `config` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlss_config_parse(toml: *const c_char, config: *mut *mut NlssConfig) -> NlssStatus {
    guard(|| {
        let slot = out(config, "config")?;
        *slot = ptr::null_mut();
        let cfg = lift(parse_config_str(text(toml, "toml")?))?;
        *slot = boxed(NlssConfig(cfg));
        Ok(())
    })
}

/// Reads and parses a TOML configuration file.
///
/// # Safety
/// `path` must be a valid C string and `config` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlss_config_load(path: *const c_char, config: *mut *mut NlssConfig) -> NlssStatus {
    guard(|| {
        let slot = out(config, "config")?;
        *slot = ptr::null_mut();
        let cfg = lift(parse_config(Path::new(text(path, "path")?)))?;
        *slot = boxed(NlssConfig(cfg));
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nlss_config_free(config: *mut NlssConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Random orthonormal ensemble of `count` fields on `[-n, n]^3`, band
/// limited at the dyadic scale `band`.
///
/// # Safety
/// `occupations` must point to `count` values, `theta` to three values.
#[no_mangle]
pub unsafe extern "C" fn nlss_random_ensemble(
    n: usize,
    occupations: *const f64,
    count: usize,
    band: u64,
    theta: *const f64,
    seed: u64,
    ensemble: *mut *mut NlssEnsemble,
) -> NlssStatus {
    guard(|| {
        let slot = out(ensemble, "ensemble")?;
        *slot = ptr::null_mut();
        if occupations.is_null() {
            return Err(null("occupations"));
        }
        if theta.is_null() {
            return Err(null("theta"));
        }
        let occ = std::slice::from_raw_parts(occupations, count);
        let th = std::slice::from_raw_parts(theta, 3);
        let geom = lift(TorusGeometry::new([th[0], th[1], th[2]]))?;
        let lat = lift(FrequencyLattice::new(n))?;
        let state = lift(random_ensemble(lat, occ, band, geom, Convention::Standard, seed))?;
        *slot = boxed(NlssEnsemble(state));
        Ok(())
    })
}

/// Stationary state of the configuration, with its chemical shift and
/// dual value.
///
/// # Safety
/// Pointers must be valid; `sigma` and `phi` may be null.
#[no_mangle]
pub unsafe extern "C" fn nlss_stationary_solve(
    config: *const NlssConfig,
    ensemble: *mut *mut NlssEnsemble,
    sigma: *mut f64,
    phi: *mut f64,
) -> NlssStatus {
    guard(|| {
        let slot = out(ensemble, "ensemble")?;
        *slot = ptr::null_mut();
        let cfg = &as_ref(config, "config")?.0;
        let st = lift(scf_solve(&cfg.scf_config()))?;
        if let Some(s) = sigma.as_mut() {
            *s = st.sigma;
        }
        if let Some(p) = phi.as_mut() {
            *p = st.phi;
        }
        *slot = boxed(NlssEnsemble(lift(st.ensemble())?));
        Ok(())
    })
}

/// Adds band-limited noise and restores orthonormality.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nlss_perturb(
    ensemble: *const NlssEnsemble,
    amplitude: f64,
    band: u64,
    seed: u64,
    perturbed: *mut *mut NlssEnsemble,
) -> NlssStatus {
    guard(|| {
        let slot = out(perturbed, "perturbed")?;
        *slot = ptr::null_mut();
        let e = &as_ref(ensemble, "ensemble")?.0;
        *slot = boxed(NlssEnsemble(lift(nlss::ensemble::perturb(e, amplitude, band, seed))?));
        Ok(())
    })
}

/// Number of fields.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nlss_ensemble_len(ensemble: *const NlssEnsemble, len: *mut usize) -> NlssStatus {
    guard(|| {
        *out(len, "len")? = as_ref(ensemble, "ensemble")?.0.len();
        Ok(())
    })
}

/// `sum_j lambda_j ||u_j||^2`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nlss_ensemble_mass(ensemble: *const NlssEnsemble, value: *mut f64) -> NlssStatus {
    guard(|| {
        *out(value, "value")? = mass(&as_ref(ensemble, "ensemble")?.0);
        Ok(())
    })
}

/// Energy with `alpha` in {1, 2} and `sign` in {+1, -1}.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nlss_ensemble_energy(
    ensemble: *const NlssEnsemble,
    alpha: u8,
    sign: i8,
    value: *mut f64,
) -> NlssStatus {
    guard(|| {
        let slot = out(value, "value")?;
        let e = &as_ref(ensemble, "ensemble")?.0;
        *slot = lift(nlss::ensemble::energy(
            e,
            lift(Alpha::new(alpha))?,
            lift(Coupling::new(sign))?,
        ))?;
        Ok(())
    })
}

/// `max |Gram - I|`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nlss_ensemble_gram_deviation(ensemble: *const NlssEnsemble, value: *mut f64) -> NlssStatus {
    guard(|| {
        *out(value, "value")? = as_ref(ensemble, "ensemble")?.0.gram_matrix().deviation_from_identity();
        Ok(())
    })
}

/// # Safety
/// `ensemble` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nlss_ensemble_free(ensemble: *mut NlssEnsemble) {
    if !ensemble.is_null() {
        drop(Box::from_raw(ensemble));
    }
}

/// Evolves `initial` with the configuration's evolution settings. An
/// aborted run still returns `NLSS_STATUS_OK`; see [`nlss_series_aborted`].
///
/// # Safety
/// Pointers must be valid; `last` may be null.
#[no_mangle]
pub unsafe extern "C" fn nlss_evolve(
    config: *const NlssConfig,
    initial: *const NlssEnsemble,
    last: *mut *mut NlssEnsemble,
    series: *mut *mut NlssSeries,
) -> NlssStatus {
    guard(|| {
        let slot = out(series, "series")?;
        *slot = ptr::null_mut();
        if let Some(l) = last.as_mut() {
            *l = ptr::null_mut();
        }
        let cfg = &as_ref(config, "config")?.0;
        let init = &as_ref(initial, "initial")?.0;
        let (_, state, ts) = lift(run_evolve(cfg, init))?;
        if let Some(l) = last.as_mut() {
            *l = boxed(NlssEnsemble(state));
        }
        *slot = boxed(NlssSeries(ts));
        Ok(())
    })
}

/// Number of samples.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nlss_series_len(series: *const NlssSeries, len: *mut usize) -> NlssStatus {
    guard(|| {
        *out(len, "len")? = as_ref(series, "series")?.0.len();
        Ok(())
    })
}

/// Sample `index`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nlss_series_get(
    series: *const NlssSeries,
    index: usize,
    sample: *mut NlssSample,
) -> NlssStatus {
    guard(|| {
        let slot = out(sample, "sample")?;
        let ts = &as_ref(series, "series")?.0;
        let s = ts.samples.get(index).ok_or_else(|| {
            (
                NlssStatus::InvalidArgument,
                format!("index {index} is outside 0..{}", ts.len()),
            )
        })?;
        *slot = NlssSample {
            t: s.t,
            mass: s.mass,
            energy: s.energy,
            h1_lambda_sq: s.h1_lambda_sq,
            gram_dev: s.gram_dev,
            energy_casimir: s.energy_casimir.unwrap_or(f64::NAN),
            rho_dist: s.rho_dist.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Whether the blow-up guard fired, and at which step.
///
/// # Safety
/// Pointers must be valid; `step` may be null.
#[no_mangle]
pub unsafe extern "C" fn nlss_series_aborted(
    series: *const NlssSeries,
    aborted: *mut bool,
    step: *mut usize,
) -> NlssStatus {
    guard(|| {
        let slot = out(aborted, "aborted")?;
        let at = as_ref(series, "series")?.0.aborted_at;
        *slot = at.is_some();
        if let Some(s) = step.as_mut() {
            *s = at.unwrap_or(0);
        }
        Ok(())
    })
}

/// Writes the series as CSV, atomically.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nlss_series_write_csv(series: *const NlssSeries, path: *const c_char) -> NlssStatus {
    guard(|| {
        let ts = &as_ref(series, "series")?.0;
        lift(ts.write_csv(Path::new(text(path, "path")?)))
    })
}

/// # Safety
/// `series` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nlss_series_free(series: *mut NlssSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Runs the stability experiment of the configuration.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nlss_stability_run(config: *const NlssConfig, summary: *mut NlssStability) -> NlssStatus {
    guard(|| {
        let slot = out(summary, "summary")?;
        let cfg = &as_ref(config, "config")?.0;
        let (r, _) = lift(run_stability_experiment(cfg))?;
        *slot = NlssStability {
            rhs: r.rhs,
            min_margin: r.min_margin,
            rows: r.rows.len(),
            violated: r.violated,
            quintic_holds: r.quintic_holds.map_or(-1, i32::from),
            aborted: r.aborted_at.is_some(),
        };
        Ok(())
    })
}

/// Runs the validation suite; `report` receives its JSON, to be released
/// with [`nlss_string_free`].
///
/// # Safety
/// Pointers must be valid; `report` may be null.
#[no_mangle]
pub unsafe extern "C" fn nlss_validate_run(
    config: *const NlssConfig,
    passed: *mut bool,
    report: *mut *mut c_char,
) -> NlssStatus {
    guard(|| {
        let slot = out(passed, "passed")?;
        if let Some(r) = report.as_mut() {
            *r = ptr::null_mut();
        }
        let cfg = &as_ref(config, "config")?.0;
        let r = lift(run_validation_suite(cfg))?;
        *slot = r.passed;
        if let Some(out) = report.as_mut() {
            let json = lift(serde_json::to_string(&r).map_err(Error::from))?;
            *out = CString::new(json).unwrap_or_default().into_raw();
        }
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nlss_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
