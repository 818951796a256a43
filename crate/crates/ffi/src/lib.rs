//! C interface to `skewmix`.
//!
//! Experiments are opaque handles created from a JSON configuration or a
//! built-in fixture name and released with [`skewmix_experiment_free`].
//! Every fallible call returns a [`SkewmixStatus`]; on failure a message is
//! kept per thread and can be read with [`skewmix_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::OnceLock;

use skewmix::config::{fixture, Experiment, ExperimentConfig};
use skewmix::correlations::{expansion_coefficients, SpectralSetup};
use skewmix::gibbs::GibbsData;
use skewmix::oracle::oracle_correlation;
use skewmix::pipeline::{forward_shifted, spectral_setup};
use skewmix::sft::CylinderFunction;
use skewmix::twisted::{drift_variance, twisted_data, TwistedOperator};
use skewmix::Error;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkewmixStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Numerical = 4,
    ScanFailed = 5,
    BudgetExceeded = 6,
    BufferTooSmall = 7,
    Io = 8,
    Panic = 9,
}

/// An experiment with lazily built numerical state.
pub struct SkewmixExperiment {
    exp: Experiment,
    one_sided: OnceLock<Result<(CylinderFunction, GibbsData), String>>,
    setup: OnceLock<Result<SpectralSetup, (SkewmixStatus, String)>>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SkewmixStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.root() {
            Error::InvalidInput(_) | Error::NotPrimitive | Error::Json(_) | Error::JetOrder { .. } => {
                SkewmixStatus::InvalidInput
            }
            Error::ScanFailed { .. } => SkewmixStatus::ScanFailed,
            Error::Budget { .. } => SkewmixStatus::BudgetExceeded,
            Error::Io(_) => SkewmixStatus::Io,
            _ => SkewmixStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> SkewmixStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            SkewmixStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            SkewmixStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SkewmixStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(SkewmixStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a>(p: *const SkewmixExperiment) -> Result<&'a SkewmixExperiment, Failure> {
    p.as_ref().ok_or_else(|| null("experiment"))
}

unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

impl SkewmixExperiment {
    fn new(cfg: ExperimentConfig) -> Result<Self, Failure> {
        cfg.validate()?;
        Ok(SkewmixExperiment { exp: cfg.build()?, one_sided: OnceLock::new(), setup: OnceLock::new() })
    }

    /// The drift shifted to be one-sided, with Gibbs data deep enough for it.
    fn one_sided(&self) -> Result<&(CylinderFunction, GibbsData), Failure> {
        self.one_sided
            .get_or_init(|| {
                let f = forward_shifted(&self.exp, &self.exp.f).map_err(|e| e.to_string())?;
                let g = self.exp.gibbs(&f, self.exp.r.future().max(self.exp.s.future())).map_err(|e| e.to_string())?;
                Ok((f, g))
            })
            .as_ref()
            .map_err(|m| Failure(SkewmixStatus::InvalidInput, m.clone()))
    }

    fn setup(&self) -> Result<&SpectralSetup, Failure> {
        if self.exp.f.past() != 0 {
            return Err(Failure(
                SkewmixStatus::InvalidInput,
                "spectral quantities need a one-sided f; reduce the two-sided drift first".into(),
            ));
        }
        self.setup
            .get_or_init(|| {
                let (f, g) = self.one_sided().map_err(|Failure(s, m)| (s, m))?;
                spectral_setup(&self.exp, g, f).map_err(|e| {
                    let Failure(s, m) = Failure::from(e);
                    (s, m)
                })
            })
            .as_ref()
            .map_err(|(s, m)| Failure(*s, m.clone()))
    }
}

fn store(out: *mut *mut SkewmixExperiment, exp: SkewmixExperiment) -> Result<(), Failure> {
    unsafe { write(out, Box::into_raw(Box::new(exp)), "out") }
}

/// Create an experiment from a JSON configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn skewmix_experiment_from_json(
    json: *const c_char,
    out: *mut *mut SkewmixExperiment,
) -> SkewmixStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(Error::from)?;
        store(out, SkewmixExperiment::new(cfg)?)
    })
}

/// Create an experiment from a built-in fixture (`r1`, `r2`, `r1-two-sided`,
/// `r3` or `lattice`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn skewmix_experiment_from_fixture(
    name: *const c_char,
    out: *mut *mut SkewmixExperiment,
) -> SkewmixStatus {
    guard(|| {
        let name = read_str(name, "name")?;
        store(out, SkewmixExperiment::new(fixture(name)?)?)
    })
}

/// Release an experiment. Passing null is allowed.
///
/// # Safety
/// `exp` must come from one of the constructors and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn skewmix_experiment_free(exp: *mut SkewmixExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Drift variance by the Green–Kubo sum and by the eigenvalue curvature.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn skewmix_drift_variance(
    exp: *const SkewmixExperiment,
    omega_green_kubo: *mut f64,
    omega_eigen: *mut f64,
) -> SkewmixStatus {
    guard(|| {
        let (f, g) = handle(exp)?.one_sided()?;
        let d = drift_variance(g, f)?;
        write(omega_green_kubo, d.omega_green_kubo, "omega_green_kubo")?;
        write(omega_eigen, d.omega_eigen, "omega_eigen")
    })
}

/// Leading eigenvalue of the twisted operator at frequency `xi`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn skewmix_leading_eigenvalue(
    exp: *const SkewmixExperiment,
    xi: f64,
    re: *mut f64,
    im: *mut f64,
) -> SkewmixStatus {
    guard(|| {
        let (f, g) = handle(exp)?.one_sided()?;
        let d = twisted_data(&TwistedOperator::new(g, f)?, xi, None)?;
        write(re, d.lambda.re, "re")?;
        write(im, d.lambda.im, "im")
    })
}

/// `⟨r∘Fⁿ, s⟩` by the spectral method.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn skewmix_spectral_correlation(
    exp: *const SkewmixExperiment,
    n: usize,
    re: *mut f64,
    im: *mut f64,
) -> SkewmixStatus {
    guard(|| {
        let h = handle(exp)?;
        let v = h.setup()?.correlation(&h.exp.r, &h.exp.s, n)?.value;
        write(re, v.re, "re")?;
        write(im, v.im, "im")
    })
}

/// `⟨r∘Fⁿ, s⟩` by exact enumeration of words.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn skewmix_oracle_correlation(
    exp: *const SkewmixExperiment,
    n: usize,
    re: *mut f64,
    im: *mut f64,
) -> SkewmixStatus {
    guard(|| {
        let h = handle(exp)?;
        let e = &h.exp;
        let (_, g) = h.one_sided()?;
        let v = oracle_correlation(g, &e.f, &e.r, &e.s, n, &e.config.budget())?;
        write(re, v.re, "re")?;
        write(im, v.im, "im")
    })
}

/// Expansion coefficients `c₁, c₃, …, c_{2k−1}` written as `re, im` pairs
/// into `out`, which must hold `2k` doubles.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn skewmix_expansion_coefficients(
    exp: *const SkewmixExperiment,
    k: usize,
    out: *mut f64,
    len: usize,
) -> SkewmixStatus {
    guard(|| {
        let h = handle(exp)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len < 2 * k {
            return Err(Failure(SkewmixStatus::BufferTooSmall, format!("need {} doubles, got {len}", 2 * k)));
        }
        let report = expansion_coefficients(h.setup()?, &h.exp.r, &h.exp.s, k)?;
        let buf = std::slice::from_raw_parts_mut(out, 2 * k);
        for (pair, c) in buf.chunks_exact_mut(2).zip(&report.coefficients) {
            pair[0] = c.re;
            pair[1] = c.im;
        }
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn skewmix_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn skewmix_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
