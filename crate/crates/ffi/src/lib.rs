//! C ABI for the strategizer engine.
//!
//! Every function returns a [`StrategizerStatus`]; on failure the message is
//! available from [`strategizer_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Strings returned
//! through out-parameters are owned by the caller and released with
//! [`strategizer_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use serde::Deserialize;

use strategizer::engine::{run_analysis, AnalysisOptions, AnalysisRequest, Dataset};
use strategizer::io::{InfraSection, PlanFile, ReportKind};
use strategizer::plan::PlanSpec;
use strategizer::utility::{self, Direction, UtilityCurve};
use strategizer::{ConfigOverrides, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategizerStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    ConstraintViolation = 4,
    ConvergenceFailure = 5,
    EmptyDataset = 6,
    Validation = 7,
    DegenerateScenario = 8,
    ShapeMismatch = 9,
    SamplingExhausted = 10,
    Parse = 11,
    Schema = 12,
    NotFound = 13,
    Io = 14,
    Internal = 15,
    Panic = 16,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategizerDirection {
    Increasing = 0,
    Decreasing = 1,
}

impl From<StrategizerDirection> for Direction {
    fn from(d: StrategizerDirection) -> Self {
        match d {
            StrategizerDirection::Increasing => Direction::Increasing,
            StrategizerDirection::Decreasing => Direction::Decreasing,
        }
    }
}

/// A fitted utility curve.
pub struct StrategizerCurve {
    inner: UtilityCurve,
}

/// Parsed survey responses.
pub struct StrategizerDataset {
    inner: Dataset,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(StrategizerStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.root() {
            Error::Domain(_) => StrategizerStatus::Domain,
            Error::ConstraintViolation(_) => StrategizerStatus::ConstraintViolation,
            Error::ConvergenceFailure(_) => StrategizerStatus::ConvergenceFailure,
            Error::EmptyDataset { .. } => StrategizerStatus::EmptyDataset,
            Error::Validation(_) => StrategizerStatus::Validation,
            Error::DegenerateScenario(_) => StrategizerStatus::DegenerateScenario,
            Error::ShapeMismatch(_) => StrategizerStatus::ShapeMismatch,
            Error::SamplingExhausted(_) => StrategizerStatus::SamplingExhausted,
            Error::Parse { .. } => StrategizerStatus::Parse,
            Error::Schema { .. } => StrategizerStatus::Schema,
            Error::NotFound(_) => StrategizerStatus::NotFound,
            Error::Io(_) => StrategizerStatus::Io,
            Error::Internal(_) | Error::Attribute { .. } => StrategizerStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> StrategizerStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            StrategizerStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("panic: {message}"));
            StrategizerStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(StrategizerStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(StrategizerStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

fn owned_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(StrategizerStatus::Internal, "string contains NUL".into()))
}

/// Message for the last failed call on this thread, or null after a
/// success. Valid until the next call into this library on this thread.
#[no_mangle]
pub extern "C" fn strategizer_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn strategizer_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn strategizer_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Fits the curve through `(c_ref, p_i)` on `[lower, upper]`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn strategizer_curve_fit(
    lower: f64,
    upper: f64,
    c_ref: f64,
    p_i: f64,
    direction: StrategizerDirection,
    tolerance: f64,
    out: *mut *mut StrategizerCurve,
) -> StrategizerStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let inner = utility::solve_convergence_constant(lower, upper, c_ref, p_i, direction.into(), tolerance)?;
        *out = Box::into_raw(Box::new(StrategizerCurve { inner }));
        Ok(())
    })
}

/// Builds a curve from a convergence constant; an infinite `k` gives the
/// straight line.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn strategizer_curve_from_constant(
    lower: f64,
    upper: f64,
    k: f64,
    direction: StrategizerDirection,
    out: *mut *mut StrategizerCurve,
) -> StrategizerStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let inner = UtilityCurve::from_constant(lower, upper, k, direction.into())?;
        *out = Box::into_raw(Box::new(StrategizerCurve { inner }));
        Ok(())
    })
}

/// # Safety
/// `curve` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn strategizer_curve_evaluate(
    curve: *const StrategizerCurve,
    x: f64,
    out: *mut f64,
) -> StrategizerStatus {
    guard(|| {
        let curve = curve.as_ref().ok_or_else(|| null("curve"))?;
        *out_ref(out, "out")? = curve.inner.evaluate(x)?;
        Ok(())
    })
}

/// The convergence constant, infinite for a straight line.
///
/// # Safety
/// `curve` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn strategizer_curve_constant(
    curve: *const StrategizerCurve,
    out: *mut f64,
) -> StrategizerStatus {
    guard(|| {
        let curve = curve.as_ref().ok_or_else(|| null("curve"))?;
        *out_ref(out, "out")? = curve.inner.k;
        Ok(())
    })
}

/// The curve as JSON.
///
/// # Safety
/// `curve` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn strategizer_curve_to_json(
    curve: *const StrategizerCurve,
    out: *mut *mut c_char,
) -> StrategizerStatus {
    guard(|| {
        let curve = curve.as_ref().ok_or_else(|| null("curve"))?;
        let out = out_ref(out, "out")?;
        let json = serde_json::to_string(&curve.inner).map_err(|e| Failure(StrategizerStatus::Internal, e.to_string()))?;
        *out = owned_string(json)?;
        Ok(())
    })
}

/// # Safety
/// `curve` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn strategizer_curve_free(curve: *mut StrategizerCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// `quality_weight(q_bar, lower, upper, w_q)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn strategizer_quality_weight(
    q_bar: f64,
    lower: f64,
    upper: f64,
    w_q: f64,
    out: *mut f64,
) -> StrategizerStatus {
    guard(|| {
        *out_ref(out, "out")? = utility::quality_weight(q_bar, lower, upper, w_q)?.value();
        Ok(())
    })
}

/// Survey size giving a confidence interval of total width `width`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn strategizer_required_sample_size(
    stdev: f64,
    width: f64,
    confidence: f64,
    pilot_n: u64,
    out: *mut u64,
) -> StrategizerStatus {
    guard(|| {
        *out_ref(out, "out")? = strategizer::survey::required_sample_size(stdev, width, confidence, pilot_n)?;
        Ok(())
    })
}

/// Parses survey CSV bytes.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn strategizer_dataset_from_csv(
    bytes: *const u8,
    len: usize,
    out: *mut *mut StrategizerDataset,
) -> StrategizerStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if bytes.is_null() {
            return Err(null("bytes"));
        }
        let inner = Dataset::from_csv_bytes(std::slice::from_raw_parts(bytes, len))?;
        *out = Box::into_raw(Box::new(StrategizerDataset { inner }));
        Ok(())
    })
}

/// The dataset's content digest as a hex string.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn strategizer_dataset_id(
    dataset: *const StrategizerDataset,
    out: *mut *mut c_char,
) -> StrategizerStatus {
    guard(|| {
        let dataset = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        *out_ref(out, "out")? = owned_string(dataset.inner.id.clone())?;
        Ok(())
    })
}

/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn strategizer_dataset_record_count(
    dataset: *const StrategizerDataset,
    out: *mut usize,
) -> StrategizerStatus {
    guard(|| {
        let dataset = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        *out_ref(out, "out")? = dataset.inner.records.len();
        Ok(())
    })
}

/// # Safety
/// `dataset` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn strategizer_dataset_free(dataset: *mut StrategizerDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Request {
    #[serde(default)]
    plans: Vec<PlanSpec>,
    #[serde(default)]
    infrastructure: Option<InfraSection>,
    #[serde(default)]
    config: ConfigOverrides,
    #[serde(default)]
    options: AnalysisOptions,
}

/// Runs one analysis and writes the report JSON to `out`.
///
/// `kind` is one of `rank`, `gonogo`, `sweep`, `montecarlo`, `infra`,
/// `samplesize`. `request_json` holds `plans`, `infrastructure`, `config`
/// and `options`, all optional. `dataset` may be null for `samplesize`.
///
/// # Safety
/// `kind` and `request_json` must be NUL-terminated strings; `dataset` must
/// be null or a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn strategizer_analyze(
    kind: *const c_char,
    dataset: *const StrategizerDataset,
    request_json: *const c_char,
    out: *mut *mut c_char,
) -> StrategizerStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let slug = str_arg(kind, "kind")?;
        let kind = ReportKind::from_slug(slug)
            .ok_or_else(|| Failure::from(Error::NotFound(format!("analysis kind `{slug}`"))))?;
        let request: Request = strategizer::io::plan_file::from_json_with_path(str_arg(request_json, "request_json")?)?;
        let plans = PlanFile {
            plans: request.plans,
            infrastructure: request.infrastructure,
            config: ConfigOverrides::default(),
        };
        if kind != ReportKind::SampleSize {
            plans.check()?;
        }
        let request = AnalysisRequest {
            plans,
            base: ConfigOverrides::default(),
            overrides: request.config,
            options: request.options,
        };
        let report = run_analysis(kind, dataset.as_ref().map(|d| &d.inner), &request)?;
        *out = owned_string(report.to_json()?)?;
        Ok(())
    })
}
