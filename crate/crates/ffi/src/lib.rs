//! C interface to the forecasting engine.
//!
//! Frames and forecasters are opaque handles created and destroyed through
//! this API. Every fallible call returns a [`StratStatus`]; on failure the
//! message is available from [`strat_last_error`] on the same thread.
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use serde::Deserialize;
use stratcast::config::StrategyEntry;
use stratcast::data::{load_long_csv, CsvOptions, Frequency, LongFrame, RoleMap, Series};
use stratcast::models::ModelSpec;
use stratcast::strategies::Mode;
use stratcast::transforms::{PipelineConfig, TransformSpec};
use stratcast::validation::{cv_fit_ensemble, make_cv_splits, CvEnsemble, CvScheme, Experiment};
use stratcast::{Error, ErrorKind};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StratStatus {
    Ok = 0,
    /// A required pointer was null or a string was not UTF-8.
    InvalidArgument = 1,
    /// Bad configuration JSON or an invalid setting.
    Config = 2,
    /// The data cannot be used (parse errors, too short, not aligned, ...).
    Data = 3,
    /// Fitting or prediction failed.
    Model = 4,
    Io = 5,
    /// The output buffer is smaller than the forecast.
    BufferTooSmall = 6,
    /// An internal panic was caught.
    Internal = 7,
}

/// Opaque multi-series dataset.
pub struct StratFrame {
    frame: LongFrame,
}

/// Opaque fitted forecaster (one model set per cross-validation fold).
pub struct StratForecaster {
    ensemble: CvEnsemble,
    horizon: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> StratStatus {
    match e.kind() {
        ErrorKind::Config => StratStatus::Config,
        ErrorKind::Data | ErrorKind::NoRunnableCells => StratStatus::Data,
        ErrorKind::Model => StratStatus::Model,
        ErrorKind::Io => StratStatus::Io,
    }
}

struct Failure(StratStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Failure {
    Failure(StratStatus::InvalidArgument, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> StratStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StratStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            StratStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(&format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(&format!("`{name}` is not UTF-8")))
}

fn parse_frequency(s: &str) -> Result<Frequency, Failure> {
    s.parse::<Frequency>().map_err(Failure::from)
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn strat_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn strat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a long-format CSV. `roles_json` names the columns, e.g.
/// `{"id":"id","datetime":"date","target":"y"}`; `frequency` is a step such
/// as `"1"`, `"1d"` or `"1w"`.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn strat_frame_from_csv(
    path: *const c_char,
    roles_json: *const c_char,
    frequency: *const c_char,
    out: *mut *mut StratFrame,
) -> StratStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("`out` is null"));
        }
        let path = str_arg(path, "path")?;
        let roles: RoleMap = serde_json::from_str(str_arg(roles_json, "roles_json")?)
            .map_err(|e| Failure(StratStatus::Config, format!("roles: {e}")))?;
        let freq = parse_frequency(str_arg(frequency, "frequency")?)?;
        let frame = load_long_csv(path, &roles, freq, CsvOptions::default())?;
        *out = Box::into_raw(Box::new(StratFrame { frame }));
        Ok(())
    })
}

/// Builds a target-only frame on an integer time grid starting at 0 with
/// step 1. Series `i` is named `ids[i]` and holds `lengths[i]` values taken
/// consecutively from `values`.
///
/// # Safety
/// `ids` and `lengths` must hold `n_series` entries and `values` the sum of
/// `lengths`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn strat_frame_from_arrays(
    n_series: usize,
    ids: *const *const c_char,
    lengths: *const usize,
    values: *const f64,
    out: *mut *mut StratFrame,
) -> StratStatus {
    guard(|| {
        if out.is_null() || ids.is_null() || lengths.is_null() || (values.is_null() && n_series > 0) {
            return Err(invalid("null argument"));
        }
        let ids = std::slice::from_raw_parts(ids, n_series);
        let lengths = std::slice::from_raw_parts(lengths, n_series);
        let total: usize = lengths.iter().sum();
        let values = if total == 0 { &[][..] } else { std::slice::from_raw_parts(values, total) };
        let mut series = Vec::with_capacity(n_series);
        let mut at = 0;
        for (&id, &len) in ids.iter().zip(lengths) {
            let id = str_arg(id, "ids[i]")?;
            series.push(Series::regular(id, 0, 1, values[at..at + len].to_vec()));
            at += len;
        }
        let frame = LongFrame::from_series(Frequency::ordinal(1), Vec::new(), series)?;
        *out = Box::into_raw(Box::new(StratFrame { frame }));
        Ok(())
    })
}

/// Number of series in a frame (0 for a null handle).
///
/// # Safety
/// `frame` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn strat_frame_n_series(frame: *const StratFrame) -> usize {
    frame.as_ref().map_or(0, |f| f.frame.n_series())
}

/// # Safety
/// `frame` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn strat_frame_free(frame: *mut StratFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

fn default_history() -> usize {
    stratcast::config::DEFAULT_HISTORY
}
fn default_horizon() -> usize {
    stratcast::config::DEFAULT_HORIZON
}
fn default_pipeline() -> Vec<TransformSpec> {
    vec![TransformSpec::Lag {
        history: None,
        exogenous: true,
    }]
}
fn default_model() -> ModelSpec {
    ModelSpec::ridge(1.0)
}
fn default_mode() -> Mode {
    Mode::Global
}

/// One experiment cell as accepted by [`strat_forecaster_fit`].
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FitSpec {
    #[serde(default = "default_history")]
    history: usize,
    #[serde(default = "default_horizon")]
    horizon: usize,
    #[serde(default = "default_pipeline")]
    pipeline: Vec<TransformSpec>,
    strategy: StrategyEntry,
    #[serde(default = "default_mode")]
    mode: Mode,
    #[serde(default = "default_model")]
    model: ModelSpec,
    /// Expanding-window folds; 0 fits once on all data.
    #[serde(default)]
    folds: usize,
    #[serde(default)]
    seed: u64,
}

/// Fits a forecaster on `frame`. `spec_json` describes the cell, e.g.
/// `{"history":24,"horizon":12,"strategy":{"kind":"mimo"},"model":{"kind":"ridge"}}`.
///
/// # Safety
/// `frame` must be a live handle, `spec_json` NUL-terminated and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn strat_forecaster_fit(
    frame: *const StratFrame,
    spec_json: *const c_char,
    out: *mut *mut StratForecaster,
) -> StratStatus {
    guard(|| {
        let frame = frame.as_ref().ok_or_else(|| invalid("`frame` is null"))?;
        if out.is_null() {
            return Err(invalid("`out` is null"));
        }
        let spec: FitSpec = serde_json::from_str(str_arg(spec_json, "spec_json")?)
            .map_err(|e| Failure(StratStatus::Config, format!("spec: {e}")))?;
        let strategy = spec.strategy.spec(spec.horizon)?;
        let pipeline = PipelineConfig::new(spec.pipeline)?.with_default_history(spec.history);
        let model = spec.model.with_seed(spec.seed);
        model.validate()?;
        let exp = Experiment {
            pipeline: &pipeline,
            strategy,
            mode: spec.mode,
            learner: &model,
        };
        let history = pipeline.history().unwrap_or(spec.history);
        let plan = make_cv_splits(&frame.frame, CvScheme::Expanding, spec.folds, spec.horizon, history)?;
        let ensemble = cv_fit_ensemble(&frame.frame, &exp, &plan)?;
        *out = Box::into_raw(Box::new(StratForecaster {
            ensemble,
            horizon: spec.horizon,
        }));
        Ok(())
    })
}

/// Forecast horizon of a fitted forecaster (0 for a null handle).
///
/// # Safety
/// `fc` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn strat_forecaster_horizon(fc: *const StratForecaster) -> usize {
    fc.as_ref().map_or(0, |f| f.horizon)
}

/// Forecasts past the end of every series in `context`. Values are written
/// series by series (sorted by id), `horizon` per series. `written` receives
/// the number of values needed, also when the buffer is too small.
///
/// # Safety
/// Handles must be live, `out` must hold `capacity` doubles and `written`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn strat_forecaster_predict(
    fc: *const StratForecaster,
    context: *const StratFrame,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> StratStatus {
    guard(|| {
        let fc = fc.as_ref().ok_or_else(|| invalid("`fc` is null"))?;
        let context = context.as_ref().ok_or_else(|| invalid("`context` is null"))?;
        if written.is_null() || (out.is_null() && capacity > 0) {
            return Err(invalid("null output pointer"));
        }
        let forecast = fc.ensemble.forecast(&context.frame, None)?;
        let values: Vec<f64> = forecast.series.iter().flat_map(|s| s.values.iter().copied()).collect();
        *written = values.len();
        if values.len() > capacity {
            return Err(Failure(
                StratStatus::BufferTooSmall,
                format!("forecast needs {} values, buffer holds {capacity}", values.len()),
            ));
        }
        if !values.is_empty() {
            ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
        }
        Ok(())
    })
}

/// # Safety
/// `fc` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn strat_forecaster_free(fc: *mut StratForecaster) {
    if !fc.is_null() {
        drop(Box::from_raw(fc));
    }
}
