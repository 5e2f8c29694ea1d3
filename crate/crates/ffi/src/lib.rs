//! C ABI over the ecoselect engine.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns an
//! [`EcoStatus`]; on failure, [`eco_last_error`] gives a message for the
//! calling thread. Panics are caught and reported as `ECO_ERR_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ecoselect::bma::Analysis;
use ecoselect::econ::PurchaseWave;
use ecoselect::nalgebra::DMatrix;
use ecoselect::{
    analyze, load_csv, make_folds, optimal_purchase_wave, optimal_set, standardize, CostModel, CvSettings, Dataset,
    Error, ErrorClass, GPriorConfig, GRule, PredictorSet, TimedPurchaseProblem,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcoStatus {
    EcoOk = 0,
    /// Invalid configuration or argument.
    EcoErrConfig = 1,
    /// Malformed or insufficient data.
    EcoErrData = 2,
    /// Numerical failure (collinearity, conditioning).
    EcoErrNumeric = 3,
    /// More predictors than the engine supports.
    EcoErrCapacity = 4,
    /// A required pointer was null or a string was not UTF-8.
    EcoErrArgument = 5,
    /// An internal panic was caught.
    EcoErrPanic = 6,
}

impl From<ErrorClass> for EcoStatus {
    fn from(c: ErrorClass) -> Self {
        match c {
            ErrorClass::Config => EcoStatus::EcoErrConfig,
            ErrorClass::Data => EcoStatus::EcoErrData,
            ErrorClass::Numeric => EcoStatus::EcoErrNumeric,
            ErrorClass::Capacity => EcoStatus::EcoErrCapacity,
        }
    }
}

/// A dataset: one response and up to 24 named predictors.
pub struct EcoDataset {
    inner: Dataset,
}

/// Cross-validated losses and inclusion probabilities of every purchased
/// set.
pub struct EcoAnalysis {
    inner: Analysis,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(EcoStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.class().into(), format!("{}: {e}", e.class().code()))
    }
}

fn argument(msg: &str) -> Failure {
    Failure(EcoStatus::EcoErrArgument, msg.to_string())
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EcoStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EcoStatus::EcoOk,
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
            EcoStatus::EcoErrPanic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(argument(&format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| argument(&format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| argument(&format!("{what} is null")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| argument(&format!("{what} is null")))
}

/// Message describing the last failure on this thread, or null if the last
/// call succeeded. Valid until the next call into this library on the same
/// thread.
#[no_mangle]
pub extern "C" fn eco_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eco_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build a dataset from `n` responses and an `n × p` row-major predictor
/// matrix. Predictors are named `x1..xp`.
///
/// # Safety
/// `y` must point to `n` doubles, `x` to `n * p` doubles, and `out` to
/// writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn eco_dataset_new(
    y: *const f64,
    x: *const f64,
    n: usize,
    p: usize,
    out: *mut *mut EcoDataset,
) -> EcoStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        if y.is_null() || (x.is_null() && n * p > 0) {
            return Err(argument("data pointer is null"));
        }
        let y = std::slice::from_raw_parts(y, n).to_vec();
        let xs = if n * p == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(x, n * p)
        };
        let m = DMatrix::from_row_slice(n, p, xs);
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        let d = Dataset::new(y, m, names, None)?;
        *out = Box::into_raw(Box::new(EcoDataset { inner: d }));
        Ok(())
    })
}

/// Load a CSV file with a header row.
///
/// # Safety
/// String arguments must be NUL-terminated; `predictors` must point to `p`
/// such strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eco_dataset_load_csv(
    path: *const c_char,
    response: *const c_char,
    predictors: *const *const c_char,
    p: usize,
    out: *mut *mut EcoDataset,
) -> EcoStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let response = str_arg(response, "response")?;
        if predictors.is_null() && p > 0 {
            return Err(argument("predictors is null"));
        }
        let names = (0..p)
            .map(|j| str_arg(*predictors.add(j), "predictor name").map(String::from))
            .collect::<Result<Vec<_>, _>>()?;
        let d = load_csv(Path::new(path), response, &names, None)?;
        *out = Box::into_raw(Box::new(EcoDataset { inner: d }));
        Ok(())
    })
}

/// A copy of `ds` with every predictor centered and scaled to unit
/// variance.
///
/// # Safety
/// `ds` must be a live dataset handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eco_dataset_standardize(ds: *const EcoDataset, out: *mut *mut EcoDataset) -> EcoStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let d = standardize(&handle(ds, "dataset")?.inner)?;
        *out = Box::into_raw(Box::new(EcoDataset { inner: d }));
        Ok(())
    })
}

/// Number of cases, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn eco_dataset_rows(ds: *const EcoDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.n())
}

/// Number of predictors, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn eco_dataset_predictors(ds: *const EcoDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.p())
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eco_dataset_free(ds: *mut EcoDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Cross-validate every purchased set. `g <= 0` selects `g = n`;
/// `prior_p` is the prior inclusion probability of each predictor.
///
/// # Safety
/// `ds` must be a live dataset handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eco_analyze(
    ds: *const EcoDataset,
    folds: usize,
    seed: u64,
    g: f64,
    prior_p: f64,
    out: *mut *mut EcoAnalysis,
) -> EcoStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let d = &handle(ds, "dataset")?.inner;
        let prior = GPriorConfig {
            g_rule: if g > 0.0 { GRule::Fixed(g) } else { GRule::SampleSize },
            model_prior_p: prior_p,
        };
        prior.validate()?;
        let plan = make_folds(d.n(), folds, seed)?;
        let settings = CvSettings {
            prior,
            ..Default::default()
        };
        let a = analyze(d, &plan, &settings)?;
        *out = Box::into_raw(Box::new(EcoAnalysis { inner: a }));
        Ok(())
    })
}

/// # Safety
/// `a` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eco_analysis_free(a: *mut EcoAnalysis) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

unsafe fn set_arg(a: &EcoAnalysis, bits: u32) -> Result<PredictorSet, Failure> {
    Ok(PredictorSet::new(bits, a.inner.table.p)?)
}

/// Cross-validated loss of the purchased set with bitmask `bits` (bit `j`
/// set when predictor `j + 1` is purchased).
///
/// # Safety
/// `a` must be a live analysis handle and `loss` writable.
#[no_mangle]
pub unsafe extern "C" fn eco_analysis_loss(a: *const EcoAnalysis, bits: u32, loss: *mut f64) -> EcoStatus {
    guard(|| {
        let loss = out_arg(loss, "loss")?;
        let a = handle(a, "analysis")?;
        *loss = a.inner.table.loss(set_arg(a, bits)?);
        Ok(())
    })
}

/// Inclusion probability of every predictor inside the purchased set
/// `bits`, written to `probs[0..len]`; `len` must equal the predictor
/// count.
///
/// # Safety
/// `a` must be a live analysis handle and `probs` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eco_analysis_inclusion(
    a: *const EcoAnalysis,
    bits: u32,
    probs: *mut f64,
    len: usize,
) -> EcoStatus {
    guard(|| {
        let a = handle(a, "analysis")?;
        let set = set_arg(a, bits)?;
        if probs.is_null() {
            return Err(argument("probs is null"));
        }
        let src = a.inner.inclusion.for_set(set);
        if len != src.len() {
            return Err(Failure(
                EcoStatus::EcoErrConfig,
                format!("buffer holds {len} values, analysis has {} predictors", src.len()),
            ));
        }
        std::slice::from_raw_parts_mut(probs, len).copy_from_slice(src);
        Ok(())
    })
}

/// Optimal purchased set when every predictor costs `price`.
///
/// # Safety
/// `a` must be a live analysis handle; `bits` and `total` writable.
#[no_mangle]
pub unsafe extern "C" fn eco_analysis_optimal_uniform(
    a: *const EcoAnalysis,
    price: f64,
    bits: *mut u32,
    total: *mut f64,
) -> EcoStatus {
    guard(|| {
        let bits = out_arg(bits, "bits")?;
        let total = out_arg(total, "total")?;
        let a = handle(a, "analysis")?;
        let outcome = optimal_set(&a.inner.table, &CostModel::Uniform { price })?;
        *bits = outcome.optimum.bits();
        *total = outcome.best().total;
        Ok(())
    })
}

/// Best wave to start buying a predictor, given per-wave least losses
/// without it (`without[0..waves]`) and with it (`with[0..waves]`).
/// Writes the earliest minimizing wave (1-based) or 0 for no purchase.
///
/// # Safety
/// `without` and `with` must each hold `waves` doubles; `wave` and
/// `objective` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eco_optimal_wave(
    without: *const f64,
    with: *const f64,
    waves: usize,
    discount: f64,
    price: f64,
    wave: *mut u32,
    objective: *mut f64,
) -> EcoStatus {
    guard(|| {
        let wave = out_arg(wave, "wave")?;
        let objective = out_arg(objective, "objective")?;
        if without.is_null() || with.is_null() {
            return Err(argument("loss pointer is null"));
        }
        let l = std::slice::from_raw_parts(without, waves).to_vec();
        let ls = std::slice::from_raw_parts(with, waves).to_vec();
        let d = optimal_purchase_wave(&TimedPurchaseProblem::new(l, ls, discount, price)?)?;
        *wave = match d.wave {
            PurchaseWave::At(t) => t as u32,
            PurchaseWave::Never => 0,
        };
        *objective = d.objective;
        Ok(())
    })
}
