//! C ABI over the brainrf engine.
//!
//! Every fallible function returns a [`BrfStatus`]; on failure a message is
//! available from [`brf_last_error`] on the same thread. Objects are opaque
//! handles released with their `_free` function. Optional JSON configuration
//! arguments may be NULL to use defaults.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use brainrf::cli::{execute_run, RunKind};
use brainrf::combiner::{combine_values, CombinationWeights};
use brainrf::eeg::{train, DecoderConfig, DecoderModel, DecoderScope};
use brainrf::expansion::softmax_weights;
use brainrf::harness::{generate_sessions, Dataset, ExperimentReport, GeneratorConfig};
use brainrf::io::{load_bundle, save_bundle, write_report, RunConfig};
use brainrf::metrics::{auc, average_precision_from_flags, ndcg_from_gains};
use brainrf::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidConfig = 3,
    Parse = 4,
    Integrity = 5,
    UndefinedMetric = 6,
    Training = 7,
    InvalidState = 8,
    Synthesis = 9,
    Io = 10,
    Panic = 11,
}

/// Fusion weights for the brain, click and pseudo-relevance channels.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BrfWeights {
    pub theta_bs: f64,
    pub theta_c: f64,
    pub theta_p: f64,
}

/// Opaque dataset handle.
pub struct BrfDataset(Dataset);
/// Opaque experiment report handle.
pub struct BrfReport {
    report: ExperimentReport,
    fingerprint: CString,
}
/// Opaque trained decoder handle.
pub struct BrfDecoder(DecoderModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> BrfStatus {
    match e {
        Error::Input(_) => BrfStatus::InvalidInput,
        Error::Config(_) => BrfStatus::InvalidConfig,
        Error::Parse { .. } | Error::Json(_) => BrfStatus::Parse,
        Error::Integrity(_) => BrfStatus::Integrity,
        Error::UndefinedMetric(_) => BrfStatus::UndefinedMetric,
        Error::Training(_) => BrfStatus::Training,
        Error::State(_) => BrfStatus::InvalidState,
        Error::Synthesis(_) => BrfStatus::Synthesis,
        Error::Io(_) => BrfStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BrfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BrfStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("{what} is NULL"));
            BrfStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            BrfStatus::Panic
        }
    }
}

unsafe fn slice_or_null<'a, T>(p: *const T, n: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Core(Error::Input(format!("{what} is not valid UTF-8"))))
}

unsafe fn json_or_default<T: serde::de::DeserializeOwned + Default>(p: *const c_char) -> Result<T, Fail> {
    if p.is_null() {
        return Ok(T::default());
    }
    let text = str_arg(p, "config")?;
    serde_json::from_str(text).map_err(|e| Fail::Core(Error::Config(e.to_string())))
}

/// Message for the last failed call on this thread; empty after success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn brf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn brf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// NDCG at `k` of gains listed in ranked order.
///
/// # Safety
/// `gains` must point to `n` values (or be NULL when `n == 0`); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn brf_ndcg(gains: *const u32, n: usize, k: usize, out: *mut f64) -> BrfStatus {
    guard(|| {
        let g = slice_or_null(gains, n, "gains")?;
        *out_ref(out, "out")? = ndcg_from_gains(g, k)?;
        Ok(())
    })
}

/// Average precision of a ranked relevance-flag list (nonzero = relevant).
///
/// # Safety
/// `flags` must point to `n` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn brf_average_precision(flags: *const u8, n: usize, total_relevant: usize, out: *mut f64) -> BrfStatus {
    guard(|| {
        let f: Vec<bool> = slice_or_null(flags, n, "flags")?.iter().map(|&b| b != 0).collect();
        *out_ref(out, "out")? = average_precision_from_flags(&f, total_relevant);
        Ok(())
    })
}

/// Area under the ROC curve with tie-averaged ranks.
///
/// # Safety
/// `scores` and `labels` must each point to `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn brf_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> BrfStatus {
    guard(|| {
        let s = slice_or_null(scores, n, "scores")?;
        let l: Vec<bool> = slice_or_null(labels, n, "labels")?.iter().map(|&b| b != 0).collect();
        *out_ref(out, "out")? = auc(s, &l)?;
        Ok(())
    })
}

/// Element-wise weighted fusion of three aligned score arrays into `out`.
///
/// # Safety
/// `brain`, `click`, `pseudo` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn brf_combine(
    brain: *const f64,
    click: *const f64,
    pseudo: *const f64,
    n: usize,
    weights: BrfWeights,
    out: *mut f64,
) -> BrfStatus {
    guard(|| {
        let w = CombinationWeights::new(weights.theta_bs, weights.theta_c, weights.theta_p)?;
        let (b, c, p) = (
            slice_or_null(brain, n, "brain")?,
            slice_or_null(click, n, "click")?,
            slice_or_null(pseudo, n, "pseudo")?,
        );
        if n > 0 && out.is_null() {
            return Err(Fail::Null("out"));
        }
        let values = combine_values(b, c, p, &w);
        if n > 0 {
            slice::from_raw_parts_mut(out, n).copy_from_slice(&values);
        }
        Ok(())
    })
}

/// Softmax of `n` scores into `out`.
///
/// # Safety
/// `scores` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn brf_softmax(scores: *const f64, n: usize, out: *mut f64) -> BrfStatus {
    guard(|| {
        let s = slice_or_null(scores, n, "scores")?;
        if n > 0 && out.is_null() {
            return Err(Fail::Null("out"));
        }
        let w = softmax_weights(s);
        if n > 0 {
            slice::from_raw_parts_mut(out, n).copy_from_slice(&w);
        }
        Ok(())
    })
}

/// Loads and validates a dataset directory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn brf_dataset_load(path: *const c_char, out: *mut *mut BrfDataset) -> BrfStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        let d = load_bundle(Path::new(str_arg(path, "path")?))?;
        *slot = Box::into_raw(Box::new(BrfDataset(d)));
        Ok(())
    })
}

/// Generates a synthetic cohort. `generator_json` may be NULL.
///
/// # Safety
/// `generator_json` must be NULL or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn brf_dataset_generate(generator_json: *const c_char, seed: u64, out: *mut *mut BrfDataset) -> BrfStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        let cfg: GeneratorConfig = json_or_default(generator_json)?;
        *slot = Box::into_raw(Box::new(BrfDataset(generate_sessions(&cfg, seed)?)));
        Ok(())
    })
}

/// Writes a dataset directory.
///
/// # Safety
/// `dataset` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn brf_dataset_save(dataset: *const BrfDataset, path: *const c_char) -> BrfStatus {
    guard(|| {
        let d = dataset.as_ref().ok_or(Fail::Null("dataset"))?;
        save_bundle(&d.0, Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn brf_dataset_session_count(dataset: *const BrfDataset, out: *mut usize) -> BrfStatus {
    guard(|| {
        let d = dataset.as_ref().ok_or(Fail::Null("dataset"))?;
        *out_ref(out, "out")? = d.0.sessions.len();
        Ok(())
    })
}

/// Releases a dataset. NULL is ignored.
///
/// # Safety
/// `dataset` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn brf_dataset_free(dataset: *mut BrfDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Runs an experiment. `kind` is "irf", "rrf" or "adaptive"; `config_json`
/// is a run configuration or NULL for defaults.
///
/// # Safety
/// Pointers must be valid as documented; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn brf_run(
    dataset: *const BrfDataset,
    kind: *const c_char,
    config_json: *const c_char,
    out: *mut *mut BrfReport,
) -> BrfStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        let d = dataset.as_ref().ok_or(Fail::Null("dataset"))?;
        let kind: RunKind = str_arg(kind, "kind")?.parse()?;
        let cfg: RunConfig = json_or_default(config_json)?;
        let report = execute_run(kind, &d.0, &cfg)?;
        let fingerprint = CString::new(report.fingerprint.clone()).expect("hex has no NUL");
        *slot = Box::into_raw(Box::new(BrfReport { report, fingerprint }));
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn brf_report_shape(
    report: *const BrfReport,
    rows: *mut usize,
    methods: *mut usize,
    columns: *mut usize,
) -> BrfStatus {
    guard(|| {
        let r = &report.as_ref().ok_or(Fail::Null("report"))?.report;
        *out_ref(rows, "rows")? = r.rows.len();
        *out_ref(methods, "methods")? = r.methods.len();
        *out_ref(columns, "columns")? = r.columns.len();
        Ok(())
    })
}

/// Mean of one method's metric column over all rows.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn brf_report_aggregate(report: *const BrfReport, method: usize, column: usize, out: *mut f64) -> BrfStatus {
    guard(|| {
        let r = &report.as_ref().ok_or(Fail::Null("report"))?.report;
        let v = r
            .aggregates
            .get(method)
            .and_then(|m| m.get(column))
            .ok_or_else(|| Error::Input(format!("no aggregate at method {method}, column {column}")))?;
        *out_ref(out, "out")? = *v;
        Ok(())
    })
}

/// Hex SHA-256 fingerprint, owned by the report; NULL for a NULL handle.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn brf_report_fingerprint(report: *const BrfReport) -> *const c_char {
    report.as_ref().map_or(ptr::null(), |r| r.fingerprint.as_ptr())
}

/// Writes `report.tsv` and `summary.json` into `dir`.
///
/// # Safety
/// `report` must be a live handle; `dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn brf_report_write(report: *const BrfReport, dir: *const c_char) -> BrfStatus {
    guard(|| {
        let r = report.as_ref().ok_or(Fail::Null("report"))?;
        write_report(&r.report, Path::new(str_arg(dir, "dir")?))?;
        Ok(())
    })
}

/// Releases a report. NULL is ignored.
///
/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn brf_report_free(report: *mut BrfReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Trains a decoder on `rows` row-major feature vectors of length `dim`.
/// `config_json` holds decoder settings or is NULL.
///
/// # Safety
/// `features` must hold `rows * dim` doubles and `labels` `rows` bytes.
#[no_mangle]
pub unsafe extern "C" fn brf_decoder_train(
    features: *const f64,
    rows: usize,
    dim: usize,
    labels: *const u8,
    config_json: *const c_char,
    out: *mut *mut BrfDecoder,
) -> BrfStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        let total = rows.checked_mul(dim).ok_or_else(|| Error::Input("feature matrix too large".into()))?;
        let x = slice_or_null(features, total, "features")?;
        let y: Vec<bool> = slice_or_null(labels, rows, "labels")?.iter().map(|&b| b != 0).collect();
        if dim == 0 {
            return Err(Error::Input("feature dimension must be positive".into()).into());
        }
        let cfg: DecoderConfig = json_or_default(config_json)?;
        let rows: Vec<&[f64]> = x.chunks_exact(dim).collect();
        *slot = Box::into_raw(Box::new(BrfDecoder(train(&rows, &y, DecoderScope::Generalized, &cfg)?)));
        Ok(())
    })
}

/// Calibrated relevance probability for one feature vector.
///
/// # Safety
/// `decoder` must be a live handle; `feature` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn brf_decoder_predict(decoder: *const BrfDecoder, feature: *const f64, dim: usize, out: *mut f64) -> BrfStatus {
    guard(|| {
        let d = decoder.as_ref().ok_or(Fail::Null("decoder"))?;
        let x = slice_or_null(feature, dim, "feature")?;
        *out_ref(out, "out")? = d.0.predict(x)?;
        Ok(())
    })
}

/// Releases a decoder. NULL is ignored.
///
/// # Safety
/// `decoder` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn brf_decoder_free(decoder: *mut BrfDecoder) {
    if !decoder.is_null() {
        drop(Box::from_raw(decoder));
    }
}
