//! C ABI over the vecrefine pipeline.
//!
//! Every entry point returns a `VrStatus` (or a plain value where nothing can
//! fail), never unwinds across the boundary, and records a message for the
//! calling thread that `vr_last_error_message` hands back. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use vecrefine::cli::{execute, CliError, RunManifest};
use vecrefine::compiler::{parse_remarks, VectorizationReport};
use vecrefine::corpus::{classify_reason, NonVectorizableCategory};
use vecrefine::llm::{extract_candidate, CostLedger, Usage};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VrStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    NotFound = 4,
    OutOfRange = 5,
    Config = 6,
    ToolMissing = 7,
    Failed = 8,
    Panic = 9,
}

/// Failure category of a loop the vectorizer rejected.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VrCategory {
    /// The loop was vectorized.
    None = 0,
    UnsafeDependentMemOps = 1,
    UnidentifiedReduction = 2,
    UnknownArrayBounds = 3,
    UnknownTripCount = 4,
    UnvectorizableInstr = 5,
    SwitchInLoop = 6,
    Other = 7,
}

impl From<&NonVectorizableCategory> for VrCategory {
    fn from(c: &NonVectorizableCategory) -> Self {
        match c {
            NonVectorizableCategory::UnsafeDependentMemOps => VrCategory::UnsafeDependentMemOps,
            NonVectorizableCategory::UnidentifiedReduction => VrCategory::UnidentifiedReduction,
            NonVectorizableCategory::UnknownArrayBounds => VrCategory::UnknownArrayBounds,
            NonVectorizableCategory::UnknownTripCount => VrCategory::UnknownTripCount,
            NonVectorizableCategory::UnvectorizableInstr => VrCategory::UnvectorizableInstr,
            NonVectorizableCategory::SwitchInLoop => VrCategory::SwitchInLoop,
            NonVectorizableCategory::Other(_) => VrCategory::Other,
        }
    }
}

/// One loop of a parsed report. Width and interleave are 0 when absent.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VrLoop {
    pub line: u32,
    pub column: u32,
    pub vectorized: bool,
    pub width: u32,
    pub interleave: u32,
    pub category: VrCategory,
}

/// Parsed vectorization remarks.
pub struct VrReport {
    inner: VectorizationReport,
}

/// A loaded run manifest.
pub struct VrSession {
    manifest: RunManifest,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: VrStatus, msg: impl Into<String>) -> VrStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning a panic into `VrStatus::Panic`.
fn guard(f: impl FnOnce() -> VrStatus) -> VrStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(VrStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

/// Borrows a C string argument as UTF-8.
unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, VrStatus> {
    if p.is_null() {
        return Err(fail(VrStatus::NullArgument, format!("`{what}` is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(VrStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

fn cli_status(e: &CliError) -> VrStatus {
    match e {
        CliError::Config(_) | CliError::Schema(_) => VrStatus::Config,
        CliError::ToolMissing(_) => VrStatus::ToolMissing,
        CliError::Other(_) => VrStatus::Failed,
    }
}

/// Message of the last failed call on this thread, or NULL. The caller owns
/// the returned string and releases it with `vr_string_free`.
#[no_mangle]
pub extern "C" fn vr_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |m| m.clone().into_raw()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn vr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses clang `-Rpass=loop-vectorize` / `-Rpass-analysis=loop-vectorize`
/// output into a report handle.
///
/// # Safety
/// `remarks` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_parse_remarks(remarks: *const c_char, out: *mut *mut VrReport) -> VrStatus {
    guard(|| {
        if out.is_null() {
            return fail(VrStatus::NullArgument, "`out` is NULL");
        }
        *out = ptr::null_mut();
        let text = match str_arg(remarks, "remarks") {
            Ok(t) => t,
            Err(s) => return s,
        };
        *out = Box::into_raw(Box::new(VrReport { inner: parse_remarks(text) }));
        VrStatus::Ok
    })
}

/// Number of loop records in `report`; 0 for NULL.
///
/// # Safety
/// `report` must be NULL or a live handle from `vr_parse_remarks`.
#[no_mangle]
pub unsafe extern "C" fn vr_report_loop_count(report: *const VrReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.loops.len())
}

/// Number of remark lines that could not be attributed to a record.
///
/// # Safety
/// `report` must be NULL or a live handle from `vr_parse_remarks`.
#[no_mangle]
pub unsafe extern "C" fn vr_report_leftover_count(report: *const VrReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.leftovers.len())
}

/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_report_get_loop(report: *const VrReport, index: usize, out: *mut VrLoop) -> VrStatus {
    guard(|| {
        let (Some(r), false) = (report.as_ref(), out.is_null()) else {
            return fail(VrStatus::NullArgument, "`report` or `out` is NULL");
        };
        let Some(l) = r.inner.loops.get(index) else {
            return fail(VrStatus::OutOfRange, format!("loop index {index} of {}", r.inner.loops.len()));
        };
        *out = VrLoop {
            line: l.location.line,
            column: l.location.column,
            vectorized: l.vectorized,
            width: l.width.unwrap_or(0),
            interleave: l.interleave.unwrap_or(0),
            category: l.reason.as_deref().map_or(VrCategory::None, |s| (&classify_reason(s)).into()),
        };
        VrStatus::Ok
    })
}

/// The verbatim failure reason of loop `index`, or NULL when the loop was
/// vectorized or the index is out of range. Free with `vr_string_free`.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vr_report_loop_reason(report: *const VrReport, index: usize) -> *mut c_char {
    report
        .as_ref()
        .and_then(|r| r.inner.loops.get(index))
        .and_then(|l| l.reason.clone())
        .map_or(ptr::null_mut(), into_c_string)
}

/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vr_report_free(report: *mut VrReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Maps a vectorizer failure reason to its category; NULL or non-UTF-8 input
/// yields `Other`.
///
/// # Safety
/// `reason` must be NULL or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vr_classify_reason(reason: *const c_char) -> VrCategory {
    match str_arg(reason, "reason") {
        Ok(r) => (&classify_reason(r)).into(),
        Err(_) => VrCategory::Other,
    }
}

/// Extracts the code between the begin/end markers of a model response.
/// `VR_STATUS_NOT_FOUND` when the markers are missing.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable. The string written
/// to `out` is freed with `vr_string_free`.
#[no_mangle]
pub unsafe extern "C" fn vr_extract_candidate(text: *const c_char, out: *mut *mut c_char) -> VrStatus {
    guard(|| {
        if out.is_null() {
            return fail(VrStatus::NullArgument, "`out` is NULL");
        }
        *out = ptr::null_mut();
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match extract_candidate(text) {
            Ok(code) => {
                *out = into_c_string(code);
                VrStatus::Ok
            }
            Err(e) => fail(VrStatus::NotFound, e.to_string()),
        }
    })
}

/// Geometric mean of `len` positive values.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_geomean(values: *const f64, len: usize, out: *mut f64) -> VrStatus {
    guard(|| {
        if out.is_null() || (values.is_null() && len > 0) {
            return fail(VrStatus::NullArgument, "`values` or `out` is NULL");
        }
        let v = if len == 0 { &[][..] } else { std::slice::from_raw_parts(values, len) };
        match vecrefine::bench::geomean(v) {
            Ok(g) => {
                *out = g;
                VrStatus::Ok
            }
            Err(e) => fail(VrStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Dollar cost of a token count at per-million prices.
#[no_mangle]
pub extern "C" fn vr_cost(input_tokens: u64, output_tokens: u64, price_in_per_million: f64, price_out_per_million: f64) -> f64 {
    let mut l = CostLedger::new(price_in_per_million, price_out_per_million);
    l.add(Usage { input: input_tokens, output: output_tokens });
    l.cost()
}

/// Loads a run manifest. Relative paths inside it resolve against its directory.
///
/// # Safety
/// `manifest_path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_session_open(manifest_path: *const c_char, out: *mut *mut VrSession) -> VrStatus {
    guard(|| {
        if out.is_null() {
            return fail(VrStatus::NullArgument, "`out` is NULL");
        }
        *out = ptr::null_mut();
        let path = match str_arg(manifest_path, "manifest_path") {
            Ok(p) => PathBuf::from(p),
            Err(s) => return s,
        };
        match RunManifest::load(&path) {
            Ok(manifest) => {
                *out = Box::into_raw(Box::new(VrSession { manifest }));
                VrStatus::Ok
            }
            Err(e) => fail(cli_status(&e), e.to_string()),
        }
    })
}

/// Overrides the archive directory of an open session.
///
/// # Safety
/// `session` must be a live handle; `dir` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vr_session_set_output_dir(session: *mut VrSession, dir: *const c_char) -> VrStatus {
    guard(|| {
        let Some(s) = session.as_mut() else { return fail(VrStatus::NullArgument, "`session` is NULL") };
        match str_arg(dir, "dir") {
            Ok(d) => {
                s.manifest.output_dir = PathBuf::from(d);
                VrStatus::Ok
            }
            Err(st) => st,
        }
    })
}

/// Runs every case of the session and writes the coverage report JSON to
/// `report_json` (free with `vr_string_free`). Benchmarks run when
/// `with_bench` is true and the manifest enables them.
///
/// # Safety
/// `session` must be a live handle; `report_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_session_run(session: *mut VrSession, with_bench: bool, report_json: *mut *mut c_char) -> VrStatus {
    guard(|| {
        let Some(s) = session.as_ref() else { return fail(VrStatus::NullArgument, "`session` is NULL") };
        if report_json.is_null() {
            return fail(VrStatus::NullArgument, "`report_json` is NULL");
        }
        *report_json = ptr::null_mut();
        if let Err(e) = execute(&s.manifest, with_bench) {
            return fail(cli_status(&e), e.to_string());
        }
        let path = s.manifest.output_dir.join("report.json");
        match std::fs::read_to_string(&path) {
            Ok(text) => {
                *report_json = into_c_string(text);
                VrStatus::Ok
            }
            Err(e) => fail(VrStatus::Failed, format!("{}: {e}", path.display())),
        }
    })
}

/// # Safety
/// `session` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vr_session_free(session: *mut VrSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}
