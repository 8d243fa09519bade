use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use vecrefine_ffi::*;

const REMARKS: &str = "\
k.c:3:5: remark: vectorized loop (vectorization width: 4, interleaved count: 2) [-Rpass=loop-vectorize]
k.c:9:5: remark: loop not vectorized: unsafe dependent memory operations in loop. Use #pragma loop distribute(enable) to allow loop distribution to attempt to isolate the offending operations into a separate loop [-Rpass-analysis=loop-vectorize]
";

fn take(s: *mut c_char) -> Option<String> {
    if s.is_null() {
        return None;
    }
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { vr_string_free(s) };
    Some(out)
}

fn last_error() -> Option<String> {
    take(vr_last_error_message())
}

fn core_fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(rel)
}

#[test]
fn report_handle_walks_loops() {
    let text = CString::new(REMARKS).unwrap();
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { vr_parse_remarks(text.as_ptr(), &mut report) }, VrStatus::Ok);
    assert_eq!(unsafe { vr_report_loop_count(report) }, 2);
    assert_eq!(unsafe { vr_report_leftover_count(report) }, 0);

    let mut l = VrLoop { line: 0, column: 0, vectorized: false, width: 0, interleave: 0, category: VrCategory::Other };
    assert_eq!(unsafe { vr_report_get_loop(report, 0, &mut l) }, VrStatus::Ok);
    assert_eq!((l.line, l.column, l.vectorized, l.width, l.interleave), (3, 5, true, 4, 2));
    assert_eq!(l.category, VrCategory::None);
    assert_eq!(take(unsafe { vr_report_loop_reason(report, 0) }), None);

    assert_eq!(unsafe { vr_report_get_loop(report, 1, &mut l) }, VrStatus::Ok);
    assert!(!l.vectorized);
    assert_eq!(l.category, VrCategory::UnsafeDependentMemOps);
    assert!(take(unsafe { vr_report_loop_reason(report, 1) }).unwrap().starts_with("unsafe dependent"));

    assert_eq!(unsafe { vr_report_get_loop(report, 2, &mut l) }, VrStatus::OutOfRange);
    assert!(last_error().unwrap().contains("index 2"));
    unsafe { vr_report_free(report) };
}

#[test]
fn null_arguments_are_reported() {
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { vr_parse_remarks(ptr::null(), &mut report) }, VrStatus::NullArgument);
    assert!(report.is_null());
    assert!(last_error().unwrap().contains("remarks"));
    assert_eq!(unsafe { vr_report_loop_count(ptr::null()) }, 0);
    unsafe {
        vr_report_free(ptr::null_mut());
        vr_string_free(ptr::null_mut());
        vr_session_free(ptr::null_mut());
    }
}

#[test]
fn invalid_utf8_is_rejected() {
    let bad = [0xffu8, 0xfe, 0];
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { vr_parse_remarks(bad.as_ptr().cast(), &mut report) }, VrStatus::InvalidUtf8);
}

#[test]
fn successful_call_clears_the_error() {
    let mut out = 0.0;
    assert_eq!(unsafe { vr_geomean(ptr::null(), 0, &mut out) }, VrStatus::InvalidArgument);
    assert!(last_error().is_some());
    let v = [2.0, 0.5];
    assert_eq!(unsafe { vr_geomean(v.as_ptr(), v.len(), &mut out) }, VrStatus::Ok);
    assert!((out - 1.0).abs() <= 1e-12);
    assert!(last_error().is_none());
}

#[test]
fn geomean_rejects_non_positive() {
    let v = [1.0, -2.0];
    let mut out = 0.0;
    assert_eq!(unsafe { vr_geomean(v.as_ptr(), 2, &mut out) }, VrStatus::InvalidArgument);
}

#[test]
fn classification_and_cost() {
    let r = CString::new("loop not vectorized: loop contains a switch statement").unwrap();
    assert_eq!(unsafe { vr_classify_reason(r.as_ptr()) }, VrCategory::SwitchInLoop);
    assert_eq!(unsafe { vr_classify_reason(ptr::null()) }, VrCategory::Other);
    let c = vr_cost(21_900, 5_300, 0.27, 1.10);
    assert!((c - 0.011743).abs() < 1e-9);
}

#[test]
fn candidate_extraction() {
    let text = CString::new("Here:\n// VECTRANS_BEGIN\nvoid f(void) {}\n// VECTRANS_END\n").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { vr_extract_candidate(text.as_ptr(), &mut out) }, VrStatus::Ok);
    assert_eq!(take(out).unwrap().trim_end(), "void f(void) {}");
    let none = CString::new("no code here").unwrap();
    assert_eq!(unsafe { vr_extract_candidate(none.as_ptr(), &mut out) }, VrStatus::NotFound);
    assert!(out.is_null());
}

#[test]
fn session_runs_the_fixture_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = CString::new(core_fixture("run_fixture.toml").display().to_string()).unwrap();
    let out_dir = CString::new(dir.path().display().to_string()).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { vr_session_open(manifest.as_ptr(), &mut s) }, VrStatus::Ok);
    assert_eq!(unsafe { vr_session_set_output_dir(s, out_dir.as_ptr()) }, VrStatus::Ok);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { vr_session_run(s, false, &mut json) }, VrStatus::Ok, "{:?}", last_error());
    let report: serde_json::Value = serde_json::from_str(&take(json).unwrap()).unwrap();
    assert_eq!(report["attempted"], 3);
    assert_eq!(report["vectorized"], 1);
    unsafe { vr_session_free(s) };
}

#[test]
fn session_open_reports_config_errors() {
    let missing = CString::new("/nonexistent/run.toml").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { vr_session_open(missing.as_ptr(), &mut s) }, VrStatus::Config);
    assert!(s.is_null());
    assert!(last_error().unwrap().contains("/nonexistent/run.toml"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = include.join("vecrefine.h");
    assert!(header.is_file(), "build.rs did not write the header");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in ["vr_parse_remarks", "vr_session_run", "vr_last_error_message", "VR_STATUS_OK", "typedef struct VrReport VrReport"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"vecrefine.h\"\nint main(void) { VrReport *r = 0; VrStatus s = vr_parse_remarks(\"\", &r); \
         vr_report_free(r); return s == VR_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    for lang in ["c", "c++"] {
        let st = Command::new("clang")
            .args(["-x", lang, "-fsyntax-only", "-Wall", "-Werror", "-I"])
            .arg(&include)
            .arg(&src)
            .status()
            .expect("clang runs");
        assert!(st.success(), "header does not compile as {lang}");
    }
}
