mod common;

use common::{compiler, fixture_text, remarks};
use vecrefine::compiler::{is_fully_vectorized, parse_remarks, FlagsProfile, LoopSelection};
use vecrefine::corpus::NonVectorizableCategory as C;

#[test]
fn recorded_corpus_is_fully_reconstructed() {
    let (lines, records) = remarks::check_corpus().unwrap();
    assert!(lines >= 30, "only {lines} remark lines recorded");
    assert_eq!(records, remarks::expectations().len());
}

#[test]
fn every_category_appears_in_the_recorded_corpus() {
    let cats: std::collections::BTreeSet<C> = remarks::expectations().into_iter().filter_map(|e| e.category).collect();
    assert_eq!(cats.len(), 6);
}

#[test]
fn s1113_pair_reports() {
    let before = parse_remarks(&fixture_text("remarks/s1113.remarks"));
    assert!(!is_fully_vectorized(&before, &LoopSelection::All));
    let after = parse_remarks(&fixture_text("remarks/s1113_opt.remarks"));
    assert_eq!(after.loops.len(), 2);
    assert!(is_fully_vectorized(&after, &LoopSelection::All));
    assert!(!is_fully_vectorized(&after, &LoopSelection::Lines { first: 1, last: 5 }));
}

#[test]
fn live_compile_matches_the_recording() {
    let cc = compiler();
    let dir = tempfile::tempdir().unwrap();
    for stem in ["kernels", "s1113", "s1113_opt"] {
        let src = fixture_text(&format!("remarks/{stem}.c"));
        let r = cc.compile(stem, &src, FlagsProfile::Diagnose, dir.path(), &[]).unwrap();
        assert!(r.is_ok());
        assert_eq!(parse_remarks(&r.remarks_raw), parse_remarks(&fixture_text(&format!("remarks/{stem}.remarks"))));
    }
}

#[test]
fn compile_errors_are_reported_not_raised() {
    let cc = compiler();
    let dir = tempfile::tempdir().unwrap();
    let r = cc.compile("bad", "void f(void) { return 1 }\n", FlagsProfile::Diagnose, dir.path(), &[]).unwrap();
    assert!(!r.is_ok());
    assert!(r.artifact_path.is_none());
}
