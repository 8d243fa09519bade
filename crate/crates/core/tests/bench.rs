mod common;

use std::time::Instant;

use common::{compiler, fixture_text, quick_bench, tsvc_case};
use vecrefine::bench::{measure, BenchError};
use vecrefine::testing::TestConfig;

#[test]
fn s1113_split_is_faster_and_checksums_agree() {
    let case = tsvc_case("s1113");
    let cc = compiler();
    let dir = tempfile::tempdir().unwrap();
    let ranges = TestConfig::default().ranges_for(&case.signature);
    let rec = measure(&case, &fixture_text("candidates/s1113_opt.c"), &ranges, &cc, &quick_bench(), dir.path()).unwrap();
    assert!(rec.checksum_match);
    assert!(rec.speedup > 1.0, "speedup {}", rec.speedup);
    assert!(rec.reps >= 1);
    assert!((rec.speedup - rec.t_original / rec.t_candidate).abs() < 1e-9);
}

#[test]
fn self_comparison_is_close_to_one() {
    let case = tsvc_case("s000");
    let cc = compiler();
    let dir = tempfile::tempdir().unwrap();
    let ranges = TestConfig::default().ranges_for(&case.signature);
    let t0 = Instant::now();
    let rec = measure(&case, &case.source_text, &ranges, &cc, &quick_bench(), dir.path()).unwrap();
    assert!(rec.checksum_match);
    assert_eq!(rec.checksum_original, rec.checksum_candidate);
    assert!((0.8..=1.25).contains(&rec.speedup), "speedup {}", rec.speedup);
    assert!(t0.elapsed().as_secs() < 30);
}

#[test]
fn wrong_candidate_is_a_checksum_mismatch() {
    let case = tsvc_case("s1113");
    let cc = compiler();
    let dir = tempfile::tempdir().unwrap();
    let ranges = TestConfig::default().ranges_for(&case.signature);
    let r = measure(&case, &fixture_text("candidates/s1113_minus.c"), &ranges, &cc, &quick_bench(), dir.path());
    let Err(BenchError::ChecksumMismatch(rec)) = r else { panic!("{r:?}") };
    assert!(!rec.checksum_match);
}

#[test]
fn candidate_that_does_not_build_is_reported() {
    let case = tsvc_case("s1113");
    let cc = compiler();
    let dir = tempfile::tempdir().unwrap();
    let ranges = TestConfig::default().ranges_for(&case.signature);
    let r = measure(&case, "void s1113_opt(int", &ranges, &cc, &quick_bench(), dir.path());
    assert!(matches!(r, Err(BenchError::BuildFail(_))), "{r:?}");
}
