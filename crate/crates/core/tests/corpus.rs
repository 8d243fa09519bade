mod common;

use common::{compiler, fixture_text, fixtures};
use vecrefine::compiler::{is_fully_vectorized, FlagsProfile, LoopSelection};
use vecrefine::corpus::{ingestion_check, load_corpus, NonVectorizableCategory, ParamKind};
use vecrefine::testing::{run_tests, template_suite, validate_suite, SuiteGenerator, TestConfig, UnitTestResult};

#[test]
fn tsvc_fixture_cases_are_classified_from_remarks() {
    let cc = compiler();
    let load = load_corpus(&fixtures().join("tsvc.c"), None, Some(&cc)).unwrap();
    assert!(load.rejected.is_empty(), "{:?}", load.rejected);
    let cat = |id: &str| load.cases.iter().find(|c| c.id == id).unwrap().category.clone();
    // Hand-derived from the loop shapes: a[i] = a[LEN_1D/2] + b[i] aliases the
    // store, s331 keeps the last index of a conditional, s481 exits early.
    // s311's float sum vectorizes because the pinned flags allow reassociation.
    assert_eq!(cat("s1113"), Some(NonVectorizableCategory::UnsafeDependentMemOps));
    assert_eq!(cat("s331"), Some(NonVectorizableCategory::UnidentifiedReduction));
    assert_eq!(cat("s311"), None);
    assert_eq!(cat("s481"), Some(NonVectorizableCategory::UnknownTripCount));
    assert_eq!(cat("s000"), None, "s000 vectorizes as written");
}

#[test]
fn filter_warns_about_unknown_ids() {
    let load = load_corpus(&fixtures().join("tsvc.c"), Some(&["s1113".into(), "nope".into()]), None).unwrap();
    assert_eq!(load.cases.len(), 1);
    assert_eq!(load.warnings.len(), 1);
    assert!(load.warnings[0].contains("nope"));
}

#[test]
fn skia_set_points_loads_through_a_manifest_with_context() {
    let cc = compiler();
    let load = load_corpus(&fixtures().join("skia/corpus.toml"), None, Some(&cc)).unwrap();
    assert!(load.rejected.is_empty(), "{:?}", load.rejected);
    let case = &load.cases[0];
    assert_eq!(case.id, "skia_set_points");
    assert!(case.context_text.contains("#define DIV_CAP 65"));
    let arrays = case.signature.params.iter().filter(|p| matches!(p.kind, ParamKind::ArrayInOut { .. })).count();
    assert_eq!((arrays, case.signature.params.len()), (3, 8));
    assert!(case.category.is_some(), "the original must not vectorize");
    let report = ingestion_check(case, &cc).unwrap();
    assert!(report.loops.iter().all(|l| !l.vectorized));
}

#[test]
fn skia_split_rewrite_passes_the_template_suite() {
    let cc = compiler();
    let case = load_corpus(&fixtures().join("skia/corpus.toml"), None, Some(&cc)).unwrap().cases.remove(0);
    let cfg = TestConfig { generator: SuiteGenerator::Template, ..TestConfig::default() };
    let dir = tempfile::tempdir().unwrap();
    let suite = template_suite(&case, &cfg);
    let v = validate_suite(&suite, &case, &cc, &cfg, dir.path());
    assert!(v.validated, "{:?}", v.reason);

    let opt = fixture_text("skia/set_points_opt.c");
    assert_eq!(run_tests(&suite, &opt, &case, &cc, &cfg, dir.path()), UnitTestResult::Pass { trials: Some(100) });

    // Dropping the toggle is a plausible wrong rewrite and must be caught.
    let bad = opt.replace("isScalable = !isScalable;", "");
    assert!(run_tests(&suite, &bad, &case, &cc, &cfg, dir.path()).is_fail());

    let (unit, first, last) = case.unit_with(&opt);
    let r = cc.compile("skia", &unit, FlagsProfile::Diagnose, dir.path(), &[]).unwrap();
    let report = vecrefine::compiler::parse_remarks(&r.remarks_raw);
    let sel = LoopSelection::Lines { first, last };
    // Both loops still carry a recurrence (the toggle and the running dst
    // sum), so clang 14 keeps them scalar; the rewrite is correct but gains
    // nothing here.
    assert!(!is_fully_vectorized(&report, &sel));
    assert!(report.selected(&sel).count() >= 2);
}
