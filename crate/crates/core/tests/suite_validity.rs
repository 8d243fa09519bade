mod common;

use std::path::PathBuf;

use common::{compiler, fixtures, tsvc_case};
use vecrefine::testing::{template_suite, validate_suite, SuiteGenerator, SuiteOrigin, TestConfig, TestSuite};

/// Each fixture driver names its case on the first line: `// case: s1113`.
pub fn suite_fixtures(kind: &str) -> Vec<(PathBuf, String, String)> {
    let dir = fixtures().join("suites").join(kind);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "c"))
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let case = text
                .lines()
                .next()
                .and_then(|l| l.strip_prefix("// case:"))
                .unwrap_or_else(|| panic!("{} lacks a case header", p.display()))
                .trim()
                .to_string();
            (p, case, text)
        })
        .collect();
    out.sort();
    out
}

fn suite_from(driver: &str, case: &vecrefine::corpus::FunctionCase, cfg: &TestConfig) -> TestSuite {
    let mut s = template_suite(case, cfg);
    s.harness_source = driver.to_string();
    s.origin = SuiteOrigin::Llm;
    s.validated = false;
    s
}

fn cfg() -> TestConfig {
    TestConfig { generator: SuiteGenerator::Template, ..TestConfig::default() }
}

#[test]
fn every_invalid_fixture_suite_is_rejected() {
    let cc = compiler();
    let cfg = cfg();
    let dir = tempfile::tempdir().unwrap();
    let fx = suite_fixtures("invalid");
    assert!(fx.len() >= 10);
    for (path, id, text) in fx {
        let case = tsvc_case(&id);
        let v = validate_suite(&suite_from(&text, &case, &cfg), &case, &cc, &cfg, dir.path());
        assert!(!v.validated, "{} was accepted", path.display());
        assert!(v.reason.is_some());
    }
}

#[test]
fn every_valid_fixture_suite_is_accepted() {
    let cc = compiler();
    let cfg = cfg();
    let dir = tempfile::tempdir().unwrap();
    let fx = suite_fixtures("valid");
    assert!(fx.len() >= 5);
    for (path, id, text) in fx {
        let case = tsvc_case(&id);
        let v = validate_suite(&suite_from(&text, &case, &cfg), &case, &cc, &cfg, dir.path());
        assert!(v.validated, "{} rejected: {:?}", path.display(), v.reason);
    }
}

#[test]
fn rejection_reasons_name_the_failing_check() {
    let cc = compiler();
    let cfg = cfg();
    let dir = tempfile::tempdir().unwrap();
    let case = tsvc_case("s1113");
    let by_name = |n: &str| {
        let (_, _, text) = suite_fixtures("invalid").into_iter().find(|(p, _, _)| p.ends_with(n)).unwrap();
        validate_suite(&suite_from(&text, &case, &cfg), &case, &cc, &cfg, dir.path()).reason.unwrap()
    };
    assert!(by_name("i02_wrong_array.c").starts_with("sensitivity"));
    assert!(by_name("i07_always_fails.c").starts_with("baseline"));
    assert!(by_name("i08_does_not_build.c").starts_with("baseline"));
}
