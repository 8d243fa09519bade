#![allow(dead_code)]

pub mod remarks;

use std::path::PathBuf;

use vecrefine::compiler::{Compiler, CompilerConfig};
use vecrefine::corpus::{load_corpus, FunctionCase};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_text(rel: &str) -> String {
    std::fs::read_to_string(fixtures().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn compiler() -> Compiler {
    Compiler::new(CompilerConfig::default()).expect("clang is required for these tests")
}

pub fn tsvc_case(id: &str) -> FunctionCase {
    let c = compiler();
    let load = load_corpus(&fixtures().join("tsvc.c"), Some(&[id.to_string()]), Some(&c)).unwrap();
    assert!(load.rejected.is_empty(), "{:?}", load.rejected);
    load.cases.into_iter().next().unwrap_or_else(|| panic!("case {id} missing"))
}

pub fn quick_bench() -> vecrefine::bench::BenchConfig {
    vecrefine::bench::BenchConfig { runs: 3, min_run_ms: 10, ..Default::default() }
}

/// Engine over replay transcript `transcript` (file or directory), archiving
/// into `archive`. `verifier` names a script under fixtures/verifier.
pub fn engine(archive: &std::path::Path, transcript: &str, verifier: Option<&str>) -> vecrefine::engine::Engine {
    use vecrefine::llm::{LlmConfig, Provider};
    use vecrefine::verify::{Verifier, VerifierConfig};
    let verifier = verifier.map(|name| {
        let cfg = VerifierConfig { executable: Some(fixtures().join("verifier").join(name)), timeout_secs: 5, ..Default::default() };
        Verifier::new(&cfg).unwrap().unwrap()
    });
    vecrefine::engine::Engine {
        compiler: compiler(),
        verifier,
        llm: LlmConfig { provider: Provider::TranscriptReplay { path: fixtures().join(transcript) }, ..Default::default() },
        tests: vecrefine::testing::TestConfig::default(),
        bench: quick_bench(),
        config: vecrefine::engine::EngineConfig::default(),
        archive_root: archive.to_path_buf(),
    }
}
