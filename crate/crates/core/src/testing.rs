//! Differential unit tests: generation, the two-step validity protocol, and
//! execution against candidates.
//!
//! A suite is a driver (`main`) appended to a translation unit holding the
//! context, the original function and a `<name>_opt` slot. The driver exits
//! 0 when every trial agrees and 1 with a `TRIAL ... PARAM ... EXPECTED ...
//! ACTUAL ...` witness line on the first divergence.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::compiler::{CompileStatus, Compiler};
use crate::corpus::{defines_function, find_function_definitions, rename_function, FunctionCase, FunctionSignature, ParamKind};
use crate::harness::{self, ComparePolicy, ValueRange};
use crate::llm::{extract_candidate, LlmClient, PromptKind};
use crate::process::run_captured;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteGenerator {
    Llm,
    Template,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestConfig {
    pub generator: SuiteGenerator,
    pub trials: u32,
    pub seed: u64,
    /// Range for float scalars and float arrays unless overridden by name.
    pub float_range: ValueRange,
    pub int_scalar_range: ValueRange,
    pub int_array_range: ValueRange,
    /// Per-parameter overrides, keyed by parameter name.
    pub ranges: BTreeMap<String, ValueRange>,
    pub policy: ComparePolicy,
    pub run_timeout_secs: u64,
    pub max_generation_attempts: u32,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            generator: SuiteGenerator::Llm,
            trials: 100,
            seed: 20250101,
            float_range: ValueRange { lo: -1.0, hi: 1.0 },
            int_scalar_range: ValueRange { lo: 1.0, hi: 4.0 },
            int_array_range: ValueRange { lo: -8.0, hi: 8.0 },
            ranges: BTreeMap::new(),
            policy: ComparePolicy::default(),
            run_timeout_secs: 30,
            max_generation_attempts: 3,
        }
    }
}

impl TestConfig {
    pub fn ranges_for(&self, sig: &FunctionSignature) -> Vec<ValueRange> {
        sig.params
            .iter()
            .map(|p| {
                if let Some(r) = self.ranges.get(&p.name) {
                    return *r;
                }
                match &p.kind {
                    ParamKind::ScalarIn { numeric } if !numeric.is_float() => self.int_scalar_range,
                    ParamKind::ArrayInOut { element, .. } if !element.is_float() => self.int_array_range,
                    _ => self.float_range,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub seed: u64,
    pub trials: u32,
    pub value_ranges: BTreeMap<String, ValueRange>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteOrigin {
    Template,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSuite {
    /// The driver appended after the candidate slot.
    pub harness_source: String,
    pub input_spec: InputSpec,
    pub validated: bool,
    pub origin: SuiteOrigin,
    #[serde(default)]
    pub validation_reason: Option<String>,
    /// What happened during generation (failed attempts, fallbacks).
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    pub trial: u64,
    pub param: String,
    pub expected: String,
    pub actual: String,
    /// `INPUT <name> MIN <v> MAX <v>` lines printed with the witness.
    pub input_summary: Vec<String>,
}

impl Divergence {
    /// Minimum generated value of `param` in the diverging trial, if printed.
    pub fn input_min(&self, param: &str) -> Option<f64> {
        self.input_summary.iter().find_map(|l| {
            let mut it = l.split_whitespace();
            match (it.next(), it.next(), it.next(), it.next()) {
                (Some("INPUT"), Some(name), Some("MIN"), Some(v)) if name == param => v.parse().ok(),
                _ => None,
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum UnitTestResult {
    Pass { trials: Option<u64> },
    Fail { first_divergence: Divergence },
    BuildFail { diagnostic: String },
    RuntimeCrash { info: String },
    Timeout { secs: u64 },
}

impl UnitTestResult {
    pub fn is_pass(&self) -> bool {
        matches!(self, UnitTestResult::Pass { .. })
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, UnitTestResult::Fail { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            UnitTestResult::Pass { .. } => "pass",
            UnitTestResult::Fail { .. } => "fail",
            UnitTestResult::BuildFail { .. } => "build_fail",
            UnitTestResult::RuntimeCrash { .. } => "runtime_crash",
            UnitTestResult::Timeout { .. } => "timeout",
        }
    }

    /// Feedback text for the next refine prompt.
    pub fn describe(&self) -> String {
        match self {
            UnitTestResult::Pass { trials } => match trials {
                Some(n) => format!("Unit tests passed ({n} random trials agree with the original)."),
                None => "Unit tests passed.".to_string(),
            },
            UnitTestResult::Fail { first_divergence: d } => {
                let mut s = format!(
                    "Unit tests FAILED: in trial {} the output `{}` differs: original produced {}, candidate produced {}.",
                    d.trial, d.param, d.expected, d.actual
                );
                if !d.input_summary.is_empty() {
                    s.push_str("\nInputs of that trial:\n");
                    for l in &d.input_summary {
                        s.push_str(&format!("  {l}\n"));
                    }
                }
                s
            }
            UnitTestResult::BuildFail { diagnostic } => format!("The test harness failed to build:\n{diagnostic}"),
            UnitTestResult::RuntimeCrash { info } => format!("The test harness crashed: {info}"),
            UnitTestResult::Timeout { secs } => {
                format!("The test harness did not finish within {secs}s; the candidate may not terminate.")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validation {
    pub validated: bool,
    pub reason: Option<String>,
}

fn witness_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?m)^TRIAL (\d+) PARAM (\S+) EXPECTED (\S+) ACTUAL (\S+)\s*$").unwrap())
}

fn pass_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?m)^PASS (\d+)\s*$").unwrap())
}

pub fn parse_witness(stdout: &str) -> Option<Divergence> {
    let c = witness_re().captures(stdout)?;
    Some(Divergence {
        trial: c[1].parse().ok()?,
        param: c[2].to_string(),
        expected: c[3].to_string(),
        actual: c[4].to_string(),
        input_summary: stdout.lines().filter(|l| l.starts_with("INPUT ")).map(str::to_string).collect(),
    })
}

/// Candidate text as it goes into the slot: renamed to `<name>_opt` when it
/// defines the original name instead.
pub fn slot_text(candidate: &str, sig: &FunctionSignature) -> String {
    let slot = sig.slot_name();
    if defines_function(candidate, &slot) || !defines_function(candidate, &sig.name) {
        candidate.to_string()
    } else {
        rename_function(candidate, &sig.name, &slot)
    }
}

fn original_header(case: &FunctionCase) -> String {
    let spans = find_function_definitions(&case.source_text);
    spans
        .iter()
        .find(|s| s.name == case.signature.name)
        .map(|s| s.header.clone())
        .unwrap_or_default()
}

/// The sensitivity mutant placed in the slot: an empty body for void
/// functions, otherwise the original's result with every bit inverted.
pub fn mutant_text(case: &FunctionCase) -> String {
    let sig = &case.signature;
    let header = rename_function(&original_header(case), &sig.name, &sig.slot_name());
    if sig.is_void() {
        return format!("{header}\n{{\n}}\n");
    }
    let args: Vec<&str> = sig.params.iter().map(|p| p.name.as_str()).collect();
    format!(
        "{header}\n{{\n    {ret} r = {name}({args});\n    unsigned char *q = (unsigned char *)&r;\n    for (size_t i = 0; i < sizeof r; i++)\n        q[i] = (unsigned char)~q[i];\n    return r;\n}}\n",
        ret = sig.return_c_type,
        name = sig.name,
        args = args.join(", ")
    )
}

fn input_spec(case: &FunctionCase, cfg: &TestConfig) -> InputSpec {
    let ranges = cfg.ranges_for(&case.signature);
    InputSpec {
        seed: cfg.seed,
        trials: cfg.trials,
        value_ranges: case.signature.params.iter().map(|p| p.name.clone()).zip(ranges).collect(),
    }
}

/// The built-in differential suite (not yet validated).
pub fn template_suite(case: &FunctionCase, cfg: &TestConfig) -> TestSuite {
    let ranges = cfg.ranges_for(&case.signature);
    TestSuite {
        harness_source: harness::differential_driver(&case.signature, &ranges, cfg.trials, cfg.seed, &cfg.policy),
        input_spec: input_spec(case, cfg),
        validated: false,
        origin: SuiteOrigin::Template,
        validation_reason: None,
        notes: Vec::new(),
    }
}

fn test_generation_slots(case: &FunctionCase, cfg: &TestConfig) -> BTreeMap<&'static str, String> {
    let spec = input_spec(case, cfg);
    let ranges: String = case
        .signature
        .params
        .iter()
        .map(|p| {
            let r = spec.value_ranges[&p.name];
            format!("  - {}: uniform in [{}, {}]\n", p.name, r.lo, r.hi)
        })
        .collect();
    BTreeMap::from([
        ("name", case.signature.name.clone()),
        ("slot_name", case.signature.slot_name()),
        ("context", case.context_text.trim().to_string()),
        ("source", case.source_text.trim().to_string()),
        ("signature", case.signature.describe()),
        ("trials", cfg.trials.to_string()),
        ("seed", cfg.seed.to_string()),
        ("ranges", ranges.trim_end().to_string()),
    ])
}

/// Asks the model for a driver, retrying while the driver does not build
/// against the original; falls back to the template suite afterwards or on
/// provider failure. The returned suite is not yet validated.
pub fn generate_tests(
    llm: Option<&LlmClient>,
    case: &FunctionCase,
    compiler: &Compiler,
    cfg: &TestConfig,
    scratch: &Path,
) -> TestSuite {
    let mut notes = Vec::new();
    if let (Some(llm), SuiteGenerator::Llm) = (llm, cfg.generator) {
        let slots = test_generation_slots(case, cfg);
        let baseline = rename_function(&case.source_text, &case.signature.name, &case.signature.slot_name());
        for attempt in 1..=cfg.max_generation_attempts {
            let text = match llm.complete(PromptKind::TestGeneration, &slots) {
                Ok(c) => c.text,
                Err(e) => {
                    notes.push(format!("test generation attempt {attempt}: {e}"));
                    break;
                }
            };
            let driver = match extract_candidate(&text) {
                Ok(d) => d,
                Err(e) => {
                    notes.push(format!("test generation attempt {attempt}: {e}"));
                    continue;
                }
            };
            let unit = harness::unit(case, &case.source_text, &baseline, &driver);
            match compiler.build_executable(&format!("gen_{attempt}"), &unit, scratch, &case.extra_flags) {
                Ok(r) if r.is_ok() => {
                    return TestSuite {
                        harness_source: driver,
                        input_spec: input_spec(case, cfg),
                        validated: false,
                        origin: SuiteOrigin::Llm,
                        validation_reason: None,
                        notes,
                    };
                }
                Ok(r) => {
                    let diag = match r.status {
                        CompileStatus::Error(d) => d,
                        CompileStatus::Ok => String::new(),
                    };
                    notes.push(format!(
                        "test generation attempt {attempt}: driver does not build against the original: {}",
                        first_lines(&diag, 3)
                    ));
                }
                Err(e) => notes.push(format!("test generation attempt {attempt}: {e}")),
            }
        }
        notes.push("falling back to the template generator".to_string());
    }
    let mut suite = template_suite(case, cfg);
    suite.notes = notes;
    suite
}

fn first_lines(s: &str, n: usize) -> String {
    s.lines().take(n).collect::<Vec<_>>().join(" | ")
}

/// Builds the suite with `slot_fn` in the candidate slot and runs it.
#[allow(clippy::too_many_arguments)]
fn run_with_slot(
    suite: &TestSuite,
    case: &FunctionCase,
    slot_fn: &str,
    compiler: &Compiler,
    cfg: &TestConfig,
    scratch: &Path,
    stem: &str,
    args: &[String],
) -> UnitTestResult {
    let unit = harness::unit(case, &case.source_text, slot_fn, &suite.harness_source);
    let build = match compiler.build_executable(stem, &unit, scratch, &case.extra_flags) {
        Ok(b) => b,
        Err(e) => return UnitTestResult::BuildFail { diagnostic: e.to_string() },
    };
    if let CompileStatus::Error(diagnostic) = build.status {
        return UnitTestResult::BuildFail { diagnostic };
    }
    let exe = scratch.join(stem);
    let mut cmd = Command::new(&exe);
    cmd.args(args).current_dir(scratch);
    let out = match run_captured(&mut cmd, Duration::from_secs(cfg.run_timeout_secs), scratch, &format!("{stem}.run")) {
        Ok(o) => o,
        Err(e) => return UnitTestResult::RuntimeCrash { info: format!("cannot start harness: {e}") },
    };
    if out.timed_out() {
        return UnitTestResult::Timeout { secs: cfg.run_timeout_secs };
    }
    match out.exit_code() {
        Some(0) => UnitTestResult::Pass {
            trials: pass_re().captures(&out.stdout).and_then(|c| c[1].parse().ok()),
        },
        Some(1) => match parse_witness(&out.stdout) {
            Some(d) => UnitTestResult::Fail { first_divergence: d },
            None => UnitTestResult::RuntimeCrash {
                info: format!("harness reported a divergence without a witness line: {}", first_lines(&out.stdout, 3)),
            },
        },
        _ => UnitTestResult::RuntimeCrash {
            info: format!("{}; stderr: {}", out.describe_exit(), first_lines(out.stderr.trim(), 5)),
        },
    }
}

/// Runs the suite against `candidate`.
pub fn run_tests(
    suite: &TestSuite,
    candidate: &str,
    case: &FunctionCase,
    compiler: &Compiler,
    cfg: &TestConfig,
    scratch: &Path,
) -> UnitTestResult {
    run_with_slot(suite, case, &slot_text(candidate, &case.signature), compiler, cfg, scratch, "tests", &[])
}

/// Re-runs only trial `trial` of a template suite.
pub fn replay_trial(
    suite: &TestSuite,
    candidate: &str,
    case: &FunctionCase,
    compiler: &Compiler,
    cfg: &TestConfig,
    scratch: &Path,
    trial: u64,
) -> UnitTestResult {
    let args = ["--trial".to_string(), trial.to_string()];
    run_with_slot(suite, case, &slot_text(candidate, &case.signature), compiler, cfg, scratch, "replay", &args)
}

/// Baseline equivalence (the original in the slot must pass), then
/// sensitivity (the mutant in the slot must fail).
pub fn validate_suite(
    suite: &TestSuite,
    case: &FunctionCase,
    compiler: &Compiler,
    cfg: &TestConfig,
    scratch: &Path,
) -> Validation {
    if case.has_empty_body() {
        return Validation {
            validated: false,
            reason: Some(
                "excluded: the original body is empty, so the empty-body mutant cannot be told apart".to_string(),
            ),
        };
    }
    let sig = &case.signature;
    let baseline = rename_function(&case.source_text, &sig.name, &sig.slot_name());
    match run_with_slot(suite, case, &baseline, compiler, cfg, scratch, "baseline", &[]) {
        UnitTestResult::Pass { .. } => {}
        other => {
            return Validation {
                validated: false,
                reason: Some(format!("baseline equivalence failed: {}", other.describe())),
            }
        }
    }
    let mutant = mutant_text(case);
    match run_with_slot(suite, case, &mutant, compiler, cfg, scratch, "sensitivity", &[]) {
        UnitTestResult::Fail { .. } => Validation { validated: true, reason: None },
        other => {
            let what = if sig.is_void() { "empty-body" } else { "bitwise-negated" };
            Validation {
                validated: false,
                reason: Some(format!("sensitivity check failed: the {what} mutant was not caught ({})", other.label())),
            }
        }
    }
}

/// Generates and validates a suite; an LLM suite that fails validation is
/// replaced by the template suite, which is validated in turn.
pub fn prepare_suite(
    llm: Option<&LlmClient>,
    case: &FunctionCase,
    compiler: &Compiler,
    cfg: &TestConfig,
    scratch: &Path,
) -> TestSuite {
    let mut suite = generate_tests(llm, case, compiler, cfg, scratch);
    let v = validate_suite(&suite, case, compiler, cfg, scratch);
    if !v.validated && suite.origin == SuiteOrigin::Llm && !case.has_empty_body() {
        let mut notes = suite.notes.clone();
        notes.push(format!("generated suite rejected ({}); using the template suite", v.reason.clone().unwrap_or_default()));
        suite = template_suite(case, cfg);
        suite.notes = notes;
        let v2 = validate_suite(&suite, case, compiler, cfg, scratch);
        suite.validated = v2.validated;
        suite.validation_reason = v2.reason;
        return suite;
    }
    suite.validated = v.validated;
    suite.validation_reason = v.reason;
    suite
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_signature;

    fn case(src: &str, ctx: &str) -> FunctionCase {
        FunctionCase {
            id: "t".into(),
            source_text: src.into(),
            context_text: ctx.into(),
            signature: parse_signature(src, ctx).unwrap(),
            category: None,
            origin: crate::corpus::Origin::UserFile,
            extra_flags: vec![],
        }
    }

    #[test]
    fn witness_parsing() {
        let out = "TRIAL 3 PARAM a[17] EXPECTED 0.5 ACTUAL -0.5\nINPUT a MIN -1 MAX 1\nINPUT n MIN 2 MAX 2\n";
        let d = parse_witness(out).unwrap();
        assert_eq!(d.trial, 3);
        assert_eq!(d.param, "a[17]");
        assert_eq!(d.expected, "0.5");
        assert_eq!(d.input_min("a"), Some(-1.0));
        assert_eq!(d.input_min("n"), Some(2.0));
        assert!(parse_witness("PASS 100").is_none());
    }

    #[test]
    fn slot_renaming() {
        let c = case("float f(float a[N]) { return a[0]; }", "#define N 4");
        assert_eq!(slot_text("float f(float a[N]) { return 1; }", &c.signature), "float f_opt(float a[N]) { return 1; }");
        let already = "float f_opt(float a[N]) { return f(a); }";
        assert_eq!(slot_text(already, &c.signature), already);
    }

    #[test]
    fn mutants() {
        let v = case("void g(float a[N], int n)\n{\n    a[0] = n;\n}", "#define N 4");
        let m = mutant_text(&v);
        assert!(m.starts_with("void g_opt(float a[N], int n)"));
        assert!(m.contains("{\n}"));
        let s = case("int h(int a[N], int n) { return a[n]; }", "#define N 4");
        let m = mutant_text(&s);
        assert!(m.contains("int r = h(a, n);"));
        assert!(m.contains("~q[i]"));
    }

    #[test]
    fn range_selection() {
        let c = case("float f(float a[N], int b[N], int n, double x) { return 0; }", "#define N 4");
        let mut cfg = TestConfig::default();
        cfg.ranges.insert("x".into(), ValueRange { lo: 0.0, hi: 2.0 });
        let r = cfg.ranges_for(&c.signature);
        assert_eq!(r[0], ValueRange { lo: -1.0, hi: 1.0 });
        assert_eq!(r[1], ValueRange { lo: -8.0, hi: 8.0 });
        assert_eq!(r[2], ValueRange { lo: 1.0, hi: 4.0 });
        assert_eq!(r[3], ValueRange { lo: 0.0, hi: 2.0 });
    }

    #[test]
    fn fail_carries_witness_in_description() {
        let r = UnitTestResult::Fail {
            first_divergence: Divergence {
                trial: 0,
                param: "a[1]".into(),
                expected: "1".into(),
                actual: "2".into(),
                input_summary: vec!["INPUT a MIN -1 MAX 1".into()],
            },
        };
        let d = r.describe();
        assert!(d.contains("a[1]") && d.contains("INPUT a MIN -1 MAX 1"));
    }
}
