//! The feedback/refine iteration controller.
//!
//! Each round sends the refine prompt, extracts a candidate, gathers
//! self-review, compiler remarks, unit tests and formal verification (in
//! that order, short-circuiting), and decides whether to stop. Every round
//! is archived under `<archive>/<case>/round_NN/`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::bench::{self, BenchConfig, BenchError, BenchRecord};
use crate::compiler::{
    is_fully_vectorized, parse_remarks, render_report, CompileStatus, Compiler, FlagsProfile, LoopSelection,
    VectorizationReport,
};
use crate::corpus::{FunctionCase, NonVectorizableCategory};
use crate::llm::{
    claims_complete, extract_candidate, no_benefit_reason, render_refine_prompt, render_self_feedback_prompt,
    CostLedger, LlmClient, LlmConfig, LlmError, PromptKind, Usage, BEGIN_MARKER, END_MARKER,
};
use crate::testing::{prepare_suite, run_tests, SuiteOrigin, TestConfig, TestSuite, UnitTestResult};
use crate::verify::{emit_ir_pair, FormalVerdict, Verifier};

pub const OUTCOME_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_MAX_ROUNDS: u32 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub max_rounds: u32,
    pub case_wallclock_secs: u64,
    /// Consecutive unfounded completion claims that stop the run.
    pub premature_claim_rounds: u32,
    pub self_feedback: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { max_rounds: DEFAULT_MAX_ROUNDS, case_wallclock_secs: 1800, premature_claim_rounds: 2, self_feedback: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateCode {
    pub round: u32,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "text", rename_all = "snake_case")]
pub enum SelfFeedback {
    Text(String),
    Unavailable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompilerFeedback {
    pub status: CompileStatus,
    /// Loops of the function under refinement only.
    pub report: VectorizationReport,
    pub fully_vectorized: bool,
    /// Line of the unit where the function starts, minus one.
    pub line_offset: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackBundle {
    pub round: u32,
    pub self_feedback: SelfFeedback,
    pub compiler: CompilerFeedback,
    pub tests: Option<UnitTestResult>,
    pub formal: Option<FormalVerdict>,
}

impl FeedbackBundle {
    /// The success conjunction. `tests_only` admits an unavailable verifier.
    pub fn accepted(&self, tests_only: bool) -> bool {
        let formal_ok = match &self.formal {
            Some(v) if v.is_equivalent() => true,
            Some(v) => tests_only && v.is_unavailable(),
            None => false,
        };
        self.compiler.status == CompileStatus::Ok
            && self.compiler.fully_vectorized
            && self.tests.as_ref().is_some_and(UnitTestResult::is_pass)
            && formal_ok
    }

    /// Feedback text for the next refine prompt: self-review, compiler,
    /// then verification.
    pub fn render(&self, candidate: &str) -> String {
        let mut s = String::from("### Self-review\n");
        match &self.self_feedback {
            SelfFeedback::Text(t) => s.push_str(t.trim()),
            SelfFeedback::Unavailable(why) => s.push_str(&format!("(unavailable: {why})")),
        }
        s.push_str("\n\n### Compiler\n");
        match &self.compiler.status {
            CompileStatus::Error(d) => {
                s.push_str("The candidate does not compile:\n");
                s.push_str(d.trim());
            }
            CompileStatus::Ok => {
                s.push_str(&render_report(&self.compiler.report, Some(candidate), self.compiler.line_offset));
                if self.compiler.fully_vectorized {
                    s.push_str("\nAll loops in the function are vectorized.");
                }
            }
        }
        s.push_str("\n\n### Unit tests\n");
        match &self.tests {
            Some(t) => s.push_str(&t.describe()),
            None => s.push_str("Not run: the candidate must compile first."),
        }
        s.push_str("\n\n### Formal verification\n");
        match &self.formal {
            Some(v) => s.push_str(&v.describe()),
            None => s.push_str("Not run: the unit tests must pass first."),
        }
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    Compile,
    Tests,
    Formal,
    Benchmark,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateRecord {
    pub gate: Gate,
    pub status: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum RoundEvent {
    Candidate,
    MarkerNotFound,
    ProviderFailure { message: String },
    /// No-benefit marker without any code block.
    NoBenefit { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    EmitSuccess,
    ContinueRefine,
    StopRoundLimit,
    StopPrematureClaim,
    StopNoBenefit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub round: u32,
    #[serde(flatten)]
    pub event: RoundEvent,
    pub gates: Vec<GateRecord>,
    pub fully_vectorized: Option<bool>,
    pub claims_complete: bool,
    pub no_benefit: Option<String>,
    pub decision: Decision,
    pub usage: Usage,
}

/// What the refine response signalled besides code.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoundSignals {
    pub no_benefit: Option<String>,
    pub claims_complete: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationState {
    pub round: u32,
    pub candidate: Option<CandidateCode>,
    pub trace: Vec<TraceEntry>,
    /// Consecutive rounds claiming completion while not fully vectorized,
    /// including the current one.
    pub consecutive_claims: u32,
    /// Whether any loop of the function vectorized in the most recent
    /// compile (the original's before any candidate compiled).
    pub latest_any_vectorized: bool,
    pub latest_fully_vectorized: bool,
}

pub fn decide(
    bundle: Option<&FeedbackBundle>,
    signals: &RoundSignals,
    state: &IterationState,
    cfg: &EngineConfig,
    tests_only: bool,
) -> Decision {
    if bundle.is_some_and(|b| b.accepted(tests_only)) {
        return Decision::EmitSuccess;
    }
    if signals.no_benefit.is_some() && !state.latest_any_vectorized {
        return Decision::StopNoBenefit;
    }
    if state.consecutive_claims >= cfg.premature_claim_rounds {
        return Decision::StopPrematureClaim;
    }
    if state.round >= cfg.max_rounds {
        return Decision::StopRoundLimit;
    }
    Decision::ContinueRefine
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeKind {
    Success { final_code: String, speedup: Option<f64> },
    FailRoundLimit { budget_exhausted: bool },
    FailPrematureClaim,
    NoBenefitDeclared { reason: String },
    SemanticEscape { detail: String },
}

impl OutcomeKind {
    pub fn label(&self) -> &'static str {
        match self {
            OutcomeKind::Success { .. } => "success",
            OutcomeKind::FailRoundLimit { .. } => "fail_round_limit",
            OutcomeKind::FailPrematureClaim => "fail_premature_claim",
            OutcomeKind::NoBenefitDeclared { .. } => "no_benefit_declared",
            OutcomeKind::SemanticEscape { .. } => "semantic_escape",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub origin: SuiteOrigin,
    pub validated: bool,
    pub reason: Option<String>,
    pub notes: Vec<String>,
    pub generation_calls: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub schema_version: u32,
    pub case_id: String,
    pub category: Option<NonVectorizableCategory>,
    #[serde(flatten)]
    pub kind: OutcomeKind,
    pub trace: Vec<TraceEntry>,
    pub ledger: CostLedger,
    pub rounds_used: u32,
    /// No formal verifier was available; success rests on tests alone.
    pub tests_only: bool,
    pub suite: SuiteSummary,
    pub bench: Option<BenchRecord>,
    pub bench_error: Option<String>,
    /// An accepted candidate disagreed with the original in benchmarking.
    pub integrity_alert: bool,
    pub compiler: String,
    pub notes: Vec<String>,
}

impl RunOutcome {
    pub fn final_code(&self) -> Option<&str> {
        match &self.kind {
            OutcomeKind::Success { final_code, .. } => Some(final_code),
            _ => None,
        }
    }

    pub fn provider_failure_rounds(&self) -> u32 {
        self.trace.iter().filter(|t| matches!(t.event, RoundEvent::ProviderFailure { .. })).count() as u32
    }

    pub fn format_failure_rounds(&self) -> u32 {
        self.trace.iter().filter(|t| t.event == RoundEvent::MarkerNotFound).count() as u32
    }
}

/// Checks the fixed gate order in a trace. Returns one message per violation.
pub fn check_gate_order(outcome: &RunOutcome) -> Vec<String> {
    let mut violations = Vec::new();
    if outcome.rounds_used as usize != outcome.trace.len() {
        violations.push(format!("rounds_used {} but {} trace entries", outcome.rounds_used, outcome.trace.len()));
    }
    for (i, entry) in outcome.trace.iter().enumerate() {
        let r = entry.round;
        if r as usize != i + 1 {
            violations.push(format!("trace entry {i} has round {r}"));
        }
        for (j, g) in entry.gates.iter().enumerate() {
            if j > 0 && entry.gates[j - 1].gate >= g.gate {
                violations.push(format!("round {r}: {:?} recorded after {:?}", g.gate, entry.gates[j - 1].gate));
            }
            if g.gate == Gate::Compile {
                if j != 0 {
                    violations.push(format!("round {r}: compile is not the first gate"));
                }
                continue;
            }
            let Some(prev) = j.checked_sub(1).map(|k| &entry.gates[k]) else {
                violations.push(format!("round {r}: {:?} without a compile", g.gate));
                continue;
            };
            let expected_prev = match g.gate {
                Gate::Tests => Gate::Compile,
                Gate::Formal => Gate::Tests,
                _ => Gate::Formal,
            };
            let prev_ok = prev.passed
                || (g.gate == Gate::Benchmark && outcome.tests_only && prev.status == crate::verify::UNAVAILABLE);
            if prev.gate != expected_prev || !prev_ok {
                violations.push(format!("round {r}: {:?} ran although {:?} did not pass", g.gate, expected_prev));
            }
            if g.gate == Gate::Benchmark && (i + 1 != outcome.trace.len() || entry.decision != Decision::EmitSuccess) {
                violations.push(format!("round {r}: benchmark outside the accepting round"));
            }
        }
    }
    violations
}

/// File-name-safe form of a case id.
pub fn case_dir_name(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.' { c } else { '_' }).collect()
}

pub struct Engine {
    pub compiler: Compiler,
    pub verifier: Option<Verifier>,
    pub llm: LlmConfig,
    pub tests: TestConfig,
    pub bench: BenchConfig,
    pub config: EngineConfig,
    pub archive_root: PathBuf,
}

fn write(path: &Path, text: &str) {
    if let Err(e) = fs::write(path, text) {
        warn!("cannot write {}: {e}", path.display());
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) {
    match serde_json::to_string_pretty(value) {
        Ok(s) => write(path, &(s + "\n")),
        Err(e) => warn!("cannot serialize {}: {e}", path.display()),
    }
}

fn usage_between(before: CostLedger, after: CostLedger) -> Usage {
    Usage { input: after.input_tokens - before.input_tokens, output: after.output_tokens - before.output_tokens }
}

impl Engine {
    /// Compiles `fn_text` (in the case's context) at the diagnose profile.
    fn diagnose(&self, case: &FunctionCase, fn_text: &str, scratch: &Path) -> CompilerFeedback {
        let (unit, first, last) = case.unit_with(fn_text);
        let selection = LoopSelection::Lines { first, last };
        let result = self.compiler.compile("candidate", &unit, FlagsProfile::Diagnose, scratch, &case.extra_flags);
        let (status, raw) = match result {
            Ok(r) => (r.status, r.remarks_raw),
            Err(e) => (CompileStatus::Error(e.to_string()), String::new()),
        };
        let mut report = parse_remarks(&raw);
        report.loops.retain(|l| selection.contains(l.location));
        let fully_vectorized = status == CompileStatus::Ok && is_fully_vectorized(&report, &LoopSelection::All);
        CompilerFeedback { status, report, fully_vectorized, line_offset: first.saturating_sub(1) }
    }

    fn feedback_phase(
        &self,
        llm: &LlmClient,
        case: &FunctionCase,
        suite: &TestSuite,
        candidate: &str,
        round: u32,
        dir: &Path,
    ) -> FeedbackBundle {
        let self_feedback = if self.config.self_feedback {
            let prompt = render_self_feedback_prompt(&case.source_text, candidate);
            write(&dir.join("self_feedback_prompt.txt"), &prompt);
            match llm.complete_prompt(PromptKind::SelfFeedback, &prompt) {
                Ok(c) => {
                    write(&dir.join("self_feedback.txt"), &c.text);
                    SelfFeedback::Text(c.text)
                }
                Err(e) => SelfFeedback::Unavailable(e.to_string()),
            }
        } else {
            SelfFeedback::Unavailable("disabled".to_string())
        };

        let compiler = self.diagnose(case, candidate, dir);
        let mut bundle = FeedbackBundle { round, self_feedback, compiler, tests: None, formal: None };
        if bundle.compiler.status != CompileStatus::Ok {
            return bundle;
        }
        let tests = run_tests(suite, candidate, case, &self.compiler, &self.tests, dir);
        let pass = tests.is_pass();
        bundle.tests = Some(tests);
        if !pass {
            return bundle;
        }
        bundle.formal = Some(match &self.verifier {
            None => FormalVerdict::unavailable(),
            Some(v) => match emit_ir_pair(case, candidate, &self.compiler, dir) {
                Ok((orig, cand)) => v.verify_pair(&orig, &cand, v.timeout(), dir),
                Err(d) => FormalVerdict::ToolError(format!("cannot lower to IR: {d}")),
            },
        });
        bundle
    }

    fn gates_of(bundle: &FeedbackBundle) -> Vec<GateRecord> {
        let mut gates = vec![GateRecord {
            gate: Gate::Compile,
            status: match &bundle.compiler.status {
                CompileStatus::Ok => "ok".to_string(),
                CompileStatus::Error(_) => "error".to_string(),
            },
            passed: bundle.compiler.status == CompileStatus::Ok,
        }];
        if let Some(t) = &bundle.tests {
            gates.push(GateRecord { gate: Gate::Tests, status: t.label().to_string(), passed: t.is_pass() });
        }
        if let Some(f) = &bundle.formal {
            let status = if f.is_unavailable() { crate::verify::UNAVAILABLE.to_string() } else { f.label().to_string() };
            gates.push(GateRecord { gate: Gate::Formal, status, passed: f.is_equivalent() });
        }
        gates
    }

    /// Runs the whole iteration for one case. Never fails: every abnormal
    /// path ends in an outcome.
    pub fn run_case(&self, case: &FunctionCase) -> RunOutcome {
        let case_dir = self.archive_root.join(case_dir_name(&case.id));
        let _ = fs::create_dir_all(&case_dir);
        let started = Instant::now();
        let budget = Duration::from_secs(self.config.case_wallclock_secs);
        let tests_only = self.verifier.is_none();

        let mut outcome = RunOutcome {
            schema_version: OUTCOME_SCHEMA_VERSION,
            case_id: case.id.clone(),
            category: case.category.clone(),
            kind: OutcomeKind::FailRoundLimit { budget_exhausted: false },
            trace: Vec::new(),
            ledger: CostLedger::new(self.llm.price_in_per_million, self.llm.price_out_per_million),
            rounds_used: 0,
            tests_only,
            suite: SuiteSummary { origin: SuiteOrigin::Template, validated: false, reason: None, notes: vec![], generation_calls: 0 },
            bench: None,
            bench_error: None,
            integrity_alert: false,
            compiler: self.compiler.identity().to_string(),
            notes: Vec::new(),
        };

        let llm = match LlmClient::for_case(&self.llm, &case.id) {
            Ok(c) => c,
            Err(e) => {
                outcome.notes.push(format!("cannot start the model client: {e}"));
                write_json(&case_dir.join("outcome.json"), &outcome);
                return outcome;
            }
        };

        let suite_dir = case_dir.join("suite");
        let _ = fs::create_dir_all(&suite_dir);
        let suite = prepare_suite(Some(&llm), case, &self.compiler, &self.tests, &suite_dir);
        write_json(&suite_dir.join("suite.json"), &suite);
        outcome.suite = SuiteSummary {
            origin: suite.origin,
            validated: suite.validated,
            reason: suite.validation_reason.clone(),
            notes: suite.notes.clone(),
            generation_calls: llm
                .recorded_transcript()
                .entries
                .iter()
                .filter(|e| e.expected_prompt_kind == PromptKind::TestGeneration)
                .count() as u32,
        };
        if !suite.validated {
            outcome.notes.push(format!(
                "unit tests run degraded: suite not validated ({})",
                suite.validation_reason.as_deref().unwrap_or("unknown reason")
            ));
        }

        let baseline_dir = case_dir.join("baseline");
        let _ = fs::create_dir_all(&baseline_dir);
        let baseline = self.diagnose(case, &case.source_text, &baseline_dir);
        let mut feedback = format!(
            "### Compiler (original function)\n{}\n",
            render_report(&baseline.report, Some(&case.source_text), baseline.line_offset)
        );
        let mut state = IterationState {
            round: 0,
            candidate: None,
            trace: Vec::new(),
            consecutive_claims: 0,
            latest_any_vectorized: baseline.report.any_vectorized(&LoopSelection::All),
            latest_fully_vectorized: baseline.fully_vectorized,
        };
        let mut last_bundle_text = String::new();

        let decision = loop {
            if state.round >= self.config.max_rounds {
                break Decision::StopRoundLimit;
            }
            if started.elapsed() >= budget {
                outcome.kind = OutcomeKind::FailRoundLimit { budget_exhausted: true };
                outcome.notes.push(format!("wall-clock budget of {}s exhausted", budget.as_secs()));
                break Decision::StopRoundLimit;
            }
            state.round += 1;
            let round = state.round;
            let dir = case_dir.join(format!("round_{round:02}"));
            let _ = fs::create_dir_all(&dir);
            let before = llm.ledger();

            let previous = state.candidate.as_ref().map(|c| c.text.as_str()).unwrap_or("");
            let prompt = render_refine_prompt(&case.source_text, previous, &feedback);
            write(&dir.join("refine_prompt.txt"), &prompt);

            let mut signals = RoundSignals::default();
            let mut bundle = None;
            let event = match llm.complete_prompt(PromptKind::Refine, &prompt) {
                Err(e) => {
                    if matches!(e, LlmError::TranscriptExhausted { .. }) && !outcome.notes.iter().any(|n| n.contains("exhausted")) {
                        outcome.notes.push(format!("round {round}: {e}"));
                    }
                    feedback = format!(
                        "The previous request failed ({e}). Repeat your answer in full.\n\n{last_bundle_text}"
                    );
                    RoundEvent::ProviderFailure { message: e.to_string() }
                }
                Ok(c) => {
                    write(&dir.join("refine_response.txt"), &c.text);
                    signals.no_benefit = no_benefit_reason(&c.text);
                    signals.claims_complete = claims_complete(&c.text);
                    match extract_candidate(&c.text) {
                        Ok(code) => {
                            write(&dir.join("candidate.c"), &code);
                            let b = self.feedback_phase(&llm, case, &suite, &code, round, &dir);
                            write_json(&dir.join("bundle.json"), &b);
                            last_bundle_text = b.render(&code);
                            feedback = last_bundle_text.clone();
                            state.latest_any_vectorized =
                                b.compiler.status == CompileStatus::Ok && b.compiler.report.any_vectorized(&LoopSelection::All);
                            state.latest_fully_vectorized = b.compiler.fully_vectorized;
                            state.candidate = Some(CandidateCode { round, text: code });
                            bundle = Some(b);
                            RoundEvent::Candidate
                        }
                        Err(_) => {
                            let event = match &signals.no_benefit {
                                Some(reason) => RoundEvent::NoBenefit { reason: reason.clone() },
                                None => RoundEvent::MarkerNotFound,
                            };
                            feedback = if signals.no_benefit.is_some() {
                                format!(
                                    "You declared that vectorization brings no benefit, but the compiler vectorizes some loop of the \
                                     latest version, so the declaration is not accepted. Continue refining and reply with the \
                                     complete function between `{BEGIN_MARKER}` and `{END_MARKER}`.\n\n{last_bundle_text}"
                                )
                            } else {
                                format!(
                                    "Your previous reply contained no code block delimited by `{BEGIN_MARKER}` and `{END_MARKER}` \
                                     lines. Reply with the complete function between those markers.\n\n{last_bundle_text}"
                                )
                            };
                            event
                        }
                    }
                }
            };

            if signals.claims_complete && !state.latest_fully_vectorized {
                state.consecutive_claims += 1;
            } else {
                state.consecutive_claims = 0;
            }
            let decision = decide(bundle.as_ref(), &signals, &state, &self.config, tests_only);
            let entry = TraceEntry {
                round,
                event,
                gates: bundle.as_ref().map(Self::gates_of).unwrap_or_default(),
                fully_vectorized: bundle.as_ref().map(|b| b.compiler.fully_vectorized),
                claims_complete: signals.claims_complete,
                no_benefit: signals.no_benefit.clone(),
                decision,
                usage: usage_between(before, llm.ledger()),
            };
            write_json(&dir.join("trace_entry.json"), &entry);
            state.trace.push(entry);
            info!("{}: round {round} -> {:?}", case.id, decision);

            match decision {
                Decision::ContinueRefine => continue,
                Decision::StopNoBenefit => {
                    outcome.kind = OutcomeKind::NoBenefitDeclared { reason: signals.no_benefit.unwrap_or_default() };
                }
                Decision::StopPrematureClaim => outcome.kind = OutcomeKind::FailPrematureClaim,
                Decision::StopRoundLimit => {}
                Decision::EmitSuccess => {
                    let code = state.candidate.as_ref().map(|c| c.text.clone()).unwrap_or_default();
                    outcome.kind = OutcomeKind::Success { final_code: code, speedup: None };
                }
            }
            break decision;
        };

        if decision == Decision::EmitSuccess && self.bench.enabled {
            let code = outcome.final_code().unwrap_or_default().to_string();
            let dir = case_dir.join("bench");
            let _ = fs::create_dir_all(&dir);
            let ranges = self.tests.ranges_for(&case.signature);
            let (status, passed) = match bench::measure(case, &code, &ranges, &self.compiler, &self.bench, &dir) {
                Ok(record) => {
                    if let OutcomeKind::Success { speedup, .. } = &mut outcome.kind {
                        *speedup = Some(record.speedup);
                    }
                    outcome.bench = Some(record);
                    ("ok".to_string(), true)
                }
                Err(BenchError::ChecksumMismatch(record)) => {
                    outcome.integrity_alert = true;
                    outcome.bench = Some(*record);
                    outcome.bench_error = Some("checksum mismatch between original and candidate".to_string());
                    ("checksum_mismatch".to_string(), false)
                }
                Err(e) => {
                    outcome.bench_error = Some(e.to_string());
                    ("error".to_string(), false)
                }
            };
            if let Some(last) = state.trace.last_mut() {
                last.gates.push(GateRecord { gate: Gate::Benchmark, status, passed });
            }
        }

        outcome.rounds_used = state.trace.len() as u32;
        outcome.trace = state.trace;
        outcome.ledger = llm.ledger();
        write_json(&case_dir.join("outcome.json"), &outcome);
        if let Err(e) = llm.recorded_transcript().save(&case_dir.join("transcript.json")) {
            warn!("cannot save transcript for {}: {e}", case.id);
        }
        outcome
    }

    /// Runs every case, at most `parallelism` at a time (0 = one per CPU).
    /// Outcomes come back in input order.
    pub fn run_cases(&self, cases: &[FunctionCase], parallelism: usize) -> Vec<RunOutcome> {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(parallelism).build();
        match pool {
            Ok(pool) => pool.install(|| cases.par_iter().map(|c| self.run_case(c)).collect()),
            Err(e) => {
                warn!("cannot build thread pool ({e}); running sequentially");
                cases.iter().map(|c| self.run_case(c)).collect()
            }
        }
    }
}

/// Re-tests a successful outcome's final code with a stronger suite (the
/// external oracle); a failure turns the outcome into `SemanticEscape`.
pub fn audit_outcome(
    outcome: &mut RunOutcome,
    case: &FunctionCase,
    oracle: &TestSuite,
    compiler: &Compiler,
    cfg: &TestConfig,
    scratch: &Path,
) -> UnitTestResult {
    let Some(code) = outcome.final_code().map(str::to_string) else {
        return UnitTestResult::Pass { trials: None };
    };
    let result = run_tests(oracle, &code, case, compiler, cfg, scratch);
    if !result.is_pass() {
        outcome.kind = OutcomeKind::SemanticEscape { detail: result.describe() };
    }
    result
}
