//! Timing of original versus final candidate, aggregation, and reports.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;
use std::process::Command;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::compiler::{CompileStatus, Compiler};
use crate::corpus::FunctionCase;
use crate::engine::{OutcomeKind, RunOutcome};
use crate::harness::{self, TimingParams, ValueRange};
use crate::process::run_captured;
use crate::testing::slot_text;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Timing runs are serialized process-wide; co-running kernels skew timings.
static BENCH_LOCK: Mutex<()> = Mutex::new(());

#[derive(Debug, Error, PartialEq)]
pub enum GeomeanError {
    #[error("geometric mean of an empty list")]
    EmptyInput,
    #[error("geometric mean needs positive values, got {0}")]
    NonPositiveValue(f64),
}

pub fn geomean(values: &[f64]) -> Result<f64, GeomeanError> {
    if values.is_empty() {
        return Err(GeomeanError::EmptyInput);
    }
    let mut acc = 0.0;
    for &v in values {
        if v.is_nan() || v <= 0.0 || v.is_infinite() {
            return Err(GeomeanError::NonPositiveValue(v));
        }
        acc += v.ln();
    }
    Ok((acc / values.len() as f64).exp())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostInfo {
    pub cpu: String,
    pub isa: String,
}

impl HostInfo {
    pub fn detect() -> HostInfo {
        let cpuinfo = fs::read_to_string("/proc/cpuinfo").unwrap_or_default();
        let field = |key: &str| {
            cpuinfo
                .lines()
                .find(|l| l.starts_with(key))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        };
        let cpu = field("model name").or_else(|| field("CPU part")).unwrap_or_else(|| "unknown".to_string());
        let flags = field("flags").or_else(|| field("Features")).unwrap_or_default();
        let flags: Vec<&str> = flags.split_whitespace().collect();
        let ext: Vec<&str> = ["avx512f", "avx2", "avx", "sse4_2", "sve", "asimd"]
            .into_iter()
            .filter(|f| flags.contains(f))
            .collect();
        HostInfo { cpu, isa: format!("{} [{}]", std::env::consts::ARCH, ext.join(" ")) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub case_id: String,
    /// Median seconds per call.
    pub t_original: f64,
    pub t_candidate: f64,
    pub speedup: f64,
    pub checksum_match: bool,
    pub checksum_original: [f64; 2],
    pub checksum_candidate: [f64; 2],
    pub reps: u64,
    pub host: HostInfo,
    pub compiler: String,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("timing harness failed to build: {0}")]
    BuildFail(String),
    #[error("timing harness crashed: {0}")]
    RuntimeCrash(String),
    #[error("checksums differ between original and candidate")]
    ChecksumMismatch(Box<BenchRecord>),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub enabled: bool,
    pub runs: u32,
    pub min_run_ms: u64,
    pub seed: u64,
    pub run_timeout_secs: u64,
    /// Relative tolerance for checksum agreement (reassociation under fast-math).
    pub checksum_rel_tol: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { enabled: true, runs: 5, min_run_ms: 20, seed: 0x5eed, run_timeout_secs: 300, checksum_rel_tol: 1e-3 }
    }
}

fn close(a: f64, b: f64, scale: f64, rel: f64) -> bool {
    if a.is_nan() || b.is_nan() {
        return a.is_nan() && b.is_nan();
    }
    if a == b {
        return true;
    }
    (a - b).abs() <= rel * scale.abs().max(a.abs()).max(b.abs()) + 1e-9
}

pub fn checksums_match(orig: [f64; 2], cand: [f64; 2], rel: f64) -> bool {
    let scale = orig[1].max(cand[1]);
    close(orig[0], cand[0], scale, rel) && close(orig[1], cand[1], scale, rel)
}

struct TimingOutput {
    reps: u64,
    ns_original: f64,
    ns_candidate: f64,
    sum_original: [f64; 2],
    sum_candidate: [f64; 2],
}

fn parse_timing(stdout: &str) -> Option<TimingOutput> {
    let mut map: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for line in stdout.lines() {
        let mut it = line.split_whitespace();
        if let Some(key) = it.next() {
            let vals: Option<Vec<f64>> = it.map(|v| v.parse().ok()).collect();
            map.insert(key, vals?);
        }
    }
    let one = |k: &str| map.get(k).and_then(|v| v.first().copied());
    let two = |k: &str| map.get(k).filter(|v| v.len() == 2).map(|v| [v[0], v[1]]);
    Some(TimingOutput {
        reps: one("REPS")? as u64,
        ns_original: one("TIME_ORIGINAL_NS")?,
        ns_candidate: one("TIME_CANDIDATE_NS")?,
        sum_original: two("CHECKSUM_ORIGINAL")?,
        sum_candidate: two("CHECKSUM_CANDIDATE")?,
    })
}

/// Times `candidate` against the original with the checksum-protected
/// timing driver. `ranges` are indexed like the signature's parameters.
pub fn measure(
    case: &FunctionCase,
    candidate: &str,
    ranges: &[ValueRange],
    compiler: &Compiler,
    cfg: &BenchConfig,
    scratch: &Path,
) -> Result<BenchRecord, BenchError> {
    let params = TimingParams { runs: cfg.runs, min_run_ns: cfg.min_run_ms * 1_000_000, seed: cfg.seed };
    let driver = harness::timing_driver(&case.signature, ranges, &params);
    let unit = harness::unit(case, &case.source_text, &slot_text(candidate, &case.signature), &driver);

    let build = compiler
        .build_executable("timing", &unit, scratch, &case.extra_flags)
        .map_err(|e| BenchError::BuildFail(e.to_string()))?;
    if let CompileStatus::Error(d) = build.status {
        return Err(BenchError::BuildFail(d));
    }

    let out = {
        let _guard = BENCH_LOCK.lock().unwrap_or_else(|p| p.into_inner());
        let mut cmd = Command::new(scratch.join("timing"));
        cmd.current_dir(scratch);
        run_captured(&mut cmd, Duration::from_secs(cfg.run_timeout_secs), scratch, "timing.run")?
    };
    if !out.success() {
        return Err(BenchError::RuntimeCrash(format!("{}; {}", out.describe_exit(), out.stderr.trim())));
    }
    let t = parse_timing(&out.stdout)
        .ok_or_else(|| BenchError::RuntimeCrash(format!("unparseable timing output: {}", out.stdout.trim())))?;
    if !(t.ns_original > 0.0 && t.ns_candidate > 0.0) {
        return Err(BenchError::RuntimeCrash("timer resolution too coarse for this kernel".to_string()));
    }
    let record = BenchRecord {
        case_id: case.id.clone(),
        t_original: t.ns_original / 1e9,
        t_candidate: t.ns_candidate / 1e9,
        speedup: t.ns_original / t.ns_candidate,
        checksum_match: checksums_match(t.sum_original, t.sum_candidate, cfg.checksum_rel_tol),
        checksum_original: t.sum_original,
        checksum_candidate: t.sum_candidate,
        reps: t.reps,
        host: HostInfo::detect(),
        compiler: compiler.identity().to_string(),
    };
    if !record.checksum_match {
        return Err(BenchError::ChecksumMismatch(Box::new(record)));
    }
    Ok(record)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub attempted: u32,
    pub vectorized: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureBreakdown {
    pub round_limit: u32,
    /// Subset of `round_limit` stopped by the wall-clock budget.
    pub budget_exhausted: u32,
    pub premature_claim: u32,
    pub no_benefit: u32,
    pub semantic_escape: u32,
    pub checksum_mismatch: u32,
    /// Rounds lost to provider errors, summed over cases.
    pub provider_failure_rounds: u32,
    /// Rounds lost to responses without the code markers.
    pub format_failure_rounds: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub case_id: String,
    pub category: Option<String>,
    pub outcome: String,
    pub vectorized: bool,
    pub rounds_used: u32,
    pub cost: f64,
    pub speedup: Option<f64>,
    pub checksum_match: Option<bool>,
    pub tests_only: bool,
    pub suite_validated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub schema_version: u32,
    pub generated_at: Option<String>,
    pub host: HostInfo,
    pub compiler: String,
    pub attempted: u32,
    pub vectorized: u32,
    pub coverage: f64,
    pub per_category: BTreeMap<String, CategoryCount>,
    pub geomean_speedup: Option<f64>,
    pub geomean_omitted_reason: Option<String>,
    pub mean_rounds: f64,
    pub mean_rounds_success: Option<f64>,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub total_cost: f64,
    pub failures: FailureBreakdown,
    pub integrity_alert: bool,
    pub cases: Vec<CaseRow>,
    pub records: Vec<BenchRecord>,
}

fn counts_as_vectorized(o: &RunOutcome) -> bool {
    matches!(o.kind, OutcomeKind::Success { .. }) && !o.integrity_alert
}

/// Aggregates outcomes and bench records (matched by case id).
pub fn build_report(outcomes: &[RunOutcome], records: &[BenchRecord], host: HostInfo, compiler: &str) -> CoverageReport {
    let mut per_category: BTreeMap<String, CategoryCount> = BTreeMap::new();
    let mut failures = FailureBreakdown::default();
    let mut cases = Vec::new();
    let mut rounds_all = 0u64;
    let mut rounds_success = Vec::new();
    let mut input_tokens = 0;
    let mut output_tokens = 0;
    let mut total_cost = 0.0;

    for o in outcomes {
        let vectorized = counts_as_vectorized(o);
        let cat = o.category.as_ref().map(|c| c.label()).unwrap_or_else(|| "uncategorized".to_string());
        let entry = per_category.entry(cat.clone()).or_default();
        entry.attempted += 1;
        entry.vectorized += vectorized as u32;

        match &o.kind {
            OutcomeKind::Success { .. } => rounds_success.push(o.rounds_used as f64),
            OutcomeKind::FailRoundLimit { budget_exhausted } => {
                failures.round_limit += 1;
                failures.budget_exhausted += *budget_exhausted as u32;
            }
            OutcomeKind::FailPrematureClaim => failures.premature_claim += 1,
            OutcomeKind::NoBenefitDeclared { .. } => failures.no_benefit += 1,
            OutcomeKind::SemanticEscape { .. } => failures.semantic_escape += 1,
        }
        if o.integrity_alert {
            failures.checksum_mismatch += 1;
        }
        failures.provider_failure_rounds += o.provider_failure_rounds();
        failures.format_failure_rounds += o.format_failure_rounds();
        rounds_all += o.rounds_used as u64;
        input_tokens += o.ledger.input_tokens;
        output_tokens += o.ledger.output_tokens;
        total_cost += o.ledger.cost();

        let record = records.iter().find(|r| r.case_id == o.case_id);
        cases.push(CaseRow {
            case_id: o.case_id.clone(),
            category: o.category.as_ref().map(|c| c.label()),
            outcome: o.kind.label().to_string(),
            vectorized,
            rounds_used: o.rounds_used,
            cost: o.ledger.cost(),
            speedup: record.map(|r| r.speedup),
            checksum_match: record.map(|r| r.checksum_match),
            tests_only: o.tests_only,
            suite_validated: o.suite.validated,
        });
    }

    let attempted = outcomes.len() as u32;
    let vectorized = outcomes.iter().filter(|o| counts_as_vectorized(o)).count() as u32;
    let speedups: Vec<f64> = records
        .iter()
        .filter(|r| r.checksum_match)
        .filter(|r| outcomes.iter().any(|o| o.case_id == r.case_id && counts_as_vectorized(o)))
        .map(|r| r.speedup)
        .collect();
    let (geomean_speedup, geomean_omitted_reason) = match geomean(&speedups) {
        Ok(g) => (Some(g), None),
        Err(GeomeanError::EmptyInput) if vectorized == 0 => (None, Some("no successful case".to_string())),
        Err(GeomeanError::EmptyInput) => (None, Some("no benchmark record with matching checksums".to_string())),
        Err(e) => (None, Some(e.to_string())),
    };

    CoverageReport {
        schema_version: REPORT_SCHEMA_VERSION,
        generated_at: None,
        host,
        compiler: compiler.to_string(),
        attempted,
        vectorized,
        coverage: if attempted == 0 { 0.0 } else { vectorized as f64 / attempted as f64 },
        per_category,
        geomean_speedup,
        geomean_omitted_reason,
        mean_rounds: if attempted == 0 { 0.0 } else { rounds_all as f64 / attempted as f64 },
        mean_rounds_success: (!rounds_success.is_empty())
            .then(|| rounds_success.iter().sum::<f64>() / rounds_success.len() as f64),
        input_tokens,
        output_tokens,
        total_cost,
        integrity_alert: outcomes.iter().any(|o| o.integrity_alert),
        failures,
        cases,
        records: records.to_vec(),
    }
}

pub fn render_summary(r: &CoverageReport) -> String {
    let mut s = String::new();
    s.push_str(&format!("compiler: {}\nhost: {} / {}\n\n", r.compiler, r.host.cpu, r.host.isa));
    s.push_str(&format!(
        "{:<16} {:<46} {:<22} {:>6} {:>10} {:>8}\n",
        "case", "category", "outcome", "rounds", "cost($)", "speedup"
    ));
    for c in &r.cases {
        let speedup = c.speedup.map(|v| format!("{v:.2}x")).unwrap_or_else(|| "-".to_string());
        let mut outcome = c.outcome.clone();
        if c.checksum_match == Some(false) {
            outcome.push_str(" (checksum!)");
        } else if c.tests_only && c.outcome == "success" {
            outcome.push_str(" (tests-only)");
        }
        s.push_str(&format!(
            "{:<16} {:<46} {:<22} {:>6} {:>10.6} {:>8}\n",
            c.case_id,
            c.category.as_deref().unwrap_or("-"),
            outcome,
            c.rounds_used,
            c.cost,
            speedup
        ));
    }
    s.push_str(&format!("\ncoverage: {}/{} = {:.3}\n", r.vectorized, r.attempted, r.coverage));
    match (r.geomean_speedup, &r.geomean_omitted_reason) {
        (Some(g), _) => s.push_str(&format!("geomean speedup: {g:.3}x over {} record(s)\n", r.records.iter().filter(|x| x.checksum_match).count())),
        (None, Some(reason)) => s.push_str(&format!("geomean speedup: omitted ({reason})\n")),
        (None, None) => {}
    }
    s.push_str(&format!("mean rounds: {:.3}\n", r.mean_rounds));
    if let Some(m) = r.mean_rounds_success {
        s.push_str(&format!("mean rounds (successes): {m:.3}\n"));
    }
    s.push_str(&format!(
        "tokens: {} in / {} out, total cost ${:.6}\n",
        r.input_tokens, r.output_tokens, r.total_cost
    ));
    let f = &r.failures;
    s.push_str(&format!(
        "failures: round limit {} (budget {}), premature claim {}, no benefit {}, semantic escape {}, checksum {}; provider-failure rounds {}, format-failure rounds {}\n",
        f.round_limit, f.budget_exhausted, f.premature_claim, f.no_benefit, f.semantic_escape, f.checksum_mismatch,
        f.provider_failure_rounds, f.format_failure_rounds
    ));
    if r.integrity_alert {
        s.push_str("INTEGRITY ALERT: at least one accepted candidate produced different checksums in benchmarking\n");
    }
    s
}

/// Writes `report.json` and `summary.txt` into `dir`; returns the summary.
pub fn emit_report(report: &CoverageReport, dir: &Path) -> io::Result<String> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    fs::write(dir.join("report.json"), json + "\n")?;
    let summary = render_summary(report);
    fs::write(dir.join("summary.txt"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
}

pub fn load_report(path: &Path) -> Result<CoverageReport, ReportError> {
    let text = fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| ReportError::SchemaMismatch(e.to_string()))?;
    match v.get("schema_version").and_then(Value::as_u64) {
        Some(n) if n == REPORT_SCHEMA_VERSION as u64 => {}
        Some(n) => {
            return Err(ReportError::SchemaMismatch(format!(
                "report schema version {n}, this build reads version {REPORT_SCHEMA_VERSION}"
            )))
        }
        None => return Err(ReportError::SchemaMismatch("missing schema_version".to_string())),
    }
    serde_json::from_value(v).map_err(|e| ReportError::SchemaMismatch(e.to_string()))
}

/// The report as JSON with run-specific fields (timestamps, host, timings)
/// blanked, for comparing runs.
pub fn normalized_json(report: &CoverageReport) -> String {
    let mut v = serde_json::to_value(report).expect("report serializes");
    v["generated_at"] = Value::Null;
    v["host"] = Value::Null;
    v["geomean_speedup"] = Value::Null;
    if let Some(cases) = v["cases"].as_array_mut() {
        for c in cases {
            c["speedup"] = Value::Null;
        }
    }
    if let Some(records) = v["records"].as_array_mut() {
        for r in records {
            for k in ["t_original", "t_candidate", "speedup", "reps", "host", "checksum_original", "checksum_candidate"] {
                r[k] = Value::Null;
            }
        }
    }
    serde_json::to_string_pretty(&v).expect("value serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geomean_examples() {
        assert_eq!(geomean(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!((geomean(&[2.0, 0.5]).unwrap() - 1.0).abs() < 1e-12);
        assert!((geomean(&[4.0, 1.0]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(geomean(&[]), Err(GeomeanError::EmptyInput));
        assert_eq!(geomean(&[1.0, 0.0]), Err(GeomeanError::NonPositiveValue(0.0)));
        assert_eq!(geomean(&[-1.0]), Err(GeomeanError::NonPositiveValue(-1.0)));
    }

    #[test]
    fn checksum_tolerance() {
        assert!(checksums_match([1.0, 2.0], [1.0, 2.0], 1e-3));
        assert!(checksums_match([1000.0, 5000.0], [1000.1, 5000.0], 1e-3));
        assert!(!checksums_match([1.0, 2.0], [-1.0, 2.0], 1e-3));
        assert!(!checksums_match([f64::NAN, 1.0], [1.0, 1.0], 1e-3));
    }

    #[test]
    fn timing_output_parsing() {
        let out = "REPS 64\nTIME_ORIGINAL_NS 1200.5\nTIME_CANDIDATE_NS 600.25\nCHECKSUM_ORIGINAL 1.5 3\nCHECKSUM_CANDIDATE 1.5 3\n";
        let t = parse_timing(out).unwrap();
        assert_eq!(t.reps, 64);
        assert_eq!(t.ns_original, 1200.5);
        assert_eq!(t.sum_candidate, [1.5, 3.0]);
        assert!(parse_timing("REPS 1\n").is_none());
    }
}
