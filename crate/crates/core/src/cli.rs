//! Command-line front end: `run`, `report`, `validate-tests`, `bench` and
//! `record-transcript`.
//!
//! Exit codes: 0 when the pipeline ran (whatever the per-case outcomes),
//! 1 for other failures, 2 for configuration or schema errors, 3 when a
//! required tool is missing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bench::{self, BenchConfig, BenchError, HostInfo};
use crate::compiler::{Compiler, CompilerConfig, CompilerError};
use crate::corpus::{load_corpus, FunctionCase};
use crate::engine::{case_dir_name, Engine, EngineConfig, RunOutcome, DEFAULT_MAX_ROUNDS, OUTCOME_SCHEMA_VERSION};
use crate::llm::{estimate_tokens, LlmClient, LlmConfig, Provider};
use crate::testing::{prepare_suite, template_suite, validate_suite, SuiteGenerator, SuiteOrigin, TestConfig, TestSuite};
use crate::verify::{Verifier, VerifierConfig, VerifyError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TOOL_MISSING: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Schema(String),
    ToolMissing(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Schema(_) => EXIT_CONFIG,
            CliError::ToolMissing(_) => EXIT_TOOL_MISSING,
            CliError::Other(_) => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Schema(m) => write!(f, "schema mismatch: {m}"),
            CliError::ToolMissing(m) => write!(f, "tool missing: {m}"),
            CliError::Other(m) => f.write_str(m),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSelection {
    pub path: Option<PathBuf>,
    pub only: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub max_rounds: u32,
    pub compile_timeout_secs: u64,
    pub verify_timeout_secs: u64,
    pub case_wallclock_secs: u64,
    pub premature_claim_rounds: u32,
}

impl Default for Budgets {
    fn default() -> Self {
        let e = EngineConfig::default();
        Budgets {
            max_rounds: DEFAULT_MAX_ROUNDS,
            compile_timeout_secs: CompilerConfig::default().timeout_secs,
            verify_timeout_secs: VerifierConfig::default().timeout_secs,
            case_wallclock_secs: e.case_wallclock_secs,
            premature_claim_rounds: e.premature_claim_rounds,
        }
    }
}

/// Everything a run needs. Budgets override the timeouts inside the
/// compiler and verifier tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    pub corpus: CorpusSelection,
    pub output_dir: PathBuf,
    pub parallelism: usize,
    /// Skip formal verification even if a verifier is installed.
    pub tests_only: bool,
    pub self_feedback: bool,
    pub budgets: Budgets,
    pub llm: LlmConfig,
    pub compiler: CompilerConfig,
    /// Absent: use `alive-tv` from PATH when present, tests-only otherwise.
    /// Present: the executable must exist.
    pub verifier: Option<VerifierConfig>,
    pub tests: TestConfig,
    pub bench: BenchConfig,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            corpus: CorpusSelection::default(),
            output_dir: PathBuf::from("vecrefine-out"),
            parallelism: 1,
            tests_only: false,
            self_feedback: true,
            budgets: Budgets::default(),
            llm: LlmConfig::default(),
            compiler: CompilerConfig::default(),
            verifier: None,
            tests: TestConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

fn rebase(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() { p.to_path_buf() } else { base.join(p) }
}

/// Executables given as bare names are looked up in PATH; anything with a
/// directory component is relative to `base`.
fn rebase_exe(base: &Path, p: &Path) -> PathBuf {
    if p.components().count() > 1 { rebase(base, p) } else { p.to_path_buf() }
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<RunManifest, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut m: RunManifest =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        m.corpus.path = m.corpus.path.map(|p| rebase(base, &p));
        m.output_dir = rebase(base, &m.output_dir);
        if let Provider::TranscriptReplay { path } = &mut m.llm.provider {
            *path = rebase(base, path);
        }
        m.compiler.executable = rebase_exe(base, &m.compiler.executable);
        if let Some(v) = &mut m.verifier {
            v.executable = v.executable.as_ref().map(|e| rebase_exe(base, e));
        }
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_else(|e| format!("# cannot render manifest: {e}\n"))
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            max_rounds: self.budgets.max_rounds,
            case_wallclock_secs: self.budgets.case_wallclock_secs,
            premature_claim_rounds: self.budgets.premature_claim_rounds,
            self_feedback: self.self_feedback,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GeneratorArg {
    Llm,
    Template,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Run manifest (TOML); flags override its fields.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Corpus: a C source file or a `.toml` corpus manifest.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Comma-separated case ids.
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// `replay:<file-or-dir>` or `http:<url>`.
    #[arg(long)]
    llm: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    compiler: Option<PathBuf>,
    /// Required substring of the compiler's version banner.
    #[arg(long)]
    compiler_version: Option<String>,
    #[arg(long, conflicts_with = "tests_only")]
    verifier: Option<PathBuf>,
    #[arg(long)]
    tests_only: bool,
    #[arg(long)]
    max_rounds: Option<u32>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    test_generator: Option<GeneratorArg>,
    #[arg(long)]
    trials: Option<u32>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Print the resolved manifest and exit.
    #[arg(long)]
    dry_run: bool,
    #[arg(long)]
    no_bench: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Driver files to validate instead of generating one.
    #[arg(long)]
    suite: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// File holding the rewritten function.
    #[arg(long)]
    candidate: PathBuf,
}

#[derive(Debug, Args)]
struct RecordArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Directory receiving `<case>.json` transcripts.
    #[arg(long)]
    transcripts: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Refine every selected case and write archives and reports.
    Run(RunArgs),
    /// Re-render the report of an archive directory.
    Report { archive: PathBuf },
    /// Generate (or load) test suites and run the validity protocol.
    ValidateTests(ValidateArgs),
    /// Time a given rewrite against the original.
    Bench(BenchArgs),
    /// Run against a live endpoint and save replayable transcripts.
    RecordTranscript(RecordArgs),
}

#[derive(Debug, Parser)]
#[command(name = "vecrefine", version, about = "Refactor scalar loops until the compiler vectorizes them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn resolve(common: &CommonArgs) -> Result<RunManifest, CliError> {
    let mut m = match &common.manifest {
        Some(p) => RunManifest::load(p)?,
        None => RunManifest::default(),
    };
    if let Some(c) = &common.corpus {
        m.corpus.path = Some(c.clone());
    }
    if !common.only.is_empty() {
        m.corpus.only = common.only.clone();
    }
    if let Some(spec) = &common.llm {
        m.llm.provider = Provider::parse(spec).map_err(CliError::Config)?;
    }
    if let Some(model) = &common.model {
        m.llm.model_name = model.clone();
    }
    if let Some(c) = &common.compiler {
        m.compiler.executable = c.clone();
    }
    if let Some(v) = &common.compiler_version {
        m.compiler.version_pin = Some(v.clone());
    }
    if let Some(v) = &common.verifier {
        m.verifier = Some(VerifierConfig { executable: Some(v.clone()), ..m.verifier.unwrap_or_default() });
        m.tests_only = false;
    }
    if common.tests_only {
        m.tests_only = true;
    }
    if let Some(r) = common.max_rounds {
        m.budgets.max_rounds = r;
    }
    if let Some(p) = common.parallelism {
        m.parallelism = p;
    }
    if let Some(o) = &common.out {
        m.output_dir = o.clone();
    }
    if let Some(g) = common.test_generator {
        m.tests.generator = match g {
            GeneratorArg::Llm => SuiteGenerator::Llm,
            GeneratorArg::Template => SuiteGenerator::Template,
        };
    }
    if let Some(t) = common.trials {
        m.tests.trials = t;
    }
    m.compiler.timeout_secs = m.budgets.compile_timeout_secs;
    if let Some(v) = &mut m.verifier {
        v.timeout_secs = m.budgets.verify_timeout_secs;
    }
    if m.budgets.max_rounds == 0 {
        return Err(CliError::Config("max_rounds must be at least 1".to_string()));
    }
    Ok(m)
}

struct Tools {
    compiler: Compiler,
    verifier: Option<Verifier>,
}

/// Validates every executable before any case starts.
fn tools(m: &RunManifest) -> Result<Tools, CliError> {
    let compiler = Compiler::new(m.compiler.clone()).map_err(|e| match e {
        CompilerError::ToolMissing { .. } | CompilerError::VersionMismatch { .. } => CliError::ToolMissing(e.to_string()),
        other => CliError::Other(other.to_string()),
    })?;
    let verifier = if m.tests_only {
        None
    } else {
        match &m.verifier {
            Some(cfg) => Verifier::new(cfg).map_err(|VerifyError::ToolMissing { path, reason }| {
                CliError::ToolMissing(format!("verifier `{path}`: {reason}"))
            })?,
            None => {
                let auto = VerifierConfig { timeout_secs: m.budgets.verify_timeout_secs, ..VerifierConfig::default() };
                match Verifier::new(&auto) {
                    Ok(v) => v,
                    Err(e) => {
                        warn!("{e}; running in tests-only mode");
                        None
                    }
                }
            }
        }
    };
    Ok(Tools { compiler, verifier })
}

fn check_llm(m: &RunManifest, cases: &[FunctionCase]) -> Result<(), CliError> {
    match &m.llm.provider {
        Provider::TranscriptReplay { path } => {
            if path.is_dir() {
                let missing: Vec<&str> = cases
                    .iter()
                    .filter(|c| !path.join(format!("{}.json", c.id)).is_file())
                    .map(|c| c.id.as_str())
                    .collect();
                if !missing.is_empty() {
                    return Err(CliError::Config(format!(
                        "no transcript in {} for: {}",
                        path.display(),
                        missing.join(", ")
                    )));
                }
            } else if !path.is_file() {
                return Err(CliError::Config(format!("transcript {} does not exist", path.display())));
            } else if cases.len() > 1 {
                return Err(CliError::Config("a single transcript file can replay only one case".to_string()));
            }
        }
        Provider::HttpEndpoint { .. } => {
            if std::env::var_os(&m.llm.api_key_env).is_none() {
                return Err(CliError::Config(format!("API key variable `{}` is not set", m.llm.api_key_env)));
            }
        }
    }
    Ok(())
}

fn load_cases(m: &RunManifest, compiler: &Compiler) -> Result<Vec<FunctionCase>, CliError> {
    let path = m.corpus.path.as_ref().ok_or_else(|| CliError::Config("no corpus given (--corpus)".to_string()))?;
    let load = load_corpus(path, Some(&m.corpus.only), Some(compiler)).map_err(|e| CliError::Config(e.to_string()))?;
    for w in &load.warnings {
        eprintln!("warning: {w}");
    }
    for r in &load.rejected {
        eprintln!("rejected {}: {}", r.id, r.error);
    }
    let mut cases = Vec::new();
    for c in load.cases {
        let estimate = estimate_tokens(&c.source_text) + estimate_tokens(&c.context_text);
        if estimate > m.llm.max_tokens as u64 {
            eprintln!("rejected {}: about {estimate} tokens of source exceeds max_tokens {}", c.id, m.llm.max_tokens);
            continue;
        }
        cases.push(c);
    }
    if cases.is_empty() {
        return Err(CliError::Config(format!("no runnable case selected from {}", path.display())));
    }
    Ok(cases)
}

fn now_stamp() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("unix:{secs}")
}

fn host_of(outcomes: &[RunOutcome]) -> HostInfo {
    outcomes.iter().find_map(|o| o.bench.as_ref().map(|b| b.host.clone())).unwrap_or_else(HostInfo::detect)
}

fn write_report(outcomes: &mut [RunOutcome], dir: &Path, compiler: &str) -> Result<String, CliError> {
    outcomes.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    let records: Vec<_> = outcomes.iter().filter_map(|o| o.bench.clone()).collect();
    let mut report = bench::build_report(outcomes, &records, host_of(outcomes), compiler);
    report.generated_at = Some(now_stamp());
    bench::emit_report(&report, dir).map_err(|e| CliError::Other(format!("cannot write report: {e}")))
}

/// Runs every selected case of `m` and writes the archive and report under
/// `m.output_dir`; returns the outcomes and the rendered summary.
pub fn execute(m: &RunManifest, bench_enabled: bool) -> Result<(Vec<RunOutcome>, String), CliError> {
    let tools = tools(m)?;
    let cases = load_cases(m, &tools.compiler)?;
    check_llm(m, &cases)?;
    fs::create_dir_all(&m.output_dir)
        .map_err(|e| CliError::Other(format!("cannot create {}: {e}", m.output_dir.display())))?;
    fs::write(m.output_dir.join("manifest.resolved.toml"), m.to_toml())
        .map_err(|e| CliError::Other(format!("cannot write manifest copy: {e}")))?;
    if tools.verifier.is_none() {
        eprintln!("note: no formal verifier; successes are stamped tests-only");
    }
    let compiler_stamp = tools.compiler.identity().to_string();
    let engine = Engine {
        compiler: tools.compiler,
        verifier: tools.verifier,
        llm: m.llm.clone(),
        tests: m.tests.clone(),
        bench: BenchConfig { enabled: bench_enabled && m.bench.enabled, ..m.bench.clone() },
        config: m.engine_config(),
        archive_root: m.output_dir.clone(),
    };
    let mut outcomes = engine.run_cases(&cases, m.parallelism);
    let summary = write_report(&mut outcomes, &m.output_dir, &compiler_stamp)?;
    Ok((outcomes, summary))
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let m = resolve(&args.common)?;
    if args.dry_run {
        print!("{}", m.to_toml());
        return Ok(());
    }
    let (_, summary) = execute(&m, !args.no_bench)?;
    print!("{summary}");
    println!("archive: {}", m.output_dir.display());
    Ok(())
}

fn cmd_record(args: &RecordArgs) -> Result<(), CliError> {
    let m = resolve(&args.common)?;
    if !m.llm.provider.is_live() {
        return Err(CliError::Config("record-transcript needs an http: provider".to_string()));
    }
    let (outcomes, summary) = execute(&m, true)?;
    fs::create_dir_all(&args.transcripts).map_err(|e| CliError::Other(e.to_string()))?;
    for o in &outcomes {
        let from = m.output_dir.join(case_dir_name(&o.case_id)).join("transcript.json");
        let to = args.transcripts.join(format!("{}.json", o.case_id));
        fs::copy(&from, &to).map_err(|e| CliError::Other(format!("{}: {e}", from.display())))?;
        println!("recorded {}", to.display());
    }
    print!("{summary}");
    Ok(())
}

/// Loads every `*/outcome.json` below `archive`, rejecting other schema versions.
pub fn load_outcomes(archive: &Path) -> Result<Vec<RunOutcome>, CliError> {
    let entries = fs::read_dir(archive).map_err(|e| CliError::Other(format!("{}: {e}", archive.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path().join("outcome.json"))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Schema(format!("{} holds no run outcome (expected <case>/outcome.json)", archive.display())));
    }
    let mut outcomes = Vec::new();
    for f in files {
        let text = fs::read_to_string(&f).map_err(|e| CliError::Other(format!("{}: {e}", f.display())))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", f.display())))?;
        match v.get("schema_version").and_then(Value::as_u64) {
            Some(n) if n == OUTCOME_SCHEMA_VERSION as u64 => {}
            Some(n) => {
                return Err(CliError::Schema(format!(
                    "{}: outcome schema version {n}, this build reads version {OUTCOME_SCHEMA_VERSION}",
                    f.display()
                )))
            }
            None => return Err(CliError::Schema(format!("{}: missing schema_version", f.display()))),
        }
        outcomes.push(serde_json::from_value(v).map_err(|e| CliError::Schema(format!("{}: {e}", f.display())))?);
    }
    Ok(outcomes)
}

fn cmd_report(archive: &Path) -> Result<(), CliError> {
    let mut outcomes = load_outcomes(archive)?;
    let compiler = outcomes[0].compiler.clone();
    let summary = write_report(&mut outcomes, archive, &compiler)?;
    print!("{summary}");
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let m = resolve(&args.common)?;
    let tools = tools(&RunManifest { tests_only: true, ..m.clone() })?;
    let cases = load_cases(&m, &tools.compiler)?;
    let scratch = tempfile::tempdir().map_err(|e| CliError::Other(e.to_string()))?;
    for case in &cases {
        let dir = scratch.path().join(case_dir_name(&case.id));
        fs::create_dir_all(&dir).map_err(|e| CliError::Other(e.to_string()))?;
        let suites: Vec<(String, TestSuite)> = if args.suite.is_empty() {
            let llm = match m.tests.generator {
                SuiteGenerator::Llm => {
                    check_llm(&m, std::slice::from_ref(case))?;
                    Some(LlmClient::for_case(&m.llm, &case.id).map_err(|e| CliError::Config(e.to_string()))?)
                }
                SuiteGenerator::Template => None,
            };
            let suite = prepare_suite(llm.as_ref(), case, &tools.compiler, &m.tests, &dir);
            vec![(format!("{:?} suite", suite.origin).to_lowercase(), suite)]
        } else {
            let mut v = Vec::new();
            for p in &args.suite {
                let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                let mut suite = template_suite(case, &m.tests);
                suite.harness_source = text;
                suite.origin = SuiteOrigin::Llm;
                let val = validate_suite(&suite, case, &tools.compiler, &m.tests, &dir);
                suite.validated = val.validated;
                suite.validation_reason = val.reason;
                v.push((p.display().to_string(), suite));
            }
            v
        };
        for (name, suite) in suites {
            match (suite.validated, &suite.validation_reason) {
                (true, _) => println!("{}: {name}: VALID", case.id),
                (false, reason) => println!("{}: {name}: INVALID ({})", case.id, reason.as_deref().unwrap_or("unknown")),
            }
            for n in &suite.notes {
                println!("  note: {n}");
            }
        }
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let m = resolve(&args.common)?;
    let tools = tools(&RunManifest { tests_only: true, ..m.clone() })?;
    let cases = load_cases(&m, &tools.compiler)?;
    let [case] = cases.as_slice() else {
        return Err(CliError::Config("bench needs exactly one case (--only)".to_string()));
    };
    let candidate = fs::read_to_string(&args.candidate)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.candidate.display())))?;
    let scratch = tempfile::tempdir().map_err(|e| CliError::Other(e.to_string()))?;
    let ranges = m.tests.ranges_for(&case.signature);
    let record = match bench::measure(case, &candidate, &ranges, &tools.compiler, &m.bench, scratch.path()) {
        Ok(r) => r,
        Err(BenchError::ChecksumMismatch(r)) => {
            eprintln!("warning: checksums differ; the rewrite does not compute the same result");
            *r
        }
        Err(e) => return Err(CliError::Other(e.to_string())),
    };
    println!("{}", serde_json::to_string_pretty(&record).expect("record serializes"));
    println!(
        "{}: original {:.3e}s, candidate {:.3e}s, speedup {:.3}x, checksum {}",
        record.case_id,
        record.t_original,
        record.t_candidate,
        record.speedup,
        if record.checksum_match { "match" } else { "MISMATCH" }
    );
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Report { archive } => cmd_report(archive),
        Command::ValidateTests(a) => cmd_validate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::RecordTranscript(a) => cmd_record(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_defaults_and_paths() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.toml");
        fs::write(
            &p,
            r#"
output_dir = "out"
[corpus]
path = "tsvc.c"
only = ["s1113"]
[llm.provider]
type = "transcript_replay"
path = "transcripts"
[budgets]
max_rounds = 5
"#,
        )
        .unwrap();
        let m = RunManifest::load(&p).unwrap();
        assert_eq!(m.corpus.path, Some(dir.path().join("tsvc.c")));
        assert_eq!(m.output_dir, dir.path().join("out"));
        assert_eq!(m.llm.provider, Provider::TranscriptReplay { path: dir.path().join("transcripts") });
        assert_eq!(m.budgets.max_rounds, 5);
        assert_eq!(m.budgets.case_wallclock_secs, 1800);
        assert_eq!(m.compiler.executable, PathBuf::from("clang"));
        assert_eq!(RunManifest::default().budgets.max_rounds, 20);
    }

    #[test]
    fn unknown_manifest_field_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.toml");
        fs::write(&p, "max_round = 3\n").unwrap();
        assert!(matches!(RunManifest::load(&p), Err(CliError::Config(_))));
    }

    #[test]
    fn flags_override_manifest() {
        let cli = Cli::try_parse_from([
            "vecrefine", "run", "--corpus", "x.c", "--only", "a,b", "--llm", "replay:t", "--max-rounds", "3", "--tests-only",
        ])
        .unwrap();
        let Command::Run(a) = cli.command else { panic!() };
        let m = resolve(&a.common).unwrap();
        assert_eq!(m.corpus.only, ["a", "b"]);
        assert_eq!(m.budgets.max_rounds, 3);
        assert!(m.tests_only);
        assert_eq!(m.llm.provider, Provider::TranscriptReplay { path: "t".into() });
    }

    #[test]
    fn resolved_manifest_round_trips_through_toml() {
        let m = RunManifest::default();
        let back: RunManifest = toml::from_str(&m.to_toml()).unwrap();
        assert_eq!(back, m);
    }
}
