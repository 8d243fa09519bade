//! System compiler invocation and loop-vectorize remark parsing.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::process::run_captured;

/// Optimization flags shared by the diagnose and bench profiles.
pub const OPT_FLAGS: [&str; 2] = ["-O3", "-ffast-math"];
/// Remark flags appended for the diagnose profile.
pub const REMARK_FLAGS: [&str; 2] = ["-Rpass=loop-vectorize", "-Rpass-analysis=loop-vectorize"];
/// Pre-vectorization IR: mild cleanup only, both vectorizers off.
pub const EMIT_IR_FLAGS: [&str; 5] = ["-O1", "-fno-vectorize", "-fno-slp-vectorize", "-S", "-emit-llvm"];

pub const DEFAULT_COMPILE_TIMEOUT_SECS: u64 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagsProfile {
    Diagnose,
    Bench,
    EmitIr,
}

impl FlagsProfile {
    pub fn name(self) -> &'static str {
        match self {
            FlagsProfile::Diagnose => "diagnose",
            FlagsProfile::Bench => "bench",
            FlagsProfile::EmitIr => "emit_ir",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompilerConfig {
    pub executable: PathBuf,
    /// Substring that must appear in `--version` output, e.g. `"clang version 14."`.
    pub version_pin: Option<String>,
    pub timeout_secs: u64,
    /// Replaces [`EMIT_IR_FLAGS`] when set.
    pub ir_flags: Option<Vec<String>>,
}

impl Default for CompilerConfig {
    fn default() -> Self {
        CompilerConfig {
            executable: PathBuf::from("clang"),
            version_pin: None,
            timeout_secs: DEFAULT_COMPILE_TIMEOUT_SECS,
            ir_flags: None,
        }
    }
}

/// Path and version banner of the compiler that produced a result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompilerIdentity {
    pub path: String,
    pub version: String,
}

impl fmt::Display for CompilerIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.version, self.path)
    }
}

#[derive(Debug, Error)]
pub enum CompilerError {
    #[error("compiler executable `{path}` is not usable: {reason}")]
    ToolMissing { path: String, reason: String },
    #[error("compiler version mismatch: expected `{expected}`, found `{found}`")]
    VersionMismatch { expected: String, found: String },
    #[error("compilation exceeded {secs}s")]
    Timeout { secs: u64 },
    #[error("refusing to compile empty source")]
    EmptySource,
    #[error("i/o error in scratch directory: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "diagnostic", rename_all = "snake_case")]
pub enum CompileStatus {
    Ok,
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileResult {
    pub status: CompileStatus,
    pub remarks_raw: String,
    pub artifact_path: Option<PathBuf>,
    pub command_line: Vec<String>,
}

impl CompileResult {
    pub fn is_ok(&self) -> bool {
        self.status == CompileStatus::Ok
    }
}

#[derive(Debug, Clone)]
pub struct Compiler {
    config: CompilerConfig,
    identity: CompilerIdentity,
}

impl Compiler {
    /// Probes the configured executable and checks the version pin.
    pub fn new(config: CompilerConfig) -> Result<Self, CompilerError> {
        let path = config.executable.display().to_string();
        let output = Command::new(&config.executable)
            .arg("--version")
            .output()
            .map_err(|e| CompilerError::ToolMissing { path: path.clone(), reason: e.to_string() })?;
        if !output.status.success() {
            return Err(CompilerError::ToolMissing {
                path,
                reason: format!("`--version` exited with {}", output.status),
            });
        }
        let banner = String::from_utf8_lossy(&output.stdout);
        let version = banner.lines().next().unwrap_or("").trim().to_string();
        if let Some(pin) = &config.version_pin {
            if !banner.contains(pin.as_str()) {
                return Err(CompilerError::VersionMismatch { expected: pin.clone(), found: version });
            }
        }
        Ok(Compiler { config, identity: CompilerIdentity { path, version } })
    }

    pub fn identity(&self) -> &CompilerIdentity {
        &self.identity
    }

    pub fn config(&self) -> &CompilerConfig {
        &self.config
    }

    pub fn profile_flags(&self, profile: FlagsProfile) -> Vec<String> {
        match profile {
            FlagsProfile::Diagnose => OPT_FLAGS.iter().chain(REMARK_FLAGS.iter()).map(|s| s.to_string()).collect(),
            FlagsProfile::Bench => OPT_FLAGS.iter().map(|s| s.to_string()).collect(),
            FlagsProfile::EmitIr => match &self.config.ir_flags {
                Some(flags) => flags.clone(),
                None => EMIT_IR_FLAGS.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    /// Argument vector (without the executable) for compiling `src` to `out`.
    pub fn command_args(&self, profile: FlagsProfile, src: &str, out: &str, extra_flags: &[String]) -> Vec<String> {
        let mut args = self.profile_flags(profile);
        args.extend(extra_flags.iter().cloned());
        if profile != FlagsProfile::EmitIr {
            args.push("-c".to_string());
        }
        args.push(src.to_string());
        args.push("-o".to_string());
        args.push(out.to_string());
        args
    }

    /// Writes `source` to `<scratch>/<stem>.c` and compiles it under `profile`.
    ///
    /// The compiler runs inside `scratch` with a relative file name so that
    /// remark text does not depend on where the scratch directory lives.
    pub fn compile(
        &self,
        stem: &str,
        source: &str,
        profile: FlagsProfile,
        scratch: &Path,
        extra_flags: &[String],
    ) -> Result<CompileResult, CompilerError> {
        if source.trim().is_empty() {
            return Err(CompilerError::EmptySource);
        }
        let ext = if profile == FlagsProfile::EmitIr { "ll" } else { "o" };
        let src = format!("{stem}.c");
        let out = format!("{stem}.{ext}");
        let args = self.command_args(profile, &src, &out, extra_flags);
        self.invoke(stem, source, &args, &out, scratch, &format!("{stem}.{}", profile.name()))
    }

    /// Compiles and links `source` into `<scratch>/<stem>` at the bench profile.
    pub fn build_executable(
        &self,
        stem: &str,
        source: &str,
        scratch: &Path,
        extra_flags: &[String],
    ) -> Result<CompileResult, CompilerError> {
        if source.trim().is_empty() {
            return Err(CompilerError::EmptySource);
        }
        let src = format!("{stem}.c");
        let mut args = self.profile_flags(FlagsProfile::Bench);
        args.extend(extra_flags.iter().cloned());
        args.extend([src, "-o".to_string(), stem.to_string(), "-lm".to_string()]);
        self.invoke(stem, source, &args, stem, scratch, &format!("{stem}.build"))
    }

    fn invoke(
        &self,
        stem: &str,
        source: &str,
        args: &[String],
        out: &str,
        scratch: &Path,
        tag: &str,
    ) -> Result<CompileResult, CompilerError> {
        fs::create_dir_all(scratch)?;
        fs::write(scratch.join(format!("{stem}.c")), source)?;
        let _ = fs::remove_file(scratch.join(out));

        let mut cmd = Command::new(&self.config.executable);
        cmd.args(args).current_dir(scratch);
        let output = run_captured(&mut cmd, Duration::from_secs(self.config.timeout_secs), scratch, tag)
            .map_err(|e| match e.kind() {
                io::ErrorKind::NotFound | io::ErrorKind::PermissionDenied => CompilerError::ToolMissing {
                    path: self.identity.path.clone(),
                    reason: e.to_string(),
                },
                _ => CompilerError::Io(e),
            })?;
        if output.timed_out() {
            return Err(CompilerError::Timeout { secs: self.config.timeout_secs });
        }

        let mut command_line = vec![self.identity.path.clone()];
        command_line.extend(args.iter().cloned());
        let artifact = scratch.join(out);
        let status = if output.success() && artifact.exists() {
            CompileStatus::Ok
        } else {
            let mut diag = output.stderr.trim().to_string();
            if diag.is_empty() {
                diag = format!("compiler {} without producing {out}", output.describe_exit());
            }
            CompileStatus::Error(diag)
        };
        let artifact_path = (status == CompileStatus::Ok).then_some(artifact);
        Ok(CompileResult { status, remarks_raw: output.stderr, artifact_path, command_line })
    }
}

// ---------------------------------------------------------------------------
// Remark parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Location {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub location: Location,
    pub vectorized: bool,
    pub reason: Option<String>,
    pub detail: Option<String>,
    pub width: Option<u32>,
    pub interleave: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorizationReport {
    pub loops: Vec<LoopRecord>,
    /// Diagnostics from other passes or severities, with their source echo.
    pub other: Vec<String>,
    /// Lines the parser could not attribute to anything.
    pub leftovers: Vec<String>,
    /// Number of loop-vectorize remark lines consumed into `loops`.
    pub remark_lines: usize,
}

/// Which loops must be vectorized for [`is_fully_vectorized`] to hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoopSelection {
    All,
    /// Loops whose remark line falls inside `first..=last`.
    Lines { first: u32, last: u32 },
}

impl LoopSelection {
    pub fn contains(&self, loc: Location) -> bool {
        match *self {
            LoopSelection::All => true,
            LoopSelection::Lines { first, last } => (first..=last).contains(&loc.line),
        }
    }
}

impl VectorizationReport {
    pub fn selected<'a>(&'a self, selection: &'a LoopSelection) -> impl Iterator<Item = &'a LoopRecord> + 'a {
        self.loops.iter().filter(move |l| selection.contains(l.location))
    }

    pub fn failed_loops(&self) -> impl Iterator<Item = &LoopRecord> {
        self.loops.iter().filter(|l| !l.vectorized)
    }

    pub fn any_vectorized(&self, selection: &LoopSelection) -> bool {
        self.selected(selection).any(|l| l.vectorized)
    }
}

/// True iff at least one loop is selected and every selected loop vectorized.
pub fn is_fully_vectorized(report: &VectorizationReport, selection: &LoopSelection) -> bool {
    let mut any = false;
    for l in report.selected(selection) {
        if !l.vectorized {
            return false;
        }
        any = true;
    }
    any
}

fn diag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(?P<file>[^:]+):(?P<line>\d+):(?P<col>\d+): (?P<sev>remark|warning|error|note|fatal error): (?P<msg>.*)$")
            .unwrap()
    })
}

fn width_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"vectorization width: (\d+)(?:, interleaved count: (\d+))?").unwrap())
}

fn is_caret_line(line: &str) -> bool {
    let t = line.trim();
    !t.is_empty() && t.starts_with('^') && t.chars().all(|c| matches!(c, '^' | '~' | ' '))
}

fn is_summary_line(line: &str) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"^\d+ (warning|error)s?( and \d+ (warning|error)s?)? generated\.$").unwrap());
    re.is_match(line.trim()) || line.starts_with("In file included from ")
}

#[derive(Default)]
struct LoopAcc {
    success: Option<(Option<u32>, Option<u32>)>,
    reasons: Vec<String>,
    analyses: Vec<String>,
    missed: Vec<String>,
}

enum RemarkKind {
    Passed,
    Analysis,
    Missed,
}

/// Parses the diagnostic stream of a diagnose-profile compile.
///
/// Remarks are grouped by `(line, column)`; the source echo and caret lines
/// clang prints under each diagnostic are consumed silently.
pub fn parse_remarks(remarks_raw: &str) -> VectorizationReport {
    let lines: Vec<&str> = remarks_raw.lines().collect();
    let mut acc: BTreeMap<Location, LoopAcc> = BTreeMap::new();
    let mut order: Vec<Location> = Vec::new();
    let mut report = VectorizationReport::default();

    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        i += 1;
        if line.trim().is_empty() || is_caret_line(line) {
            continue;
        }
        if let Some(caps) = diag_re().captures(line) {
            let msg = caps["msg"].to_string();
            let kind = if caps["sev"] != *"remark" {
                None
            } else if let Some(m) = msg.strip_suffix(" [-Rpass=loop-vectorize]") {
                Some((RemarkKind::Passed, m.to_string()))
            } else if let Some(m) = msg.strip_suffix(" [-Rpass-analysis=loop-vectorize]") {
                Some((RemarkKind::Analysis, m.to_string()))
            } else {
                msg.strip_suffix(" [-Rpass-missed=loop-vectorize]").map(|m| (RemarkKind::Missed, m.to_string()))
            };
            let Some((kind, text)) = kind else {
                report.other.push(line.to_string());
                continue;
            };
            let loc = Location { line: caps["line"].parse().unwrap_or(0), column: caps["col"].parse().unwrap_or(0) };
            let entry = acc.entry(loc).or_insert_with(|| {
                order.push(loc);
                LoopAcc::default()
            });
            report.remark_lines += 1;
            match kind {
                RemarkKind::Passed if text.starts_with("vectorized loop") => {
                    let (w, ic) = width_re()
                        .captures(&text)
                        .map(|c| (c[1].parse().ok(), c.get(2).and_then(|m| m.as_str().parse().ok())))
                        .unwrap_or((None, None));
                    entry.success = Some((w, ic));
                }
                // "interleaved loop (interleaved count: N)" and friends: not vectorization.
                RemarkKind::Passed => entry.analyses.push(text),
                RemarkKind::Analysis => match text.strip_prefix("loop not vectorized: ") {
                    Some(reason) => entry.reasons.push(reason.to_string()),
                    None => entry.analyses.push(text),
                },
                RemarkKind::Missed => entry.missed.push(text),
            }
            continue;
        }
        if is_summary_line(line) {
            report.other.push(line.to_string());
            continue;
        }
        // Source echo: a free-form line immediately followed by a caret line.
        if i < lines.len() && is_caret_line(lines[i]) {
            continue;
        }
        report.leftovers.push(line.to_string());
    }

    for loc in order {
        let a = acc.remove(&loc).unwrap_or_default();
        let record = match a.success {
            Some((width, interleave)) => {
                let notes: Vec<String> = a.reasons.into_iter().chain(a.analyses).collect();
                LoopRecord {
                    location: loc,
                    vectorized: true,
                    reason: None,
                    detail: (!notes.is_empty()).then(|| notes.join("; ")),
                    width,
                    interleave,
                }
            }
            None => {
                let mut texts: Vec<String> = a.reasons.into_iter().chain(a.analyses).chain(a.missed).collect();
                let reason = if texts.is_empty() { "loop not vectorized".to_string() } else { texts.remove(0) };
                LoopRecord {
                    location: loc,
                    vectorized: false,
                    reason: Some(reason),
                    detail: (!texts.is_empty()).then(|| texts.join("; ")),
                    width: None,
                    interleave: None,
                }
            }
        };
        report.loops.push(record);
    }
    merge_instruction_causes(&mut report.loops);
    report
}

const GENERIC_INSTR_REASON: &str = "instruction cannot be vectorized";

/// Clang reports an unvectorizable instruction at the instruction's own
/// location, then the generic reason at the loop header. Fold the first
/// into the second as its detail.
fn merge_instruction_causes(loops: &mut Vec<LoopRecord>) {
    let mut k = 0;
    while k + 1 < loops.len() {
        let (x, y) = (&loops[k], &loops[k + 1]);
        let cause = !x.vectorized
            && !y.vectorized
            && x.location.line >= y.location.line
            && y.reason.as_deref() == Some(GENERIC_INSTR_REASON)
            && x.reason.as_deref().is_some_and(|r| r.ends_with("cannot be vectorized") && r != GENERIC_INSTR_REASON);
        if cause {
            let x = loops.remove(k);
            let y = &mut loops[k];
            let mut parts = vec![format!("{} at {}", x.reason.unwrap_or_default(), x.location)];
            parts.extend(x.detail);
            parts.extend(y.detail.take());
            y.detail = Some(parts.join("; "));
        } else {
            k += 1;
        }
    }
}

/// Renders a report for inclusion in a prompt, quoting source lines when
/// `source` is given and shifting locations by `line_offset`.
pub fn render_report(report: &VectorizationReport, source: Option<&str>, line_offset: u32) -> String {
    if report.loops.is_empty() {
        return "The compiler emitted no loop-vectorize remarks (no loop was vectorized).".to_string();
    }
    let src_lines: Vec<&str> = source.map(|s| s.lines().collect()).unwrap_or_default();
    let mut out = String::new();
    for l in &report.loops {
        let line = l.location.line.saturating_sub(line_offset);
        let status = if l.vectorized {
            match l.width {
                Some(w) => format!("vectorized (width {w})"),
                None => "vectorized".to_string(),
            }
        } else {
            format!("NOT vectorized: {}", l.reason.as_deref().unwrap_or("unknown reason"))
        };
        out.push_str(&format!("- loop at line {line}, column {}: {status}", l.location.column));
        if let Some(d) = &l.detail {
            out.push_str(&format!(" [analysis: {d}]"));
        }
        out.push('\n');
        if let Some(text) = (line as usize).checked_sub(1).and_then(|i| src_lines.get(i)) {
            out.push_str(&format!("    `{}`\n", text.trim()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_vectorized_remark() {
        let r = parse_remarks(
            "file.c:4:9: remark: vectorized loop (vectorization width: 4, interleaved count: 2) [-Rpass=loop-vectorize]",
        );
        assert_eq!(r.loops.len(), 1);
        let l = &r.loops[0];
        assert_eq!(l.location, Location { line: 4, column: 9 });
        assert!(l.vectorized);
        assert_eq!(l.reason, None);
        assert_eq!((l.width, l.interleave), (Some(4), Some(2)));
    }

    #[test]
    fn parses_failure_reason() {
        let r = parse_remarks(
            "file.c:3:5: remark: loop not vectorized: unsafe dependent memory operations [-Rpass-analysis=loop-vectorize]",
        );
        assert_eq!(r.loops.len(), 1);
        assert_eq!(r.loops[0].location, Location { line: 3, column: 5 });
        assert!(!r.loops[0].vectorized);
        assert_eq!(r.loops[0].reason.as_deref(), Some("unsafe dependent memory operations"));
    }

    #[test]
    fn empty_input_has_no_loops() {
        let r = parse_remarks("");
        assert!(r.loops.is_empty());
        assert!(r.leftovers.is_empty());
    }

    #[test]
    fn source_echo_and_carets_are_consumed() {
        let raw = "a.c:7:9: remark: loop not vectorized: could not determine number of loop iterations [-Rpass-analysis=loop-vectorize]\n        for (int i = 0; i < N; i++)\n        ^\n";
        let r = parse_remarks(raw);
        assert_eq!(r.loops.len(), 1);
        assert!(r.leftovers.is_empty());
    }

    #[test]
    fn second_analysis_at_same_location_becomes_detail() {
        let raw = "t.c:227:9: remark: loop not vectorized: value that could not be identified as reduction is used outside the loop [-Rpass-analysis=loop-vectorize]\n\
                   t.c:227:9: remark: loop not vectorized: cannot identify array bounds [-Rpass-analysis=loop-vectorize]";
        let r = parse_remarks(raw);
        assert_eq!(r.loops.len(), 1);
        assert_eq!(r.remark_lines, 2);
        assert_eq!(r.loops[0].detail.as_deref(), Some("cannot identify array bounds"));
    }

    #[test]
    fn cost_model_note_on_vectorized_loop_is_detail() {
        let raw = "t.c:177:9: remark: the cost-model indicates that interleaving is not beneficial [-Rpass-analysis=loop-vectorize]\n\
                   t.c:177:9: remark: vectorized loop (vectorization width: 4, interleaved count: 1) [-Rpass=loop-vectorize]";
        let r = parse_remarks(raw);
        assert_eq!(r.loops.len(), 1);
        assert!(r.loops[0].vectorized);
        assert!(r.loops[0].reason.is_none());
        assert!(r.loops[0].detail.as_deref().unwrap().contains("interleaving"));
    }

    #[test]
    fn unrelated_diagnostics_go_to_other_and_junk_to_leftovers() {
        let raw = "x.c:1:1: warning: unused variable 'q' [-Wunused-variable]\n    int q;\n    ^\n1 warning generated.\nrandom junk\n";
        let r = parse_remarks(raw);
        assert!(r.loops.is_empty());
        assert_eq!(r.other.len(), 2);
        assert_eq!(r.leftovers, vec!["random junk".to_string()]);
    }

    fn rec(v: bool) -> LoopRecord {
        LoopRecord {
            location: Location { line: 0, column: 0 },
            vectorized: v,
            reason: (!v).then(|| "r".to_string()),
            detail: None,
            width: None,
            interleave: None,
        }
    }

    fn report(flags: &[bool]) -> VectorizationReport {
        let mut r = VectorizationReport::default();
        for (i, &v) in flags.iter().enumerate() {
            let mut l = rec(v);
            l.location.line = i as u32 + 1;
            r.loops.push(l);
        }
        r
    }

    #[test]
    fn fully_vectorized_rules() {
        assert!(is_fully_vectorized(&report(&[true, true]), &LoopSelection::All));
        assert!(!is_fully_vectorized(&report(&[true, false]), &LoopSelection::All));
        assert!(!is_fully_vectorized(&report(&[]), &LoopSelection::All));
    }

    #[test]
    fn selection_restricts_loops() {
        let r = report(&[false, true]);
        assert!(is_fully_vectorized(&r, &LoopSelection::Lines { first: 2, last: 10 }));
        assert!(!is_fully_vectorized(&r, &LoopSelection::Lines { first: 5, last: 10 }));
    }

    #[test]
    fn diagnose_command_line_has_exact_flags() {
        let Ok(c) = Compiler::new(CompilerConfig::default()) else { return };
        let args = c.command_args(FlagsProfile::Diagnose, "x.c", "x.o", &[]);
        assert_eq!(
            &args[..4],
            &["-O3", "-ffast-math", "-Rpass=loop-vectorize", "-Rpass-analysis=loop-vectorize"]
        );
        let bench = c.command_args(FlagsProfile::Bench, "x.c", "x.o", &[]);
        assert_eq!(&bench[..3], &["-O3", "-ffast-math", "-c"]);
    }

    #[test]
    fn missing_executable_is_tool_missing() {
        let err = Compiler::new(CompilerConfig {
            executable: PathBuf::from("/nonexistent/cc-xyz"),
            ..CompilerConfig::default()
        })
        .unwrap_err();
        assert!(matches!(err, CompilerError::ToolMissing { .. }));
    }
}
