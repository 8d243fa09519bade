//! Translation validation of candidate against original at the IR level.
//!
//! Both functions are lowered with the emit-IR profile, the candidate's
//! `_opt` suffix is stripped so the validator pairs same-named functions,
//! and the validator's textual verdict is classified into four kinds.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{CompileStatus, Compiler, CompilerError, FlagsProfile};
use crate::corpus::FunctionCase;
use crate::process::run_captured;
use crate::testing::slot_text;

pub const DEFAULT_VERIFY_TIMEOUT_SECS: u64 = 120;
/// Diagnostic stamped on every verdict when no validator is installed.
pub const UNAVAILABLE: &str = "unavailable";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifierConfig {
    /// `None` disables formal verification (tests-only mode).
    pub executable: Option<PathBuf>,
    pub extra_args: Vec<String>,
    pub timeout_secs: u64,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        VerifierConfig {
            executable: Some(PathBuf::from("alive-tv")),
            extra_args: Vec::new(),
            timeout_secs: DEFAULT_VERIFY_TIMEOUT_SECS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "text", rename_all = "snake_case")]
pub enum FormalVerdict {
    Equivalent,
    Mismatch(String),
    Timeout,
    ToolError(String),
}

impl FormalVerdict {
    pub fn unavailable() -> FormalVerdict {
        FormalVerdict::ToolError(UNAVAILABLE.to_string())
    }

    pub fn is_equivalent(&self) -> bool {
        *self == FormalVerdict::Equivalent
    }

    pub fn is_unavailable(&self) -> bool {
        matches!(self, FormalVerdict::ToolError(d) if d == UNAVAILABLE)
    }

    pub fn label(&self) -> &'static str {
        match self {
            FormalVerdict::Equivalent => "equivalent",
            FormalVerdict::Mismatch(_) => "mismatch",
            FormalVerdict::Timeout => "timeout",
            FormalVerdict::ToolError(_) => "tool_error",
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FormalVerdict::Equivalent => "Formal verification: the candidate is equivalent to the original.".to_string(),
            FormalVerdict::Mismatch(text) => {
                format!("Formal verification found a semantic mismatch. Validator output:\n{}", text.trim())
            }
            FormalVerdict::Timeout => {
                "Formal verification timed out; simplify the control flow so equivalence is easier to prove.".to_string()
            }
            FormalVerdict::ToolError(d) if d == UNAVAILABLE => "Formal verification is not available on this host.".to_string(),
            FormalVerdict::ToolError(d) => format!("Formal verification could not complete:\n{}", d.trim()),
        }
    }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("verifier executable `{path}` is not usable: {reason}")]
    ToolMissing { path: String, reason: String },
}

/// Maps validator output to a verdict. Unknown output is a tool error with
/// the full text preserved.
pub fn classify_tool_output(stdout: &str, stderr: &str, exit_code: Option<i32>) -> FormalVerdict {
    let all = if stderr.trim().is_empty() { stdout.to_string() } else { format!("{stdout}\n{stderr}") };
    let approximated = all.contains("Couldn't prove the correctness") || all.contains("approximated the semantics");
    if all.contains("Transformation doesn't verify!") {
        if approximated {
            return FormalVerdict::ToolError(all);
        }
        return FormalVerdict::Mismatch(stdout.to_string());
    }
    if all.contains("ERROR: Timeout") || all.contains("SMT Error: Timeout") {
        return FormalVerdict::Timeout;
    }
    let correct = all.contains("Transformation seems to be correct!");
    let failed_summary = Regex::new(r"(?m)^\s*([1-9]\d*) (incorrect|failed-to-prove) transformations")
        .unwrap()
        .is_match(&all)
        || Regex::new(r"(?m)^\s*([1-9]\d*) Alive2 errors").unwrap().is_match(&all);
    if correct && !failed_summary && !approximated && exit_code.unwrap_or(0) == 0 {
        return FormalVerdict::Equivalent;
    }
    FormalVerdict::ToolError(all)
}

fn find_in_path(name: &Path) -> Option<PathBuf> {
    if name.components().count() > 1 {
        return name.is_file().then(|| name.to_path_buf());
    }
    let paths = env::var_os("PATH")?;
    env::split_paths(&paths).map(|d| d.join(name)).find(|p| p.is_file())
}

#[derive(Debug, Clone)]
pub struct Verifier {
    path: PathBuf,
    config: VerifierConfig,
}

impl Verifier {
    /// Resolves the configured executable; `Ok(None)` when verification is
    /// disabled in the configuration.
    pub fn new(config: &VerifierConfig) -> Result<Option<Verifier>, VerifyError> {
        let Some(exe) = &config.executable else { return Ok(None) };
        match find_in_path(exe) {
            Some(path) => Ok(Some(Verifier { path, config: config.clone() })),
            None => Err(VerifyError::ToolMissing {
                path: exe.display().to_string(),
                reason: "not found".to_string(),
            }),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.config.timeout_secs)
    }

    pub fn verify_pair(&self, original_ir: &Path, candidate_ir: &Path, budget: Duration, capture_dir: &Path) -> FormalVerdict {
        if budget.is_zero() {
            return FormalVerdict::Timeout;
        }
        let mut cmd = Command::new(&self.path);
        cmd.args(&self.config.extra_args).arg(original_ir).arg(candidate_ir);
        match run_captured(&mut cmd, budget, capture_dir, "verifier") {
            Ok(out) if out.timed_out() => FormalVerdict::Timeout,
            Ok(out) => classify_tool_output(&out.stdout, &out.stderr, out.exit_code()),
            Err(e) => FormalVerdict::ToolError(format!("cannot run {}: {e}", self.path.display())),
        }
    }
}

/// Renames `@<name>_opt` to `@<name>` throughout an IR module.
pub fn strip_slot_suffix(ir: &str, name: &str) -> String {
    let re = Regex::new(&format!(r"@{}_opt\b", regex::escape(name))).expect("valid name");
    re.replace_all(ir, format!("@{name}").as_str()).into_owned()
}

/// Lowers original and candidate to pre-vectorization IR in `scratch`.
pub fn emit_ir_pair(
    case: &FunctionCase,
    candidate: &str,
    compiler: &Compiler,
    scratch: &Path,
) -> Result<(PathBuf, PathBuf), String> {
    let lower = |stem: &str, text: &str| -> Result<PathBuf, String> {
        let (unit, _, _) = case.unit_with(text);
        let r = compiler
            .compile(stem, &unit, FlagsProfile::EmitIr, scratch, &case.extra_flags)
            .map_err(|e: CompilerError| e.to_string())?;
        match (r.status, r.artifact_path) {
            (CompileStatus::Ok, Some(p)) => Ok(p),
            (CompileStatus::Error(d), _) => Err(d),
            (CompileStatus::Ok, None) => Err("no IR produced".to_string()),
        }
    };
    let original = lower("original_ir", &case.source_text)?;
    let candidate_ll = lower("candidate_ir", &slot_text(candidate, &case.signature))?;
    let text = fs::read_to_string(&candidate_ll).map_err(|e| e.to_string())?;
    fs::write(&candidate_ll, strip_slot_suffix(&text, &case.signature.name)).map_err(|e| e.to_string())?;
    Ok((original, candidate_ll))
}
