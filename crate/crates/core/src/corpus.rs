//! Ingestion of candidate functions from TSVC-style suites or manifests.
//!
//! Function boundaries are found by brace matching from each definition
//! header; no C parser is involved. In a single-file suite every function
//! with external linkage is a case, and `static` functions, macros, typedefs
//! and includes form the shared compilation context.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{parse_remarks, CompileStatus, Compiler, CompilerError, FlagsProfile, VectorizationReport};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("case `{id}` does not build standalone: {diagnostic}")]
    Compile { id: String, diagnostic: String },
    #[error(transparent)]
    Compiler(#[from] CompilerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericKind {
    F32,
    F64,
    I32,
    I64,
}

impl NumericKind {
    pub fn is_float(self) -> bool {
        matches!(self, NumericKind::F32 | NumericKind::F64)
    }

    /// Constant name used by the native harness templates.
    pub fn harness_tag(self) -> &'static str {
        match self {
            NumericKind::F32 => "VR_F32",
            NumericKind::F64 => "VR_F64",
            NumericKind::I32 => "VR_I32",
            NumericKind::I64 => "VR_I64",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReturnKind {
    Void,
    Scalar { numeric: NumericKind },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamKind {
    ScalarIn { numeric: NumericKind },
    /// `extent` holds one symbol or literal per declared dimension.
    ArrayInOut { element: NumericKind, extent: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    /// Type spelling as written, without the declarator (`const real_t`).
    pub c_type: String,
    pub kind: ParamKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSignature {
    pub name: String,
    pub return_c_type: String,
    pub return_kind: ReturnKind,
    pub params: Vec<Param>,
}

impl FunctionSignature {
    pub fn is_void(&self) -> bool {
        self.return_kind == ReturnKind::Void
    }

    /// The name the candidate rewrite must define.
    pub fn slot_name(&self) -> String {
        format!("{}_opt", self.name)
    }

    pub fn describe(&self) -> String {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|p| match &p.kind {
                ParamKind::ScalarIn { .. } => format!("{} {} (scalar input)", p.c_type, p.name),
                ParamKind::ArrayInOut { extent, .. } => {
                    let dims: String = extent.iter().map(|d| format!("[{d}]")).collect();
                    format!("{} {}{} (array, read/write)", p.c_type, p.name, dims)
                }
            })
            .collect();
        format!("{} {}({})", self.return_c_type, self.name, params.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "tag", content = "text", rename_all = "snake_case")]
pub enum NonVectorizableCategory {
    UnsafeDependentMemOps,
    UnidentifiedReduction,
    UnknownArrayBounds,
    UnknownTripCount,
    UnvectorizableInstr,
    SwitchInLoop,
    Other(String),
}

impl NonVectorizableCategory {
    pub fn label(&self) -> String {
        match self {
            NonVectorizableCategory::UnsafeDependentMemOps => "unsafe dependent memory operations".into(),
            NonVectorizableCategory::UnidentifiedReduction => "could not identify reduction variable".into(),
            NonVectorizableCategory::UnknownArrayBounds => "cannot identify array bounds".into(),
            NonVectorizableCategory::UnknownTripCount => "could not determine number of loop iterations".into(),
            NonVectorizableCategory::UnvectorizableInstr => "instruction cannot be vectorized".into(),
            NonVectorizableCategory::SwitchInLoop => "loop contains switch statement".into(),
            NonVectorizableCategory::Other(s) => format!("other: {s}"),
        }
    }
}

impl fmt::Display for NonVectorizableCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Substring table from remark reason text to category; first match wins.
const REASON_TABLE: &[(&str, NonVectorizableCategory)] = &[
    ("unsafe dependent memory operations", NonVectorizableCategory::UnsafeDependentMemOps),
    ("identify reduction", NonVectorizableCategory::UnidentifiedReduction),
    ("identified as reduction", NonVectorizableCategory::UnidentifiedReduction),
    ("identify array bounds", NonVectorizableCategory::UnknownArrayBounds),
    ("determine number of loop iterations", NonVectorizableCategory::UnknownTripCount),
    ("instruction cannot be vectorized", NonVectorizableCategory::UnvectorizableInstr),
    ("instructions cannot be vectorized", NonVectorizableCategory::UnvectorizableInstr),
    ("switch statement", NonVectorizableCategory::SwitchInLoop),
];

pub fn classify_reason(reason: &str) -> NonVectorizableCategory {
    let lower = reason.to_ascii_lowercase();
    REASON_TABLE
        .iter()
        .find(|(needle, _)| lower.contains(needle))
        .map(|(_, cat)| cat.clone())
        .unwrap_or_else(|| NonVectorizableCategory::Other(reason.to_string()))
}

/// Category of the first non-vectorized loop, or `None` when every loop
/// vectorized (or none was reported).
pub fn classify_case(report: &VectorizationReport) -> Option<NonVectorizableCategory> {
    report.failed_loops().find_map(|l| l.reason.as_deref()).map(classify_reason)
}

/// Every distinct category among the report's failed loops.
pub fn classify_all(report: &VectorizationReport) -> BTreeSet<NonVectorizableCategory> {
    report.failed_loops().filter_map(|l| l.reason.as_deref()).map(classify_reason).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Tsvc,
    UserFile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionCase {
    pub id: String,
    pub source_text: String,
    pub context_text: String,
    pub signature: FunctionSignature,
    pub category: Option<NonVectorizableCategory>,
    pub origin: Origin,
    #[serde(default)]
    pub extra_flags: Vec<String>,
}

impl FunctionCase {
    /// Context followed by `function_text`, as one translation unit, plus the
    /// 1-based line range the function occupies in it.
    pub fn unit_with(&self, function_text: &str) -> (String, u32, u32) {
        let mut unit = self.context_text.clone();
        if !unit.is_empty() && !unit.ends_with('\n') {
            unit.push('\n');
        }
        let first = unit.lines().count() as u32 + 1;
        unit.push_str(function_text);
        if !unit.ends_with('\n') {
            unit.push('\n');
        }
        let last = unit.lines().count() as u32;
        (unit, first, last)
    }

    pub fn has_empty_body(&self) -> bool {
        let stripped = strip_comments(&self.source_text);
        match (stripped.find('{'), stripped.rfind('}')) {
            (Some(open), Some(close)) if open < close => stripped[open + 1..close].trim().is_empty(),
            _ => false,
        }
    }
}

/// Renames the function identifier `from` to `to` wherever it is called or
/// defined (`from` followed by `(`).
pub fn rename_function(text: &str, from: &str, to: &str) -> String {
    let re = Regex::new(&format!(r"\b{}\b(\s*\()", regex::escape(from))).expect("valid identifier regex");
    re.replace_all(text, |caps: &regex::Captures| format!("{to}{}", &caps[1])).into_owned()
}

/// Whether `text` contains a definition (not just a call) of `name`.
pub fn defines_function(text: &str, name: &str) -> bool {
    find_function_definitions(text).iter().any(|f| f.name == name)
}

// ---------------------------------------------------------------------------
// Function boundary detection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSpan {
    pub name: String,
    /// Byte range of the whole definition, header through closing brace.
    pub start: usize,
    pub end: usize,
    pub header: String,
    pub is_static: bool,
}

/// Blanks out comments while preserving byte offsets and newlines.
pub fn strip_comments(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = bytes.to_vec();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'/' if bytes.get(i + 1) == Some(&b'/') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    out[i] = b' ';
                    i += 1;
                }
            }
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                let mut j = i + 2;
                while j + 1 < bytes.len() && !(bytes[j] == b'*' && bytes[j + 1] == b'/') {
                    j += 1;
                }
                let end = (j + 2).min(bytes.len());
                for b in &mut out[i..end] {
                    if *b != b'\n' {
                        *b = b' ';
                    }
                }
                i = end;
            }
            q @ (b'"' | b'\'') => {
                i += 1;
                while i < bytes.len() && bytes[i] != q && bytes[i] != b'\n' {
                    if bytes[i] == b'\\' {
                        i += 1;
                    }
                    i += 1;
                }
                i += 1;
            }
            _ => i += 1,
        }
    }
    // Only ASCII bytes inside comments were replaced.
    String::from_utf8(out).unwrap_or_else(|_| text.to_string())
}

/// Finds top-level function definitions by matching braces.
pub fn find_function_definitions(text: &str) -> Vec<FunctionSpan> {
    let clean = strip_comments(text);
    let b = clean.as_bytes();
    let mut spans = Vec::new();
    let mut stmt_start = 0usize;
    let mut at_line_start = true;
    let mut i = 0usize;

    while i < b.len() {
        let c = b[i];
        if c == b'\n' {
            at_line_start = true;
            i += 1;
            continue;
        }
        if at_line_start && c == b'#' {
            // Preprocessor directive, honouring line continuations.
            while i < b.len() && !(b[i] == b'\n' && (i == 0 || b[i - 1] != b'\\')) {
                i += 1;
            }
            stmt_start = i;
            continue;
        }
        if !c.is_ascii_whitespace() {
            at_line_start = false;
        }
        match c {
            b'"' | b'\'' => {
                i = skip_literal(b, i);
                continue;
            }
            b';' => stmt_start = i + 1,
            b'{' => {
                let close = match matching_brace(b, i) {
                    Some(close) => close,
                    None => break,
                };
                let header = &clean[stmt_start..i];
                if let Some(name) = function_name_from_header(header) {
                    let lead = header.len() - header.trim_start().len();
                    let start = stmt_start + lead;
                    let is_static = header.split(|ch: char| !ch.is_alphanumeric() && ch != '_').any(|t| t == "static");
                    spans.push(FunctionSpan {
                        name,
                        start,
                        end: close + 1,
                        header: header.trim().to_string(),
                        is_static,
                    });
                    stmt_start = close + 1;
                }
                // Aggregate bodies (struct, initializer) stay part of the statement.
                i = close + 1;
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    spans
}

fn skip_literal(b: &[u8], start: usize) -> usize {
    let q = b[start];
    let mut i = start + 1;
    while i < b.len() && b[i] != q && b[i] != b'\n' {
        if b[i] == b'\\' {
            i += 1;
        }
        i += 1;
    }
    i + 1
}

fn matching_brace(b: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut i = open;
    while i < b.len() {
        match b[i] {
            b'"' | b'\'' => {
                i = skip_literal(b, i);
                continue;
            }
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

fn ident_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[A-Za-z_][A-Za-z0-9_]*").unwrap())
}

/// Splits a definition header into (prefix before the name, name, params text).
fn split_header(header: &str) -> Option<(String, String, String)> {
    let h = header.trim_end();
    if !h.ends_with(')') || h.contains('=') {
        return None;
    }
    let bytes = h.as_bytes();
    let mut depth = 0i32;
    let mut open = None;
    for i in (0..bytes.len()).rev() {
        match bytes[i] {
            b')' => depth += 1,
            b'(' => {
                depth -= 1;
                if depth == 0 {
                    open = Some(i);
                    break;
                }
            }
            _ => {}
        }
    }
    let open = open?;
    let before = h[..open].trim_end();
    let name_start = before
        .rfind(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .map(|p| p + 1)
        .unwrap_or(0);
    let name = &before[name_start..];
    if name.is_empty() || name.as_bytes()[0].is_ascii_digit() {
        return None;
    }
    const KEYWORDS: &[&str] = &["if", "for", "while", "switch", "return", "sizeof", "do", "else"];
    if KEYWORDS.contains(&name) {
        return None;
    }
    let prefix = before[..name_start].trim();
    // A bare `name(...)` with no return type is a macro invocation, not a definition.
    if prefix.is_empty() {
        return None;
    }
    Some((prefix.to_string(), name.to_string(), h[open + 1..h.len() - 1].to_string()))
}

fn function_name_from_header(header: &str) -> Option<String> {
    split_header(header).map(|(_, name, _)| name)
}

// ---------------------------------------------------------------------------
// Signatures
// ---------------------------------------------------------------------------

fn typedef_map(context: &str) -> BTreeMap<String, String> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"typedef\s+([A-Za-z_][A-Za-z0-9_ \t]*?)\s+([A-Za-z_][A-Za-z0-9_]*)\s*;").unwrap());
    re.captures_iter(&strip_comments(context)).map(|c| (c[2].to_string(), c[1].trim().to_string())).collect()
}

fn defined_macros(context: &str) -> BTreeSet<String> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"(?m)^\s*#\s*define\s+([A-Za-z_][A-Za-z0-9_]*)[ \t]+\S").unwrap());
    re.captures_iter(context).map(|c| c[1].to_string()).collect()
}

fn enum_constants(context: &str) -> BTreeSet<String> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"enum\s*[A-Za-z0-9_]*\s*\{([^}]*)\}").unwrap());
    let mut out = BTreeSet::new();
    for c in re.captures_iter(&strip_comments(context)) {
        for item in c[1].split(',') {
            if let Some(m) = ident_re().find(item) {
                out.insert(m.as_str().to_string());
            }
        }
    }
    out
}

const QUALIFIERS: &[&str] = &["const", "volatile", "restrict", "__restrict", "__restrict__", "register", "static", "inline", "extern", "signed"];

fn numeric_kind(c_type: &str, typedefs: &BTreeMap<String, String>) -> Result<NumericKind, CorpusError> {
    let mut spelled = c_type.to_string();
    for _ in 0..8 {
        let words: Vec<&str> = ident_re()
            .find_iter(&spelled)
            .map(|m| m.as_str())
            .filter(|w| !QUALIFIERS.contains(w))
            .collect();
        let joined = words.join(" ");
        let kind = match joined.as_str() {
            "float" => Some(NumericKind::F32),
            "double" => Some(NumericKind::F64),
            "int" | "unsigned" | "unsigned int" | "int32_t" | "uint32_t" => Some(NumericKind::I32),
            "long" | "long int" | "long long" | "long long int" | "unsigned long" | "unsigned long long" | "int64_t"
            | "uint64_t" | "size_t" | "ptrdiff_t" => Some(NumericKind::I64),
            _ => None,
        };
        if let Some(kind) = kind {
            return Ok(kind);
        }
        match typedefs.get(&joined) {
            Some(target) => spelled = target.clone(),
            None => break,
        }
    }
    Err(CorpusError::Parse(format!("unsupported element type `{}`", c_type.trim())))
}

fn split_top_level(params: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in params.chars() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() {
        out.push(cur);
    }
    out.into_iter().map(|s| s.trim().to_string()).collect()
}

fn parse_param(
    text: &str,
    typedefs: &BTreeMap<String, String>,
    constants: &BTreeSet<String>,
) -> Result<Param, CorpusError> {
    let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if let Some(bracket) = text.find('[') {
        let decl = text[..bracket].trim_end();
        let name_start = decl.rfind(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).map(|p| p + 1).unwrap_or(0);
        let name = decl[name_start..].to_string();
        let c_type = decl[..name_start].trim().to_string();
        if name.is_empty() || c_type.is_empty() {
            return Err(CorpusError::Parse(format!("cannot parse parameter `{text}`")));
        }
        let mut extent = Vec::new();
        for dim in text[bracket..].split('[').skip(1) {
            let inner = dim.split(']').next().unwrap_or("");
            let cleaned: Vec<&str> = inner.split_whitespace().filter(|w| !QUALIFIERS.contains(w)).collect();
            let sym = cleaned.join(" ");
            if sym.is_empty() {
                return Err(CorpusError::Parse(format!("parameter `{name}` has an unsized dimension")));
            }
            for ident in ident_re().find_iter(&sym) {
                if !constants.contains(ident.as_str()) {
                    return Err(CorpusError::Parse(format!(
                        "extent `{}` of parameter `{name}` does not resolve to a constant in the context",
                        ident.as_str()
                    )));
                }
            }
            extent.push(sym);
        }
        let element = numeric_kind(&c_type, typedefs)?;
        return Ok(Param { name, c_type, kind: ParamKind::ArrayInOut { element, extent } });
    }
    if text.contains('*') {
        return Err(CorpusError::Parse(format!(
            "pointer parameter `{text}` has no declared extent; declare it as `T name[EXTENT]`"
        )));
    }
    let name_start = text.rfind(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).map(|p| p + 1).unwrap_or(0);
    let name = text[name_start..].to_string();
    let c_type = text[..name_start].trim().to_string();
    if name.is_empty() || c_type.is_empty() {
        return Err(CorpusError::Parse(format!("cannot parse parameter `{text}`")));
    }
    let numeric = numeric_kind(&c_type, typedefs)?;
    Ok(Param { name, c_type, kind: ParamKind::ScalarIn { numeric } })
}

/// Parses the signature of the function defined in `source` against the
/// typedefs and constants available in `context`.
pub fn parse_signature(source: &str, context: &str) -> Result<FunctionSignature, CorpusError> {
    let spans = find_function_definitions(source);
    let span = spans
        .first()
        .ok_or_else(|| CorpusError::Parse("no function definition found".to_string()))?;
    let (prefix, name, params_text) =
        split_header(&span.header).ok_or_else(|| CorpusError::Parse(format!("bad header `{}`", span.header)))?;
    if spans.iter().filter(|s| s.name == name).count() != 1 {
        return Err(CorpusError::Parse(format!("`{name}` must be defined exactly once")));
    }

    let attr_re = Regex::new(r"__attribute__\s*\(\(.*?\)\)").unwrap();
    let prefix = attr_re.replace_all(&prefix, " ");
    let return_c_type: String = prefix
        .split_whitespace()
        .filter(|w| !matches!(*w, "static" | "inline" | "extern" | "__inline" | "__inline__"))
        .collect::<Vec<_>>()
        .join(" ");
    if return_c_type.contains('*') {
        return Err(CorpusError::Parse(format!("`{name}` returns a pointer, which cannot be compared")));
    }
    let mut typedefs = typedef_map(context);
    typedefs.extend(typedef_map(source));
    let return_kind = if return_c_type == "void" {
        ReturnKind::Void
    } else {
        ReturnKind::Scalar { numeric: numeric_kind(&return_c_type, &typedefs)? }
    };

    let mut constants = defined_macros(context);
    constants.extend(enum_constants(context));
    let pieces = split_top_level(&params_text);
    let params = if pieces.is_empty() || (pieces.len() == 1 && pieces[0] == "void") {
        Vec::new()
    } else {
        pieces.iter().map(|p| parse_param(p, &typedefs, &constants)).collect::<Result<Vec<_>, _>>()?
    };
    Ok(FunctionSignature { name, return_c_type, return_kind, params })
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

/// One entry of a structured corpus manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub file: PathBuf,
    pub function: String,
    #[serde(default)]
    pub extra_flags: Vec<String>,
    /// Extra declarations prepended to the context (for trimmed real-world code).
    #[serde(default)]
    pub context_file: Option<PathBuf>,
    #[serde(default)]
    pub origin: Option<Origin>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    #[serde(rename = "case")]
    pub cases: Vec<ManifestEntry>,
}

#[derive(Debug)]
pub struct RejectedCase {
    pub id: String,
    pub error: CorpusError,
}

#[derive(Debug, Default)]
pub struct CorpusLoad {
    pub cases: Vec<FunctionCase>,
    pub rejected: Vec<RejectedCase>,
    pub warnings: Vec<String>,
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })
}

/// Loads cases from a source file or a `.toml` corpus manifest.
///
/// With a compiler, every selected case is compiled standalone under the
/// diagnose profile; failures land in `rejected` and the remarks of the
/// survivors determine their category.
pub fn load_corpus(
    path: &Path,
    filter: Option<&[String]>,
    compiler: Option<&Compiler>,
) -> Result<CorpusLoad, CorpusError> {
    let is_manifest = path.extension().map(|e| e == "toml").unwrap_or(false);
    let drafts = if is_manifest { drafts_from_manifest(path)? } else { drafts_from_source(&read(path)?)? };

    let mut load = CorpusLoad::default();
    let mut seen = BTreeSet::new();
    for d in &drafts {
        if !seen.insert(d.id.clone()) {
            return Err(CorpusError::Parse(format!("duplicate case id `{}`", d.id)));
        }
    }
    let wanted: Option<BTreeSet<&str>> = filter.filter(|f| !f.is_empty()).map(|f| f.iter().map(String::as_str).collect());
    if let Some(w) = &wanted {
        for id in w {
            if !seen.contains(*id) {
                load.warnings.push(format!("requested case `{id}` not found in {}", path.display()));
            }
        }
    }

    for d in drafts {
        if let Some(w) = &wanted {
            if !w.contains(d.id.as_str()) {
                continue;
            }
        }
        match finish_case(d, compiler) {
            Ok(case) => load.cases.push(case),
            Err((id, error)) => load.rejected.push(RejectedCase { id, error }),
        }
    }
    Ok(load)
}

struct Draft {
    id: String,
    source: String,
    context: String,
    origin: Origin,
    extra_flags: Vec<String>,
    parse_error: Option<String>,
}

fn drafts_from_source(text: &str) -> Result<Vec<Draft>, CorpusError> {
    let spans = find_function_definitions(text);
    let cases: Vec<&FunctionSpan> = spans.iter().filter(|s| !s.is_static && s.name != "main").collect();
    if cases.is_empty() {
        return Err(CorpusError::Parse("no non-static function definitions found".to_string()));
    }
    // A driver `main` would collide with the harness driver; it is dropped.
    let removed: Vec<&FunctionSpan> = spans.iter().filter(|s| !s.is_static).collect();
    let mut context = String::new();
    let mut pos = 0;
    for s in &removed {
        context.push_str(&text[pos..s.start]);
        pos = s.end;
    }
    context.push_str(&text[pos..]);
    let context = collapse_blank_runs(&context);

    Ok(cases
        .iter()
        .map(|s| Draft {
            id: s.name.clone(),
            source: text[s.start..s.end].to_string(),
            context: context.clone(),
            origin: Origin::Tsvc,
            extra_flags: Vec::new(),
            parse_error: None,
        })
        .collect())
}

fn drafts_from_manifest(path: &Path) -> Result<Vec<Draft>, CorpusError> {
    let manifest: CorpusManifest =
        toml::from_str(&read(path)?).map_err(|e| CorpusError::Parse(format!("{}: {e}", path.display())))?;
    if manifest.cases.is_empty() {
        return Err(CorpusError::Parse(format!("{} lists no cases", path.display())));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let mut drafts = Vec::new();
    for e in manifest.cases {
        let text = read(&base.join(&e.file))?;
        let spans = find_function_definitions(&text);
        let mut draft = Draft {
            id: e.id.clone(),
            source: String::new(),
            context: String::new(),
            origin: e.origin.unwrap_or(Origin::UserFile),
            extra_flags: e.extra_flags.clone(),
            parse_error: None,
        };
        match spans.iter().find(|s| s.name == e.function) {
            Some(s) => {
                let mut context = match &e.context_file {
                    Some(cf) => read(&base.join(cf))?,
                    None => String::new(),
                };
                if !context.is_empty() && !context.ends_with('\n') {
                    context.push('\n');
                }
                context.push_str(&text[..s.start]);
                context.push_str(&text[s.end..]);
                draft.source = text[s.start..s.end].to_string();
                draft.context = collapse_blank_runs(&context);
            }
            None => {
                draft.parse_error = Some(format!("function `{}` not found in {}", e.function, e.file.display()));
            }
        }
        drafts.push(draft);
    }
    Ok(drafts)
}

fn collapse_blank_runs(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut blank = 0;
    for line in text.lines() {
        if line.trim().is_empty() {
            blank += 1;
            if blank > 1 {
                continue;
            }
        } else {
            blank = 0;
        }
        out.push_str(line);
        out.push('\n');
    }
    out
}

fn finish_case(d: Draft, compiler: Option<&Compiler>) -> Result<FunctionCase, (String, CorpusError)> {
    let id = d.id.clone();
    if let Some(msg) = d.parse_error {
        return Err((id, CorpusError::Parse(msg)));
    }
    let signature = parse_signature(&d.source, &d.context).map_err(|e| (id.clone(), e))?;
    let mut case = FunctionCase {
        id: d.id,
        source_text: d.source,
        context_text: d.context,
        signature,
        category: None,
        origin: d.origin,
        extra_flags: d.extra_flags,
    };
    if let Some(compiler) = compiler {
        let report = ingestion_check(&case, compiler).map_err(|e| (id.clone(), e))?;
        case.category = classify_case(&report);
    }
    Ok(case)
}

/// Compiles the case standalone under the diagnose profile and returns the
/// remarks restricted to the function's own lines.
pub fn ingestion_check(case: &FunctionCase, compiler: &Compiler) -> Result<VectorizationReport, CorpusError> {
    let scratch = tempfile::tempdir().map_err(|source| CorpusError::Io { path: std::env::temp_dir(), source })?;
    let (unit, first, last) = case.unit_with(&case.source_text);
    let result = compiler.compile("ingest", &unit, FlagsProfile::Diagnose, scratch.path(), &case.extra_flags)?;
    if let CompileStatus::Error(diagnostic) = result.status {
        return Err(CorpusError::Compile { id: case.id.clone(), diagnostic });
    }
    let mut report = parse_remarks(&result.remarks_raw);
    let selection = crate::compiler::LoopSelection::Lines { first, last };
    report.loops.retain(|l| selection.contains(l.location));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SUITE: &str = r#"
#include <math.h>
#define LEN_1D 64
#define LEN_2D 8
typedef float real_t;

/* helper kept in context */
static real_t helper(real_t x) { return x * 2; }

void s1113(real_t a[LEN_1D], real_t b[LEN_1D], int iterations)
{
    for (int nl = 0; nl < 2 * iterations; nl++) {
        for (int i = 0; i < LEN_1D; i++) {
            a[i] = a[LEN_1D/2] + b[i];
        }
    }
}

// a brace in a comment: {
real_t s3110(real_t aa[LEN_2D][LEN_2D], int n)
{
    const char *s = "}";
    (void)s;
    return aa[0][0] + helper(n);
}

struct pair { int a; int b; };
static const int table[3] = { 1, 2, 3 };

int empty(void) { }
"#;

    #[test]
    fn finds_definitions_with_braces_in_comments_and_strings() {
        let spans = find_function_definitions(SUITE);
        let names: Vec<_> = spans.iter().map(|s| (s.name.as_str(), s.is_static)).collect();
        assert_eq!(names, vec![("helper", true), ("s1113", false), ("s3110", false), ("empty", false)]);
        let s1113 = &SUITE[spans[1].start..spans[1].end];
        assert!(s1113.starts_with("void s1113("));
        assert!(s1113.ends_with('}'));
    }

    #[test]
    fn signature_of_s1113() {
        let drafts = drafts_from_source(SUITE).unwrap();
        let d = drafts.iter().find(|d| d.id == "s1113").unwrap();
        let sig = parse_signature(&d.source, &d.context).unwrap();
        assert_eq!(sig.name, "s1113");
        assert!(sig.is_void());
        assert_eq!(sig.params.len(), 3);
        assert_eq!(
            sig.params[0].kind,
            ParamKind::ArrayInOut { element: NumericKind::F32, extent: vec!["LEN_1D".into()] }
        );
        assert_eq!(sig.params[2].kind, ParamKind::ScalarIn { numeric: NumericKind::I32 });
        assert_eq!(sig.slot_name(), "s1113_opt");
    }

    #[test]
    fn two_dimensional_extent_and_scalar_return() {
        let drafts = drafts_from_source(SUITE).unwrap();
        let d = drafts.iter().find(|d| d.id == "s3110").unwrap();
        let sig = parse_signature(&d.source, &d.context).unwrap();
        assert_eq!(sig.return_kind, ReturnKind::Scalar { numeric: NumericKind::F32 });
        assert_eq!(
            sig.params[0].kind,
            ParamKind::ArrayInOut { element: NumericKind::F32, extent: vec!["LEN_2D".into(), "LEN_2D".into()] }
        );
    }

    #[test]
    fn context_excludes_cases_but_keeps_helpers() {
        let drafts = drafts_from_source(SUITE).unwrap();
        let ctx = &drafts[0].context;
        assert!(ctx.contains("static real_t helper"));
        assert!(ctx.contains("#define LEN_1D 64"));
        assert!(!ctx.contains("void s1113"));
        assert!(!ctx.contains("real_t s3110"));
    }

    #[test]
    fn unresolved_extent_is_rejected() {
        let err = parse_signature("void f(float a[N]) { }", "typedef float real_t;").unwrap_err();
        assert!(err.to_string().contains("does not resolve"));
    }

    #[test]
    fn pointer_without_extent_is_rejected() {
        let err = parse_signature("void f(float *a) { }", "").unwrap_err();
        assert!(err.to_string().contains("no declared extent"));
    }

    #[test]
    fn empty_body_detection() {
        let drafts = drafts_from_source(SUITE).unwrap();
        let d = drafts.iter().find(|d| d.id == "empty").unwrap();
        let case = FunctionCase {
            id: d.id.clone(),
            source_text: d.source.clone(),
            context_text: d.context.clone(),
            signature: parse_signature(&d.source, &d.context).unwrap(),
            category: None,
            origin: Origin::Tsvc,
            extra_flags: vec![],
        };
        assert!(case.has_empty_body());
    }

    #[test]
    fn classify_reasons() {
        assert_eq!(classify_reason("unsafe dependent memory operations"), NonVectorizableCategory::UnsafeDependentMemOps);
        assert_eq!(classify_reason("could not identify reduction variable"), NonVectorizableCategory::UnidentifiedReduction);
        assert_eq!(
            classify_reason("value that could not be identified as reduction is used outside the loop"),
            NonVectorizableCategory::UnidentifiedReduction
        );
        assert_eq!(classify_reason("cannot identify array bounds"), NonVectorizableCategory::UnknownArrayBounds);
        assert_eq!(
            classify_reason("could not determine number of loop iterations"),
            NonVectorizableCategory::UnknownTripCount
        );
        assert_eq!(classify_reason("call instruction cannot be vectorized"), NonVectorizableCategory::UnvectorizableInstr);
        assert_eq!(classify_reason("loop contains a switch statement"), NonVectorizableCategory::SwitchInLoop);
        assert_eq!(
            classify_reason("exotic new remark text"),
            NonVectorizableCategory::Other("exotic new remark text".into())
        );
    }

    #[test]
    fn rename_only_touches_the_identifier() {
        let src = "void s1113(float a[4]) { s1113_helper(a); }";
        let out = rename_function(src, "s1113", "s1113_opt");
        assert_eq!(out, "void s1113_opt(float a[4]) { s1113_helper(a); }");
    }
}
