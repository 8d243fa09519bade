//! Chat-completion client, prompt templates, response parsing and cost
//! accounting.
//!
//! Two providers exist: an HTTP endpoint speaking the common
//! `messages`/`choices` chat-completion wire format, and a replay provider
//! that serves recorded responses in order. Every completion served by
//! either provider is recorded, so any run can be turned into a replay
//! fixture.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

pub const BEGIN_MARKER: &str = "// VECTRANS_BEGIN";
pub const END_MARKER: &str = "// VECTRANS_END";
pub const NO_BENEFIT_MARKER: &str = "// VECTRANS_NO_BENEFIT:";
/// The model's assertion that the current candidate needs no more work.
pub const COMPLETE_MARKER: &str = "// VECTRANS_COMPLETE";

pub const DEFAULT_MAX_TOKENS: u32 = 4096;
pub const DEFAULT_API_KEY_ENV: &str = "VECREFINE_API_KEY";
pub const TRANSCRIPT_VERSION: u32 = 1;

const REFINE_TEMPLATE: &str = include_str!("../assets/prompts/refine.txt");
const SELF_FEEDBACK_TEMPLATE: &str = include_str!("../assets/prompts/self_feedback.txt");
const TEST_GENERATION_TEMPLATE: &str = include_str!("../assets/prompts/test_generation.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    SelfFeedback,
    Refine,
    TestGeneration,
}

impl PromptKind {
    pub const ALL: [PromptKind; 3] = [PromptKind::SelfFeedback, PromptKind::Refine, PromptKind::TestGeneration];

    pub fn template(self) -> &'static str {
        match self {
            PromptKind::SelfFeedback => SELF_FEEDBACK_TEMPLATE,
            PromptKind::Refine => REFINE_TEMPLATE,
            PromptKind::TestGeneration => TEST_GENERATION_TEMPLATE,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PromptKind::SelfFeedback => "self_feedback",
            PromptKind::Refine => "refine",
            PromptKind::TestGeneration => "test_generation",
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Provider {
    HttpEndpoint { url: String },
    /// A transcript file, or a directory holding `<case id>.json` transcripts.
    TranscriptReplay { path: PathBuf },
}

impl Provider {
    /// Parses `replay:<path>` or `http:<url>` / `https://...`.
    pub fn parse(spec: &str) -> Result<Provider, String> {
        if let Some(path) = spec.strip_prefix("replay:") {
            Ok(Provider::TranscriptReplay { path: PathBuf::from(path) })
        } else if let Some(url) = spec.strip_prefix("http:") {
            if url.starts_with("//") {
                Ok(Provider::HttpEndpoint { url: spec.to_string() })
            } else {
                Ok(Provider::HttpEndpoint { url: url.to_string() })
            }
        } else if spec.starts_with("https://") {
            Ok(Provider::HttpEndpoint { url: spec.to_string() })
        } else {
            Err(format!("unrecognized provider `{spec}`; expected replay:<path> or http:<url>"))
        }
    }

    pub fn is_live(&self) -> bool {
        matches!(self, Provider::HttpEndpoint { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub provider: Provider,
    pub model_name: String,
    pub max_tokens: u32,
    /// Extra request fields (temperature, top_p, ...) sent verbatim.
    pub sampling: Map<String, Value>,
    pub api_key_env: String,
    pub price_in_per_million: f64,
    pub price_out_per_million: f64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub request_timeout_secs: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            provider: Provider::TranscriptReplay { path: PathBuf::from("transcripts") },
            model_name: "deepseek-chat".to_string(),
            max_tokens: DEFAULT_MAX_TOKENS,
            sampling: Map::new(),
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            price_in_per_million: 0.27,
            price_out_per_million: 1.10,
            max_retries: 3,
            backoff_base_ms: 500,
            request_timeout_secs: 300,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    #[serde(rename = "in")]
    pub input: u64,
    #[serde(rename = "out")]
    pub output: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub usage: Usage,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub price_in_per_million: f64,
    pub price_out_per_million: f64,
}

impl CostLedger {
    pub fn new(price_in_per_million: f64, price_out_per_million: f64) -> Self {
        CostLedger { input_tokens: 0, output_tokens: 0, price_in_per_million, price_out_per_million }
    }

    pub fn add(&mut self, usage: Usage) {
        self.input_tokens += usage.input;
        self.output_tokens += usage.output;
    }

    pub fn cost(&self) -> f64 {
        self.input_tokens as f64 * self.price_in_per_million / 1e6
            + self.output_tokens as f64 * self.price_out_per_million / 1e6
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("provider error after {attempts} attempt(s): {message}")]
    Provider { message: String, attempts: u32 },
    #[error("transcript exhausted after {consumed} response(s)")]
    TranscriptExhausted { consumed: usize },
    #[error("transcript entry {index} is a {expected} response but a {requested} prompt was sent")]
    TranscriptMismatch { index: usize, expected: PromptKind, requested: PromptKind },
    #[error("cannot load transcript {path}: {message}")]
    TranscriptLoad { path: PathBuf, message: String },
    #[error("prompt slot `{0}` has no value")]
    SlotMissing(String),
    #[error("API key variable `{0}` is not set")]
    MissingApiKey(String),
}

impl LlmError {
    pub fn is_transcript_exhausted(&self) -> bool {
        matches!(self, LlmError::TranscriptExhausted { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub expected_prompt_kind: PromptKind,
    pub response_text: String,
    pub usage_in: u64,
    pub usage_out: u64,
    /// Replays a provider failure instead of a response.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub version: u32,
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        Transcript { version: TRANSCRIPT_VERSION, entries }
    }

    pub fn load(path: &Path) -> Result<Transcript, LlmError> {
        let err = |message: String| LlmError::TranscriptLoad { path: path.to_path_buf(), message };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let t: Transcript = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        if t.version != TRANSCRIPT_VERSION {
            return Err(err(format!("unsupported transcript version {}", t.version)));
        }
        Ok(t)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("transcript serializes");
        fs::write(path, text + "\n")
    }
}

/// Rough token count used for budget checks: one token per four characters.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

/// Fills `{{slot}}` placeholders in the template for `kind`.
pub fn render_prompt(kind: PromptKind, slots: &BTreeMap<&str, String>) -> Result<String, LlmError> {
    let template = kind.template();
    let mut out = String::with_capacity(template.len() + 1024);
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let Some(end) = after.find("}}") else {
            out.push_str(&rest[start..]);
            rest = "";
            break;
        };
        let name = &after[..end];
        let value = slots.get(name).ok_or_else(|| LlmError::SlotMissing(name.to_string()))?;
        out.push_str(value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Slot names a template requires.
pub fn required_slots(kind: PromptKind) -> Vec<String> {
    let mut names = Vec::new();
    let mut rest = kind.template();
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        let Some(end) = after.find("}}") else { break };
        if !names.iter().any(|n: &String| n == &after[..end]) {
            names.push(after[..end].to_string());
        }
        rest = &after[end + 2..];
    }
    names
}

pub fn render_refine_prompt(source: &str, candidate: &str, feedback: &str) -> String {
    let candidate = if candidate.trim().is_empty() {
        "none yet".to_string()
    } else {
        format!("```c\n{}\n```", candidate.trim_end())
    };
    let slots = BTreeMap::from([
        ("source", source.trim_end().to_string()),
        ("candidate", candidate),
        ("feedback", feedback.trim_end().to_string()),
    ]);
    render_prompt(PromptKind::Refine, &slots).expect("refine slots are fixed")
}

pub fn render_self_feedback_prompt(source: &str, candidate: &str) -> String {
    let slots =
        BTreeMap::from([("source", source.trim_end().to_string()), ("candidate", candidate.trim_end().to_string())]);
    render_prompt(PromptKind::SelfFeedback, &slots).expect("self-feedback slots are fixed")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("response does not contain a `{BEGIN_MARKER}` ... `{END_MARKER}` block")]
pub struct MarkerNotFound;

/// Text between the first begin/end marker pair, each marker on its own line.
pub fn extract_candidate(llm_text: &str) -> Result<String, MarkerNotFound> {
    let lines: Vec<&str> = llm_text.lines().collect();
    let begin = lines.iter().position(|l| l.trim() == BEGIN_MARKER).ok_or(MarkerNotFound)?;
    let end = lines[begin + 1..]
        .iter()
        .position(|l| l.trim() == END_MARKER)
        .map(|p| p + begin + 1)
        .ok_or(MarkerNotFound)?;
    let mut body: Vec<&str> = lines[begin + 1..end].to_vec();
    // Models often wrap the code in a fence inside the markers.
    while body.first().map(|l| l.trim().is_empty()).unwrap_or(false) {
        body.remove(0);
    }
    while body.last().map(|l| l.trim().is_empty()).unwrap_or(false) {
        body.pop();
    }
    if body.first().map(|l| l.trim_start().starts_with("```")).unwrap_or(false) {
        body.remove(0);
        if body.last().map(|l| l.trim() == "```").unwrap_or(false) {
            body.pop();
        }
    }
    Ok(body.join("\n").trim_matches('\n').to_string())
}

/// Reason given on a no-benefit marker line, if the response carries one.
pub fn no_benefit_reason(llm_text: &str) -> Option<String> {
    llm_text
        .lines()
        .find_map(|l| l.trim().strip_prefix(NO_BENEFIT_MARKER).map(|r| r.trim().to_string()))
}

pub fn claims_complete(llm_text: &str) -> bool {
    llm_text.lines().any(|l| l.trim() == COMPLETE_MARKER)
}

enum Backend {
    Http { url: String, api_key: String, client: reqwest::blocking::Client },
    Replay { entries: Vec<TranscriptEntry>, cursor: Mutex<usize> },
}

/// One client per case: it owns that case's cost ledger and recorded
/// transcript. Completions may be issued from several threads.
pub struct LlmClient {
    config: LlmConfig,
    backend: Backend,
    ledger: Mutex<CostLedger>,
    recorded: Mutex<Vec<TranscriptEntry>>,
}

impl LlmClient {
    /// Client for `case_id`; a replay directory resolves to `<dir>/<case_id>.json`.
    pub fn for_case(config: &LlmConfig, case_id: &str) -> Result<LlmClient, LlmError> {
        let backend = match &config.provider {
            Provider::TranscriptReplay { path } => {
                let file = if path.is_dir() { path.join(format!("{case_id}.json")) } else { path.clone() };
                let t = Transcript::load(&file)?;
                Backend::Replay { entries: t.entries, cursor: Mutex::new(0) }
            }
            Provider::HttpEndpoint { url } => {
                let api_key =
                    std::env::var(&config.api_key_env).map_err(|_| LlmError::MissingApiKey(config.api_key_env.clone()))?;
                let client = reqwest::blocking::Client::builder()
                    .timeout(Duration::from_secs(config.request_timeout_secs))
                    .build()
                    .map_err(|e| LlmError::Provider { message: e.to_string(), attempts: 0 })?;
                Backend::Http { url: url.clone(), api_key, client }
            }
        };
        Ok(Self::with_backend(config, backend))
    }

    /// Replay client over in-memory entries.
    pub fn from_transcript(config: &LlmConfig, transcript: Transcript) -> LlmClient {
        Self::with_backend(config, Backend::Replay { entries: transcript.entries, cursor: Mutex::new(0) })
    }

    fn with_backend(config: &LlmConfig, backend: Backend) -> LlmClient {
        LlmClient {
            config: config.clone(),
            backend,
            ledger: Mutex::new(CostLedger::new(config.price_in_per_million, config.price_out_per_million)),
            recorded: Mutex::new(Vec::new()),
        }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    pub fn ledger(&self) -> CostLedger {
        *self.ledger.lock().unwrap()
    }

    pub fn recorded_transcript(&self) -> Transcript {
        Transcript::new(self.recorded.lock().unwrap().clone())
    }

    /// Renders the template for `kind` and completes it.
    pub fn complete(&self, kind: PromptKind, slots: &BTreeMap<&str, String>) -> Result<Completion, LlmError> {
        let prompt = render_prompt(kind, slots)?;
        self.complete_prompt(kind, &prompt)
    }

    /// Completes an already rendered prompt of the given kind.
    pub fn complete_prompt(&self, kind: PromptKind, prompt: &str) -> Result<Completion, LlmError> {
        let completion = match &self.backend {
            Backend::Replay { entries, cursor } => {
                let mut cursor = cursor.lock().unwrap();
                let entry = entries.get(*cursor).ok_or(LlmError::TranscriptExhausted { consumed: *cursor })?;
                if entry.expected_prompt_kind != kind {
                    return Err(LlmError::TranscriptMismatch {
                        index: *cursor,
                        expected: entry.expected_prompt_kind,
                        requested: kind,
                    });
                }
                *cursor += 1;
                if let Some(message) = &entry.provider_error {
                    return Err(LlmError::Provider { message: message.clone(), attempts: 1 });
                }
                Completion {
                    text: entry.response_text.clone(),
                    usage: Usage { input: entry.usage_in, output: entry.usage_out },
                }
            }
            Backend::Http { url, api_key, client } => self.http_complete(client, url, api_key, prompt)?,
        };
        self.ledger.lock().unwrap().add(completion.usage);
        self.recorded.lock().unwrap().push(TranscriptEntry {
            expected_prompt_kind: kind,
            response_text: completion.text.clone(),
            usage_in: completion.usage.input,
            usage_out: completion.usage.output,
            provider_error: None,
        });
        Ok(completion)
    }

    fn http_complete(
        &self,
        client: &reqwest::blocking::Client,
        url: &str,
        api_key: &str,
        prompt: &str,
    ) -> Result<Completion, LlmError> {
        let mut body = json!({
            "model": self.config.model_name,
            "messages": [{ "role": "user", "content": prompt }],
            "max_tokens": self.config.max_tokens,
        });
        for (k, v) in &self.config.sampling {
            body[k] = v.clone();
        }

        let attempts = self.config.max_retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.config.backoff_base_ms.saturating_mul(1u64 << (attempt - 1).min(16));
                thread::sleep(Duration::from_millis(delay));
            }
            let response = client.post(url).bearer_auth(api_key).json(&body).send();
            match response {
                Ok(resp) => {
                    let status = resp.status();
                    let text = resp.text().unwrap_or_default();
                    if status.is_success() {
                        return parse_chat_response(&text)
                            .map_err(|message| LlmError::Provider { message, attempts: attempt + 1 });
                    }
                    last = format!("HTTP {status}: {}", truncate(&text, 500));
                    let transient = status.is_server_error() || status.as_u16() == 429 || status.as_u16() == 408;
                    if !transient {
                        return Err(LlmError::Provider { message: last, attempts: attempt + 1 });
                    }
                }
                Err(e) => last = e.to_string(),
            }
            log::warn!("completion attempt {} of {attempts} failed: {last}", attempt + 1);
        }
        Err(LlmError::Provider { message: last, attempts })
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Reads `choices[0].message.content` and token usage from a response body.
pub fn parse_chat_response(body: &str) -> Result<Completion, String> {
    let v: Value = serde_json::from_str(body).map_err(|e| format!("malformed response body: {e}"))?;
    let text = v["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| format!("response has no choices[0].message.content: {}", truncate(body, 300)))?
        .to_string();
    let usage = Usage {
        input: v["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
        output: v["usage"]["completion_tokens"].as_u64().unwrap_or(0),
    };
    Ok(Completion { text, usage })
}
