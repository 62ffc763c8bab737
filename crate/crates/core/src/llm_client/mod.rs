//! Prompt rendering, chat transports and the spec-request loop.
//!
//! A reply must hold one fenced JSON pipeline spec. Replies that fail validation
//! are answered with the error list and retried up to `max_retries` times.

mod prompts;
mod replay;
mod transport;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::pipeline::{parse_spec, PipelineSpec, SpecErrors, ValidationError};

pub use prompts::{prompt_body, render_prompt, reply_suffix, PromptFamily, PromptTask, SPEC_SCHEMA};
pub use replay::{
    Fixture, FixtureEntry, RecordingTransport, ReplayTransport, ScriptedTransport, FIXTURE_FORMAT, FIXTURE_VERSION,
};
pub use transport::{extract_content, ChatTransport, HttpTransport, API_KEY_ENV, DEFAULT_TIMEOUT};

pub const DEFAULT_MODEL: &str = "gpt-4o";
pub const DEFAULT_TEMPERATURE: f64 = 1.0;
pub const DEFAULT_MAX_RETRIES: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: "assistant".into(), content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
}

impl ChatRequest {
    /// Hex SHA-256 of the request serialized with sorted keys. Credentials are never part of it.
    pub fn hash(&self) -> String {
        let v = serde_json::to_value(self).expect("request serializes");
        let text = serde_json::to_string(&crate::pipeline::sort_keys(v)).expect("value serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("request to {endpoint} failed: {message}")]
    Transport { endpoint: String, message: String },
    #[error("HTTP {status}: {}", short(body))]
    Http { status: u16, body: String },
    #[error("unusable response: {message}")]
    BadResponse { message: String, raw: String },
    #[error("reply from {source_name} has no fenced JSON block")]
    NoFencedBlock { source_name: String, raw: String },
    #[error("reply still invalid after {attempts} attempts:\n{errors}")]
    InvalidSpec { errors: SpecErrors, raw: String, attempts: usize },
    #[error("replay: {0}")]
    Replay(String),
    #[error("family {0} has no executable implementation")]
    UnsupportedFamily(String),
}

fn short(s: &str) -> String {
    const MAX: usize = 200;
    if s.chars().count() <= MAX {
        s.to_string()
    } else {
        format!("{}...", s.chars().take(MAX).collect::<String>())
    }
}

/// Body of the first fenced block whose info string is `json` or empty.
pub fn extract_fenced_json(text: &str) -> Option<&str> {
    let mut rest = text;
    while let Some(start) = rest.find("```") {
        let after = &rest[start + 3..];
        let line_end = after.find('\n')?;
        let info = after[..line_end].trim();
        let body = &after[line_end + 1..];
        let close = body.find("```")?;
        if info.is_empty() || info.eq_ignore_ascii_case("json") {
            return Some(body[..close].trim());
        }
        rest = &body[close + 3..];
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeConfig {
    pub model: String,
    pub temperature: f64,
    /// Extra attempts after the first invalid reply.
    pub max_retries: usize,
}

impl Default for ExchangeConfig {
    fn default() -> Self {
        Self { model: DEFAULT_MODEL.into(), temperature: DEFAULT_TEMPERATURE, max_retries: DEFAULT_MAX_RETRIES }
    }
}

/// Audit record of one spec request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
    pub responses: Vec<String>,
    pub retries: usize,
    pub elapsed_secs: f64,
}

/// Result of `request_pipeline`: the exchange is kept even when no valid spec came back.
pub struct SpecReply {
    pub exchange: ChatExchange,
    pub result: Result<PipelineSpec, LlmError>,
}

fn check_reply(text: &str, task: PromptTask, family: PromptFamily) -> Result<PipelineSpec, SpecErrors> {
    let spec = parse_spec(text)?;
    let mut errors = Vec::new();
    if spec.task.kind_name() != task.spec_kind() {
        errors.push(ValidationError {
            path: "task.kind".into(),
            message: format!("expected {:?} for this request, got {:?}", task.spec_kind(), spec.task.kind_name()),
        });
    }
    if PromptFamily::from(spec.model.family) != family {
        errors.push(ValidationError {
            path: "model.family".into(),
            message: format!("expected {:?} for this request, got {:?}", family.as_str(), spec.model.family.as_str()),
        });
    }
    if errors.is_empty() {
        Ok(spec)
    } else {
        Err(SpecErrors(errors))
    }
}

fn feedback(errors: &SpecErrors) -> String {
    format!(
        "The specification is invalid:\n{errors}\nReply again with one corrected fenced ```json block and nothing else."
    )
}

/// Sends the rendered prompt and returns the validated spec, tagged `source = "llm:<model>"`.
pub fn request_pipeline(
    transport: &mut dyn ChatTransport,
    cfg: &ExchangeConfig,
    task: PromptTask,
    family: PromptFamily,
) -> SpecReply {
    let mut exchange = ChatExchange {
        endpoint: transport.describe(),
        model: cfg.model.clone(),
        temperature: cfg.temperature,
        messages: vec![ChatMessage::user(render_prompt(task, family))],
        responses: Vec::new(),
        retries: 0,
        elapsed_secs: 0.0,
    };
    let start = Instant::now();
    let result = converse(transport, cfg, task, family, &mut exchange);
    exchange.elapsed_secs = start.elapsed().as_secs_f64();
    SpecReply { exchange, result }
}

fn converse(
    transport: &mut dyn ChatTransport,
    cfg: &ExchangeConfig,
    task: PromptTask,
    family: PromptFamily,
    exchange: &mut ChatExchange,
) -> Result<PipelineSpec, LlmError> {
    if family.executable().is_none() {
        return Err(LlmError::UnsupportedFamily(family.as_str().into()));
    }
    let mut attempt = 0;
    loop {
        attempt += 1;
        let request =
            ChatRequest { model: cfg.model.clone(), temperature: cfg.temperature, messages: exchange.messages.clone() };
        let reply = transport.complete(&request)?;
        exchange.responses.push(reply.clone());
        exchange.messages.push(ChatMessage::assistant(reply.clone()));
        let Some(body) = extract_fenced_json(&reply) else {
            return Err(LlmError::NoFencedBlock { source_name: exchange.endpoint.clone(), raw: reply });
        };
        match check_reply(body, task, family) {
            Ok(mut spec) => {
                spec.source = format!("llm:{}", cfg.model);
                return Ok(spec);
            }
            Err(errors) if attempt <= cfg.max_retries => {
                log::info!("reply {attempt} invalid, asking again:\n{errors}");
                exchange.retries += 1;
                exchange.messages.push(ChatMessage::user(feedback(&errors)));
            }
            Err(errors) => return Err(LlmError::InvalidSpec { errors, raw: reply, attempts: attempt }),
        }
    }
}
