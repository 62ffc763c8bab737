use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ChatRequest, ChatTransport, LlmError};

pub const FIXTURE_FORMAT: &str = "xplainbench-replay";
pub const FIXTURE_VERSION: u32 = 1;

/// One recorded request/response pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureEntry {
    /// Hex SHA-256 of the canonical request JSON.
    pub request_hash: String,
    pub request: ChatRequest,
    pub response: String,
}

/// Replay file: `{"format", "version", "entries": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub format: String,
    pub version: u32,
    pub entries: Vec<FixtureEntry>,
}

impl Default for Fixture {
    fn default() -> Self {
        Self { format: FIXTURE_FORMAT.into(), version: FIXTURE_VERSION, entries: Vec::new() }
    }
}

impl Fixture {
    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let f: Fixture = serde_json::from_str(text).map_err(|e| LlmError::Replay(format!("bad fixture: {e}")))?;
        if f.format != FIXTURE_FORMAT || f.version != FIXTURE_VERSION {
            return Err(LlmError::Replay(format!("unsupported fixture format {:?} version {}", f.format, f.version)));
        }
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fixture serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Replay(format!("cannot read fixture {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| LlmError::Replay(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LlmError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json())
            .map_err(|e| LlmError::Replay(format!("cannot write fixture {}: {e}", path.display())))
    }

    pub fn record(&mut self, request: &ChatRequest, response: &str) {
        self.entries.push(FixtureEntry { request_hash: request.hash(), request: request.clone(), response: response.into() });
    }
}

/// Answers from a fixture and never touches the network.
pub struct ReplayTransport {
    name: String,
    fixture: Fixture,
    /// Unknown requests are errors; otherwise entries are served in order.
    pub strict: bool,
    cursor: usize,
}

impl ReplayTransport {
    pub fn new(name: impl Into<String>, fixture: Fixture, strict: bool) -> Self {
        Self { name: name.into(), fixture, strict, cursor: 0 }
    }

    pub fn open(path: impl AsRef<Path>, strict: bool) -> Result<Self, LlmError> {
        let path = path.as_ref();
        Ok(Self::new(path.display().to_string(), Fixture::load(path)?, strict))
    }
}

impl ChatTransport for ReplayTransport {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, LlmError> {
        let hash = request.hash();
        if let Some(e) = self.fixture.entries.iter().find(|e| e.request_hash == hash) {
            return Ok(e.response.clone());
        }
        if self.strict {
            return Err(LlmError::Replay(format!("{}: no entry for request hash {hash}", self.name)));
        }
        let entry = self
            .fixture
            .entries
            .get(self.cursor)
            .ok_or_else(|| LlmError::Replay(format!("{}: fixture exhausted after {} entries", self.name, self.cursor)))?;
        self.cursor += 1;
        Ok(entry.response.clone())
    }

    fn describe(&self) -> String {
        format!("replay:{}", self.name)
    }
}

/// Serves canned responses in order; used to author fixtures and in tests.
pub struct ScriptedTransport {
    responses: VecDeque<String>,
}

impl ScriptedTransport {
    pub fn new<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self { responses: responses.into_iter().map(Into::into).collect() }
    }
}

impl ChatTransport for ScriptedTransport {
    fn complete(&mut self, _request: &ChatRequest) -> Result<String, LlmError> {
        self.responses.pop_front().ok_or_else(|| LlmError::Replay("scripted transport ran out of responses".into()))
    }

    fn describe(&self) -> String {
        "scripted".into()
    }
}

/// Forwards to `inner` and records every exchange.
pub struct RecordingTransport<T: ChatTransport> {
    pub inner: T,
    pub fixture: Fixture,
}

impl<T: ChatTransport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        Self { inner, fixture: Fixture::default() }
    }
}

impl<T: ChatTransport> ChatTransport for RecordingTransport<T> {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, LlmError> {
        let response = self.inner.complete(request)?;
        self.fixture.record(request, &response);
        Ok(response)
    }

    fn describe(&self) -> String {
        format!("recording:{}", self.inner.describe())
    }
}
