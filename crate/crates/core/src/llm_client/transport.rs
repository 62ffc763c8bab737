use std::time::Duration;

use serde_json::{json, Value};

use super::{ChatRequest, LlmError};

pub const API_KEY_ENV: &str = "XPLAINBENCH_API_KEY";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

/// Something that answers chat requests with the assistant's text.
pub trait ChatTransport {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, LlmError>;

    /// Endpoint URL or fixture path, for audit logs and error messages.
    fn describe(&self) -> String;
}

/// Chat-completions client over HTTP POST.
pub struct HttpTransport {
    pub endpoint: String,
    api_key: Option<String>,
    pub timeout: Duration,
    /// Total tries per request, including the first.
    pub max_attempts: usize,
    /// Delay before the second try; doubles after each failure.
    pub initial_backoff: Duration,
}

impl HttpTransport {
    /// Reads the bearer token from `XPLAINBENCH_API_KEY` if set.
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            timeout: DEFAULT_TIMEOUT,
            max_attempts: 3,
            initial_backoff: Duration::from_millis(500),
        }
    }

    fn attempt(&self, body: &Value) -> Result<String, (bool, LlmError)> {
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(self.timeout)).http_status_as_error(false).build().into();
        let mut req = agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| {
            let retryable = matches!(
                e,
                ureq::Error::Io(_) | ureq::Error::Timeout(_) | ureq::Error::ConnectionFailed | ureq::Error::BodyStalled
            );
            (retryable, LlmError::Transport { endpoint: self.endpoint.clone(), message: e.to_string() })
        })?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| (true, LlmError::Transport { endpoint: self.endpoint.clone(), message: e.to_string() }))?;
        if status != 200 {
            let retryable = status == 429 || status >= 500;
            return Err((retryable, LlmError::Http { status, body: text }));
        }
        extract_content(&text).map_err(|e| (false, e))
    }
}

/// The assistant text of a chat-completions response body.
pub fn extract_content(body: &str) -> Result<String, LlmError> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| LlmError::BadResponse { message: format!("response is not JSON: {e}"), raw: body.to_string() })?;
    v.pointer("/choices/0/message/content").and_then(Value::as_str).map(str::to_string).ok_or_else(|| {
        LlmError::BadResponse { message: "missing choices[0].message.content".into(), raw: body.to_string() }
    })
}

impl ChatTransport for HttpTransport {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, LlmError> {
        let body = json!({ "model": request.model, "temperature": request.temperature, "messages": request.messages });
        let mut delay = self.initial_backoff;
        let mut last = None;
        for attempt in 1..=self.max_attempts.max(1) {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err((retryable, err)) => {
                    log::warn!("attempt {attempt} to {} failed: {err}", self.endpoint);
                    last = Some(err);
                    if !retryable {
                        break;
                    }
                    if attempt < self.max_attempts {
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn describe(&self) -> String {
        self.endpoint.clone()
    }
}
