use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{LlmError, PromptDocument};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub prompt: String,
    /// Zero in deterministic mode.
    pub temperature: f64,
}

impl ChatRequest {
    pub fn deterministic(prompt: &str) -> Self {
        ChatRequest {
            prompt: prompt.to_string(),
            temperature: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatReply {
    pub text: String,
    /// Provider usage block, kept opaque.
    pub usage: Option<serde_json::Value>,
}

impl ChatReply {
    pub fn text(text: &str) -> Self {
        ChatReply {
            text: text.to_string(),
            usage: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClientError {
    Timeout,
    Transport(String),
    Status { code: u16, body: String },
}

impl ClientError {
    /// Timeouts, transport failures, 429 and 5xx are retried.
    pub fn is_retryable(&self) -> bool {
        match self {
            ClientError::Timeout | ClientError::Transport(_) => true,
            ClientError::Status { code, .. } => *code == 429 || *code >= 500,
        }
    }

    fn describe(&self) -> String {
        match self {
            ClientError::Timeout => "request timed out".into(),
            ClientError::Transport(m) => m.clone(),
            ClientError::Status { code, body } => format!("status {code}: {body}"),
        }
    }
}

impl From<ClientError> for LlmError {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Timeout => LlmError::Transport("request timed out".into()),
            ClientError::Transport(m) => LlmError::Transport(m),
            ClientError::Status { code, body } => LlmError::Service { status: code, body },
        }
    }
}

/// A chat-completion service.
pub trait ChatClient: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<ChatReply, ClientError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            initial_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry `n` (1-based): doubles each time, capped.
    pub fn backoff(&self, n: u32) -> Duration {
        let factor = 2u32.saturating_pow(n.saturating_sub(1));
        self.initial_backoff.saturating_mul(factor).min(self.max_backoff)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extracted {
    pub markdown: String,
    /// No fenced block was found and the raw text was used.
    pub no_fence: bool,
}

/// Content of the first fenced code block, or the whole text flagged
/// `no_fence`. An unclosed fence runs to the end of the text.
pub fn extract_markdown(raw: &str) -> Extracted {
    let mut lines = raw.lines();
    let mut found = false;
    for line in lines.by_ref() {
        if line.trim_start().starts_with("```") {
            found = true;
            break;
        }
    }
    if !found {
        return Extracted {
            markdown: raw.to_string(),
            no_fence: true,
        };
    }
    let body: Vec<&str> = lines.take_while(|l| !l.trim_start().starts_with("```")).collect();
    Extracted {
        markdown: body.join("\n"),
        no_fence: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub raw_text: String,
    pub extracted_markdown: Option<String>,
    pub no_fence: bool,
    pub usage: Option<serde_json::Value>,
    pub attempts: u32,
}

pub fn request_report(prompt: &PromptDocument, client: &dyn ChatClient, policy: &RetryPolicy) -> Result<LlmResponse, LlmError> {
    request_report_with(prompt, client, policy, &std::thread::sleep)
}

/// As [`request_report`], with the sleep between attempts supplied.
pub fn request_report_with(
    prompt: &PromptDocument,
    client: &dyn ChatClient,
    policy: &RetryPolicy,
    sleep: &dyn Fn(Duration),
) -> Result<LlmResponse, LlmError> {
    let request = ChatRequest::deterministic(&prompt.text);
    let mut attempts = 0;
    loop {
        attempts += 1;
        match client.send(&request) {
            Ok(reply) => {
                let extracted = extract_markdown(&reply.text);
                return Ok(LlmResponse {
                    raw_text: reply.text,
                    extracted_markdown: Some(extracted.markdown),
                    no_fence: extracted.no_fence,
                    usage: reply.usage,
                    attempts,
                });
            }
            Err(e) if !e.is_retryable() => return Err(e.into()),
            Err(e) if policy.max_retries == 0 => return Err(e.into()),
            Err(e) if attempts > policy.max_retries => {
                return Err(LlmError::GaveUp {
                    attempts,
                    last: e.describe(),
                })
            }
            Err(e) => {
                ::log::warn!("attempt {attempts} failed ({}), retrying", e.describe());
                sleep(policy.backoff(attempts));
            }
        }
    }
}

/// Scripted client for tests; records every request it receives.
#[derive(Debug, Default)]
pub struct MockClient {
    script: Mutex<VecDeque<Result<ChatReply, ClientError>>>,
    fallback: Option<ChatReply>,
    requests: Mutex<Vec<ChatRequest>>,
}

impl MockClient {
    pub fn scripted(script: impl IntoIterator<Item = Result<ChatReply, ClientError>>) -> Self {
        MockClient {
            script: Mutex::new(script.into_iter().collect()),
            ..Default::default()
        }
    }

    /// Answers every request with the same reply.
    pub fn always(reply: ChatReply) -> Self {
        MockClient {
            fallback: Some(reply),
            ..Default::default()
        }
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl ChatClient for MockClient {
    fn send(&self, request: &ChatRequest) -> Result<ChatReply, ClientError> {
        self.requests.lock().unwrap().push(request.clone());
        match self.script.lock().unwrap().pop_front() {
            Some(step) => step,
            None => self
                .fallback
                .clone()
                .ok_or_else(|| ClientError::Transport("mock script exhausted".into())),
        }
    }
}

/// Replays a previously recorded response.
#[derive(Debug, Clone)]
pub struct ReplayClient {
    recorded: String,
}

impl ReplayClient {
    pub fn new(recorded: &str) -> Self {
        ReplayClient {
            recorded: recorded.to_string(),
        }
    }
}

impl ChatClient for ReplayClient {
    fn send(&self, _request: &ChatRequest) -> Result<ChatReply, ClientError> {
        Ok(ChatReply::text(&self.recorded))
    }
}
