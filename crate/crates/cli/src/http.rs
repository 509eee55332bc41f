//! OpenAI-compatible chat-completion client.

use std::time::Duration;

use ccreport::llm::{ChatClient, ChatReply, ChatRequest, ClientError};
use serde_json::{json, Value};

pub struct HttpClient {
    endpoint: String,
    model: String,
    api_key: String,
    http: reqwest::blocking::Client,
}

impl HttpClient {
    pub fn new(endpoint: &str, model: &str, api_key: String, timeout: Duration) -> Result<Self, ClientError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(HttpClient {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            api_key,
            http,
        })
    }
}

fn transport(e: reqwest::Error) -> ClientError {
    if e.is_timeout() {
        ClientError::Timeout
    } else {
        ClientError::Transport(e.to_string())
    }
}

impl ChatClient for HttpClient {
    fn send(&self, request: &ChatRequest) -> Result<ChatReply, ClientError> {
        let body = json!({
            "model": self.model,
            "temperature": request.temperature,
            "messages": [{ "role": "user", "content": request.prompt }],
        });
        let response = self
            .http
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(transport)?;
        let status = response.status();
        if !status.is_success() {
            return Err(ClientError::Status {
                code: status.as_u16(),
                body: response.text().unwrap_or_default(),
            });
        }
        let value: Value = response.json().map_err(transport)?;
        let text = value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| ClientError::Transport("response has no message content".into()))?;
        Ok(ChatReply {
            text: text.to_string(),
            usage: value.get("usage").cloned(),
        })
    }
}
