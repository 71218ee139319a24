//! LLM adapters: a remote chat endpoint and a deterministic scripted
//! replayer.

use super::trace::Dialect;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LlmError {
    #[error("llm endpoint error: {0}")]
    Endpoint(String),
    #[error("scripted adapter exhausted its script")]
    ScriptExhausted,
}

/// A completion backend. Implementations continue the conversation (when
/// the last message is an assistant message, the completion continues it)
/// and honor stop sequences by cutting before their first occurrence.
pub trait LlmAdapter {
    fn complete(&mut self, messages: &[Message], stop: &[String]) -> Result<String, LlmError>;
}

/// Replays a recorded trajectory verbatim. The script is the full agent-side
/// text including observation lines; each `complete` call emits the text up
/// to the next observation marker and skips the recorded observation, since
/// the runtime injects its own.
pub struct ScriptedAdapter {
    script: String,
    cursor: usize,
    dialect: Dialect,
}

impl ScriptedAdapter {
    pub fn new(script: impl Into<String>, dialect: Dialect) -> Self {
        ScriptedAdapter { script: script.into(), cursor: 0, dialect }
    }

    fn find_any(&self, needles: &[&str], from: usize) -> Option<usize> {
        needles
            .iter()
            .filter_map(|n| self.script[from..].find(n).map(|p| p + from))
            .min()
    }
}

impl LlmAdapter for ScriptedAdapter {
    fn complete(&mut self, _messages: &[Message], stop: &[String]) -> Result<String, LlmError> {
        if self.cursor >= self.script.len() {
            return Err(LlmError::ScriptExhausted);
        }
        let stops: Vec<&str> = stop.iter().map(String::as_str).collect();
        match self.find_any(&stops, self.cursor) {
            None => {
                let segment = self.script[self.cursor..].to_string();
                self.cursor = self.script.len();
                Ok(segment)
            }
            Some(stop_pos) => {
                let segment = self.script[self.cursor..stop_pos].to_string();
                // Skip the recorded observation: resume at the next
                // model-side marker.
                let resume = self.dialect.resume_markers();
                self.cursor = self
                    .find_any(&resume, stop_pos + 1)
                    .unwrap_or(self.script.len());
                Ok(segment)
            }
        }
    }
}

/// Remote chat endpoint: POST `{"messages": [...], "stop": [...]}`,
/// response `{"content": "..."}`. Transient failures (connect errors and
/// 5xx) are retried up to `max_retries` times.
pub struct RemoteAdapter {
    endpoint: String,
    api_key: Option<String>,
    max_retries: u32,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    messages: &'a [Message],
    stop: &'a [String],
}

#[derive(Deserialize)]
struct CompletionResponse {
    content: String,
}

impl RemoteAdapter {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, max_retries: u32) -> Self {
        RemoteAdapter {
            endpoint: endpoint.into(),
            api_key,
            max_retries,
            client: reqwest::blocking::Client::new(),
        }
    }

    fn call(&self, messages: &[Message], stop: &[String]) -> Result<String, LlmError> {
        let mut request = self
            .client
            .post(&self.endpoint)
            .json(&CompletionRequest { messages, stop });
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| LlmError::Endpoint(e.to_string()))?;
        if response.status().is_server_error() {
            return Err(LlmError::Endpoint(format!("server error {}", response.status())));
        }
        let response =
            response.error_for_status().map_err(|e| LlmError::Endpoint(e.to_string()))?;
        let body: CompletionResponse =
            response.json().map_err(|e| LlmError::Endpoint(e.to_string()))?;
        Ok(body.content)
    }
}

impl LlmAdapter for RemoteAdapter {
    fn complete(&mut self, messages: &[Message], stop: &[String]) -> Result<String, LlmError> {
        let mut last_error = None;
        for _ in 0..=self.max_retries {
            match self.call(messages, stop) {
                Ok(text) => return Ok(text),
                Err(e) => last_error = Some(e),
            }
        }
        Err(last_error.unwrap_or_else(|| LlmError::Endpoint("no attempts made".into())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCRIPT: &str = "# Task 1: Find things.\n\
        ## Step 1.1:\n\
        ### Action 1.1.1: get_relations(m.1)\n\
        ### Obs 1.1.1: recorded observation that must be skipped\n\
        ### Thought 1.1.1: pick one.\n\
        ### S-exp-1.1: (JOIN (R a.b.c) m.1)\n\
        ## S-exp-1: (JOIN (R a.b.c) m.1)\n\
        # Final s-exp:\n\
        (JOIN (R a.b.c) m.1)\n";

    #[test]
    fn scripted_adapter_stops_before_observations_and_skips_them() {
        let mut adapter = ScriptedAdapter::new(SCRIPT, Dialect::Dara);
        let stop = vec!["### Obs".to_string()];
        let first = adapter.complete(&[], &stop).unwrap();
        assert!(first.ends_with("get_relations(m.1)\n"));
        assert!(!first.contains("recorded observation"));
        let second = adapter.complete(&[], &stop).unwrap();
        assert!(second.starts_with("### Thought 1.1.1"));
        assert!(second.contains("# Final s-exp:"));
        assert_eq!(adapter.complete(&[], &stop), Err(LlmError::ScriptExhausted));
    }

    #[test]
    fn scripted_adapter_is_deterministic() {
        let run = || {
            let mut adapter = ScriptedAdapter::new(SCRIPT, Dialect::Dara);
            let stop = vec!["### Obs".to_string()];
            let mut out = Vec::new();
            while let Ok(seg) = adapter.complete(&[], &stop) {
                out.push(seg);
            }
            out
        };
        assert_eq!(run(), run());
    }
}
