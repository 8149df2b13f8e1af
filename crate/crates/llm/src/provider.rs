//! Chat-completion exchange types and the provider interface.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

/// Serializes to the wire body `{model, messages, temperature}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    /// System problem statement followed by one user turn.
    pub fn new(model: &str, temperature: f64, system: &str, user: &str) -> Self {
        Self {
            model: model.to_string(),
            messages: vec![
                ChatMessage {
                    role: Role::System,
                    content: system.to_string(),
                },
                ChatMessage {
                    role: Role::User,
                    content: user.to_string(),
                },
            ],
            temperature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub finish_reason: Option<String>,
    pub usage: Option<Usage>,
}

impl ChatResponse {
    pub fn text(content: impl Into<String>) -> Self {
        Self {
            content: content.into(),
            finish_reason: None,
            usage: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("authentication rejected (HTTP {status}): {body}")]
    Auth { status: u16, body: String },
    #[error("request failed after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("request rejected (HTTP {status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("replay script exhausted after {0} responses")]
    ScriptExhausted(usize),
    #[error("provider setup: {0}")]
    Setup(String),
}

pub trait Provider {
    fn complete(&mut self, request: &ChatRequest) -> Result<ChatResponse, ProviderError>;
}

impl<P: Provider + ?Sized> Provider for &mut P {
    fn complete(&mut self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptEntry {
    content: String,
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("replay script is empty")]
    Empty,
}

/// Plays back canned responses in order and remembers what it was asked.
#[derive(Debug, Clone)]
pub struct ReplayProvider {
    script: Vec<String>,
    next: usize,
    pub received: Vec<ChatRequest>,
}

impl ReplayProvider {
    pub fn new(script: Vec<String>) -> Result<Self, ScriptError> {
        if script.is_empty() {
            return Err(ScriptError::Empty);
        }
        Ok(Self {
            script,
            next: 0,
            received: Vec::new(),
        })
    }

    /// One `{"content": ...}` document per non-blank line.
    pub fn from_jsonl(text: &str) -> Result<Self, ScriptError> {
        let mut script = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: ScriptEntry = serde_json::from_str(line).map_err(|e| ScriptError::Line {
                line: i + 1,
                message: e.to_string(),
            })?;
            script.push(entry.content);
        }
        Self::new(script)
    }

    pub fn remaining(&self) -> usize {
        self.script.len() - self.next
    }
}

impl Provider for ReplayProvider {
    fn complete(&mut self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.received.push(request.clone());
        let content = self
            .script
            .get(self.next)
            .ok_or(ProviderError::ScriptExhausted(self.script.len()))?;
        self.next += 1;
        Ok(ChatResponse {
            content: content.clone(),
            finish_reason: Some("stop".into()),
            usage: None,
        })
    }
}
