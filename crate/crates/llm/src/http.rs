//! Blocking chat-completion client for OpenAI-compatible endpoints.

use std::thread;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::Value;

use crate::provider::{ChatRequest, ChatResponse, Provider, ProviderError, Usage};

pub const API_KEY_VAR: &str = "LUMENLOOP_API_KEY";
pub const API_BASE_VAR: &str = "LUMENLOOP_API_BASE";
pub const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";
pub const DEFAULT_PATH: &str = "/chat/completions";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    /// Delay before attempt `attempt + 1`, doubling from `base_delay`.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u32 << attempt.saturating_sub(1).min(16);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

#[derive(Debug, Clone)]
pub struct HttpProvider {
    client: Client,
    url: String,
    api_key: String,
    pub retry: RetryPolicy,
}

enum Attempt {
    Done(Result<ChatResponse, ProviderError>),
    Retry { reason: String, wait: Option<Duration> },
}

impl HttpProvider {
    pub fn new(api_base: &str, path: &str, api_key: &str, timeout: Duration) -> Result<Self, ProviderError> {
        let client = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Setup(e.to_string()))?;
        Ok(Self {
            client,
            url: format!("{}/{}", api_base.trim_end_matches('/'), path.trim_start_matches('/')),
            api_key: api_key.to_string(),
            retry: RetryPolicy::default(),
        })
    }

    /// Credential from `LUMENLOOP_API_KEY`, endpoint base from
    /// `LUMENLOOP_API_BASE` (falls back to the OpenAI base URL).
    pub fn from_env(path: &str, timeout: Duration) -> Result<Self, ProviderError> {
        let key = std::env::var(API_KEY_VAR)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| ProviderError::Setup(format!("{API_KEY_VAR} is not set")))?;
        let base = std::env::var(API_BASE_VAR).unwrap_or_else(|_| DEFAULT_API_BASE.to_string());
        Self::new(&base, path, &key, timeout)
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn attempt(&self, request: &ChatRequest) -> Attempt {
        let response = match self.client.post(&self.url).bearer_auth(&self.api_key).json(request).send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() || e.is_connect() => {
                return Attempt::Retry {
                    reason: e.to_string(),
                    wait: None,
                }
            }
            Err(e) => return Attempt::Done(Err(ProviderError::Setup(e.to_string()))),
        };
        let status = response.status();
        let retry_after = response
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let body = match response.text() {
            Ok(b) => b,
            Err(e) => {
                return Attempt::Retry {
                    reason: e.to_string(),
                    wait: None,
                }
            }
        };
        if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
            return Attempt::Done(Err(ProviderError::Auth {
                status: status.as_u16(),
                body,
            }));
        }
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Attempt::Retry {
                reason: format!("HTTP {}", status.as_u16()),
                wait: retry_after,
            };
        }
        if !status.is_success() {
            return Attempt::Done(Err(ProviderError::Rejected {
                status: status.as_u16(),
                body,
            }));
        }
        Attempt::Done(parse_completion(&body))
    }
}

/// Reads `choices[0].message.content` plus the optional extras.
pub fn parse_completion(body: &str) -> Result<ChatResponse, ProviderError> {
    let v: Value = serde_json::from_str(body).map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
    let choice = &v["choices"][0];
    let content = choice["message"]["content"]
        .as_str()
        .ok_or_else(|| ProviderError::MalformedResponse("missing choices[0].message.content".into()))?;
    let usage = serde_json::from_value::<Usage>(v["usage"].clone()).ok();
    Ok(ChatResponse {
        content: content.to_string(),
        finish_reason: choice["finish_reason"].as_str().map(str::to_string),
        usage,
    })
}

impl Provider for HttpProvider {
    fn complete(&mut self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let mut last = String::new();
        for attempt in 1..=self.retry.max_attempts {
            match self.attempt(request) {
                Attempt::Done(result) => return result,
                Attempt::Retry { reason, wait } => {
                    last = reason;
                    if attempt < self.retry.max_attempts {
                        let delay = wait.map_or_else(|| self.retry.backoff(attempt), |w| w.min(self.retry.max_delay));
                        thread::sleep(delay);
                    }
                }
            }
        }
        Err(ProviderError::Exhausted {
            attempts: self.retry.max_attempts,
            last,
        })
    }
}
