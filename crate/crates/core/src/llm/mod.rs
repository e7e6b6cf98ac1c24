//! Provider-neutral completion interface.
//!
//! Everything above this module builds [`CompletionRequest`]s and receives
//! [`CompletionResult`]s; only [`Provider`] implementations know about wire
//! formats.

mod gateway;
mod scripted;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gateway::{Gateway, RetryPolicy};
pub use scripted::{ScriptStep, ScriptedProvider, Transcript, TranscriptError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptMessage {
    pub role: Role,
    pub content: String,
}

impl PromptMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// What a completion is for. Drives default sampling and call accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurposeTag {
    #[serde(rename = "qa")]
    QA,
    MetricEval,
    Summary,
    LogSummary,
}

impl PurposeTag {
    pub const ALL: [PurposeTag; 4] = [
        PurposeTag::QA,
        PurposeTag::MetricEval,
        PurposeTag::Summary,
        PurposeTag::LogSummary,
    ];

    pub fn default_temperature(self) -> f64 {
        match self {
            PurposeTag::QA => 0.7,
            PurposeTag::MetricEval | PurposeTag::Summary | PurposeTag::LogSummary => 0.2,
        }
    }

    pub fn default_max_tokens(self) -> u32 {
        match self {
            PurposeTag::QA => 1024,
            PurposeTag::MetricEval => 768,
            PurposeTag::Summary => 512,
            PurposeTag::LogSummary => 768,
        }
    }

    pub(crate) fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PurposeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PurposeTag::QA => "qa",
            PurposeTag::MetricEval => "metric_eval",
            PurposeTag::Summary => "summary",
            PurposeTag::LogSummary => "log_summary",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvalidRequest {
    #[error("request has no messages")]
    Empty,
    #[error("first message must have the system role")]
    FirstNotSystem,
    #[error("request needs at least one user message")]
    NoUserMessage,
    #[error("message {0} has empty content")]
    EmptyContent(usize),
    #[error("max_tokens must be positive")]
    ZeroMaxTokens,
    #[error("temperature must be finite and non-negative")]
    BadTemperature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub messages: Vec<PromptMessage>,
    pub max_tokens: u32,
    pub temperature: f64,
    pub purpose_tag: PurposeTag,
}

impl CompletionRequest {
    /// Builds a request with the purpose's default sampling parameters.
    pub fn new(purpose_tag: PurposeTag, messages: Vec<PromptMessage>) -> Result<Self, InvalidRequest> {
        let req = Self {
            messages,
            max_tokens: purpose_tag.default_max_tokens(),
            temperature: purpose_tag.default_temperature(),
            purpose_tag,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<(), InvalidRequest> {
        let first = self.messages.first().ok_or(InvalidRequest::Empty)?;
        if first.role != Role::System {
            return Err(InvalidRequest::FirstNotSystem);
        }
        if !self.messages.iter().any(|m| m.role == Role::User) {
            return Err(InvalidRequest::NoUserMessage);
        }
        if let Some(i) = self
            .messages
            .iter()
            .position(|m| m.role != Role::Assistant && m.content.trim().is_empty())
        {
            return Err(InvalidRequest::EmptyContent(i));
        }
        if self.max_tokens == 0 {
            return Err(InvalidRequest::ZeroMaxTokens);
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(InvalidRequest::BadTemperature);
        }
        Ok(())
    }

    pub fn system_text(&self) -> &str {
        &self.messages[0].content
    }

    /// All message contents joined, for inspection in tests and logs.
    pub fn serialized(&self) -> String {
        self.messages
            .iter()
            .map(|m| format!("[{}]\n{}", m.role.as_str(), m.content))
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub provider_id: String,
    pub latency_ms: u64,
    pub attempt_count: u32,
}

/// A single failed provider attempt.
#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "message", rename_all = "snake_case")]
pub enum ProviderFailure {
    #[error("provider timed out")]
    Timeout,
    /// Server-side or network failure worth retrying (5xx, 429, reset).
    #[error("transient provider failure: {0}")]
    Transient(String),
    /// Non-retryable failure such as bad credentials or a malformed request.
    #[error("provider rejected the request: {0}")]
    Rejected(String),
}

impl ProviderFailure {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderFailure::Timeout | ProviderFailure::Transient(_))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("invalid completion request: {0}")]
    InvalidRequest(#[from] InvalidRequest),
    #[error("provider call exceeded its time budget after {attempts} attempt(s)")]
    ProviderTimeout { attempts: u32 },
    #[error("provider rejected the request: {0}")]
    ProviderRejected(String),
    #[error("retries exhausted after {attempts} attempts; last failure: {last}")]
    RetriesExhausted { attempts: u32, last: ProviderFailure },
}

impl LlmError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, LlmError::ProviderTimeout { .. } | LlmError::RetriesExhausted { .. })
    }
}

/// One raw attempt against a concrete backend. Retries and accounting live
/// in [`Gateway`].
pub trait Provider: Send + Sync {
    fn id(&self) -> &str;
    fn send(&self, request: &CompletionRequest) -> Result<String, ProviderFailure>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_shape_rules() {
        assert_eq!(CompletionRequest::new(PurposeTag::QA, vec![]), Err(InvalidRequest::Empty));
        assert_eq!(
            CompletionRequest::new(PurposeTag::QA, vec![PromptMessage::user("q")]),
            Err(InvalidRequest::FirstNotSystem)
        );
        assert_eq!(
            CompletionRequest::new(PurposeTag::QA, vec![PromptMessage::system("s")]),
            Err(InvalidRequest::NoUserMessage)
        );
        assert_eq!(
            CompletionRequest::new(
                PurposeTag::QA,
                vec![PromptMessage::system("s"), PromptMessage::user(" ")]
            ),
            Err(InvalidRequest::EmptyContent(1))
        );
        let ok = CompletionRequest::new(
            PurposeTag::MetricEval,
            vec![
                PromptMessage::system("s"),
                PromptMessage::assistant(""),
                PromptMessage::user("u"),
            ],
        )
        .unwrap();
        assert_eq!(ok.temperature, 0.2);
    }

    #[test]
    fn default_temperatures() {
        assert_eq!(PurposeTag::QA.default_temperature(), 0.7);
        assert_eq!(PurposeTag::Summary.default_temperature(), 0.2);
        assert_eq!(PurposeTag::MetricEval.default_temperature(), 0.2);
    }

    #[test]
    fn negative_temperature_rejected() {
        let mut req = CompletionRequest::new(
            PurposeTag::QA,
            vec![PromptMessage::system("s"), PromptMessage::user("u")],
        )
        .unwrap();
        req.temperature = -0.1;
        assert_eq!(req.validate(), Err(InvalidRequest::BadTemperature));
    }
}
