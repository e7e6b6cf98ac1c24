use std::collections::VecDeque;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CompletionRequest, Provider, ProviderFailure};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptStep {
    Respond(String),
    Fail(ProviderFailure),
}

#[derive(Debug, Default)]
struct Script {
    steps: VecDeque<ScriptStep>,
    always_fail: Option<ProviderFailure>,
    fallback: Option<String>,
    requests: Vec<CompletionRequest>,
    attempts: u64,
}

/// Deterministic provider that replays a configured transcript in order.
/// Consumption is serialized, so concurrent callers each take the next step.
#[derive(Debug, Default)]
pub struct ScriptedProvider {
    script: Mutex<Script>,
}

impl ScriptedProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_transcript(transcript: Transcript) -> Self {
        let provider = Self::new();
        {
            let mut s = provider.lock();
            s.steps.extend(transcript.steps.into_iter().map(ScriptStep::from));
            s.fallback = transcript.fallback;
        }
        provider
    }

    /// Response returned once the queued steps run out.
    pub fn with_fallback(self, text: impl Into<String>) -> Self {
        self.lock().fallback = Some(text.into());
        self
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Script> {
        self.script.lock().expect("script lock poisoned")
    }

    pub fn push_response(&self, text: impl Into<String>) {
        self.lock().steps.push_back(ScriptStep::Respond(text.into()));
    }

    pub fn push_responses<I, S>(&self, texts: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut s = self.lock();
        s.steps
            .extend(texts.into_iter().map(|t| ScriptStep::Respond(t.into())));
    }

    pub fn push_failure(&self, failure: ProviderFailure) {
        self.lock().steps.push_back(ScriptStep::Fail(failure));
    }

    /// Every subsequent attempt fails with `failure`.
    pub fn always_fail(&self, failure: ProviderFailure) {
        self.lock().always_fail = Some(failure);
    }

    pub fn remaining(&self) -> usize {
        self.lock().steps.len()
    }

    /// Attempts received so far, including failed ones.
    pub fn attempts(&self) -> u64 {
        self.lock().attempts
    }

    /// Every request received, in arrival order.
    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.lock().requests.clone()
    }

    pub fn last_request(&self) -> Option<CompletionRequest> {
        self.lock().requests.last().cloned()
    }
}

impl Provider for ScriptedProvider {
    fn id(&self) -> &str {
        "scripted"
    }

    fn send(&self, request: &CompletionRequest) -> Result<String, ProviderFailure> {
        let mut s = self.lock();
        s.attempts += 1;
        s.requests.push(request.clone());
        if let Some(f) = &s.always_fail {
            return Err(f.clone());
        }
        match s.steps.pop_front() {
            Some(ScriptStep::Respond(text)) => Ok(text),
            Some(ScriptStep::Fail(f)) => Err(f),
            None => s
                .fallback
                .clone()
                .ok_or_else(|| ProviderFailure::Rejected("scripted transcript exhausted".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailKind {
    Timeout,
    Transient,
    Rejected,
}

/// One entry of a transcript file: a bare string is a response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TranscriptEntry {
    Text(String),
    Respond {
        respond: String,
    },
    Fail {
        fail: FailKind,
        #[serde(default)]
        message: String,
    },
}

impl From<TranscriptEntry> for ScriptStep {
    fn from(entry: TranscriptEntry) -> Self {
        match entry {
            TranscriptEntry::Text(t) | TranscriptEntry::Respond { respond: t } => ScriptStep::Respond(t),
            TranscriptEntry::Fail { fail, message } => ScriptStep::Fail(match fail {
                FailKind::Timeout => ProviderFailure::Timeout,
                FailKind::Transient => ProviderFailure::Transient(message),
                FailKind::Rejected => ProviderFailure::Rejected(message),
            }),
        }
    }
}

/// JSON transcript consumed by `--scripted-provider`:
///
/// ```json
/// { "steps": ["first reply", {"fail": "timeout"}, {"respond": "third"}],
///   "fallback": "reply once steps run out" }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    #[serde(default)]
    pub steps: Vec<TranscriptEntry>,
    #[serde(default)]
    pub fallback: Option<String>,
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("cannot read transcript: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed transcript: {0}")]
    Json(#[from] serde_json::Error),
}

impl Transcript {
    pub fn parse(text: &str) -> Result<Self, TranscriptError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TranscriptError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{PromptMessage, PurposeTag};

    fn req() -> CompletionRequest {
        CompletionRequest::new(PurposeTag::QA, vec![PromptMessage::system("s"), PromptMessage::user("u")]).unwrap()
    }

    #[test]
    fn replays_in_order_then_falls_back() {
        let p = ScriptedProvider::new().with_fallback("fb");
        p.push_responses(["a", "b"]);
        assert_eq!(p.send(&req()).unwrap(), "a");
        assert_eq!(p.send(&req()).unwrap(), "b");
        assert_eq!(p.send(&req()).unwrap(), "fb");
        assert_eq!(p.requests().len(), 3);
    }

    #[test]
    fn exhausted_without_fallback_is_rejected() {
        let p = ScriptedProvider::new();
        assert!(matches!(p.send(&req()), Err(ProviderFailure::Rejected(_))));
    }

    #[test]
    fn transcript_file_format() {
        let t = Transcript::parse(
            r#"{"steps": ["one", {"fail": "timeout"}, {"fail": "transient", "message": "503"}, {"respond": "two"}],
                "fallback": "fb"}"#,
        )
        .unwrap();
        let p = ScriptedProvider::from_transcript(t);
        assert_eq!(p.send(&req()), Ok("one".into()));
        assert_eq!(p.send(&req()), Err(ProviderFailure::Timeout));
        assert_eq!(p.send(&req()), Err(ProviderFailure::Transient("503".into())));
        assert_eq!(p.send(&req()), Ok("two".into()));
        assert_eq!(p.send(&req()), Ok("fb".into()));
        assert!(Transcript::parse("{\"steps\": [1]}").is_err());
    }
}
