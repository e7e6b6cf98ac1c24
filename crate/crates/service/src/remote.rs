//! OpenAI-compatible HTTP backends for completions and embeddings.

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tutor_core::context::{EmbedError, Embedder, Embedding, EmbeddingVector};
use tutor_core::llm::{CompletionRequest, Provider, ProviderFailure};

const ERROR_BODY_LIMIT: usize = 300;

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

fn join(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path)
}

fn classify(err: ureq::Error) -> ProviderFailure {
    match err {
        ureq::Error::Timeout(_) => ProviderFailure::Timeout,
        ureq::Error::Io(e) if e.kind() == std::io::ErrorKind::TimedOut => ProviderFailure::Timeout,
        e @ (ureq::Error::Io(_)
        | ureq::Error::HostNotFound
        | ureq::Error::ConnectionFailed
        | ureq::Error::BodyStalled
        | ureq::Error::Protocol(_)) => ProviderFailure::Transient(e.to_string()),
        e => ProviderFailure::Rejected(e.to_string()),
    }
}

fn status_failure(status: u16, body: &str) -> ProviderFailure {
    let body: String = body.chars().take(ERROR_BODY_LIMIT).collect();
    let message = format!("HTTP {status}: {body}");
    if status == 408 || status == 429 || status >= 500 {
        ProviderFailure::Transient(message)
    } else {
        ProviderFailure::Rejected(message)
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    #[serde(default)]
    content: Option<String>,
}

/// Chat-completions client. The key is held in memory only and never
/// printed.
pub struct RemoteProvider {
    agent: ureq::Agent,
    url: String,
    model: String,
    api_key: String,
}

impl fmt::Debug for RemoteProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RemoteProvider")
            .field("url", &self.url)
            .field("model", &self.model)
            .field("api_key", &"<redacted>")
            .finish()
    }
}

impl RemoteProvider {
    pub fn new(endpoint: &str, model: &str, api_key: String, timeout: Duration) -> Self {
        Self {
            agent: agent(timeout),
            url: join(endpoint, "chat/completions"),
            model: model.to_string(),
            api_key,
        }
    }
}

impl Provider for RemoteProvider {
    fn id(&self) -> &str {
        &self.model
    }

    fn send(&self, request: &CompletionRequest) -> Result<String, ProviderFailure> {
        let body = ChatRequest {
            model: &self.model,
            messages: request
                .messages
                .iter()
                .map(|m| ChatMessage {
                    role: m.role.as_str(),
                    content: &m.content,
                })
                .collect(),
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        let mut response = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(classify)?;
        let status = response.status().as_u16();
        if status != 200 {
            let text = response.body_mut().read_to_string().unwrap_or_default();
            return Err(status_failure(status, &text));
        }
        let parsed: ChatResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| ProviderFailure::Transient(format!("unreadable completion: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content.unwrap_or_default())
            .ok_or_else(|| ProviderFailure::Transient("completion has no choices".into()))
    }
}

#[derive(Serialize)]
struct EmbeddingRequest<'a> {
    model: &'a str,
    input: &'a str,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingData>,
}

#[derive(Deserialize)]
struct EmbeddingData {
    embedding: Vec<f64>,
}

/// Embeddings client with a fixed, configured dimension.
pub struct RemoteEmbedder {
    agent: ureq::Agent,
    url: String,
    model: String,
    api_key: String,
    dimension: usize,
}

impl fmt::Debug for RemoteEmbedder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RemoteEmbedder")
            .field("url", &self.url)
            .field("model", &self.model)
            .field("dimension", &self.dimension)
            .finish_non_exhaustive()
    }
}

impl RemoteEmbedder {
    pub fn new(endpoint: &str, model: &str, api_key: String, dimension: usize, timeout: Duration) -> Self {
        Self {
            agent: agent(timeout),
            url: join(endpoint, "embeddings"),
            model: model.to_string(),
            api_key,
            dimension,
        }
    }
}

impl Embedder for RemoteEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Embedding, EmbedError> {
        if text.trim().is_empty() {
            return Ok(Embedding::Empty {
                dimension: self.dimension,
            });
        }
        let unavailable = |e: String| EmbedError::EmbedderUnavailable(e);
        let mut response = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(EmbeddingRequest {
                model: &self.model,
                input: text,
            })
            .map_err(|e| unavailable(e.to_string()))?;
        let status = response.status().as_u16();
        if status != 200 {
            return Err(unavailable(format!("HTTP {status}")));
        }
        let parsed: EmbeddingResponse = response.body_mut().read_json().map_err(|e| unavailable(e.to_string()))?;
        let values = parsed
            .data
            .into_iter()
            .next()
            .ok_or_else(|| unavailable("no embedding returned".into()))?
            .embedding;
        if values.len() != self.dimension {
            return Err(EmbedError::DimensionMismatch {
                expected: self.dimension,
                got: values.len(),
            });
        }
        match EmbeddingVector::new(values) {
            Ok(v) => Ok(Embedding::Dense(v)),
            Err(EmbedError::ZeroNorm) => Ok(Embedding::Empty {
                dimension: self.dimension,
            }),
            Err(e) => Err(e),
        }
    }
}
