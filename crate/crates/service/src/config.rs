//! TOML service configuration.
//!
//! ```toml
//! listen = "127.0.0.1:8080"
//! corpus_path = "hw1.corpus"
//! log_path = "events.log"
//! registry_path = "registrations.jsonl"
//!
//! [provider]
//! kind = "remote"                       # or "scripted"
//! endpoint = "https://api.example.com/v1"
//! model = "gpt-4o"
//! timeout_secs = 60
//! max_retries = 3
//!
//! [embedder]
//! kind = "hashing"                      # or "remote"
//! dimension = 256
//!
//! [retrieval]
//! k = 4
//! min_score = 0.15
//!
//! [auth]
//! instructor_tokens = ["..."]
//! ```
//!
//! The provider API key is read from `TUTOR_LLM_API_KEY` and nothing else.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

pub const API_KEY_ENV: &str = "TUTOR_LLM_API_KEY";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("missing required setting `{0}`")]
    Missing(&'static str),
    #[error("`{field}` = {value} is outside {range}")]
    OutOfRange {
        field: &'static str,
        value: String,
        range: &'static str,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Remote,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// Base URL of an OpenAI-compatible API, e.g. `https://host/v1`.
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub base_backoff_ms: u64,
    /// Wall-clock cap per completion including retries; 0 disables it.
    pub time_budget_secs: u64,
    /// JSON transcript for the scripted provider.
    pub transcript: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Remote,
            endpoint: None,
            model: None,
            timeout_secs: 60,
            max_retries: 3,
            base_backoff_ms: 500,
            time_budget_secs: 0,
            transcript: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    #[default]
    Hashing,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    pub dimension: usize,
    /// Remote only; defaults to the provider endpoint.
    pub endpoint: Option<String>,
    pub model: Option<String>,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            kind: EmbedderKind::Hashing,
            dimension: tutor_core::context::DEFAULT_DIMENSION,
            endpoint: None,
            model: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub k: usize,
    pub min_score: f64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self { k: 4, min_score: 0.15 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeakGuardConfig {
    pub ngram: usize,
}

impl Default for LeakGuardConfig {
    fn default() -> Self {
        Self {
            ngram: tutor_core::session::DEFAULT_LEAK_NGRAM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaqConfig {
    pub threshold: f64,
    pub min_cluster_size: usize,
}

impl Default for FaqConfig {
    fn default() -> Self {
        Self {
            threshold: tutor_core::analytics::DEFAULT_FAQ_THRESHOLD,
            min_cluster_size: tutor_core::analytics::DEFAULT_MIN_CLUSTER_SIZE,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuthConfig {
    /// Bearer tokens that act as instructors.
    pub instructor_tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitsConfig {
    pub llm_requests_per_hour: u32,
    pub session_idle_hours: u32,
    /// Refuse log appends beyond this size; 0 means unlimited.
    pub log_max_bytes: u64,
}

impl Default for LimitsConfig {
    fn default() -> Self {
        Self {
            llm_requests_per_hour: 30,
            session_idle_hours: 24,
            log_max_bytes: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen: SocketAddr,
    pub corpus_path: Option<PathBuf>,
    pub log_path: Option<PathBuf>,
    /// Alias-to-token records, kept apart from the interaction log.
    pub registry_path: Option<PathBuf>,
    #[serde(default)]
    pub provider: ProviderConfig,
    #[serde(default)]
    pub embedder: EmbedderConfig,
    #[serde(default)]
    pub retrieval: RetrievalConfig,
    #[serde(default)]
    pub leak_guard: LeakGuardConfig,
    #[serde(default)]
    pub faq: FaqConfig,
    #[serde(default)]
    pub auth: AuthConfig,
    #[serde(default)]
    pub limits: LimitsConfig,
}

fn default_listen() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: default_listen(),
            corpus_path: None,
            log_path: None,
            registry_path: None,
            provider: ProviderConfig::default(),
            embedder: EmbedderConfig::default(),
            retrieval: RetrievalConfig::default(),
            leak_guard: LeakGuardConfig::default(),
            faq: FaqConfig::default(),
            auth: AuthConfig::default(),
            limits: LimitsConfig::default(),
        }
    }
}

fn check<T: PartialOrd + ToString>(field: &'static str, value: T, lo: T, hi: T, range: &'static str) -> Result<(), ConfigError> {
    if value < lo || value > hi {
        return Err(ConfigError::OutOfRange {
            field,
            value: value.to_string(),
            range,
        });
    }
    Ok(())
}

impl ServiceConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Checks required fields and numeric ranges. Call after CLI overrides.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.corpus_path.is_none() {
            return Err(ConfigError::Missing("corpus_path"));
        }
        if self.log_path.is_none() {
            return Err(ConfigError::Missing("log_path"));
        }
        let p = &self.provider;
        match p.kind {
            ProviderKind::Remote => {
                if p.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) {
                    return Err(ConfigError::Missing("provider.endpoint"));
                }
                if p.model.as_deref().is_none_or(|m| m.trim().is_empty()) {
                    return Err(ConfigError::Missing("provider.model"));
                }
            }
            ProviderKind::Scripted => {
                if p.transcript.is_none() {
                    return Err(ConfigError::Missing("provider.transcript"));
                }
            }
        }
        check("provider.timeout_secs", p.timeout_secs, 1, 600, "1..=600")?;
        check("provider.max_retries", p.max_retries, 0, 10, "0..=10")?;
        check("provider.base_backoff_ms", p.base_backoff_ms, 0, 60_000, "0..=60000")?;
        check("provider.time_budget_secs", p.time_budget_secs, 0, 3600, "0..=3600")?;

        let e = &self.embedder;
        check("embedder.dimension", e.dimension, 8, 8192, "8..=8192")?;
        if e.kind == EmbedderKind::Remote {
            if e.endpoint.is_none() && p.endpoint.is_none() {
                return Err(ConfigError::Missing("embedder.endpoint"));
            }
            if e.model.is_none() {
                return Err(ConfigError::Missing("embedder.model"));
            }
        }

        check("retrieval.k", self.retrieval.k, 1, 50, "1..=50")?;
        if !self.retrieval.min_score.is_finite() {
            return Err(ConfigError::Invalid("retrieval.min_score must be finite".into()));
        }
        check("retrieval.min_score", self.retrieval.min_score, -1.0, 1.0, "-1.0..=1.0")?;
        check("leak_guard.ngram", self.leak_guard.ngram, 4, 64, "4..=64")?;
        if !self.faq.threshold.is_finite() {
            return Err(ConfigError::Invalid("faq.threshold must be finite".into()));
        }
        check("faq.threshold", self.faq.threshold, 0.0, 1.0, "0.0..=1.0")?;
        check("faq.min_cluster_size", self.faq.min_cluster_size, 1, 10_000, "1..=10000")?;
        check("limits.llm_requests_per_hour", self.limits.llm_requests_per_hour, 1, 100_000, "1..=100000")?;
        check("limits.session_idle_hours", self.limits.session_idle_hours, 1, 24 * 30, "1..=720")?;
        if self.auth.instructor_tokens.iter().any(|t| t.trim().len() < 16) {
            return Err(ConfigError::Invalid(
                "auth.instructor_tokens entries must be at least 16 characters".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        corpus_path = "hw1.corpus"
        log_path = "events.log"
        [provider]
        kind = "scripted"
        transcript = "t.json"
    "#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ServiceConfig::parse(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.retrieval.k, 4);
        assert_eq!(c.retrieval.min_score, 0.15);
        assert_eq!(c.leak_guard.ngram, 12);
        assert_eq!(c.faq.threshold, 0.85);
        assert_eq!(c.limits.llm_requests_per_hour, 30);
        assert_eq!(c.listen.port(), 8080);
    }

    #[test]
    fn missing_required_fields() {
        let c = ServiceConfig::parse("log_path = \"x\"").unwrap();
        assert!(matches!(c.validate(), Err(ConfigError::Missing("corpus_path"))));
        let c = ServiceConfig::parse("corpus_path = \"x\"\nlog_path = \"y\"").unwrap();
        assert!(matches!(c.validate(), Err(ConfigError::Missing("provider.endpoint"))));
    }

    #[test]
    fn ranges_enforced() {
        let c = ServiceConfig::parse(&format!("{MINIMAL}\n[retrieval]\nk = 0")).unwrap();
        assert!(matches!(c.validate(), Err(ConfigError::OutOfRange { field: "retrieval.k", .. })));
        let c = ServiceConfig::parse(&format!("{MINIMAL}\n[faq]\nthreshold = 1.5")).unwrap();
        assert!(matches!(c.validate(), Err(ConfigError::OutOfRange { field: "faq.threshold", .. })));
    }

    #[test]
    fn api_key_is_not_a_config_field() {
        let err = ServiceConfig::parse(&format!("{MINIMAL}\napi_key = \"sk-123\"")).unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        let err = ServiceConfig::parse("[provider]\napi_key = \"sk-123\"").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
    }
}
