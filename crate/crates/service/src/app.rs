//! Service state and its construction from configuration.

use std::num::NonZeroUsize;
use std::sync::Arc;
use std::time::Duration as StdDuration;

use thiserror::Error;
use tutor_core::analytics::FaqSettings;
use tutor_core::clock::{Clock, SystemClock};
use tutor_core::context::{
    load_corpus, CorpusError, Embedder, HashingEmbedder, IndexError, RetrievalSettings, SharedIndex, VectorIndex,
};
use tutor_core::llm::{Gateway, Provider, RetryPolicy, ScriptedProvider, Transcript, TranscriptError};
use tutor_core::log::{EventStore, LogError, StoreOptions};
use tutor_core::session::LeakGuard;
use tutor_core::{Tutor, TutorSettings};

use crate::config::{ConfigError, EmbedderKind, ProviderKind, ServiceConfig, API_KEY_ENV};
use crate::limits::RateLimiter;
use crate::registry::{Registry, RegistryError};
use crate::remote::{RemoteEmbedder, RemoteProvider};
use crate::sessions::SessionTable;

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot load corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("cannot index corpus: {0}")]
    Index(#[from] IndexError),
    #[error("cannot open interaction log: {0}")]
    Log(#[from] LogError),
    #[error("cannot open registry: {0}")]
    Registry(#[from] RegistryError),
    #[error("cannot load scripted transcript: {0}")]
    Transcript(#[from] TranscriptError),
    #[error("environment variable {API_KEY_ENV} must be set for the remote provider or embedder")]
    MissingApiKey,
}

#[derive(Debug, Clone, Copy)]
pub struct AppOptions {
    pub llm_requests_per_hour: u32,
    pub session_idle_timeout: chrono::Duration,
    pub faq: FaqSettings,
}

impl Default for AppOptions {
    fn default() -> Self {
        Self {
            llm_requests_per_hour: 30,
            session_idle_timeout: chrono::Duration::hours(24),
            faq: FaqSettings::default(),
        }
    }
}

/// Everything a request handler needs.
pub struct App {
    pub tutor: Tutor,
    pub registry: Registry,
    pub sessions: SessionTable,
    pub limiter: RateLimiter,
    pub options: AppOptions,
}

impl App {
    pub fn new(tutor: Tutor, registry: Registry, options: AppOptions) -> Self {
        Self {
            tutor,
            registry,
            sessions: SessionTable::new(options.session_idle_timeout),
            limiter: RateLimiter::per_hour(options.llm_requests_per_hour),
            options,
        }
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        self.tutor.clock()
    }

    /// Builds the service from a validated configuration. The API key is
    /// taken from the environment only when a remote backend needs it.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, StartupError> {
        config.validate()?;
        let api_key = || std::env::var(API_KEY_ENV).ok().filter(|k| !k.trim().is_empty());
        let timeout = StdDuration::from_secs(config.provider.timeout_secs);

        let corpus = load_corpus(config.corpus_path.as_ref().expect("validated"))?;

        let embedder: Arc<dyn Embedder> = match config.embedder.kind {
            EmbedderKind::Hashing => Arc::new(HashingEmbedder::new(config.embedder.dimension)),
            EmbedderKind::Remote => {
                let endpoint = config
                    .embedder
                    .endpoint
                    .as_deref()
                    .or(config.provider.endpoint.as_deref())
                    .expect("validated");
                Arc::new(RemoteEmbedder::new(
                    endpoint,
                    config.embedder.model.as_deref().expect("validated"),
                    api_key().ok_or(StartupError::MissingApiKey)?,
                    config.embedder.dimension,
                    timeout,
                ))
            }
        };
        let index = VectorIndex::build(corpus.documents(), embedder.as_ref())?;

        let provider: Arc<dyn Provider> = match config.provider.kind {
            ProviderKind::Remote => Arc::new(RemoteProvider::new(
                config.provider.endpoint.as_deref().expect("validated"),
                config.provider.model.as_deref().expect("validated"),
                api_key().ok_or(StartupError::MissingApiKey)?,
                timeout,
            )),
            ProviderKind::Scripted => Arc::new(ScriptedProvider::from_transcript(Transcript::load(
                config.provider.transcript.as_ref().expect("validated"),
            )?)),
        };
        let gateway = Gateway::new(provider).with_policy(RetryPolicy {
            max_retries: config.provider.max_retries,
            base_backoff: StdDuration::from_millis(config.provider.base_backoff_ms),
            time_budget: (config.provider.time_budget_secs > 0)
                .then(|| StdDuration::from_secs(config.provider.time_budget_secs)),
        });

        let log = EventStore::open_with(
            config.log_path.as_ref().expect("validated"),
            StoreOptions {
                max_bytes: (config.limits.log_max_bytes > 0).then_some(config.limits.log_max_bytes),
                ..StoreOptions::default()
            },
        )?;

        let instructor_tokens = config.auth.instructor_tokens.iter().map(|t| t.trim().to_string());
        let registry = match &config.registry_path {
            Some(path) => Registry::open(path, instructor_tokens)?,
            None => Registry::in_memory(instructor_tokens),
        };

        let tutor = Tutor::new(
            Arc::new(corpus),
            SharedIndex::new(index),
            embedder,
            Arc::new(gateway),
            Arc::new(log),
            Arc::new(SystemClock::new()),
        )
        .with_settings(TutorSettings {
            retrieval: RetrievalSettings {
                k: NonZeroUsize::new(config.retrieval.k).expect("validated"),
                min_score: config.retrieval.min_score,
            },
            leak_guard: LeakGuard::new(config.leak_guard.ngram),
        });

        Ok(Self::new(
            tutor,
            registry,
            AppOptions {
                llm_requests_per_hour: config.limits.llm_requests_per_hour,
                session_idle_timeout: chrono::Duration::hours(i64::from(config.limits.session_idle_hours)),
                faq: FaqSettings {
                    threshold: config.faq.threshold,
                    min_cluster_size: config.faq.min_cluster_size,
                },
            },
        ))
    }
}
