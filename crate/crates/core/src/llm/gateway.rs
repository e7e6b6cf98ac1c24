use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::{CompletionRequest, CompletionResult, LlmError, Provider, ProviderFailure, PurposeTag};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_backoff: Duration,
    /// Upper bound on time spent in provider calls plus backoff for one
    /// completion. `None` means unbounded.
    pub time_budget: Option<Duration>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_backoff: Duration::from_millis(500),
            time_budget: None,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based): `base × 2^retry`.
    pub fn backoff(&self, retry: u32) -> Duration {
        self.base_backoff.saturating_mul(1u32.checked_shl(retry).unwrap_or(u32::MAX))
    }
}

type Sleeper = dyn Fn(Duration) + Send + Sync;

/// Retrying, accounted front door to a [`Provider`].
pub struct Gateway {
    provider: Arc<dyn Provider>,
    policy: RetryPolicy,
    completed: [AtomicU64; 4],
    sleeper: Arc<Sleeper>,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("provider", &self.provider.id())
            .field("policy", &self.policy)
            .finish_non_exhaustive()
    }
}

impl Gateway {
    pub fn new(provider: Arc<dyn Provider>) -> Self {
        Self {
            provider,
            policy: RetryPolicy::default(),
            completed: Default::default(),
            sleeper: Arc::new(std::thread::sleep),
        }
    }

    pub fn with_policy(mut self, policy: RetryPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Replaces the backoff sleep, e.g. with a no-op in tests.
    pub fn with_sleeper(mut self, sleeper: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleeper = Arc::new(sleeper);
        self
    }

    pub fn policy(&self) -> &RetryPolicy {
        &self.policy
    }

    pub fn provider_id(&self) -> &str {
        self.provider.id()
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, LlmError> {
        request.validate()?;
        let started = Instant::now();
        let mut spent = Duration::ZERO;
        let mut attempts = 0u32;
        loop {
            attempts += 1;
            let call_started = Instant::now();
            let outcome = self.provider.send(request);
            spent += call_started.elapsed();
            let failure = match outcome {
                Ok(text) => {
                    self.completed[request.purpose_tag.slot()].fetch_add(1, Ordering::Relaxed);
                    return Ok(CompletionResult {
                        text,
                        provider_id: self.provider.id().to_string(),
                        latency_ms: started.elapsed().as_millis() as u64,
                        attempt_count: attempts,
                    });
                }
                Err(ProviderFailure::Rejected(msg)) => return Err(LlmError::ProviderRejected(msg)),
                Err(f) => f,
            };
            if attempts > self.policy.max_retries {
                return Err(LlmError::RetriesExhausted { attempts, last: failure });
            }
            let delay = self.policy.backoff(attempts - 1);
            if self.policy.time_budget.is_some_and(|b| spent + delay > b) {
                return Err(LlmError::ProviderTimeout { attempts });
            }
            (self.sleeper)(delay);
            spent += delay;
        }
    }

    /// Successful completions with `tag` since creation or the last reset.
    pub fn call_count(&self, tag: PurposeTag) -> u64 {
        self.completed[tag.slot()].load(Ordering::Relaxed)
    }

    pub fn reset_counts(&self) {
        for c in &self.completed {
            c.store(0, Ordering::Relaxed);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{PromptMessage, ScriptedProvider};
    use std::sync::Mutex;

    fn request(tag: PurposeTag) -> CompletionRequest {
        CompletionRequest::new(tag, vec![PromptMessage::system("s"), PromptMessage::user("u")]).unwrap()
    }

    fn gateway(provider: Arc<ScriptedProvider>, max_retries: u32) -> (Gateway, Arc<Mutex<Vec<Duration>>>) {
        let sleeps = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&sleeps);
        let gw = Gateway::new(provider)
            .with_policy(RetryPolicy {
                max_retries,
                ..RetryPolicy::default()
            })
            .with_sleeper(move |d| log.lock().unwrap().push(d));
        (gw, sleeps)
    }

    #[test]
    fn scripted_echo() {
        let p = Arc::new(ScriptedProvider::new());
        p.push_response("R");
        let (gw, _) = gateway(p, 3);
        let res = gw.complete(&request(PurposeTag::QA)).unwrap();
        assert_eq!(res.text, "R");
        assert_eq!(res.attempt_count, 1);
        assert_eq!(res.provider_id, "scripted");
    }

    #[test]
    fn fail_twice_then_succeed() {
        let p = Arc::new(ScriptedProvider::new());
        p.push_failure(ProviderFailure::Timeout);
        p.push_failure(ProviderFailure::Transient("503".into()));
        p.push_response("ok");
        let (gw, sleeps) = gateway(p, 3);
        let res = gw.complete(&request(PurposeTag::QA)).unwrap();
        assert_eq!(res.attempt_count, 3);
        assert_eq!(
            *sleeps.lock().unwrap(),
            [Duration::from_millis(500), Duration::from_millis(1000)]
        );
    }

    #[test]
    fn always_failing_exhausts_after_max_plus_one() {
        let p = Arc::new(ScriptedProvider::new());
        p.always_fail(ProviderFailure::Transient("500".into()));
        let (gw, _) = gateway(Arc::clone(&p), 2);
        let err = gw.complete(&request(PurposeTag::QA)).unwrap_err();
        assert_eq!(
            err,
            LlmError::RetriesExhausted {
                attempts: 3,
                last: ProviderFailure::Transient("500".into())
            }
        );
        assert_eq!(p.attempts(), 3);
        assert_eq!(gw.call_count(PurposeTag::QA), 0);
    }

    #[test]
    fn rejection_is_not_retried() {
        let p = Arc::new(ScriptedProvider::new());
        p.push_failure(ProviderFailure::Rejected("401".into()));
        p.push_response("never");
        let (gw, sleeps) = gateway(Arc::clone(&p), 3);
        assert_eq!(
            gw.complete(&request(PurposeTag::QA)),
            Err(LlmError::ProviderRejected("401".into()))
        );
        assert_eq!(p.attempts(), 1);
        assert!(sleeps.lock().unwrap().is_empty());
    }

    #[test]
    fn time_budget_yields_provider_timeout() {
        let p = Arc::new(ScriptedProvider::new());
        p.always_fail(ProviderFailure::Timeout);
        let gw = Gateway::new(p)
            .with_policy(RetryPolicy {
                max_retries: 5,
                base_backoff: Duration::from_millis(500),
                time_budget: Some(Duration::from_millis(1200)),
            })
            .with_sleeper(|_| {});
        // 0.5 s fits, 0.5 + 1.0 s does not.
        assert_eq!(
            gw.complete(&request(PurposeTag::QA)),
            Err(LlmError::ProviderTimeout { attempts: 2 })
        );
    }

    #[test]
    fn accounting_per_tag() {
        let p = Arc::new(ScriptedProvider::new().with_fallback("x"));
        let (gw, _) = gateway(p, 3);
        for tag in PurposeTag::ALL {
            assert_eq!(gw.call_count(tag), 0);
        }
        gw.complete(&request(PurposeTag::QA)).unwrap();
        assert_eq!(gw.call_count(PurposeTag::QA), 1);
        assert_eq!(gw.call_count(PurposeTag::MetricEval), 0);
        gw.reset_counts();
        assert_eq!(gw.call_count(PurposeTag::QA), 0);
    }

    #[test]
    fn backoff_doubles() {
        let policy = RetryPolicy::default();
        assert_eq!(policy.backoff(0), Duration::from_millis(500));
        assert_eq!(policy.backoff(2), Duration::from_secs(2));
        assert!(policy.backoff(64) >= Duration::from_secs(1));
    }

    #[test]
    fn invalid_request_never_reaches_provider() {
        let p = Arc::new(ScriptedProvider::new().with_fallback("x"));
        let (gw, _) = gateway(Arc::clone(&p), 3);
        let mut req = request(PurposeTag::QA);
        req.max_tokens = 0;
        assert!(matches!(gw.complete(&req), Err(LlmError::InvalidRequest(_))));
        assert_eq!(p.attempts(), 0);
    }
}
