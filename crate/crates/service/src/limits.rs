//! Per-student sliding-window limit on LLM-backed requests.

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use chrono::{DateTime, Duration, Utc};

#[derive(Debug)]
pub struct RateLimiter {
    limit: usize,
    window: Duration,
    hits: Mutex<HashMap<String, VecDeque<DateTime<Utc>>>>,
}

impl RateLimiter {
    pub fn per_hour(limit: u32) -> Self {
        Self {
            limit: limit as usize,
            window: Duration::hours(1),
            hits: Mutex::default(),
        }
    }

    /// Records a request if the student is under the limit; returns whether
    /// it was admitted.
    pub fn try_acquire(&self, student_id: &str, now: DateTime<Utc>) -> bool {
        let mut hits = self.hits.lock().expect("rate limiter poisoned");
        let queue = hits.entry(student_id.to_string()).or_default();
        while queue.front().is_some_and(|t| now - *t >= self.window) {
            queue.pop_front();
        }
        if queue.len() >= self.limit {
            return false;
        }
        queue.push_back(now);
        true
    }
}
