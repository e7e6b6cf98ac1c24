//! Append-only interaction log.

mod codec;
mod event;
mod store;

use std::ops::Range;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::Serialize;
use thiserror::Error;

pub use event::{new_event_id, to_millis, EventKind, InteractionEvent, SurveyCategory, SurveyResponse};
pub use store::{EventStore, StoreOptions, SyncPolicy};

use crate::session::Phase;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log storage is full")]
    StorageFull,
    #[error("duplicate event id `{0}`")]
    DuplicateEventId(String),
    #[error("invalid event: {0}")]
    Invalid(String),
    #[error("corrupt log record at line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("log I/O error: {0}")]
    Io(#[source] std::io::Error),
}

impl From<std::io::Error> for LogError {
    fn from(err: std::io::Error) -> Self {
        if err.kind() == std::io::ErrorKind::StorageFull {
            LogError::StorageFull
        } else {
            LogError::Io(err)
        }
    }
}

/// Conjunctive event filter; `None` fields match everything.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventFilter {
    pub student_id: Option<String>,
    pub problem_index: Option<String>,
    pub kind: Option<EventKind>,
    pub phase: Option<Phase>,
    /// Half-open `[start, end)`.
    pub time_range: Option<Range<DateTime<Utc>>>,
}

impl EventFilter {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn student(mut self, id: impl Into<String>) -> Self {
        self.student_id = Some(id.into());
        self
    }

    pub fn problem(mut self, index: impl Into<String>) -> Self {
        self.problem_index = Some(index.into());
        self
    }

    pub fn kind(mut self, kind: EventKind) -> Self {
        self.kind = Some(kind);
        self
    }

    pub fn phase(mut self, phase: Phase) -> Self {
        self.phase = Some(phase);
        self
    }

    pub fn between(mut self, range: Range<DateTime<Utc>>) -> Self {
        self.time_range = Some(range);
        self
    }

    pub fn matches(&self, e: &InteractionEvent) -> bool {
        self.student_id.as_ref().is_none_or(|s| *s == e.student_id)
            && self.problem_index.as_ref().is_none_or(|p| *p == e.problem_index)
            && self.kind.is_none_or(|k| k == e.kind)
            && self.phase.is_none_or(|p| p == e.phase)
            && self.time_range.as_ref().is_none_or(|r| r.contains(&e.occurred_at))
    }
}

/// Immutable view of the log at one point in time, in append order.
#[derive(Debug, Clone, Default)]
pub struct LogSnapshot {
    events: Arc<Vec<InteractionEvent>>,
}

impl LogSnapshot {
    pub fn from_events(events: Vec<InteractionEvent>) -> Self {
        Self {
            events: Arc::new(events),
        }
    }

    pub(crate) fn from_arc(events: Arc<Vec<InteractionEvent>>) -> Self {
        Self { events }
    }

    pub fn events(&self) -> &[InteractionEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Id of the last appended event, the snapshot boundary.
    pub fn last_event_id(&self) -> Option<&str> {
        self.events.last().map(|e| e.event_id.as_str())
    }

    /// Matching events sorted by `occurred_at`, then `event_id`.
    pub fn query(&self, filter: &EventFilter) -> Vec<InteractionEvent> {
        let mut out: Vec<InteractionEvent> = self
            .events
            .iter()
            .filter(|e| filter.matches(e))
            .cloned()
            .collect();
        out.sort_by(|a, b| {
            a.occurred_at
                .cmp(&b.occurred_at)
                .then_with(|| a.event_id.cmp(&b.event_id))
        });
        out
    }

    /// Full log as a JSON document for offline analysis.
    pub fn export_json(&self) -> String {
        #[derive(Serialize)]
        struct Export<'a> {
            format: &'static str,
            count: usize,
            last_event_id: Option<&'a str>,
            events: &'a [InteractionEvent],
        }
        serde_json::to_string_pretty(&Export {
            format: "tutor-interaction-log/v1",
            count: self.len(),
            last_event_id: self.last_event_id(),
            events: self.events(),
        })
        .expect("events serialize")
    }
}
