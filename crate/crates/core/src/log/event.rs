use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::LogError;
use crate::session::Phase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    QuestionAsked,
    SubmissionRecorded,
    FeedbackRequested,
    SurveyAnswered,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::QuestionAsked => "question_asked",
            EventKind::SubmissionRecorded => "submission_recorded",
            EventKind::FeedbackRequested => "feedback_requested",
            EventKind::SurveyAnswered => "survey_answered",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "question_asked" => Ok(EventKind::QuestionAsked),
            "submission_recorded" => Ok(EventKind::SubmissionRecorded),
            "feedback_requested" => Ok(EventKind::FeedbackRequested),
            "survey_answered" => Ok(EventKind::SurveyAnswered),
            other => Err(format!("unknown event kind `{other}`")),
        }
    }
}

/// Time-ordered unique event id.
pub fn new_event_id() -> String {
    uuid::Uuid::now_v7().to_string()
}

/// Truncates a timestamp to whole milliseconds, the log's resolution.
pub fn to_millis(t: DateTime<Utc>) -> DateTime<Utc> {
    Utc.timestamp_millis_opt(t.timestamp_millis())
        .single()
        .unwrap_or(t)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub event_id: String,
    pub occurred_at: DateTime<Utc>,
    pub student_id: String,
    pub problem_index: String,
    pub phase: Phase,
    pub kind: EventKind,
    pub payload: String,
}

impl InteractionEvent {
    /// New event with a fresh id; the timestamp is truncated to milliseconds.
    pub fn new(
        occurred_at: DateTime<Utc>,
        student_id: impl Into<String>,
        problem_index: impl Into<String>,
        phase: Phase,
        kind: EventKind,
        payload: impl Into<String>,
    ) -> Self {
        Self {
            event_id: new_event_id(),
            occurred_at: to_millis(occurred_at),
            student_id: student_id.into(),
            problem_index: problem_index.into(),
            phase,
            kind,
            payload: payload.into(),
        }
    }

    pub fn validate(&self) -> Result<(), LogError> {
        let invalid = |m: &str| Err(LogError::Invalid(m.to_string()));
        if self.event_id.trim().is_empty() {
            return invalid("event_id is empty");
        }
        if self.student_id.trim().is_empty() {
            return invalid("student_id is empty");
        }
        if self.kind == EventKind::QuestionAsked && self.payload.trim().is_empty() {
            return invalid("question events need a non-empty payload");
        }
        if self.occurred_at != to_millis(self.occurred_at) {
            return invalid("occurred_at must have millisecond resolution");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurveyCategory {
    Helpful,
    AlreadyKnew,
    ErrorsInFeedback,
    Other,
}

impl SurveyCategory {
    pub const ALL: [SurveyCategory; 4] = [
        SurveyCategory::Helpful,
        SurveyCategory::AlreadyKnew,
        SurveyCategory::ErrorsInFeedback,
        SurveyCategory::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SurveyCategory::Helpful => "helpful",
            SurveyCategory::AlreadyKnew => "already_knew",
            SurveyCategory::ErrorsInFeedback => "errors_in_feedback",
            SurveyCategory::Other => "other",
        }
    }
}

impl fmt::Display for SurveyCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SurveyCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SurveyCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown survey category `{s}`"))
    }
}

/// Answer to the post-feedback usefulness question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub category: SurveyCategory,
    pub free_text: Option<String>,
    pub student_id: String,
    pub problem_index: String,
    pub occurred_at: DateTime<Utc>,
}

impl SurveyResponse {
    pub fn validate(&self) -> Result<(), LogError> {
        let has_text = self.free_text.as_deref().is_some_and(|t| !t.trim().is_empty());
        if self.category == SurveyCategory::Other && !has_text {
            return Err(LogError::Invalid(
                "survey category `other` requires free text".into(),
            ));
        }
        if self.student_id.trim().is_empty() {
            return Err(LogError::Invalid("student_id is empty".into()));
        }
        Ok(())
    }

    /// Payload form: the category, then optionally a newline and the free text.
    pub fn payload(&self) -> String {
        match self.free_text.as_deref().filter(|t| !t.trim().is_empty()) {
            Some(text) => format!("{}\n{}", self.category, text),
            None => self.category.to_string(),
        }
    }

    pub fn into_event(self) -> InteractionEvent {
        let payload = self.payload();
        InteractionEvent::new(
            self.occurred_at,
            self.student_id,
            self.problem_index,
            Phase::PostSubmission,
            EventKind::SurveyAnswered,
            payload,
        )
    }

    /// Recovers a response from a `SurveyAnswered` event.
    pub fn from_event(event: &InteractionEvent) -> Option<Self> {
        if event.kind != EventKind::SurveyAnswered {
            return None;
        }
        let (head, text) = match event.payload.split_once('\n') {
            Some((h, t)) => (h, Some(t.to_string())),
            None => (event.payload.as_str(), None),
        };
        Some(Self {
            category: head.parse().ok()?,
            free_text: text,
            student_id: event.student_id.clone(),
            problem_index: event.problem_index.clone(),
            occurred_at: event.occurred_at,
        })
    }
}
