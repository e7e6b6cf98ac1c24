//! Tutoring session state machine for open-ended question answering.
//!
//! A session starts in [`Phase::PreSubmission`] and moves to
//! [`Phase::PostSubmission`] on the first recorded submission; it never moves
//! back. The phase is derived from the presence of a submission, so the two
//! cannot disagree.

mod leak_guard;
mod prompt;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use leak_guard::{leak_guard, GuardStatus, LeakGuard, DEFAULT_LEAK_NGRAM, REDACTION_MARKER};
pub use prompt::{
    assemble_prompt, has_submission_block, neutralize_markers, METHOD_HINT_DIRECTIVE, NON_DISCLOSURE_DIRECTIVE,
    OPEN_ENDED_DIRECTIVE, POST_SUBMISSION_DIRECTIVE, REFERENCE_CLOSE, REFERENCE_OPEN, STEP_BY_STEP_DIRECTIVE,
    SUBMISSION_CLOSE, SUBMISSION_OPEN, TUTOR_ROLE,
};

use crate::context::{Corpus, ProblemRecord};
use crate::feedback::Submission;

pub const MAX_QUESTION_CHARS: usize = 8_000;

/// Sessions idle longer than this are closed by the service.
pub const SESSION_IDLE_TIMEOUT_HOURS: i64 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    #[serde(alias = "pre")]
    PreSubmission,
    #[serde(alias = "post")]
    PostSubmission,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::PreSubmission => "pre_submission",
            Phase::PostSubmission => "post_submission",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pre_submission" | "pre" => Ok(Phase::PreSubmission),
            "post_submission" | "post" => Ok(Phase::PostSubmission),
            other => Err(format!("unknown phase `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssistanceLevel {
    MethodHint,
    StepByStep,
    #[default]
    OpenEnded,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("question is empty")]
    EmptyQuestion,
    #[error("question has {len} characters, limit is {MAX_QUESTION_CHARS}")]
    QuestionTooLong { len: usize },
    #[error("submission is empty")]
    EmptySubmission,
    #[error("submission has {len} characters, limit is {limit}")]
    SubmissionTooLong { len: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub text: String,
    pub assistance_level: AssistanceLevel,
    pub asked_at: DateTime<Utc>,
    pub phase_at_ask: Phase,
}

impl Question {
    pub fn new(
        text: impl Into<String>,
        assistance_level: AssistanceLevel,
        phase_at_ask: Phase,
        asked_at: DateTime<Utc>,
    ) -> Result<Self, SessionError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(SessionError::EmptyQuestion);
        }
        let len = text.chars().count();
        if len > MAX_QUESTION_CHARS {
            return Err(SessionError::QuestionTooLong { len });
        }
        Ok(Self {
            text,
            assistance_level,
            asked_at,
            phase_at_ask,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    pub guard_status: GuardStatus,
    pub context_doc_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub question: Question,
    pub answer: Answer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    session_id: String,
    student_id: String,
    problem_index: String,
    assistance_level: AssistanceLevel,
    transcript: Vec<Exchange>,
    latest_submission: Option<Submission>,
    started_at: DateTime<Utc>,
    last_active: DateTime<Utc>,
}

/// Opens a session on a problem that must exist in the corpus.
pub fn start_session(
    student_id: impl Into<String>,
    problem_index: &str,
    corpus: &Corpus,
    now: DateTime<Utc>,
) -> Result<Session, SessionError> {
    let record = corpus
        .lookup_exact(problem_index)
        .ok_or_else(|| SessionError::UnknownProblem(problem_index.to_string()))?;
    Ok(start_session_with_record(student_id, record, now))
}

pub fn start_session_with_record(student_id: impl Into<String>, record: &ProblemRecord, now: DateTime<Utc>) -> Session {
    Session {
        session_id: uuid::Uuid::new_v4().to_string(),
        student_id: student_id.into(),
        problem_index: record.problem_index.clone(),
        assistance_level: AssistanceLevel::default(),
        transcript: Vec::new(),
        latest_submission: None,
        started_at: now,
        last_active: now,
    }
}

impl Session {
    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn student_id(&self) -> &str {
        &self.student_id
    }

    pub fn problem_index(&self) -> &str {
        &self.problem_index
    }

    pub fn phase(&self) -> Phase {
        if self.latest_submission.is_some() {
            Phase::PostSubmission
        } else {
            Phase::PreSubmission
        }
    }

    /// Level chosen for the most recent question.
    pub fn assistance_level(&self) -> AssistanceLevel {
        self.assistance_level
    }

    pub fn transcript(&self) -> &[Exchange] {
        &self.transcript
    }

    pub fn latest_submission(&self) -> Option<&Submission> {
        self.latest_submission.as_ref()
    }

    pub fn started_at(&self) -> DateTime<Utc> {
        self.started_at
    }

    pub fn last_active(&self) -> DateTime<Utc> {
        self.last_active
    }

    pub fn is_idle_expired(&self, now: DateTime<Utc>, timeout: Duration) -> bool {
        now - self.last_active > timeout
    }

    pub fn touch(&mut self, now: DateTime<Utc>) {
        self.last_active = self.last_active.max(now);
    }

    /// Records (or replaces) the submission; the phase becomes, and stays,
    /// post-submission.
    pub fn record_submission(&mut self, submission: Submission, now: DateTime<Utc>) -> Result<(), SessionError> {
        if submission.text.trim().is_empty() {
            return Err(SessionError::EmptySubmission);
        }
        self.latest_submission = Some(submission);
        self.touch(now);
        Ok(())
    }

    /// Appends a completed exchange to the transcript.
    pub fn push_exchange(&mut self, question: Question, answer: Answer) {
        self.assistance_level = question.assistance_level;
        self.touch(question.asked_at);
        self.transcript.push(Exchange { question, answer });
    }

    /// Builds a question stamped with the current phase.
    pub fn question(
        &self,
        text: impl Into<String>,
        level: AssistanceLevel,
        now: DateTime<Utc>,
    ) -> Result<Question, SessionError> {
        Question::new(text, level, self.phase(), now)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::EquationFormat;
    use chrono::TimeZone;

    fn corpus() -> Corpus {
        let mut c = Corpus::new();
        c.insert_problem(ProblemRecord::new("2.5-1", "Find i.")).unwrap();
        c
    }

    fn t(ms: i64) -> DateTime<Utc> {
        Utc.timestamp_millis_opt(ms).unwrap()
    }

    #[test]
    fn starts_pre_submission() {
        let s = start_session("s1", "2.5-1", &corpus(), t(0)).unwrap();
        assert_eq!(s.phase(), Phase::PreSubmission);
        assert_eq!(s.problem_index(), "2.5-1");
        assert!(s.transcript().is_empty());
        assert_eq!(s.assistance_level(), AssistanceLevel::OpenEnded);
    }

    #[test]
    fn unknown_problem() {
        assert_eq!(
            start_session("s1", "9.9-9", &corpus(), t(0)).unwrap_err(),
            SessionError::UnknownProblem("9.9-9".into())
        );
    }

    #[test]
    fn distinct_ids() {
        let a = start_session("s1", "2.5-1", &corpus(), t(0)).unwrap();
        let b = start_session("s1", "2.5-1", &corpus(), t(0)).unwrap();
        assert_ne!(a.session_id(), b.session_id());
    }

    #[test]
    fn submission_transitions() {
        let mut s = start_session("s1", "2.5-1", &corpus(), t(0)).unwrap();
        s.record_submission(Submission::new("i = 2 A", EquationFormat::Plain, t(1)).unwrap(), t(1))
            .unwrap();
        assert_eq!(s.phase(), Phase::PostSubmission);
        s.record_submission(Submission::new("i = 3 A", EquationFormat::Plain, t(2)).unwrap(), t(2))
            .unwrap();
        assert_eq!(s.phase(), Phase::PostSubmission);
        assert_eq!(s.latest_submission().unwrap().text, "i = 3 A");
    }

    #[test]
    fn question_validation() {
        assert_eq!(
            Question::new("  ", AssistanceLevel::OpenEnded, Phase::PreSubmission, t(0)),
            Err(SessionError::EmptyQuestion)
        );
        let long = "x".repeat(MAX_QUESTION_CHARS + 1);
        assert!(matches!(
            Question::new(long, AssistanceLevel::OpenEnded, Phase::PreSubmission, t(0)),
            Err(SessionError::QuestionTooLong { .. })
        ));
        assert!(Question::new("é".repeat(MAX_QUESTION_CHARS), AssistanceLevel::OpenEnded, Phase::PreSubmission, t(0)).is_ok());
    }

    #[test]
    fn idle_expiry() {
        let s = start_session("s1", "2.5-1", &corpus(), t(0)).unwrap();
        let day = Duration::hours(SESSION_IDLE_TIMEOUT_HOURS);
        assert!(!s.is_idle_expired(t(0) + day, day));
        assert!(s.is_idle_expired(t(1) + day, day));
    }
}
