use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::llm::{CompletionRequest, Gateway, PromptMessage, PurposeTag};
use crate::log::{EventFilter, EventKind, LogSnapshot};

const NARRATIVE_ROLE: &str = "You help a course instructor follow one student's progress in a \
circuit analysis course. Below is the student's interaction log with the tutor, oldest first. \
In two or three sentences, describe what the student worked on, where they struggled, and what \
they may need help with next.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentSummary {
    pub student_id: String,
    /// Sorted, distinct.
    pub problems_touched: Vec<String>,
    pub questions_asked: usize,
    pub feedback_requests: usize,
    pub narrative: Option<String>,
    pub snapshot_last_event_id: Option<String>,
}

impl StudentSummary {
    pub fn is_empty(&self) -> bool {
        self.problems_touched.is_empty()
    }
}

/// Per-student counts from the log, plus a narrative from one log-summary
/// completion when a gateway is given and the student has any events.
pub fn student_summary(
    snapshot: &LogSnapshot,
    student_id: &str,
    gateway: Option<&Gateway>,
) -> Result<StudentSummary, AnalyticsError> {
    let events = snapshot.query(&EventFilter::all().student(student_id));
    let problems_touched: BTreeSet<&str> = events.iter().map(|e| e.problem_index.as_str()).collect();
    let count = |kind| events.iter().filter(|e| e.kind == kind).count();

    let narrative = match gateway {
        Some(gateway) if !events.is_empty() => {
            let mut transcript = String::new();
            for e in &events {
                let _ = writeln!(
                    transcript,
                    "[{}] problem {} ({}) {}: {}",
                    e.occurred_at.format("%Y-%m-%d %H:%M"),
                    e.problem_index,
                    e.phase.as_str(),
                    e.kind.as_str(),
                    e.payload.replace('\n', " ")
                );
            }
            let request = CompletionRequest::new(
                PurposeTag::LogSummary,
                vec![PromptMessage::system(NARRATIVE_ROLE), PromptMessage::user(transcript)],
            )
            .expect("narrative prompt is well-formed");
            Some(gateway.complete(&request)?.text.trim().to_string())
        }
        _ => None,
    };

    Ok(StudentSummary {
        student_id: student_id.to_string(),
        problems_touched: problems_touched.into_iter().map(str::to_string).collect(),
        questions_asked: count(EventKind::QuestionAsked),
        feedback_requests: count(EventKind::FeedbackRequested),
        narrative,
        snapshot_last_event_id: snapshot.last_event_id().map(str::to_string),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ScriptedProvider;
    use crate::log::InteractionEvent;
    use crate::session::Phase;
    use chrono::{TimeZone, Utc};
    use std::sync::Arc;

    fn ev(student: &str, problem: &str, kind: EventKind) -> InteractionEvent {
        InteractionEvent::new(Utc.timestamp_millis_opt(0).unwrap(), student, problem, Phase::PostSubmission, kind, "x")
    }

    fn fixture() -> LogSnapshot {
        LogSnapshot::from_events(vec![
            ev("A", "2.5-1", EventKind::QuestionAsked),
            ev("A", "2.5-1", EventKind::QuestionAsked),
            ev("A", "3.4-4", EventKind::QuestionAsked),
            ev("A", "2.5-1", EventKind::FeedbackRequested),
            ev("A", "3.4-4", EventKind::FeedbackRequested),
            ev("B", "2.6-2", EventKind::QuestionAsked),
        ])
    }

    #[test]
    fn counts_from_log() {
        let s = student_summary(&fixture(), "A", None).unwrap();
        assert_eq!((s.questions_asked, s.feedback_requests), (3, 2));
        assert_eq!(s.problems_touched, vec!["2.5-1", "3.4-4"]);
        assert_eq!(s.narrative, None);
    }

    #[test]
    fn unknown_student_is_empty() {
        let s = student_summary(&fixture(), "Z", None).unwrap();
        assert!(s.is_empty());
        assert_eq!((s.questions_asked, s.feedback_requests), (0, 0));
    }

    #[test]
    fn narrative_attached_verbatim() {
        let provider = Arc::new(ScriptedProvider::new());
        provider.push_response("Struggles with passive sign convention");
        let gw = Gateway::new(provider.clone());
        let s = student_summary(&fixture(), "A", Some(&gw)).unwrap();
        assert_eq!(s.narrative.as_deref(), Some("Struggles with passive sign convention"));
        assert_eq!(gw.call_count(PurposeTag::LogSummary), 1);
        let req = provider.last_request().unwrap();
        assert_eq!(req.temperature, 0.2);
        assert!(!req.serialized().contains("2.6-2"));
    }

    #[test]
    fn no_call_for_unknown_student() {
        let provider = Arc::new(ScriptedProvider::new());
        let gw = Gateway::new(provider);
        let s = student_summary(&fixture(), "Z", Some(&gw)).unwrap();
        assert_eq!(s.narrative, None);
        assert_eq!(gw.call_count(PurposeTag::LogSummary), 0);
    }
}
