use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::to_csv;
use crate::log::{EventKind, InteractionEvent, LogSnapshot};
use crate::session::Phase;

/// Distinct-student counts for one problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemUsage {
    pub problem_index: String,
    pub pre_submission_askers: usize,
    pub feedback_requesters: usize,
    pub post_submission_askers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UsageSeries {
    PreSubmissionQuestions,
    FeedbackRequests,
    PostSubmissionQuestions,
}

impl UsageSeries {
    /// The series an event counts towards, if any.
    pub fn of(event: &InteractionEvent) -> Option<Self> {
        match (event.kind, event.phase) {
            (EventKind::QuestionAsked, Phase::PreSubmission) => Some(Self::PreSubmissionQuestions),
            (EventKind::QuestionAsked, Phase::PostSubmission) => Some(Self::PostSubmissionQuestions),
            (EventKind::FeedbackRequested, _) => Some(Self::FeedbackRequests),
            _ => None,
        }
    }
}

impl ProblemUsage {
    pub fn count(&self, series: UsageSeries) -> usize {
        match series {
            UsageSeries::PreSubmissionQuestions => self.pre_submission_askers,
            UsageSeries::FeedbackRequests => self.feedback_requesters,
            UsageSeries::PostSubmissionQuestions => self.post_submission_askers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageReport {
    /// One row per problem, in the order of the requested scope.
    pub problems: Vec<ProblemUsage>,
    pub snapshot_last_event_id: Option<String>,
}

impl UsageReport {
    /// Problems ordered by descending count in `series`; ties keep scope order.
    pub fn ranked(&self, series: UsageSeries) -> Vec<&ProblemUsage> {
        let mut rows: Vec<&ProblemUsage> = self.problems.iter().collect();
        rows.sort_by_key(|r| std::cmp::Reverse(r.count(series)));
        rows
    }

    pub fn to_csv(&self) -> String {
        to_csv(&self.problems)
    }
}

/// Per-problem counts of distinct students who asked before submitting,
/// requested feedback, and asked after submitting. A student counts once per
/// problem and series no matter how many events they produced.
pub fn problem_usage(snapshot: &LogSnapshot, homework_scope: &[String]) -> UsageReport {
    let mut students: HashMap<(&str, UsageSeries), HashSet<&str>> = HashMap::new();
    for event in snapshot.events() {
        if let Some(series) = UsageSeries::of(event) {
            students
                .entry((event.problem_index.as_str(), series))
                .or_default()
                .insert(event.student_id.as_str());
        }
    }
    let count = |p: &str, s| students.get(&(p, s)).map_or(0, HashSet::len);
    let problems = homework_scope
        .iter()
        .map(|p| ProblemUsage {
            problem_index: p.clone(),
            pre_submission_askers: count(p, UsageSeries::PreSubmissionQuestions),
            feedback_requesters: count(p, UsageSeries::FeedbackRequests),
            post_submission_askers: count(p, UsageSeries::PostSubmissionQuestions),
        })
        .collect();
    UsageReport {
        problems,
        snapshot_last_event_id: snapshot.last_event_id().map(str::to_string),
    }
}
