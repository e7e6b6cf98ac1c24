//! Multi-round homework feedback: four independent metric evaluations, then
//! one summarization round over their raw outputs.

mod prompts;

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use prompts::{build_metric_prompt, build_summary_prompt, REPLY_FORMAT_DIRECTIVE};

use crate::context::Corpus;
use crate::llm::{Gateway, LlmError};
use crate::session::{Session, SessionError};

pub const MAX_SUBMISSION_CHARS: usize = 40_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationFormat {
    #[serde(rename = "latex")]
    LaTeX,
    #[default]
    Plain,
    Mixed,
}

/// A student's solution as text; equations are passed through untouched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub text: String,
    pub equation_format: EquationFormat,
    pub submitted_at: DateTime<Utc>,
}

impl Submission {
    pub fn new(
        text: impl Into<String>,
        equation_format: EquationFormat,
        submitted_at: DateTime<Utc>,
    ) -> Result<Self, SessionError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(SessionError::EmptySubmission);
        }
        let len = text.chars().count();
        if len > MAX_SUBMISSION_CHARS {
            return Err(SessionError::SubmissionTooLong {
                len,
                limit: MAX_SUBMISSION_CHARS,
            });
        }
        Ok(Self {
            text,
            equation_format,
            submitted_at,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    FinalAnswerArithmetic,
    Completeness,
    Method,
    Units,
}

impl Metric {
    /// Canonical evaluation, storage and display order.
    pub const CANONICAL: [Metric; 4] = [
        Metric::FinalAnswerArithmetic,
        Metric::Completeness,
        Metric::Method,
        Metric::Units,
    ];

    pub fn heading(&self) -> &'static str {
        match self {
            Metric::FinalAnswerArithmetic => "Final Answer & Arithmetic Accuracy",
            Metric::Completeness => "Completeness",
            Metric::Method => "Method",
            Metric::Units => "Units",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.heading())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Issue,
    Indeterminate,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "looks good",
            Verdict::Issue => "needs attention",
            Verdict::Indeterminate => "could not be assessed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: Metric,
    pub verdict: Verdict,
    pub explanation: String,
}

/// Parses a metric round's reply. The expected form is a first line
/// `VERDICT: PASS` or `VERDICT: ISSUE` (case-insensitive, surrounding
/// whitespace ignored) followed by the explanation. Anything else, including
/// an ISSUE with no explanation, becomes `Indeterminate` with the raw text
/// kept as the explanation.
pub fn parse_metric_output(raw: &str, metric: Metric) -> MetricReport {
    let indeterminate = || MetricReport {
        metric,
        verdict: Verdict::Indeterminate,
        explanation: raw.to_string(),
    };
    let trimmed = raw.trim_start();
    let (first, rest) = trimmed.split_once('\n').unwrap_or((trimmed, ""));
    let Some((key, value)) = first.trim().split_once(':') else {
        return indeterminate();
    };
    if !key.trim().eq_ignore_ascii_case("verdict") {
        return indeterminate();
    }
    let verdict = match value.trim().to_ascii_uppercase().as_str() {
        "PASS" => Verdict::Pass,
        "ISSUE" => Verdict::Issue,
        _ => return indeterminate(),
    };
    let explanation = rest.trim().to_string();
    if verdict == Verdict::Issue && explanation.is_empty() {
        return indeterminate();
    }
    MetricReport {
        metric,
        verdict,
        explanation,
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeedbackError {
    #[error("no submission has been recorded for this session")]
    NoSubmission,
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("problem `{0}` has no reference solution")]
    MissingReferenceSolution(String),
    #[error("feedback report must have exactly one report per metric in canonical order")]
    Malformed,
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackReport {
    reports: [MetricReport; 4],
    summary: String,
    created_at: DateTime<Utc>,
}

impl FeedbackReport {
    pub fn new(reports: [MetricReport; 4], summary: impl Into<String>, created_at: DateTime<Utc>) -> Result<Self, FeedbackError> {
        let summary = summary.into();
        let ordered = reports
            .iter()
            .zip(Metric::CANONICAL)
            .all(|(r, m)| r.metric == m);
        let issues_explained = reports
            .iter()
            .all(|r| r.verdict != Verdict::Issue || !r.explanation.trim().is_empty());
        if !ordered || !issues_explained || summary.trim().is_empty() {
            return Err(FeedbackError::Malformed);
        }
        Ok(Self {
            reports,
            summary,
            created_at,
        })
    }

    pub fn reports(&self) -> &[MetricReport; 4] {
        &self.reports
    }

    pub fn report(&self, metric: Metric) -> &MetricReport {
        &self.reports[metric as usize]
    }

    pub fn summary(&self) -> &str {
        &self.summary
    }

    pub fn created_at(&self) -> DateTime<Utc> {
        self.created_at
    }
}

/// Summary built locally from the verdicts, used when the summary round
/// returns nothing usable.
pub fn fallback_summary(reports: &[MetricReport]) -> String {
    let parts: Vec<String> = reports
        .iter()
        .map(|r| format!("{}: {}", r.metric.heading(), r.verdict.label()))
        .collect();
    format!("Feedback overview. {}.", parts.join("; "))
}

/// Runs the four metric rounds and the summary round: exactly five
/// completions on success. Rounds are independent; only the summary sees all
/// four raw outputs, and it never changes a verdict.
pub fn evaluate_submission(
    session: &Session,
    corpus: &Corpus,
    gateway: &Gateway,
    now: DateTime<Utc>,
) -> Result<FeedbackReport, FeedbackError> {
    let submission = session.latest_submission().ok_or(FeedbackError::NoSubmission)?;
    let problem = corpus
        .lookup_exact(session.problem_index())
        .ok_or_else(|| FeedbackError::UnknownProblem(session.problem_index().to_string()))?;
    if !problem.has_reference_solution() {
        return Err(FeedbackError::MissingReferenceSolution(problem.problem_index.clone()));
    }

    let mut raw_outputs = Vec::with_capacity(4);
    let mut reports = Vec::with_capacity(4);
    for metric in Metric::CANONICAL {
        let request = build_metric_prompt(metric, problem, submission);
        let raw = gateway.complete(&request)?.text;
        reports.push(parse_metric_output(&raw, metric));
        raw_outputs.push((metric, raw));
    }

    let summary_request = build_summary_prompt(problem, &raw_outputs);
    let summary = gateway.complete(&summary_request)?.text.trim().to_string();
    let summary = if summary.is_empty() {
        fallback_summary(&reports)
    } else {
        summary
    };

    let reports: [MetricReport; 4] = reports.try_into().expect("four canonical metrics");
    FeedbackReport::new(reports, summary, now)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetailLevel {
    #[default]
    SummaryOnly,
    Full,
}

/// Markdown heading used for a metric section in full renderings.
pub fn section_heading(metric: Metric) -> String {
    format!("### {}", metric.heading())
}

/// Summary alone, or summary followed by the four metric sections in
/// canonical order.
pub fn render_feedback(report: &FeedbackReport, detail: DetailLevel) -> String {
    let mut out = report.summary.trim().to_string();
    if detail == DetailLevel::Full {
        for r in &report.reports {
            out.push_str("\n\n");
            out.push_str(&section_heading(r.metric));
            out.push_str(&format!("\nVerdict: {}", r.verdict.label()));
            if !r.explanation.trim().is_empty() {
                out.push('\n');
                out.push_str(r.explanation.trim());
            }
        }
    }
    out
}
