//! Instructor-facing reports computed from log snapshots.

mod faq;
mod student;
mod survey;
mod usage;

pub use faq::{extract_faqs, FaqCluster, FaqReport, FaqSettings, DEFAULT_FAQ_THRESHOLD, DEFAULT_MIN_CLUSTER_SIZE};
pub use student::{student_summary, StudentSummary};
pub use survey::{percentage, survey_breakdown, CategoryShare, SurveyBreakdown};
pub use usage::{problem_usage, ProblemUsage, UsageReport, UsageSeries};

use serde::Serialize;
use thiserror::Error;

use crate::context::EmbedError;
use crate::llm::LlmError;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("embedding failed: {0}")]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// Serializes rows with a header line.
pub(crate) fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("rows serialize to csv");
    }
    String::from_utf8(writer.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
}
