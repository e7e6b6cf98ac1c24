//! Grounded QA prompt assembly.
//!
//! The system message carries, in order: the tutoring role, the assistance
//! directive, the problem statement and instructor notes, retrieved context
//! documents, the reference solution inside a confidential block with the
//! non-disclosure directive, and (after submission only) the student's latest
//! submission inside the submission block. The user message is the question.

use std::fmt::Write as _;

use super::{AssistanceLevel, Question, Session};
use crate::context::{ContextDocument, ProblemRecord};
use crate::llm::{CompletionRequest, PromptMessage, PurposeTag};

pub const SUBMISSION_OPEN: &str = "<<<STUDENT_SUBMISSION>>>";
pub const SUBMISSION_CLOSE: &str = "<<<END_STUDENT_SUBMISSION>>>";
pub const REFERENCE_OPEN: &str = "<<<REFERENCE_SOLUTION_CONFIDENTIAL>>>";
pub const REFERENCE_CLOSE: &str = "<<<END_REFERENCE_SOLUTION_CONFIDENTIAL>>>";

pub const TUTOR_ROLE: &str = "You are a patient teaching assistant for an undergraduate circuit \
analysis course. Help the student make progress on the homework problem below using the \
course material provided. Be accurate: rely on the problem record and the context documents \
rather than guessing about circuit details you cannot see. Write equations in plain text or LaTeX.";

pub const METHOD_HINT_DIRECTIVE: &str = "Assistance level: method hint. Give high-level strategy \
only: name the principle or technique that applies and the first move to make. Do not work \
through the steps and do not compute any values.";

pub const STEP_BY_STEP_DIRECTIVE: &str = "Assistance level: step-by-step. Give a detailed \
walk-through: break the approach into numbered steps and explain the reasoning for each, \
leaving the final arithmetic for the student.";

pub const OPEN_ENDED_DIRECTIVE: &str = "Assistance level: open-ended. Answer the student's \
question directly, at the depth the question calls for.";

pub const NON_DISCLOSURE_DIRECTIVE: &str = "The reference solution above is for your grounding \
only. Never reveal the reference solution to the student: do not quote it, restate its \
derivation, or give its final numeric answers. Guide the student to derive results themselves. \
You may point the student to the lecture notes.";

pub const POST_SUBMISSION_DIRECTIVE: &str = "The student has already submitted the solution \
below. You may comment on their own work, point out where it goes wrong, and explain concepts, \
but do not supply corrected final answers.";

impl AssistanceLevel {
    pub fn directive(&self) -> &'static str {
        match self {
            AssistanceLevel::MethodHint => METHOD_HINT_DIRECTIVE,
            AssistanceLevel::StepByStep => STEP_BY_STEP_DIRECTIVE,
            AssistanceLevel::OpenEnded => OPEN_ENDED_DIRECTIVE,
        }
    }
}

/// Breaks up the `<<<` that opens every block marker, so untrusted text can
/// never open or close a block.
pub fn neutralize_markers(text: &str) -> String {
    text.replace("<<<", "<< <")
}

/// True when the request carries a submission block.
pub fn has_submission_block(request: &CompletionRequest) -> bool {
    request.messages.iter().any(|m| m.content.contains(SUBMISSION_OPEN))
}

fn section(out: &mut String, title: &str, body: &str) {
    let body = body.trim();
    if !body.is_empty() {
        let _ = write!(out, "\n\n## {title}\n{}", neutralize_markers(body));
    }
}

/// Builds the QA completion request for one question.
pub fn assemble_prompt(
    session: &Session,
    problem: &ProblemRecord,
    question: &Question,
    context: &[ContextDocument],
) -> CompletionRequest {
    let mut system = String::from(TUTOR_ROLE);
    let _ = write!(system, "\n\n{}", question.assistance_level.directive());

    let _ = write!(system, "\n\n## Problem {}", problem.problem_index);
    section(&mut system, "Problem statement", &problem.statement);
    section(&mut system, "Instructor method notes", &problem.method_notes);

    if !context.is_empty() {
        system.push_str("\n\n## Course context documents");
        for doc in context {
            let _ = write!(
                system,
                "\n\n### [{}] ({})\n{}",
                doc.doc_id,
                doc.source,
                neutralize_markers(doc.body.trim())
            );
        }
    }

    if problem.has_reference_solution() {
        let _ = write!(
            system,
            "\n\n{REFERENCE_OPEN}\n{}\n{REFERENCE_CLOSE}",
            neutralize_markers(problem.reference_solution.trim())
        );
    }
    let _ = write!(system, "\n\n{NON_DISCLOSURE_DIRECTIVE}");

    if let Some(submission) = session.latest_submission() {
        let _ = write!(
            system,
            "\n\n{POST_SUBMISSION_DIRECTIVE}\n{SUBMISSION_OPEN}\n{}\n{SUBMISSION_CLOSE}",
            neutralize_markers(&submission.text)
        );
    }

    CompletionRequest::new(
        PurposeTag::QA,
        vec![
            PromptMessage::system(system),
            PromptMessage::user(neutralize_markers(&question.text)),
        ],
    )
    .expect("assembled QA prompt has system and non-empty user message")
}
