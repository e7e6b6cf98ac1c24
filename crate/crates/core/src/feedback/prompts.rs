use std::fmt::Write as _;

use super::{Metric, Submission};
use crate::context::ProblemRecord;
use crate::llm::{CompletionRequest, PromptMessage, PurposeTag};
use crate::session::{neutralize_markers, SUBMISSION_CLOSE, SUBMISSION_OPEN};

const EVALUATOR_ROLE: &str = "You are grading one aspect of a student's homework solution for an \
undergraduate circuit analysis course. You are given the problem, the instructor's reference \
solution and method notes, and the student's solution as text (equations may be LaTeX or plain \
text). Evaluate only the aspect named below; other aspects are handled separately.";

pub const REPLY_FORMAT_DIRECTIVE: &str = "Reply in exactly this format. First line: `VERDICT: PASS` \
or `VERDICT: ISSUE`. Following lines: your explanation addressed to the student. Use ISSUE if \
anything under this aspect is wrong, and then identify and explain each problem.";

const SUMMARY_ROLE: &str = "You are writing the feedback a student sees first after submitting a \
circuit analysis homework solution. Four separate evaluations of the solution follow, one per \
aspect. Summarize them in a short paragraph: state what is correct, name each problem found and \
where it occurs, and suggest what to revisit. Do not add new judgments or change any verdict, \
and do not give away the reference solution.";

impl Metric {
    /// The rubric instruction for this metric's evaluation round.
    pub fn rubric_directive(&self) -> &'static str {
        match self {
            Metric::FinalAnswerArithmetic => {
                "Aspect: final answer and arithmetic accuracy. Decide whether the student's final \
                 answer to each part is correct, and check for arithmetic errors throughout the \
                 solution, not only in the last line. If you detect an error, identify where it \
                 occurs and explain it."
            }
            Metric::Completeness => {
                "Aspect: completeness. Determine whether the student has fully answered all \
                 sub-questions in the problem. Name any sub-question that is missing or unfinished."
            }
            Metric::Method => {
                "Aspect: method. Assess whether the student applied a correct problem-solving \
                 method, regardless of arithmetic or typographical errors. Judge the approach, \
                 not the numbers."
            }
            Metric::Units => {
                "Aspect: units. Verify unit correctness for every quantity the student reports: \
                 flag missing units, wrong units and unit-conversion mistakes."
            }
        }
    }
}

fn push_block(out: &mut String, title: &str, body: &str) {
    let body = body.trim();
    let body = if body.is_empty() { "(none provided)" } else { body };
    let _ = write!(out, "\n\n## {title}\n{}", neutralize_markers(body));
}

/// One metric round. The prompt never includes other rounds' outputs.
pub fn build_metric_prompt(metric: Metric, problem: &ProblemRecord, submission: &Submission) -> CompletionRequest {
    let mut system = format!("{EVALUATOR_ROLE}\n\n{}\n\n{REPLY_FORMAT_DIRECTIVE}", metric.rubric_directive());
    let _ = write!(system, "\n\n## Problem {}", problem.problem_index);
    push_block(&mut system, "Problem statement", &problem.statement);
    push_block(&mut system, "Reference solution", &problem.reference_solution);
    push_block(&mut system, "Instructor method notes", &problem.method_notes);

    let user = format!(
        "Evaluate this solution for the aspect above.\n{SUBMISSION_OPEN}\n{}\n{SUBMISSION_CLOSE}",
        neutralize_markers(&submission.text)
    );
    CompletionRequest::new(PurposeTag::MetricEval, vec![PromptMessage::system(system), PromptMessage::user(user)])
        .expect("metric prompt is well-formed")
}

/// The summary round over the four raw metric outputs, in canonical order.
pub fn build_summary_prompt(problem: &ProblemRecord, raw_outputs: &[(Metric, String)]) -> CompletionRequest {
    let system = format!("{SUMMARY_ROLE}\n\nProblem {}.", problem.problem_index);
    let mut user = String::from("Evaluations:");
    for (metric, raw) in raw_outputs {
        push_block(&mut user, metric.heading(), raw);
    }
    CompletionRequest::new(PurposeTag::Summary, vec![PromptMessage::system(system), PromptMessage::user(user)])
        .expect("summary prompt is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::EquationFormat;
    use chrono::{TimeZone, Utc};

    fn problem() -> ProblemRecord {
        ProblemRecord::new("2.5-1", "Find i and the power absorbed by R2.")
            .with_reference_solution("i = 2 A, p = 24 W")
            .with_method_notes("Current division.")
    }

    #[test]
    fn metric_prompt_carries_all_grounding() {
        let sub = Submission::new("$i = \\frac{12}{6} = 2$ A", EquationFormat::LaTeX, Utc.timestamp_millis_opt(0).unwrap()).unwrap();
        for metric in Metric::CANONICAL {
            let req = build_metric_prompt(metric, &problem(), &sub);
            let all = req.serialized();
            assert_eq!(req.purpose_tag, PurposeTag::MetricEval);
            assert_eq!(req.temperature, 0.2);
            assert!(all.contains("Find i and the power absorbed by R2."));
            assert!(all.contains("i = 2 A, p = 24 W"));
            assert!(all.contains("Current division."));
            assert!(all.contains("$i = \\frac{12}{6} = 2$ A"));
            assert!(all.contains(metric.rubric_directive()));
            for other in Metric::CANONICAL.iter().filter(|m| **m != metric) {
                assert!(!all.contains(other.rubric_directive()));
            }
        }
    }

    #[test]
    fn rubric_wording() {
        assert!(Metric::FinalAnswerArithmetic
            .rubric_directive()
            .contains("arithmetic errors throughout the solution"));
        assert!(Metric::Completeness.rubric_directive().contains("fully answered all sub-questions"));
        assert!(Metric::Method
            .rubric_directive()
            .contains("regardless of arithmetic or typographical errors"));
        assert!(Metric::Units.rubric_directive().contains("unit correctness"));
    }

    #[test]
    fn summary_prompt_orders_outputs() {
        let raws: Vec<_> = Metric::CANONICAL
            .iter()
            .map(|m| (*m, format!("VERDICT: PASS\nraw-{m:?}")))
            .collect();
        let req = build_summary_prompt(&problem(), &raws);
        let user = &req.messages[1].content;
        let pos: Vec<_> = Metric::CANONICAL
            .iter()
            .map(|m| user.find(&format!("raw-{m:?}")).unwrap())
            .collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(req.purpose_tag, PurposeTag::Summary);
    }
}
