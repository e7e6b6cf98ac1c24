use std::path::PathBuf;
use std::sync::Arc;

use chrono::Duration;
use tutor_core::clock::ManualClock;
use tutor_core::context::{load_corpus, HashingEmbedder, SharedIndex, VectorIndex};
use tutor_core::feedback::{render_feedback, DetailLevel, EquationFormat, Metric, Verdict};
use tutor_core::llm::{Gateway, PurposeTag, ScriptedProvider};
use tutor_core::log::{EventFilter, EventKind, EventStore, SurveyCategory};
use tutor_core::session::{
    has_submission_block, AssistanceLevel, GuardStatus, Phase, METHOD_HINT_DIRECTIVE, REDACTION_MARKER,
    STEP_BY_STEP_DIRECTIVE,
};
use tutor_core::{submission_digest, Tutor, TutorError};

fn tutor() -> (Tutor, Arc<ScriptedProvider>) {
    let corpus = load_corpus(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/hw1.corpus")).unwrap();
    let embedder = Arc::new(HashingEmbedder::default());
    let index = VectorIndex::build(corpus.documents(), embedder.as_ref()).unwrap();
    let provider = Arc::new(ScriptedProvider::new());
    let gateway = Arc::new(Gateway::new(provider.clone()).with_sleeper(|_| {}));
    let tutor = Tutor::new(
        Arc::new(corpus),
        SharedIndex::new(index),
        embedder,
        gateway,
        Arc::new(EventStore::in_memory()),
        Arc::new(ManualClock::at_millis(1_738_000_000_000)),
    );
    (tutor, provider)
}

#[test]
fn clean_answer_is_recorded() {
    let (tutor, provider) = tutor();
    provider.push_response("Use KCL at the top node.");
    let mut session = tutor.start_session("s1", "2.5-1").unwrap();
    let answer = tutor
        .ask_question(&mut session, "How do I find the current through R2?", AssistanceLevel::MethodHint)
        .unwrap();
    assert_eq!(answer.guard_status, GuardStatus::Clean);
    assert_eq!(answer.text, "Use KCL at the top node.");
    assert!(answer.context_doc_ids.contains(&"p251-notes".to_string()));
    assert_eq!(session.transcript().len(), 1);

    let request = provider.last_request().unwrap();
    assert_eq!(request.purpose_tag, PurposeTag::QA);
    assert!(request.system_text().contains(METHOD_HINT_DIRECTIVE));
    assert!(!request.system_text().contains(STEP_BY_STEP_DIRECTIVE));
    assert!(request.system_text().contains("Circuit for 2.5-1"));
    assert!(!has_submission_block(&request));

    let events = tutor.log().snapshot().events().to_vec();
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].kind, EventKind::QuestionAsked);
    assert_eq!(events[0].phase, Phase::PreSubmission);
}

#[test]
fn quoting_the_reference_is_redacted() {
    let (tutor, provider) = tutor();
    // 15 consecutive tokens of the 2.5-1 reference solution
    provider.push_response(
        "Here you go: the total resistance seen by the source is 2 + 2 = 4 Ohm so the source current. Good luck!",
    );
    let mut session = tutor.start_session("s1", "2.5-1").unwrap();
    let answer = tutor
        .ask_question(&mut session, "Can you just solve it?", AssistanceLevel::StepByStep)
        .unwrap();
    assert_eq!(answer.guard_status, GuardStatus::Redacted);
    assert!(answer.text.contains(REDACTION_MARKER));
    assert!(!answer.text.contains("4 Ohm so the source"));
}

#[test]
fn unknown_problem_rejected() {
    let (tutor, _) = tutor();
    assert!(matches!(tutor.start_session("s1", "9.9-9"), Err(TutorError::Session(_))));
}

#[test]
fn full_problem_session() {
    let (tutor, provider) = tutor();
    let mut session = tutor.start_session("s1", "2.5-1").unwrap();

    provider.push_responses(["Combine R2 and R3 first.", "Then use current division."]);
    tutor
        .ask_question(&mut session, "Where do I start?", AssistanceLevel::MethodHint)
        .unwrap();
    tutor
        .ask_question(&mut session, "What next?", AssistanceLevel::OpenEnded)
        .unwrap();

    let submission = "R_p = 2 Ohm, i_s = 3 A, i = 1 A, p = 6 W";
    tutor
        .record_submission(&mut session, submission, EquationFormat::Plain)
        .unwrap();
    assert_eq!(session.phase(), Phase::PostSubmission);

    provider.push_responses([
        "VERDICT: PASS\nAll values are correct.",
        "VERDICT: PASS\nBoth parts answered.",
        "VERDICT: PASS\nCurrent division applied correctly.",
        "VERDICT: ISSUE\nThe resistance R_p should carry the unit Ohm consistently.",
        "Correct answers; mind your units.",
    ]);
    let report = tutor.evaluate(&mut session).unwrap();
    assert_eq!(report.report(Metric::Units).verdict, Verdict::Issue);
    assert_eq!(report.summary(), "Correct answers; mind your units.");
    assert_eq!(tutor.gateway().call_count(PurposeTag::MetricEval), 4);
    assert_eq!(tutor.gateway().call_count(PurposeTag::Summary), 1);
    let full = render_feedback(&report, DetailLevel::Full);
    assert!(full.starts_with("Correct answers; mind your units."));
    assert!(full.contains("### Units"));

    provider.push_response("Your current division step was fine.");
    tutor
        .ask_question(&mut session, "Was my current division right?", AssistanceLevel::OpenEnded)
        .unwrap();
    let post_request = provider.last_request().unwrap();
    assert!(has_submission_block(&post_request));
    assert!(post_request.system_text().contains(submission));

    tutor
        .record_survey("s1", "2.5-1", SurveyCategory::Helpful, None)
        .unwrap();

    let snapshot = tutor.log().snapshot();
    let kinds: Vec<_> = snapshot.events().iter().map(|e| (e.kind, e.phase)).collect();
    assert_eq!(
        kinds,
        [
            (EventKind::QuestionAsked, Phase::PreSubmission),
            (EventKind::QuestionAsked, Phase::PreSubmission),
            (EventKind::SubmissionRecorded, Phase::PostSubmission),
            (EventKind::FeedbackRequested, Phase::PostSubmission),
            (EventKind::QuestionAsked, Phase::PostSubmission),
            (EventKind::SurveyAnswered, Phase::PostSubmission),
        ]
    );
    let recorded = snapshot.query(&EventFilter::all().kind(EventKind::SubmissionRecorded));
    assert_eq!(recorded[0].payload, submission_digest(submission));
    assert!(!snapshot.export_json().contains(submission));
}

#[test]
fn failed_completion_changes_nothing() {
    let (tutor, _provider) = tutor();
    let mut session = tutor.start_session("s1", "2.5-1").unwrap();
    // no scripted responses: the provider rejects
    assert!(matches!(
        tutor.ask_question(&mut session, "hello?", AssistanceLevel::OpenEnded),
        Err(TutorError::Llm(_))
    ));
    assert!(session.transcript().is_empty());
    assert!(tutor.log().is_empty());
}

#[test]
fn feedback_needs_a_submission() {
    let (tutor, provider) = tutor();
    let mut session = tutor.start_session("s1", "2.5-1").unwrap();
    assert!(matches!(tutor.evaluate(&mut session), Err(TutorError::Feedback(_))));
    assert_eq!(provider.attempts(), 0);
}

#[test]
fn idle_timeout() {
    let (tutor, _) = tutor();
    let session = tutor.start_session("s1", "2.5-1").unwrap();
    let later = session.last_active() + Duration::hours(25);
    assert!(session.is_idle_expired(later, Duration::hours(24)));
    assert!(!session.is_idle_expired(session.last_active() + Duration::hours(23), Duration::hours(24)));
}
