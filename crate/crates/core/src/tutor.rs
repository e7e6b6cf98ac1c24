//! Ties the corpus, retrieval, gateway and log together for one service.

use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::clock::Clock;
use crate::context::{retrieve_context, Corpus, Embedder, IndexError, RetrievalSettings, SharedIndex};
use crate::feedback::{evaluate_submission, EquationFormat, FeedbackError, FeedbackReport, Submission};
use crate::llm::{Gateway, LlmError};
use crate::log::{EventKind, EventStore, InteractionEvent, LogError, SurveyCategory, SurveyResponse};
use crate::session::{
    assemble_prompt, start_session, Answer, AssistanceLevel, GuardStatus, LeakGuard, Phase, Session, SessionError,
};

#[derive(Debug, Error)]
pub enum TutorError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Feedback(#[from] FeedbackError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Log(#[from] LogError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TutorSettings {
    pub retrieval: RetrievalSettings,
    pub leak_guard: LeakGuard,
}

/// Digest stored in the log instead of the submission text.
pub fn submission_digest(text: &str) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(text.as_bytes())))
}

/// The tutoring workflow. Sessions are owned by the caller; every successful
/// operation on a session appends exactly one event to the log.
pub struct Tutor {
    corpus: Arc<Corpus>,
    index: SharedIndex,
    embedder: Arc<dyn Embedder>,
    gateway: Arc<Gateway>,
    log: Arc<EventStore>,
    clock: Arc<dyn Clock>,
    settings: TutorSettings,
}

impl Tutor {
    pub fn new(
        corpus: Arc<Corpus>,
        index: SharedIndex,
        embedder: Arc<dyn Embedder>,
        gateway: Arc<Gateway>,
        log: Arc<EventStore>,
        clock: Arc<dyn Clock>,
    ) -> Self {
        Self {
            corpus,
            index,
            embedder,
            gateway,
            log,
            clock,
            settings: TutorSettings::default(),
        }
    }

    pub fn with_settings(mut self, settings: TutorSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn corpus(&self) -> &Arc<Corpus> {
        &self.corpus
    }

    pub fn index(&self) -> &SharedIndex {
        &self.index
    }

    pub fn embedder(&self) -> &Arc<dyn Embedder> {
        &self.embedder
    }

    pub fn gateway(&self) -> &Arc<Gateway> {
        &self.gateway
    }

    pub fn log(&self) -> &Arc<EventStore> {
        &self.log
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn settings(&self) -> &TutorSettings {
        &self.settings
    }

    pub fn start_session(&self, student_id: &str, problem_index: &str) -> Result<Session, TutorError> {
        Ok(start_session(student_id, problem_index, &self.corpus, self.clock.now())?)
    }

    /// Answers one question: retrieve, prompt, complete, guard, log, record.
    pub fn ask_question(
        &self,
        session: &mut Session,
        text: &str,
        level: AssistanceLevel,
    ) -> Result<Answer, TutorError> {
        let question = session.question(text, level, self.clock.now())?;
        let problem = self
            .corpus
            .lookup_exact(session.problem_index())
            .ok_or_else(|| SessionError::UnknownProblem(session.problem_index().to_string()))?;

        let index = self.index.snapshot();
        let hits = retrieve_context(
            &self.corpus,
            &index,
            self.embedder.as_ref(),
            Some(session.problem_index()),
            &question.text,
            self.settings.retrieval,
        )?;
        let docs: Vec<_> = hits.into_iter().map(|h| h.document).collect();
        let request = assemble_prompt(session, problem, &question, &docs);
        let raw = self.gateway.complete(&request)?.text;

        let (text, guard_status) = if problem.has_reference_solution() {
            self.settings.leak_guard.check(&raw, &problem.reference_solution)
        } else {
            (raw, GuardStatus::Clean)
        };

        self.log.append(InteractionEvent::new(
            question.asked_at,
            session.student_id(),
            session.problem_index(),
            question.phase_at_ask,
            EventKind::QuestionAsked,
            question.text.clone(),
        ))?;

        let answer = Answer {
            text,
            guard_status,
            context_doc_ids: docs.into_iter().map(|d| d.doc_id).collect(),
        };
        session.push_exchange(question, answer.clone());
        Ok(answer)
    }

    /// Records (or replaces) the session's submission.
    pub fn record_submission(
        &self,
        session: &mut Session,
        text: &str,
        format: EquationFormat,
    ) -> Result<Submission, TutorError> {
        let now = self.clock.now();
        let submission = Submission::new(text, format, now)?;
        self.log.append(InteractionEvent::new(
            now,
            session.student_id(),
            session.problem_index(),
            Phase::PostSubmission,
            EventKind::SubmissionRecorded,
            submission_digest(&submission.text),
        ))?;
        session.record_submission(submission.clone(), now)?;
        Ok(submission)
    }

    /// Four-metric feedback on the latest submission; the rendered summary
    /// is logged.
    pub fn evaluate(&self, session: &mut Session) -> Result<FeedbackReport, TutorError> {
        let report = evaluate_submission(session, &self.corpus, &self.gateway, self.clock.now())?;
        let now = self.clock.now();
        self.log.append(InteractionEvent::new(
            now,
            session.student_id(),
            session.problem_index(),
            session.phase(),
            EventKind::FeedbackRequested,
            report.summary(),
        ))?;
        session.touch(now);
        Ok(report)
    }

    pub fn record_survey(
        &self,
        student_id: &str,
        problem_index: &str,
        category: SurveyCategory,
        free_text: Option<String>,
    ) -> Result<InteractionEvent, TutorError> {
        Ok(self.log.record_survey(SurveyResponse {
            category,
            free_text,
            student_id: student_id.to_string(),
            problem_index: problem_index.to_string(),
            occurred_at: self.clock.now(),
        })?)
    }
}
