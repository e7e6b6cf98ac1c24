//! HTTP routes. Handlers that touch the provider, the embedder or the log
//! file run on the blocking pool.

use std::sync::Arc;

use axum::extract::{FromRequest, FromRequestParts, Path, Query, Request, State};
use axum::http::header::{AUTHORIZATION, CONTENT_TYPE};
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tutor_core::analytics::{extract_faqs, problem_usage, student_summary, survey_breakdown};
use tutor_core::feedback::{render_feedback, DetailLevel, EquationFormat, FeedbackReport, MetricReport};
use tutor_core::log::{EventFilter, EventKind, SurveyCategory};
use tutor_core::session::{AssistanceLevel, Exchange, GuardStatus, Phase, Session};
use tutor_core::submission_digest;

use crate::app::App;
use crate::error::ApiError;
use crate::registry::{Principal, Registration, Role};
use crate::sessions::{Lookup, SessionEntry, SharedEntry};

type AppState = Arc<App>;
type ApiResult<T> = Result<T, ApiError>;

pub fn router(app: Arc<App>) -> Router {
    Router::new()
        .route("/healthz", get(health))
        .route("/register", post(register))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/questions", post(ask_question))
        .route("/sessions/{id}/submission", post(submit))
        .route("/sessions/{id}/feedback", post(request_feedback).get(get_feedback))
        .route("/sessions/{id}/survey", post(answer_survey))
        .route("/analytics/problems", get(analytics_problems))
        .route("/analytics/survey", get(analytics_survey))
        .route("/analytics/faqs", get(analytics_faqs))
        .route("/analytics/students/{student_id}", get(analytics_student))
        .route("/analytics/events", get(analytics_events))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint") })
        .with_state(app)
}

/// JSON body whose rejections use the error envelope.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| ApiJson(v))
            .map_err(|r| ApiError::bad_request(r.body_text()))
    }
}

/// Query string whose rejections use the error envelope.
pub struct ApiQuery<T>(pub T);

impl<S, T> FromRequestParts<S> for ApiQuery<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        Query::<T>::from_request_parts(parts, state)
            .await
            .map(|Query(v)| ApiQuery(v))
            .map_err(|r| ApiError::bad_request(r.body_text()))
    }
}

/// The caller identified by its bearer token.
pub struct Caller(pub Principal);

impl FromRequestParts<AppState> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, app: &AppState) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or_else(ApiError::unauthorized)?;
        app.registry
            .authenticate(token)
            .map(Caller)
            .ok_or_else(ApiError::unauthorized)
    }
}

impl Caller {
    fn student(self) -> ApiResult<Registration> {
        match self.0 {
            Principal::Student(r) => Ok(r),
            Principal::Instructor => Err(ApiError::forbidden("this endpoint is for registered students")),
        }
    }

    fn instructor(&self) -> ApiResult<()> {
        match self.0 {
            Principal::Instructor => Ok(()),
            Principal::Student(_) => Err(ApiError::forbidden("instructor token required")),
        }
    }
}

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

fn find_session(app: &App, session_id: &str, student: &Registration) -> ApiResult<SharedEntry> {
    match app.sessions.get(session_id, &student.student_id, app.clock().now()) {
        Lookup::Found(entry) => Ok(entry),
        Lookup::Expired => Err(ApiError::session_expired()),
        Lookup::Missing => Err(ApiError::session_not_found()),
    }
}

fn lock(entry: &SharedEntry) -> std::sync::MutexGuard<'_, SessionEntry> {
    entry.lock().expect("session poisoned")
}

fn csv_response(body: String) -> Response {
    ([(CONTENT_TYPE, "text/csv; charset=utf-8")], body).into_response()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    #[default]
    Json,
    Csv,
}

// --- health and registration ---------------------------------------------

#[derive(Serialize)]
struct Health {
    status: &'static str,
    events: usize,
    live_sessions: usize,
}

async fn health(State(app): State<AppState>) -> Json<Health> {
    Json(Health {
        status: "ok",
        events: app.tutor.log().len(),
        live_sessions: app.sessions.len(),
    })
}

#[derive(Deserialize)]
struct RegisterBody {
    alias: String,
}

#[derive(Serialize)]
struct RegisterResponse {
    student_id: String,
    display_alias: String,
    registered_at: DateTime<Utc>,
    role: Role,
    token: String,
}

async fn register(State(app): State<AppState>, ApiJson(body): ApiJson<RegisterBody>) -> ApiResult<impl IntoResponse> {
    let now = app.clock().now();
    let (registration, token) = blocking(move || Ok(app.registry.register(&body.alias, now)?)).await?;
    Ok((
        StatusCode::CREATED,
        Json(RegisterResponse {
            student_id: registration.student_id,
            display_alias: registration.display_alias,
            registered_at: registration.registered_at,
            role: registration.role,
            token,
        }),
    ))
}

// --- sessions --------------------------------------------------------------

#[derive(Serialize)]
struct SessionView {
    session_id: String,
    problem_index: String,
    phase: Phase,
    assistance_level: AssistanceLevel,
    started_at: DateTime<Utc>,
    last_active: DateTime<Utc>,
    has_submission: bool,
    has_feedback: bool,
    transcript: Vec<Exchange>,
}

impl SessionView {
    fn of(entry: &SessionEntry) -> Self {
        let s: &Session = &entry.session;
        Self {
            session_id: s.session_id().to_string(),
            problem_index: s.problem_index().to_string(),
            phase: s.phase(),
            assistance_level: s.assistance_level(),
            started_at: s.started_at(),
            last_active: s.last_active(),
            has_submission: s.latest_submission().is_some(),
            has_feedback: entry.feedback.is_some(),
            transcript: s.transcript().to_vec(),
        }
    }
}

#[derive(Deserialize)]
struct CreateSessionBody {
    problem_index: String,
}

async fn create_session(
    State(app): State<AppState>,
    caller: Caller,
    ApiJson(body): ApiJson<CreateSessionBody>,
) -> ApiResult<impl IntoResponse> {
    let student = caller.student()?;
    let session = app.tutor.start_session(&student.student_id, body.problem_index.trim())?;
    let entry = app.sessions.insert(session);
    let view = SessionView::of(&lock(&entry));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(app): State<AppState>, caller: Caller, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let student = caller.student()?;
    let entry = find_session(&app, &id, &student)?;
    let view = SessionView::of(&lock(&entry));
    Ok(Json(view))
}

#[derive(Deserialize)]
struct QuestionBody {
    text: String,
    #[serde(default)]
    assistance_level: AssistanceLevel,
}

#[derive(Serialize)]
struct AnswerView {
    answer: String,
    guard_status: GuardStatus,
    context_doc_ids: Vec<String>,
    phase_at_ask: Phase,
    assistance_level: AssistanceLevel,
}

async fn ask_question(
    State(app): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    ApiJson(body): ApiJson<QuestionBody>,
) -> ApiResult<Json<AnswerView>> {
    let student = caller.student()?;
    let entry = find_session(&app, &id, &student)?;
    blocking(move || {
        let mut guard = lock(&entry);
        let now = app.clock().now();
        // reject malformed questions before they count against the limit
        let question = guard.session.question(body.text.as_str(), body.assistance_level, now)?;
        if !app.limiter.try_acquire(&student.student_id, now) {
            return Err(ApiError::rate_limited(app.options.llm_requests_per_hour));
        }
        let answer = app
            .tutor
            .ask_question(&mut guard.session, &body.text, body.assistance_level)?;
        Ok(Json(AnswerView {
            answer: answer.text,
            guard_status: answer.guard_status,
            context_doc_ids: answer.context_doc_ids,
            phase_at_ask: question.phase_at_ask,
            assistance_level: body.assistance_level,
        }))
    })
    .await
}

#[derive(Deserialize)]
struct SubmissionBody {
    text: String,
    #[serde(default = "default_format")]
    equation_format: EquationFormat,
}

fn default_format() -> EquationFormat {
    EquationFormat::Plain
}

#[derive(Serialize)]
struct SubmissionView {
    phase: Phase,
    submitted_at: DateTime<Utc>,
    equation_format: EquationFormat,
    digest: String,
}

async fn submit(
    State(app): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    ApiJson(body): ApiJson<SubmissionBody>,
) -> ApiResult<Json<SubmissionView>> {
    let student = caller.student()?;
    let entry = find_session(&app, &id, &student)?;
    blocking(move || {
        let mut guard = lock(&entry);
        let submission = app
            .tutor
            .record_submission(&mut guard.session, &body.text, body.equation_format)?;
        guard.feedback = None;
        Ok(Json(SubmissionView {
            phase: guard.session.phase(),
            submitted_at: submission.submitted_at,
            equation_format: submission.equation_format,
            digest: submission_digest(&submission.text),
        }))
    })
    .await
}

// --- feedback --------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DetailParam {
    #[default]
    #[serde(alias = "summary_only")]
    Summary,
    Full,
}

impl From<DetailParam> for DetailLevel {
    fn from(d: DetailParam) -> Self {
        match d {
            DetailParam::Summary => DetailLevel::SummaryOnly,
            DetailParam::Full => DetailLevel::Full,
        }
    }
}

#[derive(Default, Deserialize)]
struct FeedbackQuery {
    #[serde(default)]
    detail: DetailParam,
}

#[derive(Serialize)]
struct FeedbackView {
    detail: DetailLevel,
    rendered: String,
    summary: String,
    created_at: DateTime<Utc>,
    /// Present only for the full view.
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<Vec<MetricReport>>,
}

impl FeedbackView {
    fn of(report: &FeedbackReport, detail: DetailLevel) -> Self {
        Self {
            detail,
            rendered: render_feedback(report, detail),
            summary: report.summary().to_string(),
            created_at: report.created_at(),
            metrics: (detail == DetailLevel::Full).then(|| report.reports().to_vec()),
        }
    }
}

async fn request_feedback(
    State(app): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    ApiQuery(query): ApiQuery<FeedbackQuery>,
) -> ApiResult<Json<FeedbackView>> {
    let student = caller.student()?;
    let entry = find_session(&app, &id, &student)?;
    blocking(move || {
        let mut guard = lock(&entry);
        if guard.session.latest_submission().is_none() {
            return Err(tutor_core::feedback::FeedbackError::NoSubmission.into());
        }
        if !app.limiter.try_acquire(&student.student_id, app.clock().now()) {
            return Err(ApiError::rate_limited(app.options.llm_requests_per_hour));
        }
        let report = app.tutor.evaluate(&mut guard.session)?;
        let view = FeedbackView::of(&report, query.detail.into());
        guard.feedback = Some(report);
        Ok(Json(view))
    })
    .await
}

async fn get_feedback(
    State(app): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    ApiQuery(query): ApiQuery<FeedbackQuery>,
) -> ApiResult<Json<FeedbackView>> {
    let student = caller.student()?;
    let entry = find_session(&app, &id, &student)?;
    let guard = lock(&entry);
    if guard.session.latest_submission().is_none() {
        return Err(tutor_core::feedback::FeedbackError::NoSubmission.into());
    }
    let report = guard.feedback.as_ref().ok_or_else(ApiError::no_feedback)?;
    Ok(Json(FeedbackView::of(report, query.detail.into())))
}

// --- survey ----------------------------------------------------------------

#[derive(Deserialize)]
struct SurveyBody {
    category: SurveyCategory,
    #[serde(default)]
    free_text: Option<String>,
}

#[derive(Serialize)]
struct SurveyAck {
    event_id: String,
    category: SurveyCategory,
}

async fn answer_survey(
    State(app): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    ApiJson(body): ApiJson<SurveyBody>,
) -> ApiResult<impl IntoResponse> {
    let student = caller.student()?;
    let entry = find_session(&app, &id, &student)?;
    let problem_index = lock(&entry).session.problem_index().to_string();
    let event = blocking(move || {
        let free_text = body.free_text.filter(|t| !t.trim().is_empty());
        Ok(app
            .tutor
            .record_survey(&student.student_id, &problem_index, body.category, free_text)?)
    })
    .await?;
    Ok((
        StatusCode::CREATED,
        Json(SurveyAck {
            event_id: event.event_id,
            category: body.category,
        }),
    ))
}

// --- analytics -------------------------------------------------------------

#[derive(Deserialize)]
struct ProblemsQuery {
    /// Comma-separated problem indices; defaults to every corpus problem.
    homework: Option<String>,
    #[serde(default)]
    format: Format,
}

async fn analytics_problems(
    State(app): State<AppState>,
    caller: Caller,
    ApiQuery(query): ApiQuery<ProblemsQuery>,
) -> ApiResult<Response> {
    caller.instructor()?;
    let scope: Vec<String> = match &query.homework {
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect(),
        None => app.tutor.corpus().problem_indices(),
    };
    if scope.is_empty() {
        return Err(ApiError::bad_request("homework scope is empty"));
    }
    let report = problem_usage(&app.tutor.log().snapshot(), &scope);
    Ok(match query.format {
        Format::Json => Json(report).into_response(),
        Format::Csv => csv_response(report.to_csv()),
    })
}

#[derive(Deserialize)]
struct SurveyQuery {
    from: Option<DateTime<Utc>>,
    to: Option<DateTime<Utc>>,
    #[serde(default)]
    format: Format,
}

async fn analytics_survey(
    State(app): State<AppState>,
    caller: Caller,
    ApiQuery(query): ApiQuery<SurveyQuery>,
) -> ApiResult<Response> {
    caller.instructor()?;
    let range = match (query.from, query.to) {
        (None, None) => None,
        (from, to) => Some(from.unwrap_or(DateTime::<Utc>::MIN_UTC)..to.unwrap_or(DateTime::<Utc>::MAX_UTC)),
    };
    let breakdown = survey_breakdown(&app.tutor.log().snapshot(), range.as_ref());
    Ok(match query.format {
        Format::Json => Json(breakdown).into_response(),
        Format::Csv => csv_response(breakdown.to_csv()),
    })
}

#[derive(Deserialize)]
struct FaqQuery {
    phase: Phase,
    /// Rewrite each cluster's canonical question with one LLM call.
    #[serde(default)]
    rewrite: bool,
    #[serde(default)]
    format: Format,
}

async fn analytics_faqs(
    State(app): State<AppState>,
    caller: Caller,
    ApiQuery(query): ApiQuery<FaqQuery>,
) -> ApiResult<Response> {
    caller.instructor()?;
    let report = blocking(move || {
        let gateway = query.rewrite.then(|| app.tutor.gateway().as_ref());
        Ok(extract_faqs(
            &app.tutor.log().snapshot(),
            query.phase,
            app.tutor.embedder().as_ref(),
            app.options.faq,
            gateway,
        )?)
    })
    .await?;
    Ok(match query.format {
        Format::Json => Json(report).into_response(),
        Format::Csv => csv_response(report.to_csv()),
    })
}

#[derive(Deserialize)]
struct StudentQuery {
    /// Attach an LLM-written narrative.
    #[serde(default)]
    narrative: bool,
}

async fn analytics_student(
    State(app): State<AppState>,
    caller: Caller,
    Path(student_id): Path<String>,
    ApiQuery(query): ApiQuery<StudentQuery>,
) -> ApiResult<Response> {
    caller.instructor()?;
    let summary = blocking(move || {
        let gateway = query.narrative.then(|| app.tutor.gateway().as_ref());
        Ok(student_summary(&app.tutor.log().snapshot(), &student_id, gateway)?)
    })
    .await?;
    Ok(Json(summary).into_response())
}

#[derive(Deserialize)]
struct EventsQuery {
    student: Option<String>,
    problem: Option<String>,
    kind: Option<EventKind>,
    phase: Option<Phase>,
}

async fn analytics_events(
    State(app): State<AppState>,
    caller: Caller,
    ApiQuery(query): ApiQuery<EventsQuery>,
) -> ApiResult<Response> {
    caller.instructor()?;
    let mut filter = EventFilter::all();
    if let Some(s) = query.student {
        filter = filter.student(s);
    }
    if let Some(p) = query.problem {
        filter = filter.problem(p);
    }
    if let Some(k) = query.kind {
        filter = filter.kind(k);
    }
    if let Some(p) = query.phase {
        filter = filter.phase(p);
    }
    Ok(Json(app.tutor.log().query_events(&filter)).into_response())
}
