//! JSON error envelope: `{"code": ..., "message": ..., "retryable": ...}`.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use tutor_core::context::{EmbedError, IndexError};
use tutor_core::feedback::FeedbackError;
use tutor_core::llm::LlmError;
use tutor_core::log::LogError;
use tutor_core::session::SessionError;
use tutor_core::TutorError;

use crate::registry::RegistryError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub retryable: bool,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub retryable: bool,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            retryable: false,
        }
    }

    pub fn retryable(mut self) -> Self {
        self.retryable = true;
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "Unauthorized", "missing or unknown bearer token")
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, "Forbidden", message)
    }

    pub fn session_not_found() -> Self {
        Self::new(StatusCode::NOT_FOUND, "SessionNotFound", "no such session")
    }

    pub fn session_expired() -> Self {
        Self::new(
            StatusCode::GONE,
            "SessionExpired",
            "session closed after being idle; start a new one",
        )
    }

    pub fn no_feedback() -> Self {
        Self::new(
            StatusCode::CONFLICT,
            "NoFeedback",
            "feedback has not been generated for the latest submission",
        )
    }

    pub fn rate_limited(limit: u32) -> Self {
        Self::new(
            StatusCode::TOO_MANY_REQUESTS,
            "RateLimited",
            format!("limit of {limit} tutor requests per hour reached"),
        )
        .retryable()
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code.to_string(),
            message: self.message,
            retryable: self.retryable,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let (status, code) = match &e {
            SessionError::UnknownProblem(_) => (StatusCode::NOT_FOUND, "UnknownProblem"),
            SessionError::EmptyQuestion => (StatusCode::BAD_REQUEST, "EmptyQuestion"),
            SessionError::QuestionTooLong { .. } => (StatusCode::PAYLOAD_TOO_LARGE, "QuestionTooLong"),
            SessionError::EmptySubmission => (StatusCode::BAD_REQUEST, "EmptySubmission"),
            SessionError::SubmissionTooLong { .. } => (StatusCode::PAYLOAD_TOO_LARGE, "SubmissionTooLong"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<LlmError> for ApiError {
    fn from(e: LlmError) -> Self {
        let (status, code) = match &e {
            LlmError::InvalidRequest(_) => (StatusCode::INTERNAL_SERVER_ERROR, "InvalidRequest"),
            LlmError::ProviderTimeout { .. } => (StatusCode::GATEWAY_TIMEOUT, "ProviderTimeout"),
            LlmError::ProviderRejected(_) => (StatusCode::BAD_GATEWAY, "ProviderRejected"),
            LlmError::RetriesExhausted { .. } => (StatusCode::SERVICE_UNAVAILABLE, "RetriesExhausted"),
        };
        let err = Self::new(status, code, e.to_string());
        if e.is_retryable() {
            err.retryable()
        } else {
            err
        }
    }
}

impl From<FeedbackError> for ApiError {
    fn from(e: FeedbackError) -> Self {
        match e {
            FeedbackError::Llm(e) => e.into(),
            FeedbackError::NoSubmission => Self::new(StatusCode::CONFLICT, "NoSubmission", e.to_string()),
            FeedbackError::UnknownProblem(_) => Self::new(StatusCode::NOT_FOUND, "UnknownProblem", e.to_string()),
            FeedbackError::MissingReferenceSolution(_) => {
                Self::new(StatusCode::CONFLICT, "MissingReferenceSolution", e.to_string())
            }
            FeedbackError::Malformed => Self::internal(e.to_string()),
        }
    }
}

impl From<EmbedError> for ApiError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::EmbedderUnavailable(_) => {
                Self::new(StatusCode::SERVICE_UNAVAILABLE, "EmbedderUnavailable", e.to_string()).retryable()
            }
            e => Self::internal(e.to_string()),
        }
    }
}

impl From<IndexError> for ApiError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Embed(e) => e.into(),
            e => Self::internal(e.to_string()),
        }
    }
}

impl From<LogError> for ApiError {
    fn from(e: LogError) -> Self {
        match e {
            LogError::StorageFull => Self::new(StatusCode::INSUFFICIENT_STORAGE, "StorageFull", e.to_string()),
            LogError::Invalid(_) => Self::new(StatusCode::BAD_REQUEST, "InvalidEvent", e.to_string()),
            e => Self::internal(e.to_string()),
        }
    }
}

impl From<TutorError> for ApiError {
    fn from(e: TutorError) -> Self {
        match e {
            TutorError::Session(e) => e.into(),
            TutorError::Feedback(e) => e.into(),
            TutorError::Llm(e) => e.into(),
            TutorError::Index(e) => e.into(),
            TutorError::Log(e) => e.into(),
        }
    }
}

impl From<RegistryError> for ApiError {
    fn from(e: RegistryError) -> Self {
        match e {
            RegistryError::EmptyAlias => Self::new(StatusCode::BAD_REQUEST, "EmptyAlias", e.to_string()),
            RegistryError::AliasTooLong => Self::new(StatusCode::BAD_REQUEST, "AliasTooLong", e.to_string()),
            e => Self::internal(e.to_string()),
        }
    }
}

impl From<tutor_core::analytics::AnalyticsError> for ApiError {
    fn from(e: tutor_core::analytics::AnalyticsError) -> Self {
        use tutor_core::analytics::AnalyticsError;
        match e {
            AnalyticsError::Embed(e) => e.into(),
            AnalyticsError::Llm(e) => e.into(),
        }
    }
}
