//! Domain core of a course tutoring service: context retrieval, the LLM
//! gateway, help sessions, homework feedback, the interaction log and
//! instructor analytics.

pub mod analytics;
pub mod clock;
pub mod context;
pub mod feedback;
pub mod llm;
pub mod log;
pub mod session;
pub mod text;
mod tutor;

pub use tutor::{submission_digest, Tutor, TutorError, TutorSettings};
