//! HTTP service around `tutor-core`: registration, help sessions, feedback,
//! surveys and instructor analytics.

pub mod api;
pub mod app;
pub mod config;
pub mod error;
pub mod limits;
pub mod registry;
pub mod remote;
pub mod sessions;

pub use api::router;
pub use app::{App, AppOptions, StartupError};
pub use config::ServiceConfig;
