//! HTTP gateway over the guideline QA engine: document upload, chat
//! queries, benchmark runs, ratings and reports behind a bearer token.

pub mod api;
pub mod config;
pub mod error;
pub mod state;

pub use api::router;
pub use config::ServerConfig;
pub use error::{ApiError, ApiErrorBody};
pub use state::AppState;
