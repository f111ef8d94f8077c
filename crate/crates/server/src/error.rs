use axum::extract::multipart::MultipartError;
use axum::extract::rejection::JsonRejection;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use guideqa_core::benchharness::BenchError;
use guideqa_core::docstore::DocStoreError;
use guideqa_core::embedindex::EmbedError;
use guideqa_core::ragchat::RagError;
use serde::{Deserialize, Serialize};

/// JSON error body returned by every failing endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn unauthorized() -> Self {
        Self::new(
            StatusCode::UNAUTHORIZED,
            "unauthorized",
            "missing or invalid bearer token",
        )
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    pub fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "unprocessable", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ApiErrorBody {
            code: self.code.to_string(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

fn too_large(message: String) -> ApiError {
    ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "payload_too_large", message)
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        match r.status() {
            StatusCode::PAYLOAD_TOO_LARGE => too_large(r.body_text()),
            StatusCode::UNSUPPORTED_MEDIA_TYPE => ApiError::new(
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                "unsupported_media_type",
                r.body_text(),
            ),
            _ => ApiError::bad_request(r.body_text()),
        }
    }
}

impl From<MultipartError> for ApiError {
    fn from(e: MultipartError) -> Self {
        if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
            too_large(e.body_text())
        } else {
            ApiError::bad_request(e.body_text())
        }
    }
}

impl From<DocStoreError> for ApiError {
    fn from(e: DocStoreError) -> Self {
        match e {
            DocStoreError::NotFound(_) => ApiError::not_found(e.to_string()),
            DocStoreError::Io(_) | DocStoreError::Corrupt(_) => ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "storage_error",
                e.to_string(),
            ),
            _ => ApiError::unprocessable(e.to_string()),
        }
    }
}

impl From<EmbedError> for ApiError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::EmptyText => ApiError::bad_request(e.to_string()),
            EmbedError::RemoteEmbedderUnavailable(_)
            | EmbedError::MalformedResponse(_)
            | EmbedError::DimensionMismatch { .. } => {
                ApiError::new(StatusCode::BAD_GATEWAY, "embedder_failed", e.to_string())
            }
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
        }
    }
}

impl From<RagError> for ApiError {
    fn from(e: RagError) -> Self {
        match e {
            RagError::EmptyQuestion | RagError::InvalidK => ApiError::bad_request(e.to_string()),
            RagError::UnknownModel(_) => {
                ApiError::new(StatusCode::BAD_REQUEST, "unknown_model", e.to_string())
            }
            RagError::BackendTimeout { .. } => ApiError::new(
                StatusCode::GATEWAY_TIMEOUT,
                "backend_timeout",
                e.to_string(),
            ),
            RagError::Backend { .. } => {
                ApiError::new(StatusCode::BAD_GATEWAY, "backend_failed", e.to_string())
            }
            RagError::Embed(inner) => inner.into(),
            RagError::DocStore(inner) => inner.into(),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
        }
    }
}

impl From<BenchError> for ApiError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::UnknownModel(_) => {
                ApiError::new(StatusCode::BAD_REQUEST, "unknown_model", e.to_string())
            }
            BenchError::UnknownRecord(_) => ApiError::not_found(e.to_string()),
            BenchError::StrictShapeViolation { .. } => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "strict_shape_violation",
                e.to_string(),
            ),
            BenchError::Persistence(_) => ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "storage_error",
                e.to_string(),
            ),
            _ => ApiError::unprocessable(e.to_string()),
        }
    }
}
