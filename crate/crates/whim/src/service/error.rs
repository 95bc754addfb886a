use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use whim_core::ErrorClass;

use crate::error::WhimError;

/// Structured error body: `{"code": ..., "message": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.into(),
            },
        }
    }

    pub fn not_found(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }
}

impl From<WhimError> for ApiError {
    fn from(e: WhimError) -> Self {
        let code = e.code();
        let status = match code {
            "unknown_column" | "unknown_value" => StatusCode::NOT_FOUND,
            "too_many_rows" => StatusCode::PAYLOAD_TOO_LARGE,
            _ => match e.class() {
                ErrorClass::Usage => StatusCode::BAD_REQUEST,
                ErrorClass::Data => StatusCode::UNPROCESSABLE_ENTITY,
                ErrorClass::Numerical => StatusCode::INTERNAL_SERVER_ERROR,
            },
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<whim_core::Error> for ApiError {
    fn from(e: whim_core::Error) -> Self {
        WhimError::from(e).into()
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
