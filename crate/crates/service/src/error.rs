use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use mdflow_core::graph::{Diagnostic, NodeId};
use serde::Serialize;

/// Structured error body shared by every endpoint.
#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.into(),
            message: message.into(),
            node: None,
            frame: None,
            diagnostics: Vec::new(),
        }
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "RunInProgress", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }

    /// 422 carrying every validation finding; the first one names the code.
    pub fn invalid_graph(diagnostics: Vec<Diagnostic>) -> Self {
        let first = diagnostics.first();
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: first.map_or("GraphInvalid".into(), |d| d.code.clone()),
            message: first.map_or("graph is invalid".into(), |d| d.message.clone()),
            node: first.and_then(|d| d.node),
            frame: None,
            diagnostics,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}
