use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use thiserror::Error;

use ticoder_core::api::ErrorBody;
use ticoder_core::matrix::MatrixError;
use ticoder_core::session::SessionError;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown problem {0}")]
    UnknownProblem(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("malformed response payload: {0}")]
    BadPayload(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("problem {problem} cannot be prepared: {source}")]
    Prepare { problem: String, source: MatrixError },
    #[error("session store: {0}")]
    Store(String),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("worker task failed: {0}")]
    Join(String),
}

impl ServiceError {
    fn status_and_code(&self) -> (StatusCode, &'static str) {
        match self {
            ServiceError::UnknownProblem(_) => (StatusCode::NOT_FOUND, "unknown_problem"),
            ServiceError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            ServiceError::BadPayload(_) => (StatusCode::UNPROCESSABLE_ENTITY, "bad_payload"),
            ServiceError::Session(e) => match e {
                SessionError::SessionTerminated(_) => (StatusCode::CONFLICT, "session_terminated"),
                SessionError::StaleQuery { .. } => (StatusCode::CONFLICT, "stale_query"),
                SessionError::IllegalResponseForMode { .. } => {
                    (StatusCode::UNPROCESSABLE_ENTITY, "illegal_response_for_mode")
                }
                SessionError::UnknownTest(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unknown_test"),
                SessionError::Candidate(_) => (StatusCode::UNPROCESSABLE_ENTITY, "bad_candidate"),
                SessionError::ReplayDiverged { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "replay_diverged"),
                SessionError::Ranking(_) => (StatusCode::INTERNAL_SERVER_ERROR, "ranking"),
                SessionError::Sandbox(_) => (StatusCode::SERVICE_UNAVAILABLE, "sandbox_unavailable"),
            },
            ServiceError::Prepare { source: MatrixError::Sandbox(_), .. } => {
                (StatusCode::SERVICE_UNAVAILABLE, "sandbox_unavailable")
            }
            ServiceError::Prepare { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "unpreparable_problem"),
            ServiceError::Store(_) | ServiceError::Bind { .. } | ServiceError::Join(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, code) = self.status_and_code();
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        let body = ErrorBody {
            error: code.to_string(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}
