//! Thin async client for the session service.

use reqwest::{Response, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use ticoder_core::api::{CreateSession, ErrorBody, Health, ProblemSummary, ResponsePayload, SessionSnapshot};
use ticoder_core::{Mode, UserResponse};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request to {url} failed: {source}")]
    Transport { url: String, source: reqwest::Error },
    #[error("service replied {status}: {} ({})", body.message, body.error)]
    Api { status: StatusCode, body: ErrorBody },
    #[error("unexpected reply {status}: {message}")]
    Decode { status: StatusCode, message: String },
}

impl ClientError {
    /// Machine-readable error code when the service produced one.
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { body, .. } => Some(&body.error),
            _ => None,
        }
    }

    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } | ClientError::Decode { status, .. } => Some(*status),
            ClientError::Transport { source, .. } => source.status(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Client {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub async fn health(&self) -> Result<Health, ClientError> {
        self.get("/health").await
    }

    pub async fn problems(&self) -> Result<Vec<ProblemSummary>, ClientError> {
        self.get("/problems").await
    }

    pub async fn create_session(
        &self,
        problem_id: &str,
        mode: Mode,
        budget: Option<usize>,
    ) -> Result<SessionSnapshot, ClientError> {
        let req = CreateSession {
            problem_id: problem_id.to_string(),
            mode,
            budget,
        };
        self.post("/sessions", &req).await
    }

    pub async fn session(&self, id: &str) -> Result<SessionSnapshot, ClientError> {
        self.get(&format!("/sessions/{id}")).await
    }

    pub async fn respond(
        &self,
        id: &str,
        test_id: usize,
        response: &UserResponse,
    ) -> Result<SessionSnapshot, ClientError> {
        self.respond_raw(id, &ResponsePayload::new(test_id, response)).await
    }

    /// Sends a payload as-is, without checking kind against `new_expected`.
    pub async fn respond_raw(&self, id: &str, payload: &ResponsePayload) -> Result<SessionSnapshot, ClientError> {
        self.post(&format!("/sessions/{id}/response"), payload).await
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        let url = format!("{}{path}", self.base);
        let reply = self
            .http
            .get(&url)
            .send()
            .await
            .map_err(|source| ClientError::Transport { url, source })?;
        decode(reply).await
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        let url = format!("{}{path}", self.base);
        let reply = self
            .http
            .post(&url)
            .json(body)
            .send()
            .await
            .map_err(|source| ClientError::Transport { url, source })?;
        decode(reply).await
    }
}

async fn decode<T: DeserializeOwned>(reply: Response) -> Result<T, ClientError> {
    let status = reply.status();
    let url = reply.url().to_string();
    let bytes = reply
        .bytes()
        .await
        .map_err(|source| ClientError::Transport { url, source })?;
    if status.is_success() {
        return serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode {
            status,
            message: e.to_string(),
        });
    }
    match serde_json::from_slice::<ErrorBody>(&bytes) {
        Ok(body) => Err(ClientError::Api { status, body }),
        Err(_) => Err(ClientError::Decode {
            status,
            message: String::from_utf8_lossy(&bytes).into_owned(),
        }),
    }
}
