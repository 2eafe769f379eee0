//! JSON payloads of the session HTTP API, shared by server and client.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ranking::{ResponseKind, UserResponse};
use crate::session::{Mode, PreparedProblem, SessionResult, SessionState, Terminal, TranscriptEntry};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub id: String,
    pub intent: String,
    pub entry_point: String,
    pub codes: usize,
    pub tests: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateSession {
    pub problem_id: String,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
}

/// Body of `POST /sessions/{id}/response`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponsePayload {
    pub test_id: usize,
    pub kind: ResponseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_expected: Option<String>,
}

impl ResponsePayload {
    pub fn new(test_id: usize, response: &UserResponse) -> Self {
        ResponsePayload {
            test_id,
            kind: response.kind(),
            new_expected: response.new_expected().map(str::to_string),
        }
    }

    pub fn response(&self) -> Option<UserResponse> {
        UserResponse::from_parts(self.kind, self.new_expected.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionHandle {
    pub id: String,
    pub problem_id: String,
    pub mode: Mode,
    pub budget: usize,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryView {
    pub test_id: usize,
    pub assertion: String,
    /// Whether an expected-value correction can be supplied.
    pub parseable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeView {
    pub id: usize,
    pub source: String,
}

/// Everything a client needs to render a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub session: SessionHandle,
    pub status: Terminal,
    pub budget_remaining: usize,
    pub current_query: Option<QueryView>,
    pub transcript: Vec<TranscriptEntry>,
    pub survivor_count: usize,
    /// Surviving codes in ranked order.
    pub survivors: Vec<CodeView>,
    /// Present once the session has terminated.
    pub result: Option<SessionResult>,
}

impl SessionSnapshot {
    pub fn build(handle: &SessionHandle, state: &SessionState, prepared: &PreparedProblem) -> Self {
        let survivors: Vec<CodeView> = state
            .ranked_codes(prepared)
            .into_iter()
            .filter_map(|id| prepared.candidates.code(id))
            .map(|c| CodeView {
                id: c.id,
                source: c.source.clone(),
            })
            .collect();
        let current_query = state
            .current
            .and_then(|t| prepared.candidates.test(t))
            .map(|t| QueryView {
                test_id: t.id,
                assertion: t.assertion.clone(),
                parseable: t.parsed.is_some(),
            });
        SessionSnapshot {
            session: handle.clone(),
            status: state.terminal,
            budget_remaining: state.budget,
            current_query,
            transcript: state.transcript.clone(),
            survivor_count: survivors.len(),
            survivors,
            result: (!state.is_running()).then(|| state.result(prepared)),
        }
    }
}

/// Error body for every non-2xx reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}
