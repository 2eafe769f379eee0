//! HTTP session API over the interactive selection engine.
//!
//! Sessions live in memory behind a per-session lock and are persisted as a
//! metadata file plus a transcript. A session unknown to memory is rebuilt
//! by replaying its transcript, so state survives a restart.

mod error;

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex as StdMutex};

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use tokio::net::TcpListener;
use tokio::sync::{Mutex, OnceCell};
use uuid::Uuid;

use ticoder_core::api::{CreateSession, Health, ProblemSummary, ResponsePayload, SessionHandle, SessionSnapshot};
use ticoder_core::matrix::build_matrix;
use ticoder_core::session::{replay, transcript_from_jsonl, transcript_to_jsonl};
use ticoder_core::{CandidateRecord, CandidateSet, ExecLimits, PreparedProblem, ProblemSet, Sandbox, SessionState};

pub use error::ServiceError;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Session files go under `<data_dir>/sessions`.
    pub data_dir: PathBuf,
    pub limits: ExecLimits,
    pub default_budget: usize,
}

struct Live {
    handle: SessionHandle,
    state: SessionState,
    prepared: Arc<PreparedProblem>,
}

impl Live {
    fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot::build(&self.handle, &self.state, &self.prepared)
    }
}

type SessionSlot = Arc<Mutex<Live>>;

pub struct AppState {
    problems: ProblemSet,
    candidates: BTreeMap<String, CandidateRecord>,
    prepared: StdMutex<HashMap<String, Arc<OnceCell<Arc<PreparedProblem>>>>>,
    sessions: StdMutex<HashMap<String, SessionSlot>>,
    sandbox: Arc<dyn Sandbox>,
    config: ServiceConfig,
}

impl AppState {
    pub fn new(
        problems: ProblemSet,
        candidates: BTreeMap<String, CandidateRecord>,
        sandbox: Arc<dyn Sandbox>,
        config: ServiceConfig,
    ) -> Result<Arc<Self>, ServiceError> {
        std::fs::create_dir_all(config.data_dir.join("sessions"))
            .map_err(|e| ServiceError::Store(format!("{}: {e}", config.data_dir.display())))?;
        Ok(Arc::new(AppState {
            problems,
            candidates,
            prepared: StdMutex::new(HashMap::new()),
            sessions: StdMutex::new(HashMap::new()),
            sandbox,
            config,
        }))
    }

    fn session_dir(&self) -> PathBuf {
        self.config.data_dir.join("sessions")
    }

    /// Matrix for a problem, built once on first use.
    async fn prepared(&self, problem_id: &str) -> Result<Arc<PreparedProblem>, ServiceError> {
        let problem = self
            .problems
            .get(problem_id)
            .ok_or_else(|| ServiceError::UnknownProblem(problem_id.to_string()))?
            .clone();
        let record = self
            .candidates
            .get(problem_id)
            .ok_or_else(|| ServiceError::UnknownProblem(problem_id.to_string()))?
            .clone();
        let cell = self
            .prepared
            .lock()
            .expect("prepared cache poisoned")
            .entry(problem_id.to_string())
            .or_default()
            .clone();
        let sandbox = self.sandbox.clone();
        let limits = self.config.limits.clone();
        cell.get_or_try_init(|| async move {
            tokio::task::spawn_blocking(move || {
                let candidates = CandidateSet::build(&problem, &record)
                    .map_err(|e| ServiceError::Session(e.into()))?;
                let matrix = build_matrix(&candidates.codes, &candidates.tests, &problem, &limits, &sandbox)
                    .map_err(|source| ServiceError::Prepare {
                        problem: problem.id.clone(),
                        source,
                    })?;
                Ok(Arc::new(PreparedProblem {
                    problem,
                    candidates,
                    matrix,
                }))
            })
            .await
            .map_err(|e| ServiceError::Join(e.to_string()))?
        })
        .await
        .cloned()
    }

    async fn session(&self, id: &str) -> Result<SessionSlot, ServiceError> {
        let unknown = || ServiceError::UnknownSession(id.to_string());
        let id = Uuid::parse_str(id).map_err(|_| unknown())?.to_string();
        if let Some(slot) = self.sessions.lock().expect("session map poisoned").get(&id) {
            return Ok(slot.clone());
        }
        let files = SessionFiles::new(&self.session_dir(), &id);
        let Some(handle) = files.read_meta()? else {
            return Err(unknown());
        };
        let transcript = files.read_transcript()?;
        let prepared = self.prepared(&handle.problem_id).await?;
        let sandbox = self.sandbox.clone();
        let limits = self.config.limits.clone();
        let live = tokio::task::spawn_blocking(move || -> Result<Live, ServiceError> {
            let mut state = replay(&prepared, handle.mode, handle.budget, &transcript, &sandbox, &limits)?;
            if state.is_running() {
                state.next_query(&prepared)?;
            }
            Ok(Live {
                handle,
                state,
                prepared,
            })
        })
        .await
        .map_err(|e| ServiceError::Join(e.to_string()))??;
        tracing::info!(session = %id, "session restored from transcript");
        let mut sessions = self.sessions.lock().expect("session map poisoned");
        Ok(sessions.entry(id).or_insert_with(|| Arc::new(Mutex::new(live))).clone())
    }
}

struct SessionFiles {
    meta: PathBuf,
    transcript: PathBuf,
}

impl SessionFiles {
    fn new(dir: &Path, id: &str) -> Self {
        SessionFiles {
            meta: dir.join(format!("{id}.meta.json")),
            transcript: dir.join(format!("{id}.transcript.jsonl")),
        }
    }

    fn write_atomic(path: &Path, contents: &str) -> Result<(), ServiceError> {
        let err = |e: std::io::Error| ServiceError::Store(format!("{}: {e}", path.display()));
        let dir = path.parent().unwrap_or(Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
        tmp.write_all(contents.as_bytes()).map_err(err)?;
        tmp.persist(path).map_err(|e| err(e.error))?;
        Ok(())
    }

    fn save(&self, live: &Live) -> Result<(), ServiceError> {
        let meta = serde_json::to_string_pretty(&live.handle).map_err(|e| ServiceError::Store(e.to_string()))?;
        Self::write_atomic(&self.meta, &meta)?;
        Self::write_atomic(&self.transcript, &transcript_to_jsonl(&live.state.transcript))
    }

    fn read_meta(&self) -> Result<Option<SessionHandle>, ServiceError> {
        match std::fs::read_to_string(&self.meta) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| ServiceError::Store(format!("{}: {e}", self.meta.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(ServiceError::Store(format!("{}: {e}", self.meta.display()))),
        }
    }

    fn read_transcript(&self) -> Result<Vec<ticoder_core::session::TranscriptEntry>, ServiceError> {
        let text = match std::fs::read_to_string(&self.transcript) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(ServiceError::Store(format!("{}: {e}", self.transcript.display()))),
        };
        transcript_from_jsonl(&text).map_err(|e| ServiceError::Store(format!("{}: {e}", self.transcript.display())))
    }
}

async fn health() -> Json<Health> {
    Json(Health {
        status: "ok".into(),
    })
}

async fn list_problems(State(app): State<Arc<AppState>>) -> Json<Vec<ProblemSummary>> {
    let summaries = app
        .problems
        .problems
        .iter()
        .map(|p| {
            let record = app.candidates.get(&p.id);
            ProblemSummary {
                id: p.id.clone(),
                intent: p.intent.clone(),
                entry_point: p.entry_point.clone(),
                codes: record.map_or(0, |r| r.codes.len()),
                tests: record.map_or(0, |r| r.tests.len()),
            }
        })
        .collect();
    Json(summaries)
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionSnapshot>), ServiceError> {
    let prepared = app.prepared(&req.problem_id).await?;
    let handle = SessionHandle {
        id: Uuid::new_v4().to_string(),
        problem_id: req.problem_id,
        mode: req.mode,
        budget: req.budget.unwrap_or(app.config.default_budget),
        created_at: Utc::now(),
    };
    let files = SessionFiles::new(&app.session_dir(), &handle.id);
    let (live, snapshot) = tokio::task::spawn_blocking(move || -> Result<_, ServiceError> {
        let mut state = SessionState::new(&prepared, handle.mode, handle.budget);
        state.next_query(&prepared)?;
        let live = Live {
            handle,
            state,
            prepared,
        };
        files.save(&live)?;
        let snapshot = live.snapshot();
        Ok((live, snapshot))
    })
    .await
    .map_err(|e| ServiceError::Join(e.to_string()))??;
    tracing::info!(session = %live.handle.id, problem = %live.handle.problem_id, "session created");
    app.sessions
        .lock()
        .expect("session map poisoned")
        .insert(live.handle.id.clone(), Arc::new(Mutex::new(live)));
    Ok((StatusCode::CREATED, Json(snapshot)))
}

async fn get_session(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SessionSnapshot>, ServiceError> {
    let slot = app.session(&id).await?;
    let live = slot.lock().await;
    Ok(Json(live.snapshot()))
}

async fn post_response(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(payload): Json<ResponsePayload>,
) -> Result<Json<SessionSnapshot>, ServiceError> {
    let response = payload.response().ok_or_else(|| {
        ServiceError::BadPayload(format!(
            "kind {:?} does not agree with new_expected {:?}",
            payload.kind, payload.new_expected
        ))
    })?;
    let slot = app.session(&id).await?;
    let mut live = slot.lock_owned().await;
    let sandbox = app.sandbox.clone();
    let limits = app.config.limits.clone();
    let files = SessionFiles::new(&app.session_dir(), &live.handle.id);
    let snapshot = tokio::task::spawn_blocking(move || -> Result<SessionSnapshot, ServiceError> {
        let live = &mut *live;
        live.state
            .apply_response(&live.prepared, payload.test_id, response, &sandbox, &limits)?;
        if live.state.is_running() {
            live.state.next_query(&live.prepared)?;
        }
        files.save(live)?;
        Ok(live.snapshot())
    })
    .await
    .map_err(|e| ServiceError::Join(e.to_string()))??;
    Ok(Json(snapshot))
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/problems", get(list_problems))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/response", post(post_response))
        .with_state(app)
}

pub async fn bind(addr: &str) -> Result<TcpListener, ServiceError> {
    TcpListener::bind(addr).await.map_err(|source| ServiceError::Bind {
        addr: addr.to_string(),
        source,
    })
}

/// Serves until the listener fails or the process is interrupted.
pub async fn serve(listener: TcpListener, app: Arc<AppState>) -> std::io::Result<()> {
    if let Ok(addr) = listener.local_addr() {
        tracing::info!(%addr, "session service listening");
    }
    axum::serve(listener, router(app)).await
}
