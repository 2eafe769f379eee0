//! Sandboxed execution of assembled candidate programs.
//!
//! The engine talks to runner processes over a line-delimited JSON protocol:
//! one [`RunRequest`] per line on stdin, one [`RunResult`] per line on
//! stdout. The bundled Python runner forks a fresh child for every request,
//! so a warm process can be reused without state leaking between programs.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Source of the bundled runner.
pub const PY_RUNNER: &str = include_str!("../runner/py_runner.py");

/// Environment variable naming the interpreter used for the runner.
pub const PYTHON_ENV: &str = "TICODER_PYTHON";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SandboxError {
    #[error("sandbox unavailable: {0}")]
    Unavailable(String),
    #[error("runner rejected request: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRequest {
    pub program: String,
    pub timeout_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_limit_bytes: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Pass,
    AssertFail,
    Crash,
    Timeout,
    /// The runner could not understand the request.
    ProtocolError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub kind: RunKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exception_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub duration_ms: u64,
}

/// Per-execution resource limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecLimits {
    pub timeout_ms: u64,
    pub memory_bytes: Option<u64>,
}

impl Default for ExecLimits {
    fn default() -> Self {
        ExecLimits {
            timeout_ms: 2000,
            memory_bytes: Some(512 * 1024 * 1024),
        }
    }
}

impl ExecLimits {
    pub fn request(&self, program: impl Into<String>) -> RunRequest {
        RunRequest {
            program: program.into(),
            timeout_ms: self.timeout_ms,
            memory_limit_bytes: self.memory_bytes,
        }
    }
}

/// Anything that can execute one program and classify how it ended.
pub trait Sandbox: Send + Sync {
    fn run(&self, request: &RunRequest) -> Result<RunResult, SandboxError>;
}

impl<S: Sandbox + ?Sized> Sandbox for std::sync::Arc<S> {
    fn run(&self, request: &RunRequest) -> Result<RunResult, SandboxError> {
        (**self).run(request)
    }
}

struct RunnerProcess {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

impl RunnerProcess {
    fn spawn(python: &str) -> Result<Self, SandboxError> {
        let mut child = Command::new(python)
            .arg("-I")
            .arg("-c")
            .arg(PY_RUNNER)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SandboxError::Unavailable(format!("cannot start {python}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child
            .stdout
            .take()
            .map(BufReader::new)
            .ok_or_else(|| SandboxError::Unavailable("runner stdout not captured".into()))?;
        Ok(RunnerProcess {
            child,
            stdin,
            stdout,
        })
    }

    fn roundtrip(&mut self, line: &str) -> std::io::Result<String> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| std::io::Error::other("runner stdin closed"))?;
        stdin.write_all(line.as_bytes())?;
        stdin.write_all(b"\n")?;
        stdin.flush()?;
        let mut out = String::new();
        if self.stdout.read_line(&mut out)? == 0 {
            return Err(std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                "runner exited",
            ));
        }
        Ok(out)
    }
}

impl Drop for RunnerProcess {
    fn drop(&mut self) {
        // Closing stdin is the orderly shutdown signal.
        drop(self.stdin.take());
        if self.child.wait().is_err() {
            let _ = self.child.kill();
        }
    }
}

/// A pool of warm Python runner processes, grown on demand.
pub struct PythonSandbox {
    python: String,
    idle: Mutex<Vec<RunnerProcess>>,
}

impl std::fmt::Debug for PythonSandbox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PythonSandbox")
            .field("python", &self.python)
            .finish_non_exhaustive()
    }
}

impl PythonSandbox {
    /// Uses `$TICODER_PYTHON`, falling back to `python3`.
    pub fn new() -> Result<Self, SandboxError> {
        let python = std::env::var(PYTHON_ENV).unwrap_or_else(|_| "python3".to_string());
        Self::with_interpreter(python)
    }

    /// Starts one runner and checks that it answers a trivial request.
    pub fn with_interpreter(python: impl Into<String>) -> Result<Self, SandboxError> {
        let sandbox = PythonSandbox {
            python: python.into(),
            idle: Mutex::new(Vec::new()),
        };
        let probe = sandbox.run(&ExecLimits::default().request("pass"))?;
        if probe.kind != RunKind::Pass {
            return Err(SandboxError::Unavailable(format!(
                "runner self-check returned {:?}",
                probe.kind
            )));
        }
        Ok(sandbox)
    }

    fn checkout(&self) -> Result<RunnerProcess, SandboxError> {
        let pooled = self.idle.lock().expect("runner pool poisoned").pop();
        match pooled {
            Some(p) => Ok(p),
            None => RunnerProcess::spawn(&self.python),
        }
    }

    fn checkin(&self, p: RunnerProcess) {
        self.idle.lock().expect("runner pool poisoned").push(p);
    }
}

impl Sandbox for PythonSandbox {
    fn run(&self, request: &RunRequest) -> Result<RunResult, SandboxError> {
        let line = serde_json::to_string(request).expect("requests serialize");
        let mut last_err = String::new();
        // A pooled runner may have died; retry once on a fresh process.
        for _ in 0..2 {
            let mut proc = self.checkout()?;
            match proc.roundtrip(&line) {
                Ok(reply) => {
                    let result: RunResult = serde_json::from_str(reply.trim()).map_err(|e| {
                        SandboxError::Unavailable(format!("unreadable runner reply {reply:?}: {e}"))
                    })?;
                    self.checkin(proc);
                    if result.kind == RunKind::ProtocolError {
                        return Err(SandboxError::Protocol(
                            result.message.unwrap_or_default(),
                        ));
                    }
                    return Ok(result);
                }
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(SandboxError::Unavailable(last_err))
    }
}
