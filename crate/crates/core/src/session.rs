//! The interaction loop: surface the most discriminating test, take a
//! verdict, prune, repeat. Also the simulated user that answers from the
//! hidden reference implementation.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{render_assertion, CandidateError, CandidateSet, TestCandidate, TestStatus};
use crate::corpus::Problem;
use crate::matrix::{assemble_program, execute_assertion, OutcomeKind, OutcomeMatrix};
use crate::ranking::{self, OutcomeRow, RankingError, ResponseKind, SurvivorSet, TestPool, UserResponse};
use crate::sandbox::{ExecLimits, Sandbox, SandboxError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("session has terminated ({0:?})")]
    SessionTerminated(Terminal),
    #[error("{response:?} is not a legal response in {mode:?} mode")]
    IllegalResponseForMode { mode: Mode, response: ResponseKind },
    #[error("test {got} is not the current query (current: {current:?})")]
    StaleQuery { got: usize, current: Option<usize> },
    #[error("unknown test {0}")]
    UnknownTest(usize),
    #[error("transcript diverged at step {step}: expected query {expected}, engine surfaced {surfaced:?}")]
    ReplayDiverged {
        step: usize,
        expected: usize,
        surfaced: Option<usize>,
    },
    #[error(transparent)]
    Candidate(#[from] CandidateError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    PassFail,
    Output,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "passfail" | "pass-fail" | "pass_fail" => Ok(Mode::PassFail),
            "output" => Ok(Mode::Output),
            other => Err(format!("unknown mode {other:?} (expected passfail or output)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::PassFail => "passfail",
            Mode::Output => "output",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Running,
    Exhausted,
    NoTests,
    EmptySurvivors,
}

/// One answered query, in the transcript export shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub test_id: usize,
    /// The assertion as it was shown.
    pub assertion: String,
    pub response: ResponseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_expected: Option<String>,
}

impl TranscriptEntry {
    pub fn user_response(&self) -> Option<UserResponse> {
        UserResponse::from_parts(self.response, self.new_expected.clone())
    }
}

/// A test whose expected value was corrected, re-run against the survivors
/// of the moment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectedTest {
    pub assertion: String,
    pub row: OutcomeRow,
}

/// Everything a session reads but never changes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreparedProblem {
    pub problem: Problem,
    pub candidates: CandidateSet,
    pub matrix: OutcomeMatrix,
}

impl PreparedProblem {
    pub fn test(&self, id: usize) -> Result<&TestCandidate, SessionError> {
        self.candidates.test(id).ok_or(SessionError::UnknownTest(id))
    }

    pub fn test_ids(&self) -> Vec<usize> {
        self.matrix.tests().to_vec()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Test(usize),
    Done(Terminal),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub problem_id: String,
    pub mode: Mode,
    pub survivors: SurvivorSet,
    pub pool: TestPool,
    pub transcript: Vec<TranscriptEntry>,
    pub budget: usize,
    pub initial_budget: usize,
    pub terminal: Terminal,
    /// The surfaced query awaiting a response.
    pub current: Option<usize>,
    pub corrected: BTreeMap<usize, CorrectedTest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionResult {
    /// Tests the user approved, with output-corrected ones in corrected form.
    pub approved_tests: Vec<String>,
    pub ranked_codes: Vec<usize>,
    pub queries_used: usize,
}

impl SessionState {
    /// A fresh session over every code. Output mode only queries tests whose
    /// expected value can be corrected.
    pub fn new(prepared: &PreparedProblem, mode: Mode, budget: usize) -> Self {
        let pool = prepared
            .candidates
            .tests
            .iter()
            .filter(|t| prepared.matrix.has_test(t.id))
            .filter(|t| mode == Mode::PassFail || t.parsed.is_some())
            .map(|t| t.id)
            .collect();
        SessionState {
            problem_id: prepared.problem.id.clone(),
            mode,
            survivors: SurvivorSet::all(&prepared.matrix),
            pool,
            transcript: Vec::new(),
            budget,
            initial_budget: budget,
            terminal: Terminal::Running,
            current: None,
            corrected: BTreeMap::new(),
        }
    }

    pub fn is_running(&self) -> bool {
        self.terminal == Terminal::Running
    }

    pub fn test_status(&self, test: &TestCandidate) -> TestStatus {
        if self.corrected.contains_key(&test.id) || self.transcript.iter().any(|e| e.test_id == test.id) {
            TestStatus::Answered
        } else {
            test.initial_status()
        }
    }

    /// Surfaces the best-scoring pool test, or finishes the session when the
    /// budget is spent or nothing is left to ask.
    pub fn next_query(&mut self, prepared: &PreparedProblem) -> Result<Query, SessionError> {
        if !self.is_running() {
            return Err(SessionError::SessionTerminated(self.terminal));
        }
        if let Some(t) = self.current {
            return Ok(Query::Test(t));
        }
        if self.survivors.is_empty() {
            self.terminal = Terminal::EmptySurvivors;
        } else if self.budget == 0 {
            self.terminal = Terminal::Exhausted;
        } else if self.pool.is_empty() {
            self.terminal = Terminal::NoTests;
        }
        if !self.is_running() {
            return Ok(Query::Done(self.terminal));
        }
        match ranking::rank_tests(&self.pool, &self.survivors, &prepared.matrix).first() {
            Some(&t) => {
                self.current = Some(t);
                Ok(Query::Test(t))
            }
            None => {
                self.terminal = Terminal::NoTests;
                Ok(Query::Done(self.terminal))
            }
        }
    }

    /// Applies a verdict on the current query.
    pub fn apply_response(
        &mut self,
        prepared: &PreparedProblem,
        test_id: usize,
        response: UserResponse,
        sandbox: &dyn Sandbox,
        limits: &ExecLimits,
    ) -> Result<(), SessionError> {
        if !self.is_running() {
            return Err(SessionError::SessionTerminated(self.terminal));
        }
        if self.current != Some(test_id) {
            return Err(SessionError::StaleQuery {
                got: test_id,
                current: self.current,
            });
        }
        if self.mode == Mode::PassFail && response.kind() == ResponseKind::FailWithOutput {
            return Err(SessionError::IllegalResponseForMode {
                mode: self.mode,
                response: response.kind(),
            });
        }
        let test = prepared.test(test_id)?;

        let refreshed = match &response {
            UserResponse::FailWithOutput { new_expected } => {
                let parsed = test.parsed.as_ref().ok_or(SessionError::IllegalResponseForMode {
                    mode: self.mode,
                    response: ResponseKind::FailWithOutput,
                })?;
                let assertion = render_assertion(parsed, Some(new_expected))?;
                let survivors = self.survivors.to_vec();
                let row = survivors
                    .par_iter()
                    .map(|&c| {
                        let code = prepared.candidates.code(c).expect("survivors come from the matrix");
                        execute_assertion(&prepared.problem, &code.source, &assertion, limits, sandbox)
                            .map(|o| (c, o))
                    })
                    .collect::<Result<OutcomeRow, _>>()?;
                Some(CorrectedTest { assertion, row })
            }
            _ => None,
        };

        self.survivors = ranking::prune(
            &self.survivors,
            test_id,
            &response,
            &prepared.matrix,
            refreshed.as_ref().map(|c| &c.row),
        )?;
        if let Some(c) = refreshed {
            self.corrected.insert(test_id, c);
        }
        self.pool.remove(test_id);
        self.transcript.push(TranscriptEntry {
            test_id,
            assertion: test.assertion.clone(),
            response: response.kind(),
            new_expected: response.new_expected().map(str::to_string),
        });
        self.budget = self.budget.saturating_sub(1);
        self.current = None;
        if self.survivors.is_empty() {
            self.terminal = Terminal::EmptySurvivors;
        }
        Ok(())
    }

    /// Survivors ranked by passed tests over the full test set, with
    /// corrected tests substituted.
    pub fn ranked_codes(&self, prepared: &PreparedProblem) -> Vec<usize> {
        let overrides: BTreeMap<usize, OutcomeRow> = self
            .corrected
            .iter()
            .map(|(t, c)| (*t, c.row.clone()))
            .collect();
        ranking::rank_codes(&self.survivors, prepared.matrix.tests(), &prepared.matrix, &overrides)
    }

    pub fn result(&self, prepared: &PreparedProblem) -> SessionResult {
        let approved_tests = self
            .transcript
            .iter()
            .filter_map(|e| match e.response {
                ResponseKind::Pass => Some(e.assertion.clone()),
                ResponseKind::FailWithOutput => self.corrected.get(&e.test_id).map(|c| c.assertion.clone()),
                _ => None,
            })
            .collect();
        SessionResult {
            approved_tests,
            ranked_codes: self.ranked_codes(prepared),
            queries_used: self.transcript.len(),
        }
    }
}

/// Marker prefixing the value reported by [`probe_program`].
const VALUE_MARKER: &str = "__ticoder_value__:";

/// A program that evaluates `call` and reports `repr` of the result through
/// an assertion message, but only when the repr reads back as an equal
/// literal. Otherwise it exits cleanly.
fn probe_program(prefix: &str, reference: &str, call: &str) -> String {
    let probe = format!(
        "__ticoder_v = {call}\n\
         __ticoder_r = repr(__ticoder_v)\n\
         import ast as __ticoder_ast\n\
         try:\n    __ticoder_ok = __ticoder_ast.literal_eval(__ticoder_r) == __ticoder_v and len(__ticoder_r) < 4000\n\
         except Exception:\n    __ticoder_ok = False\n\
         if __ticoder_ok:\n    raise AssertionError({VALUE_MARKER:?} + __ticoder_r)"
    );
    assemble_program(prefix, reference, &probe)
}

/// Answers a query the way the hidden reference implementation would.
///
/// The reference passing gives `Pass`; the reference crashing or timing out
/// gives `Undefined`; an assertion failure gives `Fail`, or in Output mode
/// the reference's own value as a corrected expectation when that value has
/// a stable literal form.
pub fn oracle_respond(
    problem: &Problem,
    test: &TestCandidate,
    mode: Mode,
    sandbox: &dyn Sandbox,
    limits: &ExecLimits,
) -> Result<UserResponse, SessionError> {
    let outcome = execute_assertion(problem, &problem.reference, &test.assertion, limits, sandbox)?;
    match outcome.kind {
        OutcomeKind::Pass => Ok(UserResponse::Pass),
        OutcomeKind::Crash | OutcomeKind::Timeout => Ok(UserResponse::Undefined),
        OutcomeKind::AssertFail => {
            let parsed = match (&test.parsed, mode) {
                (Some(p), Mode::Output) => p,
                _ => return Ok(UserResponse::Fail),
            };
            let program = probe_program(&problem.prefix, &problem.reference, &parsed.call());
            let probe = sandbox.run(&limits.request(program))?;
            let value = probe
                .message
                .as_deref()
                .and_then(|m| m.strip_prefix(VALUE_MARKER))
                .filter(|_| probe.kind == crate::sandbox::RunKind::AssertFail);
            match value {
                Some(v) if render_assertion(parsed, Some(v)).is_ok() => Ok(UserResponse::FailWithOutput {
                    new_expected: v.to_string(),
                }),
                _ => Ok(UserResponse::Fail),
            }
        }
    }
}

/// A completed simulated session plus the code ranking after each query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulatedRun {
    pub state: SessionState,
    pub result: SessionResult,
    /// `history[m]` is the ranking after `m` answered queries, for
    /// `m = 0..=budget`. Rankings repeat once the session ends early.
    pub history: Vec<Vec<usize>>,
}

pub fn run_simulated(
    prepared: &PreparedProblem,
    mode: Mode,
    budget: usize,
    sandbox: &dyn Sandbox,
    limits: &ExecLimits,
) -> Result<SimulatedRun, SessionError> {
    let mut state = SessionState::new(prepared, mode, budget);
    let mut history = vec![state.ranked_codes(prepared)];
    while state.is_running() {
        let Query::Test(t) = state.next_query(prepared)? else {
            break;
        };
        let test = prepared.test(t)?;
        let response = oracle_respond(&prepared.problem, test, mode, sandbox, limits)?;
        state.apply_response(prepared, t, response, sandbox, limits)?;
        history.push(state.ranked_codes(prepared));
    }
    let last = history.last().cloned().unwrap_or_default();
    history.resize(budget + 1, last);
    let result = state.result(prepared);
    Ok(SimulatedRun {
        state,
        result,
        history,
    })
}

/// Re-applies a recorded transcript to a fresh session.
pub fn replay(
    prepared: &PreparedProblem,
    mode: Mode,
    budget: usize,
    transcript: &[TranscriptEntry],
    sandbox: &dyn Sandbox,
    limits: &ExecLimits,
) -> Result<SessionState, SessionError> {
    let mut state = SessionState::new(prepared, mode, budget);
    for (step, entry) in transcript.iter().enumerate() {
        let surfaced = match state.next_query(prepared)? {
            Query::Test(t) => Some(t),
            Query::Done(_) => None,
        };
        if surfaced != Some(entry.test_id) {
            return Err(SessionError::ReplayDiverged {
                step,
                expected: entry.test_id,
                surfaced,
            });
        }
        let response = entry.user_response().ok_or(SessionError::IllegalResponseForMode {
            mode,
            response: entry.response,
        })?;
        state.apply_response(prepared, entry.test_id, response, sandbox, limits)?;
    }
    Ok(state)
}

pub fn transcript_to_jsonl(transcript: &[TranscriptEntry]) -> String {
    transcript
        .iter()
        .map(|e| serde_json::to_string(e).expect("transcript entries serialize") + "\n")
        .collect()
}

pub fn transcript_from_jsonl(text: &str) -> Result<Vec<TranscriptEntry>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
