//! Test × code execution outcomes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{CodeCandidate, TestCandidate};
use crate::corpus::Problem;
use crate::sandbox::{ExecLimits, RunKind, RunResult, Sandbox, SandboxError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("cannot build a matrix without code candidates")]
    NoCodes,
    #[error("cannot build a matrix without test candidates")]
    NoTests,
    #[error("matrix has {got} cells, expected {expected}")]
    Incomplete { expected: usize, got: usize },
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Pass,
    AssertFail,
    Crash,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub duration_ms: u64,
}

impl Outcome {
    pub fn new(kind: OutcomeKind) -> Self {
        Outcome {
            kind,
            detail: None,
            duration_ms: 0,
        }
    }

    pub fn is_pass(&self) -> bool {
        self.kind == OutcomeKind::Pass
    }

    pub fn is_fail(&self) -> bool {
        self.kind == OutcomeKind::AssertFail
    }

    /// Crashes and timeouts: no observable output.
    pub fn is_crash(&self) -> bool {
        matches!(self.kind, OutcomeKind::Crash | OutcomeKind::Timeout)
    }

    fn from_run(r: RunResult) -> Result<Self, SandboxError> {
        let kind = match r.kind {
            RunKind::Pass => OutcomeKind::Pass,
            RunKind::AssertFail => OutcomeKind::AssertFail,
            RunKind::Crash => OutcomeKind::Crash,
            RunKind::Timeout => OutcomeKind::Timeout,
            RunKind::ProtocolError => {
                return Err(SandboxError::Protocol(r.message.unwrap_or_default()))
            }
        };
        let detail = match (r.exception_type, r.message) {
            (Some(t), Some(m)) if !m.is_empty() => Some(format!("{t}: {m}")),
            (Some(t), _) => Some(t),
            (None, m) => m.filter(|m| !m.is_empty()),
        };
        Ok(Outcome {
            kind,
            detail,
            duration_ms: r.duration_ms,
        })
    }
}

/// Prefix, candidate and assertion as one program.
pub fn assemble_program(prefix: &str, source: &str, assertion: &str) -> String {
    let mut program = String::new();
    if !prefix.trim().is_empty() {
        program.push_str(prefix.trim_end());
        program.push_str("\n\n");
    }
    program.push_str(source.trim_end());
    program.push_str("\n\n");
    program.push_str(assertion.trim());
    program.push('\n');
    program
}

/// Runs one assertion against one piece of source in the sandbox.
pub fn execute_assertion(
    problem: &Problem,
    source: &str,
    assertion: &str,
    limits: &ExecLimits,
    sandbox: &dyn Sandbox,
) -> Result<Outcome, SandboxError> {
    let program = assemble_program(&problem.prefix, source, assertion);
    Outcome::from_run(sandbox.run(&limits.request(program))?)
}

pub fn execute_pair(
    code: &CodeCandidate,
    test: &TestCandidate,
    problem: &Problem,
    limits: &ExecLimits,
    sandbox: &dyn Sandbox,
) -> Result<Outcome, SandboxError> {
    execute_assertion(problem, &code.source, &test.assertion, limits, sandbox)
}

/// Complete grid of outcomes, stored row-major by test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeMatrix {
    codes: Vec<usize>,
    tests: Vec<usize>,
    cells: Vec<Outcome>,
}

impl OutcomeMatrix {
    pub fn from_cells(
        codes: Vec<usize>,
        tests: Vec<usize>,
        cells: Vec<Outcome>,
    ) -> Result<Self, MatrixError> {
        if codes.is_empty() {
            return Err(MatrixError::NoCodes);
        }
        if tests.is_empty() {
            return Err(MatrixError::NoTests);
        }
        let expected = codes.len() * tests.len();
        if cells.len() != expected {
            return Err(MatrixError::Incomplete {
                expected,
                got: cells.len(),
            });
        }
        Ok(OutcomeMatrix {
            codes,
            tests,
            cells,
        })
    }

    /// Builds a matrix from outcome kinds given per test row.
    pub fn from_kinds(codes: Vec<usize>, tests: Vec<usize>, rows: &[Vec<OutcomeKind>]) -> Result<Self, MatrixError> {
        let cells = rows.iter().flatten().map(|k| Outcome::new(*k)).collect();
        Self::from_cells(codes, tests, cells)
    }

    pub fn codes(&self) -> &[usize] {
        &self.codes
    }

    pub fn tests(&self) -> &[usize] {
        &self.tests
    }

    fn test_index(&self, test: usize) -> Option<usize> {
        self.tests.iter().position(|&t| t == test)
    }

    fn code_index(&self, code: usize) -> Option<usize> {
        self.codes.iter().position(|&c| c == code)
    }

    pub fn has_test(&self, test: usize) -> bool {
        self.test_index(test).is_some()
    }

    pub fn row(&self, test: usize) -> Option<&[Outcome]> {
        let i = self.test_index(test)?;
        let n = self.codes.len();
        Some(&self.cells[i * n..(i + 1) * n])
    }

    pub fn cell(&self, test: usize, code: usize) -> Option<&Outcome> {
        let j = self.code_index(code)?;
        self.row(test).map(|r| &r[j])
    }

    fn select(&self, test: usize, pred: impl Fn(&Outcome) -> bool) -> Vec<usize> {
        self.row(test)
            .map(|row| {
                self.codes
                    .iter()
                    .zip(row)
                    .filter(|(_, o)| pred(o))
                    .map(|(&c, _)| c)
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn pass_set(&self, test: usize) -> Vec<usize> {
        self.select(test, Outcome::is_pass)
    }

    pub fn fail_set(&self, test: usize) -> Vec<usize> {
        self.select(test, Outcome::is_fail)
    }

    /// Crashes and timeouts.
    pub fn crash_set(&self, test: usize) -> Vec<usize> {
        self.select(test, Outcome::is_crash)
    }

    /// Outcome kinds per test row, ignoring timing and detail.
    pub fn kinds(&self) -> Vec<Vec<OutcomeKind>> {
        self.cells
            .chunks(self.codes.len())
            .map(|row| row.iter().map(|o| o.kind).collect())
            .collect()
    }
}

fn check_inputs(codes: &[CodeCandidate], tests: &[TestCandidate]) -> Result<(), MatrixError> {
    if codes.is_empty() {
        return Err(MatrixError::NoCodes);
    }
    if tests.is_empty() {
        return Err(MatrixError::NoTests);
    }
    Ok(())
}

/// Executes every pair on the current rayon pool.
pub fn build_matrix(
    codes: &[CodeCandidate],
    tests: &[TestCandidate],
    problem: &Problem,
    limits: &ExecLimits,
    sandbox: &dyn Sandbox,
) -> Result<OutcomeMatrix, MatrixError> {
    check_inputs(codes, tests)?;
    let cells = tests
        .par_iter()
        .flat_map_iter(|t| codes.iter().map(move |c| (t, c)))
        .map(|(t, c)| execute_pair(c, t, problem, limits, sandbox))
        .collect::<Result<Vec<_>, _>>()?;
    OutcomeMatrix::from_cells(
        codes.iter().map(|c| c.id).collect(),
        tests.iter().map(|t| t.id).collect(),
        cells,
    )
}

/// Same as [`build_matrix`] on the calling thread.
pub fn build_matrix_serial(
    codes: &[CodeCandidate],
    tests: &[TestCandidate],
    problem: &Problem,
    limits: &ExecLimits,
    sandbox: &dyn Sandbox,
) -> Result<OutcomeMatrix, MatrixError> {
    check_inputs(codes, tests)?;
    let mut cells = Vec::with_capacity(codes.len() * tests.len());
    for t in tests {
        for c in codes {
            cells.push(execute_pair(c, t, problem, limits, sandbox)?);
        }
    }
    OutcomeMatrix::from_cells(
        codes.iter().map(|c| c.id).collect(),
        tests.iter().map(|t| t.id).collect(),
        cells,
    )
}
