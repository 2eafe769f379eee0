//! Offline evaluation: candidates to matrix to simulated sessions to
//! per-problem records.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::candidates::{CandidateError, CandidateRecord, CandidateSet};
use crate::corpus::{Problem, ProblemSet};
use crate::matrix::{build_matrix, MatrixError};
use crate::metrics::{is_correct, ProblemEval};
use crate::sandbox::{ExecLimits, Sandbox, SandboxError};
use crate::session::{run_simulated, Mode, PreparedProblem, SessionError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no candidates for problem {0}")]
    MissingCandidates(String),
    #[error("problem {problem}: {source}")]
    Candidate {
        problem: String,
        source: CandidateError,
    },
    #[error("problem {problem}: {source}")]
    Matrix { problem: String, source: MatrixError },
    #[error("problem {problem}: {source}")]
    Session { problem: String, source: SessionError },
    #[error("problem {problem}: {source}")]
    Sandbox { problem: String, source: SandboxError },
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

/// A problem ready for evaluation. `prepared` is absent when the problem has
/// no codes or no tests, since no matrix exists then.
#[derive(Debug, Clone)]
pub struct EvalInput {
    pub candidates: CandidateSet,
    pub prepared: Option<PreparedProblem>,
    pub correct_codes: Vec<usize>,
}

pub fn prepare(
    problem: &Problem,
    record: &CandidateRecord,
    sandbox: &dyn Sandbox,
    limits: &ExecLimits,
) -> Result<EvalInput, EvalError> {
    let candidates = CandidateSet::build(problem, record).map_err(|source| EvalError::Candidate {
        problem: problem.id.clone(),
        source,
    })?;
    let mut correct_codes = Vec::new();
    for code in &candidates.codes {
        let ok = is_correct(code, problem, sandbox, limits).map_err(|source| EvalError::Sandbox {
            problem: problem.id.clone(),
            source,
        })?;
        if ok {
            correct_codes.push(code.id);
        }
    }
    let prepared = if candidates.codes.is_empty() || candidates.tests.is_empty() {
        None
    } else {
        let matrix = build_matrix(&candidates.codes, &candidates.tests, problem, limits, sandbox).map_err(
            |source| EvalError::Matrix {
                problem: problem.id.clone(),
                source,
            },
        )?;
        Some(PreparedProblem {
            problem: problem.clone(),
            candidates: candidates.clone(),
            matrix,
        })
    };
    Ok(EvalInput {
        candidates,
        prepared,
        correct_codes,
    })
}

/// Runs one simulated session with budget `max_m` and records the ranking
/// after every query count `m = 0..=max_m`.
pub fn evaluate_input(
    problem: &Problem,
    input: &EvalInput,
    mode: Mode,
    max_m: usize,
    sandbox: &dyn Sandbox,
    limits: &ExecLimits,
) -> Result<ProblemEval, EvalError> {
    let ranked = match &input.prepared {
        Some(prepared) => {
            run_simulated(prepared, mode, max_m, sandbox, limits)
                .map_err(|source| EvalError::Session {
                    problem: problem.id.clone(),
                    source,
                })?
                .history
        }
        // Without tests every code ties at zero passes.
        None => vec![input.candidates.codes.iter().map(|c| c.id).collect(); max_m + 1],
    };
    Ok(ProblemEval {
        problem_id: problem.id.clone(),
        n: input.candidates.codes.len(),
        c: input.correct_codes.len(),
        correct_codes: input.correct_codes.clone(),
        ranked,
    })
}

pub fn evaluate_problem(
    problem: &Problem,
    record: &CandidateRecord,
    mode: Mode,
    max_m: usize,
    sandbox: &dyn Sandbox,
    limits: &ExecLimits,
) -> Result<ProblemEval, EvalError> {
    let input = prepare(problem, record, sandbox, limits)?;
    evaluate_input(problem, &input, mode, max_m, sandbox, limits)
}

/// Evaluates every problem on a pool of `workers` threads. Results follow
/// the problem set's order.
pub fn evaluate_dataset(
    problems: &ProblemSet,
    candidates: &BTreeMap<String, CandidateRecord>,
    mode: Mode,
    max_m: usize,
    workers: usize,
    sandbox: &dyn Sandbox,
    limits: &ExecLimits,
) -> Result<Vec<ProblemEval>, EvalError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))?;
    pool.install(|| {
        problems
            .problems
            .par_iter()
            .map(|p| {
                let record = candidates
                    .get(&p.id)
                    .ok_or_else(|| EvalError::MissingCandidates(p.id.clone()))?;
                evaluate_problem(p, record, mode, max_m, sandbox, limits)
            })
            .collect()
    })
}
