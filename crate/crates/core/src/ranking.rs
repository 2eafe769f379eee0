//! Discriminative test ranking, response-driven pruning, and passing-count
//! code ranking.
//!
//! Crashing and timed-out executions never count as evidence for either side
//! of a test: they are excluded from scores, pruned on `Pass` (the code did
//! not demonstrate the asserted behaviour) and kept on `Fail` (a crash is not
//! the rejected output).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{Outcome, OutcomeMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RankingError {
    #[error("test {0} is not in the outcome matrix")]
    UnknownTest(usize),
    #[error("an output-corrected response needs the re-executed test row")]
    MissingRefreshedRow,
}

/// Code ids still under consideration.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SurvivorSet(BTreeSet<usize>);

impl SurvivorSet {
    pub fn all(matrix: &OutcomeMatrix) -> Self {
        SurvivorSet(matrix.codes().iter().copied().collect())
    }

    pub fn contains(&self, code: usize) -> bool {
        self.0.contains(&code)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.0.iter().copied().collect()
    }

    pub fn is_subset(&self, other: &SurvivorSet) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl FromIterator<usize> for SurvivorSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        SurvivorSet(iter.into_iter().collect())
    }
}

/// Test ids that may still be surfaced as queries.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TestPool(BTreeSet<usize>);

impl TestPool {
    pub fn contains(&self, test: usize) -> bool {
        self.0.contains(&test)
    }

    pub fn remove(&mut self, test: usize) -> bool {
        self.0.remove(&test)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<usize> for TestPool {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        TestPool(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    Pass,
    Fail,
    Undefined,
    FailWithOutput,
}

/// A user's verdict on a surfaced test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UserResponse {
    Pass,
    Fail,
    Undefined,
    /// The test is wrong; `new_expected` is the value it should expect.
    FailWithOutput { new_expected: String },
}

impl UserResponse {
    pub fn kind(&self) -> ResponseKind {
        match self {
            UserResponse::Pass => ResponseKind::Pass,
            UserResponse::Fail => ResponseKind::Fail,
            UserResponse::Undefined => ResponseKind::Undefined,
            UserResponse::FailWithOutput { .. } => ResponseKind::FailWithOutput,
        }
    }

    pub fn new_expected(&self) -> Option<&str> {
        match self {
            UserResponse::FailWithOutput { new_expected } => Some(new_expected),
            _ => None,
        }
    }

    /// Rebuilds a response from its flat parts; `None` if they disagree.
    pub fn from_parts(kind: ResponseKind, new_expected: Option<String>) -> Option<Self> {
        match (kind, new_expected) {
            (ResponseKind::Pass, None) => Some(UserResponse::Pass),
            (ResponseKind::Fail, None) => Some(UserResponse::Fail),
            (ResponseKind::Undefined, None) => Some(UserResponse::Undefined),
            (ResponseKind::FailWithOutput, Some(e)) if !e.trim().is_empty() => {
                Some(UserResponse::FailWithOutput { new_expected: e })
            }
            _ => None,
        }
    }
}

/// Outcomes of a re-executed (output-corrected) test, by code id.
pub type OutcomeRow = BTreeMap<usize, Outcome>;

fn split_counts(test: usize, survivors: &SurvivorSet, matrix: &OutcomeMatrix) -> Result<(usize, usize), RankingError> {
    let row = matrix.row(test).ok_or(RankingError::UnknownTest(test))?;
    let (mut pass, mut fail) = (0, 0);
    for (code, outcome) in matrix.codes().iter().zip(row) {
        if !survivors.contains(*code) {
            continue;
        }
        if outcome.is_pass() {
            pass += 1;
        } else if outcome.is_fail() {
            fail += 1;
        }
    }
    Ok((pass, fail))
}

/// `min(P, F) / max(P, F)` over surviving codes, where `P` and `F` count
/// passing and assertion-failing codes; 0 when both are empty.
pub fn discriminative_score(
    test: usize,
    survivors: &SurvivorSet,
    matrix: &OutcomeMatrix,
) -> Result<f64, RankingError> {
    let (pass, fail) = split_counts(test, survivors, matrix)?;
    Ok(score_from_counts(pass, fail))
}

pub fn score_from_counts(pass: usize, fail: usize) -> f64 {
    let hi = pass.max(fail);
    if hi == 0 {
        0.0
    } else {
        pass.min(fail) as f64 / hi as f64
    }
}

/// Pool tests by descending score, ties by ascending id. Tests missing from
/// the matrix are skipped.
pub fn rank_tests(pool: &TestPool, survivors: &SurvivorSet, matrix: &OutcomeMatrix) -> Vec<usize> {
    let mut scored: Vec<(usize, f64)> = pool
        .iter()
        .filter_map(|t| discriminative_score(t, survivors, matrix).ok().map(|s| (t, s)))
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    scored.into_iter().map(|(t, _)| t).collect()
}

/// Removes the codes whose behaviour on `test` contradicts `response`.
pub fn prune(
    survivors: &SurvivorSet,
    test: usize,
    response: &UserResponse,
    matrix: &OutcomeMatrix,
    refreshed_row: Option<&OutcomeRow>,
) -> Result<SurvivorSet, RankingError> {
    if !matrix.has_test(test) {
        return Err(RankingError::UnknownTest(test));
    }
    let outcome = |code: usize| matrix.cell(test, code);
    let kept = match response {
        UserResponse::Undefined => survivors.clone(),
        UserResponse::Pass => survivors
            .iter()
            .filter(|&c| outcome(c).is_some_and(Outcome::is_pass))
            .collect(),
        UserResponse::Fail => survivors
            .iter()
            .filter(|&c| !outcome(c).is_some_and(Outcome::is_pass))
            .collect(),
        UserResponse::FailWithOutput { .. } => {
            let row = refreshed_row.ok_or(RankingError::MissingRefreshedRow)?;
            survivors
                .iter()
                .filter(|c| row.get(c).is_some_and(Outcome::is_pass))
                .collect()
        }
    };
    Ok(kept)
}

/// Survivors by descending count of passed tests, ties by ascending id.
/// `overrides` replaces a test's matrix row (output-corrected tests).
pub fn rank_codes(
    survivors: &SurvivorSet,
    tests: &[usize],
    matrix: &OutcomeMatrix,
    overrides: &BTreeMap<usize, OutcomeRow>,
) -> Vec<usize> {
    let passes = |code: usize, test: usize| match overrides.get(&test) {
        Some(row) => row.get(&code).is_some_and(Outcome::is_pass),
        None => matrix.cell(test, code).is_some_and(Outcome::is_pass),
    };
    let mut scored: Vec<(usize, usize)> = survivors
        .iter()
        .map(|c| (c, tests.iter().filter(|&&t| passes(c, t)).count()))
        .collect();
    scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.into_iter().map(|(c, _)| c).collect()
}
