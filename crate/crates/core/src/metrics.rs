//! Correctness against hidden tests, the pass@k estimator, and the ranked
//! pass@k@m check.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::CodeCandidate;
use crate::corpus::Problem;
use crate::matrix::execute_assertion;
use crate::sandbox::{ExecLimits, Sandbox, SandboxError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("pass@k undefined for n={n}, c={c}, k={k}")]
    Domain { n: usize, c: usize, k: usize },
    #[error("cannot aggregate over an empty dataset")]
    EmptyDataset,
}

/// A code is correct when every hidden test passes.
pub fn is_correct(
    code: &CodeCandidate,
    problem: &Problem,
    sandbox: &dyn Sandbox,
    limits: &ExecLimits,
) -> Result<bool, SandboxError> {
    for test in &problem.hidden_tests {
        let outcome = execute_assertion(problem, &code.source, test, limits, sandbox)?;
        if !outcome.is_pass() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Probability that `k` codes drawn without replacement from `n`, of which
/// `c` are correct, include a correct one: `1 - C(n-c, k) / C(n, k)`.
///
/// Evaluated as a running product so no binomial is ever formed.
pub fn pass_at_k(n: usize, c: usize, k: usize) -> Result<f64, MetricsError> {
    if c > n || k == 0 || k > n {
        return Err(MetricsError::Domain { n, c, k });
    }
    if n - c < k {
        return Ok(1.0);
    }
    let miss = ((n - c - k + 1)..=(n - c))
        .zip((n - k + 1)..=n)
        .fold(1.0_f64, |acc, (num, den)| acc * num as f64 / den as f64);
    Ok(1.0 - miss)
}

/// Whether one of the first `k` ranked codes is correct. An empty ranking
/// never is.
pub fn pass_at_k_at_m(ranked: &[usize], correct: impl Fn(usize) -> bool, k: usize) -> bool {
    ranked.iter().take(k).any(|&c| correct(c))
}

/// Fraction of true bits.
pub fn aggregate_bits(bits: &[bool]) -> Result<f64, MetricsError> {
    if bits.is_empty() {
        return Err(MetricsError::EmptyDataset);
    }
    Ok(bits.iter().filter(|&&b| b).count() as f64 / bits.len() as f64)
}

/// Mean of per-problem values.
pub fn aggregate_mean(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyDataset);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Per-problem evaluation record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemEval {
    pub problem_id: String,
    /// Deduplicated candidate count.
    pub n: usize,
    /// Correct candidate count.
    pub c: usize,
    pub correct_codes: Vec<usize>,
    /// `ranked[m]`: ranking after `m` queries.
    pub ranked: Vec<Vec<usize>>,
}

impl ProblemEval {
    pub fn is_correct(&self, code: usize) -> bool {
        self.correct_codes.contains(&code)
    }

    /// pass@k with `k` clamped to the available `n`.
    pub fn baseline(&self, k: usize) -> Result<f64, MetricsError> {
        pass_at_k(self.n, self.c, k.min(self.n))
    }

    pub fn ranked_hit(&self, k: usize, m: usize) -> bool {
        self.ranked
            .get(m)
            .is_some_and(|r| pass_at_k_at_m(r, |c| self.is_correct(c), k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> f64 {
        if k > n {
            return 0.0;
        }
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn pass_at_k_examples() {
        assert_eq!(pass_at_k(100, 0, 1).unwrap(), 0.0);
        assert_eq!(pass_at_k(100, 0, 50).unwrap(), 0.0);
        assert_eq!(pass_at_k(7, 7, 3).unwrap(), 1.0);
        // 5 of the 6 two-element samples from {a, b, X, Y} hold a or b.
        assert!((pass_at_k(4, 2, 2).unwrap() - 5.0 / 6.0).abs() < 1e-12);
        assert!((pass_at_k(10, 5, 1).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pass_at_k_matches_binomials_for_large_n() {
        for (n, c, k) in [(100, 3, 10), (100, 50, 5), (200, 1, 100)] {
            let expected = 1.0 - binom(n - c, k) / binom(n, k);
            assert!((pass_at_k(n, c, k).unwrap() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn pass_at_k_domain() {
        assert!(pass_at_k(3, 4, 1).is_err());
        assert!(pass_at_k(3, 1, 0).is_err());
        assert!(pass_at_k(3, 1, 4).is_err());
    }

    #[test]
    fn ranked_examples() {
        let correct = |c: usize| c == 3;
        assert!(!pass_at_k_at_m(&[2, 3], correct, 1));
        assert!(pass_at_k_at_m(&[2, 3], correct, 2));
        assert!(!pass_at_k_at_m(&[], correct, 5));
        assert!(pass_at_k_at_m(&[3, 2], correct, 1));
        assert!(pass_at_k_at_m(&[2, 3], correct, 10));
    }

    #[test]
    fn aggregation() {
        assert_eq!(aggregate_bits(&[true, false]).unwrap(), 0.5);
        assert_eq!(aggregate_bits(&[true, true]).unwrap(), 1.0);
        assert_eq!(aggregate_bits(&[]), Err(MetricsError::EmptyDataset));
        assert_eq!(aggregate_mean(&[0.25, 0.75]).unwrap(), 0.5);
    }

    #[test]
    fn monotone_in_k_and_c() {
        for n in 1..=20 {
            for c in 0..=n {
                let mut prev = 0.0;
                for k in 1..=n {
                    let v = pass_at_k(n, c, k).unwrap();
                    assert!(v + 1e-15 >= prev);
                    prev = v;
                    if c < n {
                        assert!(pass_at_k(n, c + 1, k).unwrap() + 1e-15 >= v);
                    }
                }
                assert_eq!(pass_at_k(n, c, n).unwrap(), if c > 0 { 1.0 } else { 0.0 });
            }
        }
    }
}
