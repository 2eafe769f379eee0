//! Interactive test-driven selection among sampled code candidates.
//!
//! A problem's sampled codes and tests are executed pairwise into an
//! [`matrix::OutcomeMatrix`]. A [`session::SessionState`] then repeatedly
//! surfaces the most discriminating test, prunes candidates by the user's
//! verdict, and re-ranks what survives.

pub mod api;
pub mod candidates;
pub mod corpus;
pub mod evaluate;
pub mod gateway;
pub mod matrix;
pub mod metrics;
pub mod pysrc;
pub mod ranking;
pub mod report;
pub mod sandbox;
pub mod session;

pub use candidates::{CandidateRecord, CandidateSet, CodeCandidate, TestCandidate};
pub use corpus::{Problem, ProblemSet};
pub use matrix::{build_matrix, Outcome, OutcomeKind, OutcomeMatrix};
pub use ranking::{SurvivorSet, UserResponse};
pub use sandbox::{ExecLimits, PythonSandbox, Sandbox};
pub use session::{Mode, PreparedProblem, Query, SessionState, Terminal};
