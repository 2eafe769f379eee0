#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use ticoder_core::corpus::{load_fixture, Fixture};
use ticoder_core::matrix::build_matrix;
use ticoder_core::{CandidateSet, ExecLimits, PreparedProblem, PythonSandbox};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> Fixture {
    load_fixture(&fixture_path(name)).expect("bundled fixture loads")
}

pub fn sandbox() -> &'static PythonSandbox {
    static SANDBOX: OnceLock<PythonSandbox> = OnceLock::new();
    SANDBOX.get_or_init(|| PythonSandbox::new().expect("python3 runner available"))
}

pub fn limits() -> ExecLimits {
    ExecLimits {
        timeout_ms: 2000,
        ..ExecLimits::default()
    }
}

/// Every problem of a fixture with its matrix built.
pub fn prepare_all(name: &str) -> Vec<PreparedProblem> {
    let fx = fixture(name);
    fx.problems
        .problems
        .iter()
        .map(|p| {
            let candidates = CandidateSet::build(p, &fx.candidates[&p.id]).unwrap();
            let matrix = build_matrix(&candidates.codes, &candidates.tests, p, &limits(), sandbox()).unwrap();
            PreparedProblem {
                problem: p.clone(),
                candidates,
                matrix,
            }
        })
        .collect()
}

pub fn prepare_one(name: &str) -> PreparedProblem {
    prepare_all(name).remove(0)
}
