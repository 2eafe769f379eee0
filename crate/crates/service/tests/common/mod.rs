#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ticoder_core::corpus::{load_fixture, parse_fixture, Fixture};
use ticoder_core::{ExecLimits, PythonSandbox, Sandbox};
use ticoder_service::{AppState, ServiceConfig};

pub fn core_fixture(name: &str) -> Fixture {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name);
    load_fixture(&path).expect("bundled fixture loads")
}

/// A problem whose tests carry no `== expected` part.
pub fn unparseable_fixture() -> Fixture {
    let line = serde_json::json!({
        "id": "local/square",
        "intent": "Return the square of x.",
        "header": "def square(x):",
        "reference": "def square(x):\n    return x * x",
        "hidden_tests": ["assert square(3) == 9"],
        "entry_point": "square",
        "codes": [
            {"id": 0, "source": "def square(x):\n    return x * x"},
            {"id": 1, "source": "def square(x):\n    return x + x"}
        ],
        "tests": [
            {"id": 0, "assertion": "assert square(3) > 8"},
            {"id": 1, "assertion": "assert isinstance(square(2), int)"}
        ]
    });
    parse_fixture("local", &line.to_string()).unwrap()
}

pub fn state(fixture: Fixture, data_dir: &Path, budget: usize) -> Arc<AppState> {
    let sandbox: Arc<dyn Sandbox> = Arc::new(PythonSandbox::new().expect("python3 runner available"));
    let config = ServiceConfig {
        data_dir: data_dir.to_path_buf(),
        limits: ExecLimits::default(),
        default_budget: budget,
    };
    AppState::new(fixture.problems, fixture.candidates, sandbox, config).unwrap()
}

/// Serves `app` on an ephemeral port and returns its base URL.
pub async fn spawn(app: Arc<AppState>) -> String {
    let listener = ticoder_service::bind("127.0.0.1:0").await.unwrap();
    let addr: SocketAddr = listener.local_addr().unwrap();
    tokio::spawn(ticoder_service::serve(listener, app));
    format!("http://{addr}")
}
