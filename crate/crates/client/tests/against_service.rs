use std::path::PathBuf;
use std::sync::Arc;

use ticoder_client::{Client, ClientError};
use ticoder_core::api::ResponsePayload;
use ticoder_core::corpus::load_fixture;
use ticoder_core::ranking::ResponseKind;
use ticoder_core::{ExecLimits, Mode, PythonSandbox, Sandbox, Terminal, UserResponse};
use ticoder_service::{AppState, ServiceConfig};

async fn start(dir: &std::path::Path) -> Client {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/running_example.jsonl");
    let fx = load_fixture(&path).unwrap();
    let sandbox: Arc<dyn Sandbox> = Arc::new(PythonSandbox::new().unwrap());
    let config = ServiceConfig {
        data_dir: dir.to_path_buf(),
        limits: ExecLimits::default(),
        default_budget: 5,
    };
    let app = AppState::new(fx.problems, fx.candidates, sandbox, config).unwrap();
    let listener = ticoder_service::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(ticoder_service::serve(listener, app));
    Client::new(format!("http://{addr}/"))
}

#[tokio::test(flavor = "multi_thread")]
async fn full_session_through_the_client() {
    let dir = tempfile::tempdir().unwrap();
    let client = start(dir.path()).await;
    assert_eq!(client.health().await.unwrap().status, "ok");
    let problems = client.problems().await.unwrap();
    assert_eq!(problems.len(), 1);
    assert_eq!(problems[0].codes, 3);

    let mut snap = client.create_session("mbpp/16", Mode::PassFail, None).await.unwrap();
    let id = snap.session.id.clone();
    // Hidden tests say "Aaab_abbbc" and "aab_cbbbc_abc" are rejected.
    while let Some(q) = snap.current_query.clone() {
        let answer = if q.assertion.contains("\"aab_cbbbc\"") {
            UserResponse::Pass
        } else {
            UserResponse::Fail
        };
        snap = client.respond(&id, q.test_id, &answer).await.unwrap();
    }
    assert_ne!(snap.status, Terminal::Running);
    let result = snap.result.clone().unwrap();
    assert_eq!(result.ranked_codes.first(), Some(&2));
    assert_eq!(client.session(&id).await.unwrap(), snap);
}

#[tokio::test(flavor = "multi_thread")]
async fn service_errors_carry_the_error_body() {
    let dir = tempfile::tempdir().unwrap();
    let client = start(dir.path()).await;
    let err = client.create_session("nope", Mode::Output, None).await.unwrap_err();
    assert_eq!(err.code(), Some("unknown_problem"));
    assert_eq!(err.status().map(|s| s.as_u16()), Some(404));

    let snap = client.create_session("mbpp/16", Mode::PassFail, Some(1)).await.unwrap();
    let bad = ResponsePayload {
        test_id: 0,
        kind: ResponseKind::FailWithOutput,
        new_expected: None,
    };
    let err = client.respond_raw(&snap.session.id, &bad).await.unwrap_err();
    assert!(matches!(err, ClientError::Api { .. }));
    assert_eq!(err.code(), Some("bad_payload"));
}

#[tokio::test(flavor = "multi_thread")]
async fn unreachable_service_is_a_transport_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let err = Client::new(format!("http://{addr}")).health().await.unwrap_err();
    assert!(matches!(err, ClientError::Transport { .. }), "{err}");
}
