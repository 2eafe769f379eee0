mod common;

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use ticoder_core::sandbox::{RunKind, RunRequest, RunResult, SandboxError, PY_RUNNER};
use ticoder_core::{ExecLimits, PythonSandbox, Sandbox};

fn run(program: &str, timeout_ms: u64) -> RunResult {
    common::sandbox()
        .run(&RunRequest {
            program: program.into(),
            timeout_ms,
            memory_limit_bytes: Some(512 * 1024 * 1024),
        })
        .unwrap()
}

#[test]
fn classifies_outcomes() {
    assert_eq!(run("assert 1 + 1 == 2", 2000).kind, RunKind::Pass);
    let fail = run("assert 1 == 2, 'nope'", 2000);
    assert_eq!(fail.kind, RunKind::AssertFail);
    assert_eq!(fail.message.as_deref(), Some("nope"));
    let crash = run("1 / 0", 2000);
    assert_eq!(crash.kind, RunKind::Crash);
    assert_eq!(crash.exception_type.as_deref(), Some("ZeroDivisionError"));
    assert_eq!(run("def f(:\n    pass", 2000).kind, RunKind::Crash);
    assert_eq!(run("import sys\nsys.exit(0)", 2000).kind, RunKind::Pass);
    assert_eq!(run("import sys\nsys.exit(3)", 2000).kind, RunKind::Crash);
}

#[test]
fn timeout_respects_limit() {
    let r = run("while True:\n    pass", 300);
    assert_eq!(r.kind, RunKind::Timeout);
    assert!(r.duration_ms >= 300);
}

#[test]
fn memory_limit_is_a_crash() {
    let r = common::sandbox()
        .run(&RunRequest {
            program: "x = bytearray(1 << 31)".into(),
            timeout_ms: 5000,
            memory_limit_bytes: Some(256 * 1024 * 1024),
        })
        .unwrap();
    assert_eq!(r.kind, RunKind::Crash);
}

#[test]
fn program_output_does_not_corrupt_the_channel() {
    assert_eq!(run("print('{\"kind\": \"crash\"}')\nassert True", 2000).kind, RunKind::Pass);
}

#[test]
fn no_state_leaks_between_programs() {
    assert_eq!(run("import builtins\nbuiltins.LEAK = 1", 2000).kind, RunKind::Pass);
    assert_eq!(run("LEAK", 2000).kind, RunKind::Crash);
}

#[test]
fn missing_interpreter_is_unavailable() {
    let err = PythonSandbox::with_interpreter("/nonexistent/python").unwrap_err();
    assert!(matches!(err, SandboxError::Unavailable(_)));
}

#[test]
fn malformed_requests_and_eof() {
    let mut child = Command::new("python3")
        .args(["-I", "-c", PY_RUNNER])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut stdout = BufReader::new(child.stdout.take().unwrap());
    let mut reply = |line: &str| {
        writeln!(stdin, "{line}").unwrap();
        stdin.flush().unwrap();
        let mut out = String::new();
        stdout.read_line(&mut out).unwrap();
        serde_json::from_str::<RunResult>(&out).unwrap()
    };
    assert_eq!(reply("not json").kind, RunKind::ProtocolError);
    assert_eq!(reply(r#"{"program": 3, "timeout_ms": 10}"#).kind, RunKind::ProtocolError);
    assert_eq!(reply(r#"{"program": "pass"}"#).kind, RunKind::ProtocolError);
    assert_eq!(reply(r#"{"program": "pass", "timeout_ms": 100}"#).kind, RunKind::Pass);
    drop(reply);
    drop(stdin);
    assert!(child.wait().unwrap().success());
}

#[test]
fn limits_flow_into_requests() {
    let limits = ExecLimits {
        timeout_ms: 250,
        memory_bytes: None,
    };
    let r = common::sandbox().run(&limits.request("import time\ntime.sleep(5)")).unwrap();
    assert_eq!(r.kind, RunKind::Timeout);
}
