use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::PathBuf;
use std::process::{Child, Command, Output, Stdio};

use ticoder_core::report::{from_jsonl, EvalReport};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn ticoder(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ticoder")).args(args).output().unwrap()
}

fn evaluate(mode: &str, report: &std::path::Path) -> EvalReport {
    let ds = fixture("synthetic20.jsonl");
    let out = ticoder(&[
        "evaluate",
        "--dataset",
        ds.to_str().unwrap(),
        "--kind",
        "fixture",
        "--mode",
        mode,
        "--m",
        "5",
        "--k",
        "1",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    for m in 1..=5 {
        assert!(stdout.contains(&format!("pass@1@{m}")), "{stdout}");
    }
    assert!(!stdout.contains("pass@1@6"));
    from_jsonl(&std::fs::read_to_string(report).unwrap()).unwrap().remove(0)
}

#[test]
fn evaluate_writes_a_report_with_one_column_per_query_count() {
    let dir = tempfile::tempdir().unwrap();
    let report = evaluate("passfail", &dir.path().join("pf.jsonl"));
    assert_eq!(report.max_m, 5);
    assert_eq!(report.problems, 20);
    assert_eq!(report.grid.len(), 1);
    assert_eq!(report.grid[0].k, 1);
    assert_eq!(report.grid[0].values.len(), 6);
    assert!(report.grid[0].values.iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(report.baseline_at(100).is_some());
}

#[test]
fn output_mode_is_at_least_passfail_at_every_query_count() {
    let dir = tempfile::tempdir().unwrap();
    let pf = evaluate("passfail", &dir.path().join("pf.jsonl"));
    let out = evaluate("output", &dir.path().join("out.jsonl"));
    for m in 0..=5 {
        let (a, b) = (out.ranked_at(1, m).unwrap(), pf.ranked_at(1, m).unwrap());
        assert!(a >= b - 1e-12, "m={m}: output {a} < passfail {b}");
    }
}

#[test]
fn cold_cache_without_endpoint_fails_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.jsonl");
    let ds = fixture("mbpp_sample.jsonl");
    let out = ticoder(&[
        "evaluate",
        "--dataset",
        ds.to_str().unwrap(),
        "--kind",
        "mbpp",
        "--cache-dir",
        dir.path().join("cache").to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("EndpointError"), "{stderr}");
    assert!(!report.exists());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "dataset = {:?}\nkind = \"fixture\"\nmode = \"output\"\nm = 2\n",
            fixture("running_example.jsonl").to_str().unwrap()
        ),
    )
    .unwrap();
    let out = ticoder(&["evaluate", "--config", cfg.to_str().unwrap(), "--m", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("output"), "{stdout}");
    assert!(stdout.contains("pass@1@3") && !stdout.contains("pass@1@4"), "{stdout}");

    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    let out = ticoder(&["evaluate", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ConfigError"));
}

#[test]
fn zero_k_is_rejected() {
    let ds = fixture("running_example.jsonl");
    let out = ticoder(&["evaluate", "--dataset", ds.to_str().unwrap(), "--kind", "fixture", "--k", "0"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ConfigError"));
}

struct Server {
    child: Child,
    addr: String,
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn serve(state_dir: &std::path::Path, port: u16) -> Server {
    let ds = fixture("running_example.jsonl");
    let mut child = Command::new(env!("CARGO_BIN_EXE_ticoder"))
        .args(["serve", "--dataset", ds.to_str().unwrap(), "--kind", "fixture"])
        .args(["--serve-port", &port.to_string(), "--state-dir", state_dir.to_str().unwrap()])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on http://")
        .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
        .to_string();
    Server { child, addr }
}

/// Minimal HTTP/1.1 exchange; returns status code and body.
fn http(addr: &str, method: &str, path: &str, body: Option<&str>) -> (u16, String) {
    let mut stream = TcpStream::connect(addr).unwrap();
    let body = body.unwrap_or("");
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut reply = String::new();
    stream.read_to_string(&mut reply).unwrap();
    let status = reply[9..12].parse().unwrap();
    let body = reply.split_once("\r\n\r\n").map(|(_, b)| b.to_string()).unwrap_or_default();
    (status, body)
}

#[test]
fn serve_answers_health_and_refuses_a_taken_port() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve(dir.path(), 0);
    let (status, body) = http(&server.addr, "GET", "/health", None);
    assert_eq!(status, 200);
    assert!(body.contains("\"ok\""), "{body}");

    let port = server.addr.rsplit(':').next().unwrap();
    let ds = fixture("running_example.jsonl");
    let out = ticoder(&[
        "serve",
        "--dataset",
        ds.to_str().unwrap(),
        "--kind",
        "fixture",
        "--serve-port",
        port,
        "--state-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("BindError"));
}

#[test]
fn sessions_recorded_by_the_service_replay_offline() {
    let dir = tempfile::tempdir().unwrap();
    let id = {
        let server = serve(dir.path(), 0);
        let (status, body) = http(
            &server.addr,
            "POST",
            "/sessions",
            Some(r#"{"problem_id":"mbpp/16","mode":"passfail","budget":3}"#),
        );
        assert_eq!(status, 201, "{body}");
        let snap: serde_json::Value = serde_json::from_str(&body).unwrap();
        let id = snap["session"]["id"].as_str().unwrap().to_string();
        let (status, body) = http(
            &server.addr,
            "POST",
            &format!("/sessions/{id}/response"),
            Some(r#"{"test_id":0,"kind":"fail"}"#),
        );
        assert_eq!(status, 200, "{body}");
        id
    };

    let ds = fixture("running_example.jsonl");
    let out = ticoder(&[
        "replay",
        "--dataset",
        ds.to_str().unwrap(),
        "--kind",
        "fixture",
        "--state-dir",
        dir.path().to_str().unwrap(),
        "--session",
        &id,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let replayed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(replayed["status"], "running");
    assert_eq!(replayed["result"]["queries_used"], 1);
    let mut ranked: Vec<u64> = replayed["result"]["ranked_codes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    ranked.sort();
    assert_eq!(ranked, vec![1, 2]);

    let server = serve(dir.path(), 0);
    let (status, body) = http(&server.addr, "GET", &format!("/sessions/{id}"), None);
    assert_eq!(status, 200, "{body}");
    assert!(body.contains("\"test_id\":1"), "{body}");
}
