use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use ticoder_core::corpus::Problem;
use ticoder_core::gateway::{
    sample_candidates, CandidateCache, CompletionClient, GatewayError, GenerationConfig, HttpCompletionClient,
};

/// Serves `responses` in order, one per connection, recording request bodies.
fn serve(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<(String, String)>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut auth = String::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if lower.starts_with("authorization:") {
                    auth = line.trim().to_string();
                }
                if line == "\r\n" {
                    break;
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push((auth, String::from_utf8(buf).unwrap()));
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (format!("http://{addr}/v1/completions"), seen)
}

fn problem() -> Problem {
    Problem {
        id: "mbpp/1".into(),
        intent: "Add one to x.".into(),
        header: "def add_one(x):".into(),
        prefix: String::new(),
        reference: "def add_one(x):\n    return x + 1".into(),
        hidden_tests: vec!["assert add_one(1) == 2".into()],
        entry_point: "add_one".into(),
    }
}

fn choices(texts: &[&str]) -> String {
    let items: Vec<_> = texts.iter().map(|t| serde_json::json!({ "text": t })).collect();
    serde_json::json!({ "choices": items }).to_string()
}

#[test]
fn batches_requests_and_sends_key() {
    let (endpoint, seen) = serve(vec![
        (200, choices(&["    return x + 1\n", "    return x\n"])),
        (200, choices(&["    return 1 + x\n"])),
    ]);
    std::env::set_var("TICODER_TEST_KEY_A", "sekrit");
    let config = GenerationConfig {
        endpoint,
        api_key_env: "TICODER_TEST_KEY_A".into(),
        batch_size: 2,
        model: "m".into(),
        ..GenerationConfig::default()
    };
    let client = HttpCompletionClient::new().unwrap();
    let out = client.complete("prompt", 3, &config).unwrap();
    assert_eq!(out.len(), 3);
    let seen = seen.lock().unwrap();
    assert!(seen[0].0.ends_with("Bearer sekrit"), "{}", seen[0].0);
    let first: serde_json::Value = serde_json::from_str(&seen[0].1).unwrap();
    assert_eq!(first["n"], 2);
    assert_eq!(first["model"], "m");
    assert_eq!(first["prompt"], "prompt");
    let second: serde_json::Value = serde_json::from_str(&seen[1].1).unwrap();
    assert_eq!(second["n"], 1);
}

#[test]
fn http_errors_surface() {
    let (endpoint, _) = serve(vec![(429, "{\"error\": \"quota\"}".into())]);
    let config = GenerationConfig {
        endpoint,
        api_key_env: String::new(),
        ..GenerationConfig::default()
    };
    let err = HttpCompletionClient::new().unwrap().complete("p", 1, &config).unwrap_err();
    match err {
        GatewayError::Endpoint(msg) => assert!(msg.contains("429") && msg.contains("quota"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_key_is_endpoint_error() {
    let config = GenerationConfig {
        endpoint: "http://127.0.0.1:9/v1/completions".into(),
        api_key_env: "TICODER_TEST_KEY_UNSET".into(),
        ..GenerationConfig::default()
    };
    let err = HttpCompletionClient::new().unwrap().complete("p", 1, &config).unwrap_err();
    assert!(matches!(err, GatewayError::Endpoint(m) if m.contains("TICODER_TEST_KEY_UNSET")));
}

#[test]
fn end_to_end_sampling_through_http() {
    let (endpoint, _) = serve(vec![
        (200, choices(&["    return x + 1\n\n\nprint(1)\n", "oops\n"])),
        (200, choices(&["1) == 2\n", "2) == (\n"])),
    ]);
    let dir = tempfile::tempdir().unwrap();
    let cache = CandidateCache::open(dir.path()).unwrap();
    let config = GenerationConfig {
        endpoint,
        api_key_env: String::new(),
        num_codes: 2,
        num_tests: 2,
        ..GenerationConfig::default()
    };
    let client = HttpCompletionClient::new().unwrap();
    let sampled = sample_candidates(&problem(), &config, &cache, &client).unwrap();
    assert!(!sampled.from_cache);
    assert_eq!(sampled.entry.codes.len(), 1);
    assert_eq!(sampled.entry.codes[0].source, "def add_one(x):\n    return x + 1");
    assert_eq!(sampled.entry.tests.len(), 1);
    assert_eq!(sampled.entry.tests[0].assertion, "assert add_one(1) == 2");
    assert_eq!((sampled.entry.dropped_codes, sampled.entry.dropped_tests), (1, 1));
    // The server is gone now; the cache answers.
    let again = sample_candidates(&problem(), &config, &cache, &client).unwrap();
    assert!(again.from_cache);
    assert_eq!(again.entry, sampled.entry);
}
