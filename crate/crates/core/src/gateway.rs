//! Prompt construction, completion sampling, and the on-disk candidate
//! cache that makes every later stage reproducible offline.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::candidates::{CandidateRecord, RawCode, RawTest};
use crate::corpus::Problem;
use crate::pysrc;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("completion endpoint error: {0}")]
    Endpoint(String),
    #[error("cache error at {path}: {reason}")]
    Cache { path: PathBuf, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("could not extract a candidate: {0}")]
pub struct ExtractionError(pub String);

fn default_batch() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub model: String,
    pub temperature: f64,
    pub num_codes: usize,
    pub num_tests: usize,
    pub max_tokens: usize,
    pub endpoint: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    /// Completions requested per HTTP call.
    #[serde(default = "default_batch")]
    pub batch_size: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            model: "gpt-3.5-turbo-instruct".into(),
            temperature: 0.8,
            num_codes: 100,
            num_tests: 50,
            max_tokens: 300,
            endpoint: "https://api.openai.com/v1/completions".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            batch_size: default_batch(),
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: &str| Err(GatewayError::InvalidConfig(m.to_string()));
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad("temperature must lie in [0, 2]");
        }
        if self.num_codes == 0 || self.num_tests == 0 {
            return bad("num_codes and num_tests must be at least 1");
        }
        if self.max_tokens == 0 || self.batch_size == 0 {
            return bad("max_tokens and batch_size must be positive");
        }
        if self.model.is_empty() {
            return bad("model must be set");
        }
        Ok(())
    }
}

fn docstring(intent: &str, extra: &[String]) -> String {
    let mut lines: Vec<String> = intent
        .replace("\"\"\"", "\\\"\\\"\\\"")
        .lines()
        .map(str::to_string)
        .collect();
    if !extra.is_empty() {
        lines.push(String::new());
        lines.extend(extra.iter().map(|t| t.trim().to_string()));
    }
    match lines.len() {
        0 => "    \"\"\"\"\"\"\n".to_string(),
        1 => format!("    \"\"\"{}\"\"\"\n", lines[0]),
        _ => format!(
            "    \"\"\"{}\n{}\n    \"\"\"\n",
            lines[0],
            pysrc::indent(&lines[1..].join("\n"), 4)
        ),
    }
}

/// Prefix, header and intent-as-docstring, ending where the body starts.
pub fn build_code_prompt(problem: &Problem) -> String {
    build_code_prompt_with_tests(problem, &[])
}

/// Code prompt with example assertions appended to the docstring.
pub fn build_code_prompt_with_tests(problem: &Problem, tests: &[String]) -> String {
    let mut prompt = String::new();
    if !problem.prefix.trim().is_empty() {
        prompt.push_str(problem.prefix.trim_end());
        prompt.push_str("\n\n\n");
    }
    prompt.push_str(problem.header.trim_end());
    prompt.push('\n');
    prompt.push_str(&docstring(problem.intent.trim(), tests));
    prompt
}

/// Code prompt with a `pass` body, followed by a test function whose
/// assertion is left open at the call to the entry point.
pub fn build_test_prompt(problem: &Problem) -> String {
    format!(
        "{}    pass\n\n\ndef test_{ep}():\n    assert {ep}(",
        build_code_prompt(problem),
        ep = problem.entry_point
    )
}

/// Header plus the completion's function body. The body ends at the first
/// non-blank line back at column 0.
pub fn extract_code(problem: &Problem, completion: &str) -> Result<String, ExtractionError> {
    let completion = completion.replace("\r\n", "\n");
    let mut body: Vec<&str> = Vec::new();
    for line in completion.split('\n') {
        if line.trim().is_empty() {
            body.push(line);
            continue;
        }
        if !line.starts_with([' ', '\t']) {
            break;
        }
        body.push(line);
    }
    while body.last().is_some_and(|l| l.trim().is_empty()) {
        body.pop();
    }
    while body.first().is_some_and(|l| l.trim().is_empty()) {
        body.remove(0);
    }
    if body.is_empty() {
        return Err(ExtractionError("completion has no indented body".into()));
    }
    Ok(format!("{}\n{}", problem.header.trim_end(), body.join("\n")))
}

/// The open assertion completed by the first line of the completion, plus
/// any further `assert` lines that directly follow it in the test body. The
/// result holds one assertion per line; candidate building splits them.
pub fn extract_test(problem: &Problem, completion: &str) -> Result<String, ExtractionError> {
    let completion = completion.replace("\r\n", "\n");
    let mut lines = completion.split('\n');
    let first = lines.next().unwrap_or("").trim_end();
    let assertion = format!("assert {}({}", problem.entry_point, first);
    if first.trim().is_empty() || pysrc::scan(&assertion).is_err() {
        return Err(ExtractionError(format!("unbalanced assertion {assertion:?}")));
    }
    let mut out = vec![assertion];
    for line in lines {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !line.starts_with([' ', '\t']) || !trimmed.starts_with("assert ") || pysrc::scan(trimmed).is_err() {
            break;
        }
        out.push(trimmed.to_string());
    }
    Ok(out.join("\n"))
}

/// Something that turns a prompt into `n` sampled completions.
pub trait CompletionClient: Send + Sync {
    fn complete(&self, prompt: &str, n: usize, config: &GenerationConfig) -> Result<Vec<String>, GatewayError>;
}

/// Client for the common `/v1/completions` JSON shape.
pub struct HttpCompletionClient {
    http: reqwest::blocking::Client,
}

impl HttpCompletionClient {
    pub fn new() -> Result<Self, GatewayError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(120))
            .build()
            .map_err(|e| GatewayError::Endpoint(e.to_string()))?;
        Ok(HttpCompletionClient { http })
    }
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    temperature: f64,
    max_tokens: usize,
    n: usize,
}

#[derive(Deserialize)]
struct CompletionChoice {
    text: String,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<CompletionChoice>,
}

impl CompletionClient for HttpCompletionClient {
    fn complete(&self, prompt: &str, n: usize, config: &GenerationConfig) -> Result<Vec<String>, GatewayError> {
        let key = if config.api_key_env.is_empty() {
            None
        } else {
            Some(std::env::var(&config.api_key_env).map_err(|_| {
                GatewayError::Endpoint(format!("API key variable {} is not set", config.api_key_env))
            })?)
        };
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let batch = (n - out.len()).min(config.batch_size);
            let mut req = self.http.post(&config.endpoint).json(&CompletionRequest {
                model: &config.model,
                prompt,
                temperature: config.temperature,
                max_tokens: config.max_tokens,
                n: batch,
            });
            if let Some(k) = &key {
                req = req.bearer_auth(k);
            }
            let resp = req
                .send()
                .map_err(|e| GatewayError::Endpoint(e.to_string()))?;
            let status = resp.status();
            if !status.is_success() {
                let body = resp.text().unwrap_or_default();
                return Err(GatewayError::Endpoint(format!("{status}: {body}")));
            }
            let parsed: CompletionResponse = resp
                .json()
                .map_err(|e| GatewayError::Endpoint(format!("unreadable response: {e}")))?;
            if parsed.choices.is_empty() {
                return Err(GatewayError::Endpoint("response carried no choices".into()));
            }
            out.extend(parsed.choices.into_iter().map(|c| c.text));
        }
        out.truncate(n);
        Ok(out)
    }
}

/// Identifies one cache entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheKey {
    pub problem_id: String,
    pub model: String,
    pub prompt_digest: String,
}

impl CacheKey {
    pub fn for_problem(problem: &Problem, model: &str) -> Self {
        let mut h = Sha256::new();
        h.update(build_code_prompt(problem).as_bytes());
        h.update([0u8]);
        h.update(build_test_prompt(problem).as_bytes());
        CacheKey {
            problem_id: problem.id.clone(),
            model: model.to_string(),
            prompt_digest: hex::encode(h.finalize()),
        }
    }

    pub fn file_name(&self) -> String {
        let mut h = Sha256::new();
        for part in [&self.problem_id, &self.model, &self.prompt_digest] {
            h.update(part.as_bytes());
            h.update([0u8]);
        }
        format!("{}.json", hex::encode(h.finalize()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub problem_id: String,
    pub codes: Vec<RawCode>,
    pub tests: Vec<RawTest>,
    pub model: String,
    pub prompt_digest: String,
    pub config: GenerationConfig,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub dropped_codes: usize,
    #[serde(default)]
    pub dropped_tests: usize,
}

impl CacheEntry {
    pub fn record(&self) -> CandidateRecord {
        CandidateRecord {
            problem_id: self.problem_id.clone(),
            codes: self.codes.clone(),
            tests: self.tests.clone(),
        }
    }
}

/// Directory of cache entries, one file per key.
#[derive(Debug, Clone)]
pub struct CandidateCache {
    dir: PathBuf,
}

impl CandidateCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, GatewayError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| GatewayError::Cache {
            path: dir.clone(),
            reason: e.to_string(),
        })?;
        Ok(CandidateCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(key.file_name())
    }

    pub fn get(&self, key: &CacheKey) -> Result<Option<CacheEntry>, GatewayError> {
        let path = self.path_for(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => {
                return Err(GatewayError::Cache {
                    path,
                    reason: e.to_string(),
                })
            }
        };
        let entry: CacheEntry = serde_json::from_str(&text).map_err(|e| GatewayError::Cache {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        if entry.problem_id != key.problem_id || entry.model != key.model || entry.prompt_digest != key.prompt_digest {
            return Err(GatewayError::Cache {
                path,
                reason: "entry does not match its key".into(),
            });
        }
        Ok(Some(entry))
    }

    /// Writes a new entry atomically. An existing entry is never replaced.
    pub fn put(&self, entry: &CacheEntry) -> Result<PathBuf, GatewayError> {
        let key = CacheKey {
            problem_id: entry.problem_id.clone(),
            model: entry.model.clone(),
            prompt_digest: entry.prompt_digest.clone(),
        };
        let path = self.path_for(&key);
        let err = |reason: String| GatewayError::Cache {
            path: path.clone(),
            reason,
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| err(e.to_string()))?;
        let body = serde_json::to_string_pretty(entry).map_err(|e| err(e.to_string()))?;
        tmp.write_all(body.as_bytes()).map_err(|e| err(e.to_string()))?;
        tmp.as_file().sync_all().map_err(|e| err(e.to_string()))?;
        tmp.persist_noclobber(&path).map_err(|e| err(e.error.to_string()))?;
        Ok(path)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    pub entry: CacheEntry,
    pub from_cache: bool,
}

/// Returns cached candidates for the problem, sampling and caching them on a
/// miss. Completions that yield no candidate are dropped and counted.
pub fn sample_candidates(
    problem: &Problem,
    config: &GenerationConfig,
    cache: &CandidateCache,
    client: &dyn CompletionClient,
) -> Result<Sampled, GatewayError> {
    let key = CacheKey::for_problem(problem, &config.model);
    if let Some(entry) = cache.get(&key)? {
        return Ok(Sampled {
            entry,
            from_cache: true,
        });
    }
    config.validate()?;
    let code_completions = client.complete(&build_code_prompt(problem), config.num_codes, config)?;
    let test_completions = client.complete(&build_test_prompt(problem), config.num_tests, config)?;

    let codes: Vec<String> = code_completions
        .iter()
        .filter_map(|c| extract_code(problem, c).ok())
        .collect();
    let tests: Vec<String> = test_completions
        .iter()
        .filter_map(|c| extract_test(problem, c).ok())
        .collect();
    let entry = CacheEntry {
        problem_id: problem.id.clone(),
        dropped_codes: code_completions.len() - codes.len(),
        dropped_tests: test_completions.len() - tests.len(),
        codes: codes
            .into_iter()
            .enumerate()
            .map(|(id, source)| RawCode { id, source })
            .collect(),
        tests: tests
            .into_iter()
            .enumerate()
            .map(|(id, assertion)| RawTest { id, assertion })
            .collect(),
        model: config.model.clone(),
        prompt_digest: key.prompt_digest.clone(),
        config: config.clone(),
        created_at: Utc::now(),
    };
    if entry.dropped_codes + entry.dropped_tests > 0 {
        tracing::warn!(
            problem = %problem.id,
            dropped_codes = entry.dropped_codes,
            dropped_tests = entry.dropped_tests,
            "dropped completions without an extractable candidate"
        );
    }
    cache.put(&entry)?;
    Ok(Sampled {
        entry,
        from_cache: false,
    })
}
