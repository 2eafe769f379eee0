//! Code and test candidates.
//!
//! Codes are deduplicated on a normalized form. Tests are kept verbatim and,
//! where they fit the supported shapes, parsed into a call and an expected
//! value so the expected value can be replaced in Output mode.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Problem;
use crate::pysrc::{self, Sig};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CandidateError {
    #[error("unparseable assertion: {0}")]
    UnparseableAssertion(String),
    #[error("cannot replace the expected value of a truthiness assertion with {0}")]
    CannotMutate(String),
    #[error("code candidate {id} does not define {entry_point}")]
    NotAFunction { id: usize, entry_point: String },
}

/// Code candidate as stored in caches and fixtures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCode {
    pub id: usize,
    pub source: String,
}

/// Test candidate as stored in caches and fixtures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTest {
    pub id: usize,
    pub assertion: String,
}

/// The candidates generated for one problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub problem_id: String,
    pub codes: Vec<RawCode>,
    pub tests: Vec<RawTest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeCandidate {
    pub id: usize,
    pub source: String,
    pub normalized_hash: String,
}

impl CodeCandidate {
    pub fn new(id: usize, source: impl Into<String>) -> Self {
        let source = source.into();
        let normalized_hash = hex::encode(Sha256::digest(normalize_source(&source).as_bytes()));
        CodeCandidate {
            id,
            source,
            normalized_hash,
        }
    }

    pub fn defines(&self, entry_point: &str) -> bool {
        pysrc::function_defs(&self.source)
            .iter()
            .any(|d| d.name == entry_point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStatus {
    Active,
    Answered,
    Unparseable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCandidate {
    pub id: usize,
    pub assertion: String,
    pub parsed: Option<ParsedAssertion>,
}

impl TestCandidate {
    pub fn new(id: usize, assertion: impl Into<String>, entry_point: &str) -> Self {
        let assertion = assertion.into();
        let parsed = parse_assertion(&assertion, entry_point).ok();
        TestCandidate {
            id,
            assertion,
            parsed,
        }
    }

    /// Status before any interaction. Answered is tracked by the session.
    pub fn initial_status(&self) -> TestStatus {
        if self.parsed.is_some() {
            TestStatus::Active
        } else {
            TestStatus::Unparseable
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Equals,
    TruthyCall,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedAssertion {
    pub callee: String,
    /// Argument list text between the call parentheses.
    pub input_expr: String,
    pub comparator: Comparator,
    /// `True`/`False` for truthiness assertions.
    pub expected_expr: Option<String>,
    /// Raw message expression following the top-level comma.
    pub message: Option<String>,
}

impl ParsedAssertion {
    /// The call expression `callee(input)`.
    pub fn call(&self) -> String {
        format!("{}({})", self.callee, self.input_expr)
    }

    /// Message with simple string-literal quotes removed.
    pub fn message_text(&self) -> Option<String> {
        let m = self.message.as_deref()?.trim();
        for q in ["\"", "'"] {
            if m.len() >= 2 && m.starts_with(q) && m.ends_with(q) && !m[1..m.len() - 1].contains(q) {
                return Some(m[1..m.len() - 1].to_string());
            }
        }
        Some(m.to_string())
    }
}

/// Canonical text form: line endings unified, trailing whitespace and
/// trailing blank lines removed.
pub fn normalize_source(source: &str) -> String {
    let unified = source.replace("\r\n", "\n").replace('\r', "\n");
    let mut lines: Vec<&str> = unified.split('\n').map(str::trim_end).collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}

/// Keeps the lowest-id candidate of each normalized form and renumbers the
/// survivors densely in their original order.
pub fn dedup_codes(mut codes: Vec<CodeCandidate>) -> Vec<CodeCandidate> {
    codes.sort_by_key(|c| c.id);
    let mut seen = std::collections::HashSet::new();
    codes
        .into_iter()
        .filter(|c| seen.insert(c.normalized_hash.clone()))
        .enumerate()
        .map(|(id, c)| CodeCandidate { id, ..c })
        .collect()
}

fn unparseable(reason: impl Into<String>) -> CandidateError {
    CandidateError::UnparseableAssertion(reason.into())
}

/// Splits `name(args)` when the call spans the whole of `expr`.
fn split_call(expr: &str) -> Option<(String, String)> {
    let expr = expr.trim();
    let name: String = expr.chars().take_while(|c| pysrc::is_ident_char(*c)).collect();
    if !pysrc::is_identifier(&name) {
        return None;
    }
    let rest = &expr[name.len()..];
    let open_rel = rest.len() - rest.trim_start().len();
    if !rest[open_rel..].starts_with('(') {
        return None;
    }
    let open = name.len() + open_rel;
    let sigs = pysrc::scan(expr).ok()?;
    let close = sigs
        .iter()
        .find(|s| s.pos > open && s.ch == ')' && s.depth == 0)?
        .pos;
    if close != expr.len() - 1 {
        return None;
    }
    Some((name, expr[open + 1..close].trim().to_string()))
}

fn top_level_comma(sigs: &[Sig]) -> Option<usize> {
    sigs.iter().find(|s| s.ch == ',' && s.depth == 0).map(|s| s.pos)
}

fn top_level_eq(src: &str, sigs: &[Sig]) -> Option<usize> {
    let bytes = src.as_bytes();
    sigs.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        let is_eq = a.ch == '=' && b.ch == '=' && a.depth == 0 && b.pos == a.pos + 1;
        let prev_ok = a.pos == 0 || !matches!(bytes[a.pos - 1], b'=' | b'!' | b'<' | b'>');
        let next_ok = bytes.get(b.pos + 1) != Some(&b'=');
        (is_eq && prev_ok && next_ok).then_some(a.pos)
    })
}

/// Parses `assert f(args) == expr[, msg]`, `assert f(args)[, msg]` and
/// `assert not f(args)[, msg]` where `f` is the entry point.
pub fn parse_assertion(text: &str, entry_point: &str) -> Result<ParsedAssertion, CandidateError> {
    let text = text.trim();
    let body = text
        .strip_prefix("assert")
        .filter(|r| r.starts_with(char::is_whitespace))
        .ok_or_else(|| unparseable("missing assert keyword"))?
        .trim();
    let sigs = pysrc::scan(body).map_err(|e| unparseable(format!("{e:?}")))?;
    let (expr, message) = match top_level_comma(&sigs) {
        Some(pos) => {
            let msg = body[pos + 1..].trim();
            if msg.is_empty() {
                return Err(unparseable("empty message"));
            }
            (&body[..pos], Some(msg.to_string()))
        }
        None => (body, None),
    };
    let expr_sigs: Vec<Sig> = sigs.iter().copied().filter(|s| s.pos < expr.len()).collect();

    let (call, comparator, expected) = match top_level_eq(expr, &expr_sigs) {
        Some(pos) => {
            let expected = expr[pos + 2..].trim();
            if expected.is_empty() {
                return Err(unparseable("empty expected expression"));
            }
            (&expr[..pos], Comparator::Equals, expected.to_string())
        }
        None => {
            let e = expr.trim();
            match e.strip_prefix("not").filter(|r| r.starts_with(char::is_whitespace)) {
                Some(inner) => (inner, Comparator::TruthyCall, "False".to_string()),
                None => (e, Comparator::TruthyCall, "True".to_string()),
            }
        }
    };
    let (callee, input_expr) =
        split_call(call).ok_or_else(|| unparseable("left side is not a single call"))?;
    if callee != entry_point {
        return Err(unparseable(format!("calls {callee}, not {entry_point}")));
    }
    Ok(ParsedAssertion {
        callee,
        input_expr,
        comparator,
        expected_expr: Some(expected),
        message,
    })
}

/// Renders an assertion, optionally with a replacement expected value.
/// A replacement drops the message.
pub fn render_assertion(
    parsed: &ParsedAssertion,
    new_expected: Option<&str>,
) -> Result<String, CandidateError> {
    let call = parsed.call();
    let expected = new_expected
        .map(str::trim)
        .or(parsed.expected_expr.as_deref())
        .unwrap_or("True");
    let mut out = match parsed.comparator {
        Comparator::Equals => format!("assert {call} == {expected}"),
        Comparator::TruthyCall => match expected {
            "True" => format!("assert {call}"),
            "False" => format!("assert not {call}"),
            other => return Err(CandidateError::CannotMutate(other.to_string())),
        },
    };
    if new_expected.is_none() {
        if let Some(msg) = &parsed.message {
            out.push_str(", ");
            out.push_str(msg);
        }
    }
    Ok(out)
}

/// Splits a test function (or any block) into its individual `assert`
/// statements. Text that is not a block of asserts is returned whole.
pub fn split_assertions(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        let trimmed = line.trim();
        if let Some(buf) = current.as_mut() {
            buf.push('\n');
            buf.push_str(line);
        } else if trimmed.starts_with("assert ") || trimmed.starts_with("assert(") {
            current = Some(trimmed.to_string());
        } else {
            continue;
        }
        let buf = current.as_ref().expect("set above");
        if pysrc::scan(buf).is_ok() {
            out.push(current.take().expect("set above"));
        }
    }
    if out.is_empty() {
        vec![text.trim().to_string()]
    } else {
        out
    }
}

/// Deduplicated, densely numbered candidates for one problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub problem_id: String,
    pub codes: Vec<CodeCandidate>,
    pub tests: Vec<TestCandidate>,
    /// Code count before deduplication.
    pub generated_codes: usize,
}

impl CandidateSet {
    pub fn build(problem: &Problem, record: &CandidateRecord) -> Result<Self, CandidateError> {
        let mut raw_codes = record.codes.clone();
        raw_codes.sort_by_key(|c| c.id);
        let codes: Vec<CodeCandidate> = raw_codes
            .iter()
            .map(|c| CodeCandidate::new(c.id, c.source.clone()))
            .collect();
        if let Some(bad) = codes.iter().find(|c| !c.defines(&problem.entry_point)) {
            return Err(CandidateError::NotAFunction {
                id: bad.id,
                entry_point: problem.entry_point.clone(),
            });
        }
        let generated_codes = codes.len();
        let codes = dedup_codes(codes);

        let mut raw_tests = record.tests.clone();
        raw_tests.sort_by_key(|t| t.id);
        let tests = raw_tests
            .iter()
            .flat_map(|t| split_assertions(&t.assertion))
            .filter(|a| !a.is_empty())
            .enumerate()
            .map(|(id, a)| TestCandidate::new(id, a, &problem.entry_point))
            .collect();
        Ok(CandidateSet {
            problem_id: problem.id.clone(),
            codes,
            tests,
            generated_codes,
        })
    }

    pub fn code(&self, id: usize) -> Option<&CodeCandidate> {
        self.codes.get(id).filter(|c| c.id == id)
    }

    pub fn test(&self, id: usize) -> Option<&TestCandidate> {
        self.tests.get(id).filter(|t| t.id == id)
    }
}
