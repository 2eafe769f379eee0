//! Benchmark ingestion.
//!
//! Loads MBPP (sanitized) and HumanEval line-delimited records, plus the
//! project's own fixture format, into a canonical [`Problem`] model. Problem
//! ids are namespaced (`mbpp/11`, `humaneval/0`) so sets can be mixed.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{CandidateRecord, RawCode, RawTest};
use crate::pysrc;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate problem id {0}")]
    DuplicateId(String),
}

impl CorpusError {
    fn malformed(line: usize, reason: impl Into<String>) -> Self {
        CorpusError::MalformedRecord {
            line,
            reason: reason.into(),
        }
    }
}

/// One benchmark task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    /// Natural-language description shown to the model.
    pub intent: String,
    /// Function signature line(s), ending with `:`.
    pub header: String,
    /// Source preceding the function (imports, helpers). Empty when absent.
    #[serde(default)]
    pub prefix: String,
    /// Hidden ground-truth implementation. Never shown to the workflow.
    pub reference: String,
    /// Hidden validation tests, each a self-contained assertion program.
    pub hidden_tests: Vec<String>,
    pub entry_point: String,
}

impl Problem {
    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.entry_point.is_empty() {
            return Err("empty entry point".into());
        }
        if !self.header.contains(&self.entry_point) {
            return Err(format!(
                "header {:?} does not mention entry point {}",
                self.header, self.entry_point
            ));
        }
        if self.hidden_tests.is_empty() {
            return Err("no hidden tests".into());
        }
        if self.reference.trim().is_empty() {
            return Err("empty reference".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSet {
    pub name: String,
    pub problems: Vec<Problem>,
}

impl ProblemSet {
    /// Builds a set, rejecting duplicate ids and sorting by id.
    pub fn new(name: impl Into<String>, mut problems: Vec<Problem>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for p in &problems {
            if !seen.insert(p.id.clone()) {
                return Err(CorpusError::DuplicateId(p.id.clone()));
            }
        }
        problems.sort_by(|a, b| id_sort_key(&a.id).cmp(&id_sort_key(&b.id)));
        Ok(ProblemSet {
            name: name.into(),
            problems,
        })
    }

    pub fn get(&self, id: &str) -> Option<&Problem> {
        self.problems.iter().find(|p| p.id == id)
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Orders `mbpp/2` before `mbpp/11`.
fn id_sort_key(id: &str) -> (String, u64, String) {
    match id.rsplit_once('/') {
        Some((ns, tail)) => match tail.parse::<u64>() {
            Ok(n) => (ns.to_string(), n, String::new()),
            Err(_) => (ns.to_string(), u64::MAX, tail.to_string()),
        },
        None => (String::new(), u64::MAX, id.to_string()),
    }
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn dataset_name(path: &Path, fallback: &str) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| fallback.to_string())
}

/// Iterates non-blank lines with 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

#[derive(Deserialize)]
struct MbppRecord {
    task_id: serde_json::Value,
    #[serde(alias = "prompt")]
    text: String,
    code: String,
    test_list: Vec<String>,
    #[serde(default)]
    test_imports: Vec<String>,
}

pub fn load_mbpp(path: &Path) -> Result<ProblemSet, CorpusError> {
    let text = read(path)?;
    parse_mbpp(&dataset_name(path, "mbpp"), &text)
}

pub fn parse_mbpp(name: &str, text: &str) -> Result<ProblemSet, CorpusError> {
    let mut problems = Vec::new();
    for (line, raw) in records(text) {
        let rec: MbppRecord =
            serde_json::from_str(raw).map_err(|e| CorpusError::malformed(line, e.to_string()))?;
        problems.push(mbpp_problem(rec).map_err(|r| CorpusError::malformed(line, r))?);
    }
    ProblemSet::new(name, problems)
}

fn mbpp_problem(rec: MbppRecord) -> Result<Problem, String> {
    let task_id = match &rec.task_id {
        serde_json::Value::Number(n) => n.to_string(),
        serde_json::Value::String(s) => s.clone(),
        other => return Err(format!("unsupported task_id {other}")),
    };
    if rec.test_list.is_empty() {
        return Err("empty test_list".into());
    }
    if rec.code.trim().is_empty() {
        return Err("empty code".into());
    }
    let defs = pysrc::function_defs(&rec.code);
    if defs.is_empty() {
        return Err("code has no function definition".into());
    }
    // The entry point is whatever the tests call; fall back to the first def.
    let called = rec
        .test_list
        .iter()
        .find_map(|t| pysrc::asserted_callee(t));
    let def = called
        .and_then(|name| defs.iter().find(|d| d.name == name))
        .unwrap_or(&defs[0]);

    let mut prefix_lines: Vec<String> = Vec::new();
    for imp in &rec.test_imports {
        let imp = imp.trim();
        if !imp.is_empty() && !prefix_lines.iter().any(|l| l == imp) {
            prefix_lines.push(imp.to_string());
        }
    }
    for l in rec.code.lines().take(def.start_line) {
        let t = l.trim_end();
        if pysrc::is_import_line(t) && !prefix_lines.iter().any(|p| p == t) {
            prefix_lines.push(t.to_string());
        }
    }

    let problem = Problem {
        id: format!("mbpp/{task_id}"),
        intent: rec.text.trim().to_string(),
        header: def.header.clone(),
        prefix: prefix_lines.join("\n"),
        reference: rec.code.replace("\r\n", "\n"),
        hidden_tests: rec.test_list,
        entry_point: def.name.clone(),
    };
    problem.validate()?;
    Ok(problem)
}

#[derive(Deserialize)]
struct HumanEvalRecord {
    task_id: String,
    prompt: String,
    canonical_solution: String,
    test: String,
    entry_point: Option<String>,
}

pub fn load_humaneval(path: &Path) -> Result<ProblemSet, CorpusError> {
    let text = read(path)?;
    parse_humaneval(&dataset_name(path, "humaneval"), &text)
}

pub fn parse_humaneval(name: &str, text: &str) -> Result<ProblemSet, CorpusError> {
    let mut problems = Vec::new();
    for (line, raw) in records(text) {
        let rec: HumanEvalRecord =
            serde_json::from_str(raw).map_err(|e| CorpusError::malformed(line, e.to_string()))?;
        problems.push(humaneval_problem(rec).map_err(|r| CorpusError::malformed(line, r))?);
    }
    ProblemSet::new(name, problems)
}

fn humaneval_problem(rec: HumanEvalRecord) -> Result<Problem, String> {
    let entry_point = rec
        .entry_point
        .filter(|e| !e.trim().is_empty())
        .ok_or("missing entry_point")?;
    let prompt = rec.prompt.replace("\r\n", "\n");
    let def = pysrc::function_defs(&prompt)
        .into_iter()
        .find(|d| d.name == entry_point)
        .ok_or_else(|| format!("prompt does not define {entry_point}"))?;
    let lines: Vec<&str> = prompt.lines().collect();
    let prefix = lines[..def.start_line].join("\n").trim_end().to_string();
    let after_header = lines[def.end_line + 1..].join("\n");
    let doc = pysrc::leading_docstring(&after_header).unwrap_or_default();
    let intent = strip_docstring_examples(&pysrc::dedent(&doc));

    let mut reference = lines[def.start_line..].join("\n");
    reference.push('\n');
    reference.push_str(&rec.canonical_solution.replace("\r\n", "\n"));

    let hidden = format!(
        "{}\n\ncheck({})\n",
        rec.test.replace("\r\n", "\n").trim_end(),
        entry_point
    );
    let id = match rec.task_id.rsplit_once('/') {
        Some((_, n)) => format!("humaneval/{n}"),
        None => format!("humaneval/{}", rec.task_id),
    };
    let problem = Problem {
        id,
        intent: intent.trim().to_string(),
        header: def.header,
        prefix,
        reference,
        hidden_tests: vec![hidden],
        entry_point,
    };
    problem.validate()?;
    Ok(problem)
}

fn is_example_heading(line: &str) -> bool {
    let t = line.trim_start().to_ascii_lowercase();
    let rest = if let Some(r) = t.strip_prefix("for example") {
        r
    } else if let Some(r) = t.strip_prefix("examples") {
        r
    } else if let Some(r) = t.strip_prefix("example") {
        r
    } else {
        return false;
    };
    !rest.starts_with(|c: char| c.is_alphanumeric() || c == '_')
}

/// Removes doctest-style `>>>` examples (with their output lines) and
/// `Example`/`Examples`/`For example` sections from a docstring.
///
/// A section runs until the next blank line. Everything else is kept
/// verbatim, including line terminators.
pub fn strip_docstring_examples(doc: &str) -> String {
    enum Skip {
        None,
        Doctest,
        Section,
    }
    let mut out = String::with_capacity(doc.len());
    let mut skip = Skip::None;
    for line in doc.split_inclusive('\n') {
        let content = line.trim_end_matches(['\n', '\r']);
        let blank = content.trim().is_empty();
        if content.trim_start().starts_with(">>>") {
            skip = match skip {
                Skip::Section => Skip::Section,
                _ => Skip::Doctest,
            };
            continue;
        }
        if is_example_heading(content) {
            skip = Skip::Section;
            continue;
        }
        match skip {
            Skip::None => out.push_str(line),
            Skip::Doctest | Skip::Section => {
                if blank {
                    skip = Skip::None;
                    out.push_str(line);
                }
            }
        }
    }
    out
}

/// One problem record in the fixture format: the problem plus pre-generated
/// candidates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub id: String,
    pub intent: String,
    pub header: String,
    #[serde(default)]
    pub prefix: String,
    pub reference: String,
    pub hidden_tests: Vec<String>,
    pub entry_point: String,
    pub codes: Vec<RawCode>,
    pub tests: Vec<RawTest>,
}

impl FixtureRecord {
    pub fn split(self) -> (Problem, CandidateRecord) {
        let candidates = CandidateRecord {
            problem_id: self.id.clone(),
            codes: self.codes,
            tests: self.tests,
        };
        let problem = Problem {
            id: self.id,
            intent: self.intent,
            header: self.header,
            prefix: self.prefix,
            reference: self.reference,
            hidden_tests: self.hidden_tests,
            entry_point: self.entry_point,
        };
        (problem, candidates)
    }

    pub fn join(problem: &Problem, candidates: &CandidateRecord) -> Self {
        FixtureRecord {
            id: problem.id.clone(),
            intent: problem.intent.clone(),
            header: problem.header.clone(),
            prefix: problem.prefix.clone(),
            reference: problem.reference.clone(),
            hidden_tests: problem.hidden_tests.clone(),
            entry_point: problem.entry_point.clone(),
            codes: candidates.codes.clone(),
            tests: candidates.tests.clone(),
        }
    }
}

/// A problem set with candidates attached, bypassing generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub problems: ProblemSet,
    pub candidates: BTreeMap<String, CandidateRecord>,
}

pub fn load_fixture(path: &Path) -> Result<Fixture, CorpusError> {
    let text = read(path)?;
    parse_fixture(&dataset_name(path, "fixture"), &text)
}

pub fn parse_fixture(name: &str, text: &str) -> Result<Fixture, CorpusError> {
    let mut problems = Vec::new();
    let mut candidates = BTreeMap::new();
    for (line, raw) in records(text) {
        let rec: FixtureRecord =
            serde_json::from_str(raw).map_err(|e| CorpusError::malformed(line, e.to_string()))?;
        let (problem, cands) = rec.split();
        problem
            .validate()
            .map_err(|r| CorpusError::malformed(line, r))?;
        if candidates.insert(problem.id.clone(), cands).is_some() {
            return Err(CorpusError::DuplicateId(problem.id));
        }
        problems.push(problem);
    }
    Ok(Fixture {
        problems: ProblemSet::new(name, problems)?,
        candidates,
    })
}

/// Serializes to the fixture format. Problems without candidates get empty
/// candidate lists.
pub fn write_fixture(problems: &ProblemSet, candidates: &BTreeMap<String, CandidateRecord>) -> String {
    let mut out = String::new();
    for p in &problems.problems {
        let empty = CandidateRecord {
            problem_id: p.id.clone(),
            codes: Vec::new(),
            tests: Vec::new(),
        };
        let c = candidates.get(&p.id).unwrap_or(&empty);
        let rec = FixtureRecord::join(p, c);
        out.push_str(&serde_json::to_string(&rec).expect("fixture records serialize"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_doctest_block() {
        assert_eq!(
            strip_docstring_examples("Return sum.\n>>> add(1,2)\n3\n"),
            "Return sum.\n"
        );
    }

    #[test]
    fn strip_is_identity_without_examples() {
        assert_eq!(strip_docstring_examples("Return sum."), "Return sum.");
    }

    #[test]
    fn strips_example_section() {
        assert_eq!(
            strip_docstring_examples("Sort list.\nExample:\n  sort([2,1]) -> [1,2]"),
            "Sort list.\n"
        );
    }

    #[test]
    fn keeps_text_after_blank_line() {
        let doc = "Do it.\nFor example:\n  f(1) == 2\n\nNote: x > 0\n    >>> f(2)\n    3\n    ... more\n";
        assert_eq!(strip_docstring_examples(doc), "Do it.\n\nNote: x > 0\n");
    }

    #[test]
    fn example_word_inside_identifier_is_not_a_heading() {
        assert_eq!(
            strip_docstring_examples("Examplefy the input.\n"),
            "Examplefy the input.\n"
        );
    }

    #[test]
    fn mbpp_record_maps_fields() {
        let line = r#"{"task_id": 1, "text": "add one", "code": "def f(x):\n    return x + 1", "test_list": ["assert f(1)==2"]}"#;
        let set = parse_mbpp("mbpp", line).unwrap();
        let p = &set.problems[0];
        assert_eq!(p.id, "mbpp/1");
        assert_eq!(p.hidden_tests, vec!["assert f(1)==2".to_string()]);
        assert_eq!(p.header, "def f(x):");
        assert_eq!(p.entry_point, "f");
        assert_eq!(p.prefix, "");
    }

    #[test]
    fn mbpp_prefix_collects_imports_and_entry_point_follows_tests() {
        let line = r#"{"task_id": 2, "prompt": "ratio", "code": "from array import array\ndef helper(x):\n    return x\ndef zero_count(nums):\n    return 0", "test_list": ["assert zero_count([1]) == 0"], "test_imports": []}"#;
        let p = &parse_mbpp("mbpp", line).unwrap().problems[0];
        assert_eq!(p.prefix, "from array import array");
        assert_eq!(p.entry_point, "zero_count");
        assert_eq!(p.header, "def zero_count(nums):");
    }

    #[test]
    fn mbpp_empty_test_list_is_malformed() {
        let line = r#"{"task_id": 1, "text": "t", "code": "def f(x):\n    return 1", "test_list": []}"#;
        assert!(matches!(
            parse_mbpp("mbpp", line),
            Err(CorpusError::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn mbpp_duplicate_ids_rejected() {
        let line = r#"{"task_id": 1, "text": "t", "code": "def f(x):\n    return 1", "test_list": ["assert f(1) == 1"]}"#;
        let text = format!("{line}\n{line}\n");
        assert!(matches!(
            parse_mbpp("mbpp", &text),
            Err(CorpusError::DuplicateId(id)) if id == "mbpp/1"
        ));
    }

    #[test]
    fn humaneval_strips_examples_and_wraps_check() {
        let rec = serde_json::json!({
            "task_id": "HumanEval/0",
            "prompt": "from typing import List\n\n\ndef add(a: int, b: int) -> int:\n    \"\"\"Return sum.\n    >>> add(1,2)\n    3\n    \"\"\"\n",
            "canonical_solution": "    return a + b\n",
            "test": "def check(candidate):\n    assert candidate(1, 2) == 3\n",
            "entry_point": "add"
        });
        let set = parse_humaneval("humaneval", &rec.to_string()).unwrap();
        let p = &set.problems[0];
        assert_eq!(p.id, "humaneval/0");
        assert_eq!(p.intent, "Return sum.");
        assert_eq!(p.prefix, "from typing import List");
        assert_eq!(p.header, "def add(a: int, b: int) -> int:");
        assert_eq!(p.hidden_tests.len(), 1);
        assert!(p.hidden_tests[0].ends_with("check(add)\n"));
        assert!(p.reference.contains("return a + b"));
    }

    #[test]
    fn humaneval_missing_entry_point_is_malformed() {
        let rec = serde_json::json!({
            "task_id": "HumanEval/1",
            "prompt": "def f():\n    \"\"\"x\"\"\"\n",
            "canonical_solution": "    return 1\n",
            "test": "def check(c):\n    assert c() == 1\n"
        });
        assert!(matches!(
            parse_humaneval("he", &rec.to_string()),
            Err(CorpusError::MalformedRecord { .. })
        ));
    }

    #[test]
    fn empty_fixture_is_empty_set() {
        let f = parse_fixture("empty", "").unwrap();
        assert!(f.problems.is_empty());
        assert!(f.candidates.is_empty());
    }

    #[test]
    fn fixture_code_without_id_is_malformed() {
        let rec = serde_json::json!({
            "id": "x/1", "intent": "i", "header": "def f(x):", "prefix": "",
            "reference": "def f(x):\n    return x", "hidden_tests": ["assert f(1) == 1"],
            "entry_point": "f", "codes": [{"source": "def f(x):\n    return x"}], "tests": []
        });
        assert!(matches!(
            parse_fixture("f", &rec.to_string()),
            Err(CorpusError::MalformedRecord { .. })
        ));
    }

    #[test]
    fn ids_sort_numerically_within_namespace() {
        let mk = |id: &str| Problem {
            id: id.into(),
            intent: String::new(),
            header: "def f():".into(),
            prefix: String::new(),
            reference: "def f():\n    pass".into(),
            hidden_tests: vec!["assert f() is None".into()],
            entry_point: "f".into(),
        };
        let set = ProblemSet::new("s", vec![mk("mbpp/11"), mk("mbpp/2"), mk("humaneval/0")]).unwrap();
        let ids: Vec<_> = set.problems.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["humaneval/0", "mbpp/2", "mbpp/11"]);
    }
}
