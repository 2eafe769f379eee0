//! Aggregate evaluation reports: line-delimited JSON and a plain table.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::metrics::{aggregate_bits, aggregate_mean, MetricsError, ProblemEval};
use crate::session::Mode;

pub const BASELINE_KS: [usize; 2] = [1, 100];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineEntry {
    pub k: usize,
    pub value: f64,
}

/// `values[m]` is pass@k@m for `m = 0..=max_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub k: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub model: String,
    pub mode: Mode,
    pub problems: usize,
    pub max_m: usize,
    pub baseline: Vec<BaselineEntry>,
    pub grid: Vec<GridRow>,
}

impl EvalReport {
    pub fn build(
        dataset: &str,
        model: &str,
        mode: Mode,
        evals: &[ProblemEval],
        ks: &[usize],
        max_m: usize,
    ) -> Result<Self, MetricsError> {
        let mut baseline = Vec::new();
        for &k in &BASELINE_KS {
            let per_problem = evals
                .iter()
                .map(|e| if e.n == 0 { Ok(0.0) } else { e.baseline(k) })
                .collect::<Result<Vec<_>, _>>()?;
            baseline.push(BaselineEntry {
                k,
                value: aggregate_mean(&per_problem)?,
            });
        }
        let mut grid = Vec::new();
        for &k in ks {
            let values = (0..=max_m)
                .map(|m| {
                    let bits: Vec<bool> = evals.iter().map(|e| e.ranked_hit(k, m)).collect();
                    aggregate_bits(&bits)
                })
                .collect::<Result<Vec<_>, _>>()?;
            grid.push(GridRow { k, values });
        }
        Ok(EvalReport {
            dataset: dataset.to_string(),
            model: model.to_string(),
            mode,
            problems: evals.len(),
            max_m,
            baseline,
            grid,
        })
    }

    pub fn baseline_at(&self, k: usize) -> Option<f64> {
        self.baseline.iter().find(|b| b.k == k).map(|b| b.value)
    }

    pub fn ranked_at(&self, k: usize, m: usize) -> Option<f64> {
        self.grid.iter().find(|g| g.k == k)?.values.get(m).copied()
    }
}

pub fn to_jsonl(reports: &[EvalReport]) -> String {
    reports
        .iter()
        .map(|r| serde_json::to_string(r).expect("reports serialize") + "\n")
        .collect()
}

pub fn from_jsonl(text: &str) -> Result<Vec<EvalReport>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Writes the reports through a temporary file so a partial report never
/// appears at `path`.
pub fn write_jsonl(path: &Path, reports: &[EvalReport]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(to_jsonl(reports).as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn pct(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

/// One row per report: baseline pass@k, then pass@k@m for `m = 1..=max_m`.
pub fn render_table(reports: &[EvalReport]) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    let mut header = vec![
        "Dataset".to_string(),
        "Model".to_string(),
        "Mode".to_string(),
    ];
    header.extend(first.baseline.iter().map(|b| format!("pass@{}", b.k)));
    for g in &first.grid {
        header.extend((1..=first.max_m).map(|m| format!("pass@{}@{m}", g.k)));
    }
    let mut rows = vec![header];
    for r in reports {
        let mut row = vec![r.dataset.clone(), r.model.clone(), r.mode.to_string()];
        row.extend(r.baseline.iter().map(|b| pct(b.value)));
        for g in &r.grid {
            row.extend(g.values.iter().skip(1).map(|&v| pct(v)));
        }
        rows.push(row);
    }
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<w$}", w = widths[c]))
            .collect();
        out.push_str(cells.join(" | ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            out.push_str(&rule.join("-+-"));
            out.push('\n');
        }
    }
    out
}
