//! Report files: one TSV row per evaluation point and a JSON summary.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{paired_t_test, ExperimentReport, PairedTest};

pub const REPORT_FILE: &str = "report.tsv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Paired test of `method` against `baseline` on one metric column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub method: String,
    pub baseline: String,
    pub column: String,
    pub test: Option<PairedTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: String,
    pub rows: usize,
    pub skipped_rows: usize,
    pub methods: Vec<String>,
    pub columns: Vec<String>,
    pub aggregates: Vec<Vec<f64>>,
    /// Every later method against the first one.
    pub comparisons: Vec<Comparison>,
    pub seed: u64,
    pub fingerprint: String,
    pub config: serde_json::Value,
}

impl Summary {
    pub fn from_report(report: &ExperimentReport) -> Self {
        let mut comparisons = Vec::new();
        if let Some(base) = report.methods.first() {
            for m in &report.methods[1..] {
                for c in &report.columns {
                    let a = report.series(m, c).expect("method and column exist");
                    let b = report.series(base, c).expect("method and column exist");
                    comparisons.push(Comparison {
                        method: m.clone(),
                        baseline: base.clone(),
                        column: c.clone(),
                        test: paired_t_test(&a, &b).ok(),
                    });
                }
            }
        }
        Self {
            mode: report.mode.clone(),
            rows: report.rows.len(),
            skipped_rows: report.skipped_rows,
            methods: report.methods.clone(),
            columns: report.columns.clone(),
            aggregates: report.aggregates.clone(),
            comparisons,
            seed: report.seed,
            fingerprint: report.fingerprint.clone(),
            config: report.config.clone(),
        }
    }
}

pub fn write_report_tsv(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let mut header = vec!["session_id", "user_id", "query_id", "h", "clicks", "bad_clicks"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    for m in &report.methods {
        header.extend(report.columns.iter().map(|c| format!("{m}:{c}")));
    }
    writeln!(w, "{}", header.join("\t"))?;
    for r in &report.rows {
        write!(w, "{}\t{}\t{}\t{}\t{}\t{}", r.session_id, r.user_id, r.query_id, r.h, r.clicks, r.bad_clicks)?;
        for v in r.values.iter().flatten() {
            write!(w, "\t{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `report.tsv` and `summary.json` into `dir`.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_report_tsv(report, &dir.join(REPORT_FILE))?;
    let mut text = serde_json::to_string_pretty(&Summary::from_report(report))?;
    text.push('\n');
    fs::write(dir.join(SUMMARY_FILE), text)?;
    Ok(())
}

/// Parses a TSV report back into per-row values `[method][column]` keyed by
/// the header, for recomputing aggregates independently.
pub fn read_report_values(path: &Path, methods: usize, columns: usize) -> Result<Vec<Vec<Vec<f64>>>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 + methods * columns {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected {} fields, found {}", 6 + methods * columns, fields.len()),
            });
        }
        let values = fields[6..]
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(values.chunks(columns).map(<[f64]>::to_vec).collect());
    }
    Ok(rows)
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
