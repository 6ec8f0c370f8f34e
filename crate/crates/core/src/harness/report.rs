//! Experiment reports: per-row metrics for every compared method, column
//! means, a content fingerprint, and the paired significance test.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Metrics of every method on one evaluation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub session_id: String,
    pub user_id: String,
    pub query_id: String,
    /// Examined documents at evaluation time.
    pub h: usize,
    /// Clicks among the examined documents.
    pub clicks: usize,
    pub bad_clicks: usize,
    /// `values[method][column]`.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub mode: String,
    pub methods: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
    /// `aggregates[method][column]`: mean over rows.
    pub aggregates: Vec<Vec<f64>>,
    /// Evaluation points dropped because a ground-truth label was missing.
    pub skipped_rows: usize,
    pub seed: u64,
    pub config: serde_json::Value,
    pub fingerprint: String,
}

impl ExperimentReport {
    pub fn new(
        mode: impl Into<String>,
        methods: Vec<String>,
        columns: Vec<String>,
        rows: Vec<ReportRow>,
        skipped_rows: usize,
        seed: u64,
        config: serde_json::Value,
    ) -> Self {
        let mut r = Self {
            mode: mode.into(),
            methods,
            columns,
            rows,
            aggregates: Vec::new(),
            skipped_rows,
            seed,
            config,
            fingerprint: String::new(),
        };
        r.aggregates = r.recompute_aggregates();
        r.fingerprint = r.compute_fingerprint();
        r
    }

    /// Column means straight from the rows (zeros when there are none).
    pub fn recompute_aggregates(&self) -> Vec<Vec<f64>> {
        let n = self.rows.len();
        (0..self.methods.len())
            .map(|m| {
                (0..self.columns.len())
                    .map(|c| {
                        if n == 0 {
                            0.0
                        } else {
                            self.rows.iter().map(|r| r.values[m][c]).sum::<f64>() / n as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// SHA-256 over everything except the fingerprint itself.
    pub fn compute_fingerprint(&self) -> String {
        let body = serde_json::json!({
            "mode": self.mode,
            "methods": self.methods,
            "columns": self.columns,
            "rows": self.rows,
            "aggregates": self.aggregates,
            "skipped_rows": self.skipped_rows,
            "seed": self.seed,
            "config": self.config,
        });
        hex::encode(Sha256::digest(body.to_string().as_bytes()))
    }

    /// Replaces the embedded config and refreshes the fingerprint.
    pub fn with_config(mut self, config: serde_json::Value) -> Self {
        self.config = config;
        self.fingerprint = self.compute_fingerprint();
        self
    }

    pub fn method_index(&self, name: &str) -> Result<usize> {
        self.methods
            .iter()
            .position(|m| m == name)
            .ok_or_else(|| Error::input(format!("report has no method {name}")))
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::input(format!("report has no column {name}")))
    }

    /// One metric column of one method, in row order.
    pub fn series(&self, method: &str, column: &str) -> Result<Vec<f64>> {
        let (m, c) = (self.method_index(method)?, self.column_index(column)?);
        Ok(self.rows.iter().map(|r| r.values[m][c]).collect())
    }

    pub fn mean(&self, method: &str, column: &str) -> Result<f64> {
        let (m, c) = (self.method_index(method)?, self.column_index(column)?);
        Ok(self.aggregates[m][c])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub n: usize,
    /// Mean of `a - b`.
    pub mean_difference: f64,
    pub t: f64,
    /// Two-sided p-value.
    pub p_value: f64,
}

/// Two-sided paired t-test of `a` against `b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTest> {
    if a.len() != b.len() {
        return Err(Error::input("paired samples differ in length"));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::UndefinedMetric("paired t-test needs at least two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let (t, p) = if var == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (mean.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = mean / (var / n as f64).sqrt();
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).map_err(|e| Error::UndefinedMetric(e.to_string()))?;
        (t, 2.0 * (1.0 - dist.cdf(t.abs())))
    };
    Ok(PairedTest {
        n,
        mean_difference: mean,
        t,
        p_value: p,
    })
}
