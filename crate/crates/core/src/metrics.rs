//! Ranking and classification metrics used to score every re-ranking.
//!
//! NDCG uses exponential gain `2^g - 1` with a `log2(rank + 1)` discount, and
//! is defined as 1.0 for lists whose gains are all zero. Average precision is
//! 0.0 when nothing is relevant.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::RankedList;

/// Gains at or above this value count as relevant for average precision.
pub const RELEVANT_GAIN: u32 = 1;

/// NDCG cutoffs reported by default.
pub const DEFAULT_CUTOFFS: [usize; 4] = [1, 3, 5, 10];

/// NDCG@k of `ranked` given an integer gain grade per document.
pub fn ndcg_at_k(ranked: &RankedList, grades: &HashMap<String, u32>, k: usize) -> Result<f64> {
    let gains = gains_in_rank_order(ranked, grades)?;
    ndcg_from_gains(&gains, k)
}

/// NDCG@k for gains already listed in ranked order.
pub fn ndcg_from_gains(gains: &[u32], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::input("NDCG cutoff must be at least 1"));
    }
    let mut ideal = gains.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(&ideal, k);
    if idcg == 0.0 {
        return Ok(1.0);
    }
    Ok(dcg(gains, k) / idcg)
}

fn dcg(gains: &[u32], k: usize) -> f64 {
    gains
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| (2f64.powi(g as i32) - 1.0) / ((i + 2) as f64).log2())
        .sum()
}

fn gains_in_rank_order(ranked: &RankedList, grades: &HashMap<String, u32>) -> Result<Vec<u32>> {
    ranked
        .ids()
        .map(|id| {
            grades
                .get(id)
                .copied()
                .ok_or_else(|| Error::input(format!("no grade for ranked document {id}")))
        })
        .collect()
}

/// Average precision of one ranking: the mean, over relevant documents, of
/// precision at each relevant document's rank.
pub fn mean_average_precision(ranked: &RankedList, relevant: &HashSet<String>) -> f64 {
    let flags: Vec<bool> = ranked.ids().map(|id| relevant.contains(id)).collect();
    average_precision_from_flags(&flags, relevant.len())
}

/// Average precision for relevance flags in ranked order. `total_relevant`
/// is the size of the relevant set (relevant documents missing from the
/// ranking contribute zero precision).
pub fn average_precision_from_flags(flags: &[bool], total_relevant: usize) -> f64 {
    if total_relevant == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &rel) in flags.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total_relevant as f64
}

/// Area under the ROC curve: the probability that a random positive scores
/// above a random negative, ties counting one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::input("scores and labels differ in length"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::input("AUC over NaN score"));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "AUC needs at least one positive and one negative label".into(),
        ));
    }

    // Mann-Whitney U with mid-ranks for tied scores.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += mid_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// NDCG at each configured cutoff plus average precision for one ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub ndcg: Vec<f64>,
    pub map: f64,
}

/// Which metrics a harness run reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSet {
    pub cutoffs: Vec<usize>,
}

impl Default for MetricSet {
    fn default() -> Self {
        Self {
            cutoffs: DEFAULT_CUTOFFS.to_vec(),
        }
    }
}

impl MetricSet {
    pub fn validate(&self) -> Result<()> {
        if self.cutoffs.is_empty() || self.cutoffs.contains(&0) {
            return Err(Error::Config("metric cutoffs must be positive and non-empty".into()));
        }
        Ok(())
    }

    /// Evaluates gains listed in ranked order. Average precision treats
    /// `gain >= RELEVANT_GAIN` as relevant.
    pub fn evaluate(&self, gains: &[u32]) -> Result<MetricValues> {
        let ndcg = self
            .cutoffs
            .iter()
            .map(|&k| ndcg_from_gains(gains, k))
            .collect::<Result<Vec<_>>>()?;
        let flags: Vec<bool> = gains.iter().map(|&g| g >= RELEVANT_GAIN).collect();
        let total = flags.iter().filter(|&&f| f).count();
        Ok(MetricValues {
            ndcg,
            map: average_precision_from_flags(&flags, total),
        })
    }

    /// Column names in the order produced by [`MetricValues::columns`].
    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.cutoffs.iter().map(|k| format!("ndcg@{k}")).collect();
        names.push("map".into());
        names
    }

    /// Position of `ndcg@k` in the value columns.
    pub fn ndcg_index(&self, k: usize) -> Option<usize> {
        self.cutoffs.iter().position(|&c| c == k)
    }
}

impl MetricValues {
    pub fn columns(&self) -> Vec<f64> {
        let mut v = self.ndcg.clone();
        v.push(self.map);
        v
    }
}
