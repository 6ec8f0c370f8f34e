//! Feedback-driven re-ranking of unseen documents: top-k selection over
//! combined scores, softmax weighting, and the query/feedback blend.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::SimilarityScorer;
use crate::types::{stable_argsort_desc, Document, ScoreVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    /// Maximum number of feedback documents.
    pub k: usize,
    /// Weight of the feedback term against query relevance.
    pub c: f64,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self { k: 10, c: 0.1 }
    }
}

impl ExpansionConfig {
    pub fn new(k: usize, c: f64) -> Result<Self> {
        let cfg = Self { k, c };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("expansion k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.c) {
            return Err(Error::Config(format!("expansion c = {} is outside [0,1]", self.c)));
        }
        Ok(())
    }
}

/// A selected feedback document and its combined score.
#[derive(Debug, Clone, PartialEq)]
pub struct Feedback {
    pub doc_id: String,
    pub score: f64,
}

/// Indices of the `min(k, n)` highest scores; ties keep the earlier index first.
pub fn top_k_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order = stable_argsort_desc(scores);
    order.truncate(k);
    order
}

/// The top `k` documents by combined score, best first.
pub fn select_feedback(combined: &ScoreVector, k: usize) -> Result<Vec<Feedback>> {
    if combined.is_empty() {
        return Err(Error::input("feedback selection needs at least one examined document"));
    }
    if combined.has_masked() {
        return Err(Error::input("combined scores contain masked entries"));
    }
    let scores: Vec<f64> = combined.entries().iter().map(|e| e.score).collect();
    Ok(top_k_indices(&scores, k)
        .into_iter()
        .map(|i| {
            let e = &combined.entries()[i];
            Feedback {
                doc_id: e.doc_id.clone(),
                score: e.score,
            }
        })
        .collect())
}

/// Numerically stable softmax. An empty input yields an empty output.
pub fn softmax_weights(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Blends feedback and query relevance for each unseen document `u`:
/// `c * sum_j w_j * fb_sim(j, u) + (1 - c) * query_sim[u]`.
///
/// Shared by [`expand_and_score`] and callers holding precomputed similarity tables.
pub fn blend<F>(weights: &[f64], fb_sim: F, query_sim: &[f64], c: f64) -> Vec<f64>
where
    F: Fn(usize, usize) -> f64,
{
    query_sim
        .iter()
        .enumerate()
        .map(|(u, &q)| {
            let rf: f64 = weights.iter().enumerate().map(|(j, w)| w * fb_sim(j, u)).sum();
            c * rf + (1.0 - c) * q
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub scores: ScoreVector,
    /// Set when no feedback was available and pseudo-relevance alone was used.
    pub feedback_missing: bool,
}

/// Scores unseen documents against the query and the weighted feedback set.
///
/// `feedback` pairs each selected document with its softmax weight. An empty
/// feedback set degrades to query relevance alone.
pub fn expand_and_score<S>(
    query: &[f64],
    feedback: &[(&Document, f64)],
    unseen: &[&Document],
    scorer: &S,
    config: &ExpansionConfig,
) -> Result<Expansion>
where
    S: SimilarityScorer + ?Sized,
{
    config.validate()?;
    let mut scores = ScoreVector::unbounded();
    if unseen.is_empty() {
        return Ok(Expansion {
            scores,
            feedback_missing: feedback.is_empty(),
        });
    }
    let query_sim: Vec<f64> = unseen.iter().map(|d| scorer.score(query, &d.embedding)).collect();
    let (values, feedback_missing) = if feedback.is_empty() {
        (query_sim, true)
    } else {
        let weights: Vec<f64> = feedback.iter().map(|(_, w)| *w).collect();
        let fb_sim = |j: usize, u: usize| scorer.score(&feedback[j].0.embedding, &unseen[u].embedding);
        (blend(&weights, fb_sim, &query_sim, config.c), false)
    };
    for (d, v) in unseen.iter().zip(values) {
        scores.push(d.id.clone(), v)?;
    }
    Ok(Expansion {
        scores,
        feedback_missing,
    })
}
