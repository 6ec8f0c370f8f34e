//! Base relevance channels for examined documents: pseudo-relevance, clicks,
//! and the brain score chosen per feedback mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Document, Mode, ScoreVector};

/// Pairwise relevance between two document or query representations, in `[0, 1]`.
pub trait SimilarityScorer: Send + Sync {
    fn score(&self, a: &[f64], b: &[f64]) -> f64;
}

/// Cosine similarity mapped affinely onto `[0, 1]` as `(1 + cos) / 2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CosineScorer;

impl SimilarityScorer for CosineScorer {
    fn score(&self, a: &[f64], b: &[f64]) -> f64 {
        let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            ab += x * y;
            aa += x * x;
            bb += y * y;
        }
        if aa == 0.0 || bb == 0.0 {
            return 0.5;
        }
        let cos = (ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0);
        (1.0 + cos) / 2.0
    }
}

impl<T: SimilarityScorer + ?Sized> SimilarityScorer for &T {
    fn score(&self, a: &[f64], b: &[f64]) -> f64 {
        (**self).score(a, b)
    }
}

/// What was observed for one examined document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExaminationRecord {
    pub doc_id: String,
    pub clicked: bool,
    /// Decoded relevance of the snippet response.
    pub snippet_brain_score: f64,
    /// Decoded relevance of the landing-page response; only observable after a click.
    pub landing_brain_score: Option<f64>,
}

impl ExaminationRecord {
    pub fn new(
        doc_id: impl Into<String>,
        clicked: bool,
        snippet_brain_score: f64,
        landing_brain_score: Option<f64>,
    ) -> Result<Self> {
        let doc_id = doc_id.into();
        let in_range = |v: f64| (0.0..=1.0).contains(&v);
        if !in_range(snippet_brain_score) {
            return Err(Error::input(format!("{doc_id}: snippet brain score out of [0,1]")));
        }
        if let Some(l) = landing_brain_score {
            if !clicked {
                return Err(Error::input(format!(
                    "{doc_id}: landing-page score present for a document that was not clicked"
                )));
            }
            if !in_range(l) {
                return Err(Error::input(format!("{doc_id}: landing brain score out of [0,1]")));
            }
        }
        Ok(Self {
            doc_id,
            clicked,
            snippet_brain_score,
            landing_brain_score,
        })
    }
}

/// Query-document relevance for each document's snippet embedding.
pub fn pseudo_scores<'a, S, I>(query: &[f64], docs: I, scorer: &S) -> Result<ScoreVector>
where
    S: SimilarityScorer + ?Sized,
    I: IntoIterator<Item = &'a Document>,
{
    if query.is_empty() {
        return Err(Error::input("query has no representation"));
    }
    let mut out = ScoreVector::new();
    for d in docs {
        if d.embedding.len() != query.len() {
            return Err(Error::input(format!(
                "document {} has a {}-dimensional embedding, query has {}",
                d.id,
                d.embedding.len(),
                query.len()
            )));
        }
        out.push(d.id.clone(), scorer.score(query, &d.embedding))?;
    }
    Ok(out)
}

/// 1 for clicked documents, 0 otherwise.
pub fn click_scores(records: &[ExaminationRecord]) -> Result<ScoreVector> {
    let mut out = ScoreVector::new();
    for r in records {
        out.push(r.doc_id.clone(), if r.clicked { 1.0 } else { 0.0 })?;
    }
    Ok(out)
}

/// Brain channel per mode: the snippet score in IRF; in RRF the landing-page
/// score when it was observed, else the snippet score.
pub fn brain_scores_select(records: &[ExaminationRecord], mode: Mode) -> Result<ScoreVector> {
    let mut out = ScoreVector::new();
    for r in records {
        let score = match mode {
            Mode::Irf => r.snippet_brain_score,
            Mode::Rrf => r.landing_brain_score.unwrap_or(r.snippet_brain_score),
        };
        out.push(r.doc_id.clone(), score)?;
    }
    Ok(out)
}
