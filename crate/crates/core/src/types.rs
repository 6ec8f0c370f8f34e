//! Domain primitives shared by every scoring stage.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `| ||embedding|| - 1 |` for a [`Document`].
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

/// Four-point relevance judgement, 1 (totally irrelevant) to 4 (perfectly relevant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct RelevanceGrade(u8);

impl RelevanceGrade {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 4;

    pub fn new(value: u8) -> Result<Self> {
        if (Self::MIN..=Self::MAX).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::input(format!("relevance grade {value} outside 1..=4")))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// NDCG gain index: grade 1..4 maps to 0..3.
    pub fn gain(self) -> u32 {
        u32::from(self.0 - 1)
    }
}

impl TryFrom<u8> for RelevanceGrade {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        Self::new(value)
    }
}

impl From<RelevanceGrade> for u8 {
    fn from(g: RelevanceGrade) -> u8 {
        g.0
    }
}

impl fmt::Display for RelevanceGrade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Relevance-feedback mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Iterative: re-rank the unseen documents while the session proceeds.
    Irf,
    /// Retrospective: re-rank the examined documents once the session ends.
    Rrf,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Irf => "irf",
            Mode::Rrf => "rrf",
        })
    }
}

/// A candidate document with its unit-norm snippet embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub query_id: String,
    pub embedding: Vec<f64>,
    /// Third-party binary snippet relevance label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_label: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<usize>,
}

impl Document {
    /// Builds a document, rejecting embeddings that are not unit norm.
    pub fn new(id: impl Into<String>, query_id: impl Into<String>, embedding: Vec<f64>) -> Result<Self> {
        let id = id.into();
        check_unit_norm(&id, &embedding)?;
        Ok(Self {
            id,
            query_id: query_id.into(),
            embedding,
            external_label: None,
            cluster: None,
        })
    }

    /// Builds a document after scaling `raw` to unit norm.
    pub fn normalized(id: impl Into<String>, query_id: impl Into<String>, raw: Vec<f64>) -> Result<Self> {
        let id = id.into();
        let embedding = normalize(raw).ok_or_else(|| Error::input(format!("document {id}: zero embedding")))?;
        Self::new(id, query_id, embedding)
    }

    pub fn with_external_label(mut self, label: bool) -> Self {
        self.external_label = Some(label);
        self
    }

    pub fn with_cluster(mut self, cluster: usize) -> Self {
        self.cluster = Some(cluster);
        self
    }
}

pub(crate) fn check_unit_norm(id: &str, embedding: &[f64]) -> Result<()> {
    if embedding.is_empty() {
        return Err(Error::input(format!("{id}: empty embedding")));
    }
    let norm = embedding.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
        return Err(Error::input(format!("{id}: embedding norm {norm} is not 1")));
    }
    Ok(())
}

/// Scales a vector to unit Euclidean norm; `None` for the zero vector.
pub fn normalize(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub doc_id: String,
    pub score: f64,
    pub masked: bool,
}

/// Per-document scores in examination or candidate order, with a mask for
/// values that could not be observed.
///
/// Base channels hold unmasked scores in `[0, 1]`. Fused vectors built by the
/// combiner are created with [`ScoreVector::unbounded`] and may exceed 1.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreVector {
    entries: Vec<ScoreEntry>,
    #[serde(default)]
    unbounded: bool,
}

impl ScoreVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// An empty vector whose scores only need to be finite and non-negative.
    pub fn unbounded() -> Self {
        Self {
            entries: Vec::new(),
            unbounded: true,
        }
    }

    /// Builds a bounded vector from parallel id and score slices.
    pub fn from_scores<S: AsRef<str>>(ids: &[S], scores: &[f64]) -> Result<Self> {
        if ids.len() != scores.len() {
            return Err(Error::input(format!(
                "{} ids but {} scores",
                ids.len(),
                scores.len()
            )));
        }
        let mut v = Self::new();
        for (id, &s) in ids.iter().zip(scores) {
            v.push(id.as_ref(), s)?;
        }
        Ok(v)
    }

    pub fn push(&mut self, doc_id: impl Into<String>, score: f64) -> Result<()> {
        let doc_id = doc_id.into();
        self.check_score(&doc_id, score)?;
        self.check_unique(&doc_id)?;
        self.entries.push(ScoreEntry {
            doc_id,
            score,
            masked: false,
        });
        Ok(())
    }

    /// Appends an entry whose value is unavailable.
    pub fn push_masked(&mut self, doc_id: impl Into<String>) -> Result<()> {
        let doc_id = doc_id.into();
        self.check_unique(&doc_id)?;
        self.entries.push(ScoreEntry {
            doc_id,
            score: 0.0,
            masked: true,
        });
        Ok(())
    }

    fn check_score(&self, doc_id: &str, score: f64) -> Result<()> {
        let ok = if self.unbounded {
            score.is_finite()
        } else {
            (0.0..=1.0).contains(&score)
        };
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!("score {score} for {doc_id} out of range")))
        }
    }

    fn check_unique(&self, doc_id: &str) -> Result<()> {
        if self.entries.iter().any(|e| e.doc_id == doc_id) {
            Err(Error::input(format!("duplicate document id {doc_id}")))
        } else {
            Ok(())
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_unbounded(&self) -> bool {
        self.unbounded
    }

    pub fn entries(&self) -> &[ScoreEntry] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    /// Scores in order; masked entries yield `None`.
    pub fn values(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        self.entries.iter().map(|e| (!e.masked).then_some(e.score))
    }

    pub fn get(&self, doc_id: &str) -> Option<&ScoreEntry> {
        self.entries.iter().find(|e| e.doc_id == doc_id)
    }

    pub fn has_masked(&self) -> bool {
        self.entries.iter().any(|e| e.masked)
    }

    /// Verifies that `other` annotates the same documents in the same order.
    pub fn check_aligned(&self, other: &ScoreVector) -> Result<()> {
        if self.len() != other.len() || self.ids().zip(other.ids()).any(|(a, b)| a != b) {
            return Err(Error::input("score vectors cover different documents"));
        }
        Ok(())
    }

    /// Unique-id check over the whole vector, used after deserialization.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.doc_id.as_str()) {
                return Err(Error::input(format!("duplicate document id {}", e.doc_id)));
            }
            if !e.masked {
                self.check_score(&e.doc_id, e.score)?;
            }
        }
        Ok(())
    }
}

/// Documents ordered by descending score. Ties keep their input order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankedList {
    entries: Vec<(String, f64)>,
}

impl RankedList {
    pub fn from_scores<S: AsRef<str>>(ids: &[S], scores: &[f64]) -> Result<Self> {
        if ids.len() != scores.len() {
            return Err(Error::input("ids and scores differ in length"));
        }
        if let Some(s) = scores.iter().find(|s| s.is_nan()) {
            return Err(Error::input(format!("cannot rank NaN score {s}")));
        }
        let order = stable_argsort_desc(scores);
        Ok(Self {
            entries: order
                .into_iter()
                .map(|i| (ids[i].as_ref().to_string(), scores[i]))
                .collect(),
        })
    }

    /// Ranks the unmasked entries of a score vector.
    pub fn from_score_vector(v: &ScoreVector) -> Result<Self> {
        let (ids, scores): (Vec<&str>, Vec<f64>) = v
            .entries()
            .iter()
            .filter(|e| !e.masked)
            .map(|e| (e.doc_id.as_str(), e.score))
            .unzip();
        Self::from_scores(&ids, &scores)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|(_, s)| *s)
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }
}

/// Indices of `scores` sorted by descending value; equal values keep input order.
pub fn stable_argsort_desc(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal));
    order
}
