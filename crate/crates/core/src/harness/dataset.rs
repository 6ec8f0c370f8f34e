//! In-memory dataset: queries, documents, per-user sessions and optional EEG
//! feature rows, with referential-integrity validation.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{check_unit_norm, Document, RelevanceGrade};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub embedding: Vec<f64>,
}

/// One examined result within a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Examination {
    pub doc_id: String,
    pub clicked: bool,
    pub snippet_grade: RelevanceGrade,
    /// Present exactly when the document was clicked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landing_grade: Option<RelevanceGrade>,
    /// Precomputed brain score of the snippet response.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snippet_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landing_score: Option<f64>,
}

impl Examination {
    /// Clicked, but the landing page was judged irrelevant (grade 1 or 2).
    pub fn is_bad_click(&self) -> bool {
        self.clicked && self.landing_grade.is_some_and(|g| g.value() <= 2)
    }

    /// Retrospective ground truth: the landing grade when clicked, else the snippet grade.
    pub fn final_grade(&self) -> RelevanceGrade {
        self.landing_grade.filter(|_| self.clicked).unwrap_or(self.snippet_grade)
    }
}

/// One user's trace for one query, in examination order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub user_id: String,
    /// Position in the user's timeline; strictly increasing per user.
    pub seq: u64,
    pub query_id: String,
    /// Intent cluster of the search task, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent_cluster: Option<usize>,
    pub examined: Vec<Examination>,
    /// Candidate documents never examined in this session.
    pub unseen: Vec<String>,
}

impl Session {
    pub fn h_max(&self) -> usize {
        self.examined.len()
    }

    pub fn click_count(&self) -> usize {
        self.examined.iter().filter(|e| e.clicked).count()
    }

    pub fn bad_click_count(&self) -> usize {
        self.examined.iter().filter(|e| e.is_bad_click()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StimulusKind {
    Snippet,
    Landing,
}

/// Locates the EEG response to one stimulus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureKey {
    pub session_id: String,
    pub position: usize,
    pub kind: StimulusKind,
}

/// Dense row-major feature matrix with a key per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    dim: usize,
    data: Vec<f32>,
    keys: Vec<FeatureKey>,
    lookup: HashMap<FeatureKey, usize>,
}

impl FeatureTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
            keys: Vec::new(),
            lookup: HashMap::new(),
        }
    }

    pub fn from_parts(dim: usize, data: Vec<f32>, keys: Vec<FeatureKey>) -> Result<Self> {
        if dim == 0 || data.len() != dim * keys.len() {
            return Err(Error::input(format!(
                "feature matrix holds {} values, expected {} rows x {dim}",
                data.len(),
                keys.len()
            )));
        }
        let mut table = Self::new(dim);
        table.data = data;
        for (row, key) in keys.into_iter().enumerate() {
            if table.lookup.insert(key.clone(), row).is_some() {
                return Err(Error::input(format!(
                    "duplicate feature row for session {} position {}",
                    key.session_id, key.position
                )));
            }
            table.keys.push(key);
        }
        Ok(table)
    }

    pub fn push(&mut self, key: FeatureKey, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::input(format!("feature row has {} values, expected {}", row.len(), self.dim)));
        }
        if self.lookup.contains_key(&key) {
            return Err(Error::input(format!("duplicate feature row for {key:?}")));
        }
        self.lookup.insert(key.clone(), self.keys.len());
        self.keys.push(key);
        self.data.extend(row.iter().map(|&v| v as f32));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[FeatureKey] {
        &self.keys
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, index: usize) -> &[f32] {
        &self.data[index * self.dim..(index + 1) * self.dim]
    }

    pub fn row_f64(&self, index: usize) -> Vec<f64> {
        self.row(index).iter().map(|&v| v as f64).collect()
    }

    pub fn find(&self, session_id: &str, position: usize, kind: StimulusKind) -> Option<usize> {
        self.lookup
            .get(&FeatureKey {
                session_id: session_id.to_string(),
                position,
                kind,
            })
            .copied()
    }

    /// Mutable access for tests that perturb stored features.
    pub fn row_mut(&mut self, index: usize) -> &mut [f32] {
        &mut self.data[index * self.dim..(index + 1) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub queries: Vec<Query>,
    pub documents: Vec<Document>,
    pub sessions: Vec<Session>,
    pub features: Option<FeatureTable>,
}

/// Borrowed lookups over a validated dataset.
pub struct DatasetIndex<'a> {
    pub queries: HashMap<&'a str, &'a Query>,
    pub documents: HashMap<&'a str, &'a Document>,
}

impl Dataset {
    pub fn index(&self) -> DatasetIndex<'_> {
        DatasetIndex {
            queries: self.queries.iter().map(|q| (q.id.as_str(), q)).collect(),
            documents: self.documents.iter().map(|d| (d.id.as_str(), d)).collect(),
        }
    }

    /// Session indices grouped by user (users in first-appearance order), each
    /// group in input order.
    pub fn sessions_by_user(&self) -> Vec<(String, Vec<usize>)> {
        let mut order: Vec<String> = Vec::new();
        let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, s) in self.sessions.iter().enumerate() {
            groups
                .entry(s.user_id.as_str())
                .or_insert_with(|| {
                    order.push(s.user_id.clone());
                    Vec::new()
                })
                .push(i);
        }
        order
            .into_iter()
            .map(|u| {
                let g = groups.remove(u.as_str()).unwrap_or_default();
                (u, g)
            })
            .collect()
    }

    /// Rejects users whose sessions are not listed in strictly increasing time.
    pub fn check_time_order(&self) -> Result<()> {
        for (user, idx) in self.sessions_by_user() {
            for w in idx.windows(2) {
                let (a, b) = (&self.sessions[w[0]], &self.sessions[w[1]]);
                if b.seq <= a.seq {
                    return Err(Error::input(format!(
                        "sessions of user {user} are out of time order: {} (seq {}) listed before {} (seq {})",
                        a.id, a.seq, b.id, b.seq
                    )));
                }
            }
        }
        Ok(())
    }

    /// Every referential and shape problem in the dataset, reported together.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        let mut query_ids = HashSet::new();
        let mut dims: BTreeMap<usize, String> = BTreeMap::new();
        for q in &self.queries {
            if !query_ids.insert(q.id.as_str()) {
                issues.push(format!("duplicate query id {}", q.id));
            }
            if q.embedding.is_empty() || q.embedding.iter().any(|v| !v.is_finite()) {
                issues.push(format!("query {} has an empty or non-finite embedding", q.id));
            }
            dims.entry(q.embedding.len()).or_insert_with(|| format!("query {}", q.id));
        }
        let mut doc_ids: HashMap<&str, &Document> = HashMap::new();
        for d in &self.documents {
            if doc_ids.insert(d.id.as_str(), d).is_some() {
                issues.push(format!("duplicate document id {}", d.id));
            }
            if !query_ids.contains(d.query_id.as_str()) {
                issues.push(format!("document {} references unknown query {}", d.id, d.query_id));
            }
            if let Err(e) = check_unit_norm(&d.id, &d.embedding) {
                issues.push(format!("document {e}"));
            }
            dims.entry(d.embedding.len()).or_insert_with(|| format!("document {}", d.id));
        }
        if dims.len() > 1 {
            let owners: Vec<String> = dims.iter().map(|(len, who)| format!("{who} ({len})")).collect();
            issues.push(format!("embedding dimensions differ: {}", owners.join(" vs ")));
        }

        let mut session_ids = HashSet::new();
        for s in &self.sessions {
            if !session_ids.insert(s.id.as_str()) {
                issues.push(format!("duplicate session id {}", s.id));
            }
            if !query_ids.contains(s.query_id.as_str()) {
                issues.push(format!("session {} references unknown query {}", s.id, s.query_id));
            }
            let mut seen = HashSet::new();
            for (pos, e) in s.examined.iter().enumerate() {
                check_doc(&mut issues, &doc_ids, s, &e.doc_id);
                if !seen.insert(e.doc_id.as_str()) {
                    issues.push(format!("session {} examines document {} twice", s.id, e.doc_id));
                }
                if e.clicked != e.landing_grade.is_some() {
                    issues.push(format!(
                        "session {} position {pos}: a landing grade must be present exactly for clicked documents",
                        s.id
                    ));
                }
                if e.landing_score.is_some() && !e.clicked {
                    issues.push(format!("session {} position {pos}: landing score without a click", s.id));
                }
                for v in [e.snippet_score, e.landing_score].into_iter().flatten() {
                    if !(0.0..=1.0).contains(&v) {
                        issues.push(format!("session {} position {pos}: brain score {v} outside [0,1]", s.id));
                    }
                }
            }
            for u in &s.unseen {
                check_doc(&mut issues, &doc_ids, s, u);
                if !seen.insert(u.as_str()) {
                    issues.push(format!("session {} lists document {u} twice", s.id));
                }
            }
        }

        if let Some(f) = &self.features {
            let by_id: HashMap<&str, &Session> = self.sessions.iter().map(|s| (s.id.as_str(), s)).collect();
            for k in f.keys() {
                match by_id.get(k.session_id.as_str()) {
                    None => issues.push(format!("feature row references unknown session {}", k.session_id)),
                    Some(s) if k.position >= s.examined.len() => issues.push(format!(
                        "feature row references position {} of session {} (only {} examined)",
                        k.position,
                        s.id,
                        s.examined.len()
                    )),
                    _ => {}
                }
            }
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Integrity(issues))
        }
    }

    /// IRF scores unseen documents against external labels; a dataset with
    /// none at all cannot be evaluated.
    pub fn check_external_labels(&self) -> Result<()> {
        if self.documents.iter().all(|d| d.external_label.is_none()) {
            return Err(Error::input(
                "no document carries an external relevance label; add `external_label` to the documents file to run IRF",
            ));
        }
        Ok(())
    }
}

fn check_doc(issues: &mut Vec<String>, docs: &HashMap<&str, &Document>, s: &Session, id: &str) {
    match docs.get(id) {
        None => issues.push(format!("session {} references unknown document {id}", s.id)),
        Some(d) if d.query_id != s.query_id => issues.push(format!(
            "session {} (query {}) references document {id} of query {}",
            s.id, s.query_id, d.query_id
        )),
        _ => {}
    }
}
