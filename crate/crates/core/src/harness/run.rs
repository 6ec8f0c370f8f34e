//! Evaluation loops: per-step IRF over the unseen pool, end-of-session RRF
//! over the examined list, and IRF with adaptively searched weights.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::adaptive::{
    adaptive_search, cluster_documents, estimate_params, AdaptiveConfig, ClusterAssignment, Observation, Scenario, ScenarioTables,
    SynthesisParams,
};
use crate::combiner::{combine, scenario_weights, CombinationWeights};
use crate::error::{Error, Result};
use crate::expansion::{expand_and_score, select_feedback, softmax_weights, ExpansionConfig};
use crate::metrics::MetricSet;
use crate::signals::{brain_scores_select, click_scores, pseudo_scores, CosineScorer, ExaminationRecord, SimilarityScorer};
use crate::types::{stable_argsort_desc, Document, Mode, RankedList, ScoreVector};

use super::dataset::{Dataset, DatasetIndex, Session};
use super::decode::{derive_seed, DecodedScores};
use super::report::{ExperimentReport, ReportRow};

/// How a method picks its combination weights at each evaluation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightPolicy {
    Fixed { weights: CombinationWeights },
    /// Brain-heavy weights in no-click (IRF) or bad-click (RRF) situations, else `base`.
    Scenario { base: CombinationWeights },
    /// Per-step exhaustive search over synthesized behaviour (IRF only).
    Adaptive { config: AdaptiveConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Method {
    pub name: String,
    pub policy: WeightPolicy,
}

impl Method {
    pub fn fixed(name: impl Into<String>, weights: CombinationWeights) -> Self {
        Self {
            name: name.into(),
            policy: WeightPolicy::Fixed { weights },
        }
    }
}

/// Source of intent clusters for adaptive search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AssignmentSource {
    /// Cluster labels stored on the documents.
    Ingested,
    /// Seeded k-means over each query's documents.
    KMeans { clusters: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub expansion: ExpansionConfig,
    pub metrics: MetricSet,
    pub clusters: AssignmentSource,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            expansion: ExpansionConfig::default(),
            metrics: MetricSet::default(),
            clusters: AssignmentSource::Ingested,
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        self.expansion.validate()?;
        self.metrics.validate()
    }
}

fn check_methods(methods: &[Method]) -> Result<()> {
    if methods.is_empty() {
        return Err(Error::Config("at least one method is required".into()));
    }
    for (i, m) in methods.iter().enumerate() {
        if methods[..i].iter().any(|o| o.name == m.name) {
            return Err(Error::Config(format!("method name {} used twice", m.name)));
        }
        match &m.policy {
            WeightPolicy::Fixed { weights } | WeightPolicy::Scenario { base: weights } => weights.validate()?,
            WeightPolicy::Adaptive { config } => config.validate()?,
        }
    }
    Ok(())
}

/// Unseen-document scores after fusing the examined channels with `weights`
/// and expanding from the selected feedback.
pub fn irf_scores<S: SimilarityScorer + ?Sized>(
    query: &[f64],
    examined: &[&Document],
    records: &[ExaminationRecord],
    unseen: &[&Document],
    weights: &CombinationWeights,
    expansion: &ExpansionConfig,
    scorer: &S,
) -> Result<ScoreVector> {
    let r_p = pseudo_scores(query, examined.iter().copied(), scorer)?;
    let r_c = click_scores(records)?;
    let r_bs = brain_scores_select(records, Mode::Irf)?;
    let combined = combine(&r_bs, &r_c, &r_p, weights)?;
    let selected = select_feedback(&combined, expansion.k)?;
    let w = softmax_weights(&selected.iter().map(|f| f.score).collect::<Vec<_>>());
    let by_id: HashMap<&str, &Document> = examined.iter().map(|d| (d.id.as_str(), *d)).collect();
    let feedback: Vec<(&Document, f64)> = selected.iter().zip(w).map(|(f, w)| (by_id[f.doc_id.as_str()], w)).collect();
    Ok(expand_and_score(query, &feedback, unseen, scorer, expansion)?.scores)
}

/// Examined-document scores for the retrospective re-ranking.
pub fn rrf_scores<S: SimilarityScorer + ?Sized>(
    query: &[f64],
    examined: &[&Document],
    records: &[ExaminationRecord],
    weights: &CombinationWeights,
    scorer: &S,
) -> Result<ScoreVector> {
    let r_p = pseudo_scores(query, examined.iter().copied(), scorer)?;
    let r_c = click_scores(records)?;
    let r_bs = brain_scores_select(records, Mode::Rrf)?;
    combine(&r_bs, &r_c, &r_p, weights)
}

struct Prepared<'a> {
    query: &'a [f64],
    examined: Vec<&'a Document>,
    pool: Vec<&'a Document>,
    records: Vec<ExaminationRecord>,
}

fn prepare<'a>(idx: &DatasetIndex<'a>, s: &'a Session, decoded: &super::decode::SessionDecoding) -> Result<Prepared<'a>> {
    let query = idx
        .queries
        .get(s.query_id.as_str())
        .ok_or_else(|| Error::input(format!("session {} references unknown query {}", s.id, s.query_id)))?;
    let doc = |id: &str| {
        idx.documents
            .get(id)
            .copied()
            .ok_or_else(|| Error::input(format!("session {} references unknown document {id}", s.id)))
    };
    let examined = s.examined.iter().map(|e| doc(&e.doc_id)).collect::<Result<Vec<_>>>()?;
    let pool = s.unseen.iter().map(|u| doc(u)).collect::<Result<Vec<_>>>()?;
    if decoded.records.len() != s.examined.len() {
        return Err(Error::input(format!("decoded scores do not match session {}", s.id)));
    }
    let records = s
        .examined
        .iter()
        .zip(&decoded.records)
        .map(|(e, r)| {
            ExaminationRecord::new(
                e.doc_id.clone(),
                e.clicked,
                r.snippet.clamp(0.0, 1.0),
                r.landing.filter(|_| e.clicked).map(|l| l.clamp(0.0, 1.0)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared {
        query: &query.embedding,
        examined,
        pool,
        records,
    })
}

fn check_decoded(dataset: &Dataset, decoded: &DecodedScores) -> Result<()> {
    if decoded.sessions.len() != dataset.sessions.len() {
        return Err(Error::input("decoded scores cover a different number of sessions"));
    }
    dataset.check_time_order()
}

fn assignments(dataset: &Dataset, source: AssignmentSource, seed: u64) -> Result<HashMap<String, ClusterAssignment>> {
    let mut by_query: HashMap<&str, Vec<Document>> = HashMap::new();
    for d in &dataset.documents {
        by_query.entry(d.query_id.as_str()).or_default().push(d.clone());
    }
    let mut out = HashMap::new();
    for (qi, q) in dataset.queries.iter().enumerate() {
        let Some(mut docs) = by_query.remove(q.id.as_str()) else {
            continue;
        };
        let q_m = match source {
            AssignmentSource::Ingested => {
                if let Some(d) = docs.iter().find(|d| d.cluster.is_none()) {
                    return Err(Error::input(format!(
                        "document {} has no cluster label; use k-means clustering instead",
                        d.id
                    )));
                }
                1
            }
            AssignmentSource::KMeans { clusters } => {
                docs.iter_mut().for_each(|d| d.cluster = None);
                clusters.min(docs.len())
            }
        };
        out.insert(q.id.clone(), cluster_documents(&docs, q_m, derive_seed(seed, qi as u64))?);
    }
    Ok(out)
}

/// Iterative evaluation: after each of the first `h` examinations, re-rank
/// the documents not yet examined and score them against external labels.
pub fn run_irf(dataset: &Dataset, decoded: &DecodedScores, methods: &[Method], config: &EvalConfig) -> Result<ExperimentReport> {
    run_irf_with(dataset, decoded, methods, config, &CosineScorer)
}

pub fn run_irf_with<S: SimilarityScorer + ?Sized>(
    dataset: &Dataset,
    decoded: &DecodedScores,
    methods: &[Method],
    config: &EvalConfig,
    scorer: &S,
) -> Result<ExperimentReport> {
    config.validate()?;
    check_methods(methods)?;
    check_decoded(dataset, decoded)?;
    let adaptive = methods.iter().any(|m| matches!(m.policy, WeightPolicy::Adaptive { .. }));
    let clusters = if adaptive {
        assignments(dataset, config.clusters, config.seed)?
    } else {
        HashMap::new()
    };
    let idx = dataset.index();
    let mut rows = Vec::new();
    let mut skipped = 0usize;

    for (si, s) in dataset.sessions.iter().enumerate() {
        let p = prepare(&idx, s, &decoded.sessions[si])?;
        for h in 1..=s.h_max() {
            let unseen: Vec<&Document> = p.examined[h..].iter().chain(&p.pool).copied().collect();
            if unseen.is_empty() {
                continue;
            }
            let Some(labels) = unseen.iter().map(|d| d.external_label).collect::<Option<Vec<bool>>>() else {
                skipped += 1;
                continue;
            };
            let examined = &p.examined[..h];
            let records = &p.records[..h];
            let clicks = records.iter().filter(|r| r.clicked).count();
            let mut values = Vec::with_capacity(methods.len());
            for m in methods {
                let weights = match &m.policy {
                    WeightPolicy::Fixed { weights } => *weights,
                    WeightPolicy::Scenario { base } => scenario_weights(Mode::Irf, clicks, None, *base),
                    WeightPolicy::Adaptive { config: ac } => {
                        let assignment = clusters
                            .get(&s.query_id)
                            .ok_or_else(|| Error::input(format!("query {} has no documents to cluster", s.query_id)))?;
                        let scenario = Scenario::new(
                            s.query_id.clone(),
                            examined.iter().map(|d| d.id.clone()).collect(),
                            unseen.iter().map(|d| d.id.clone()).collect(),
                            clicks,
                        )?;
                        let tables = ScenarioTables::build(p.query, examined, &unseen, scorer);
                        let seed = derive_seed(config.seed, ((si as u64) << 20) | h as u64);
                        adaptive_search(&scenario, &tables, assignment, ac, seed)?.weights
                    }
                };
                let scores = irf_scores(p.query, examined, records, &unseen, &weights, &config.expansion, scorer)?;
                let order = stable_argsort_desc(&scores.entries().iter().map(|e| e.score).collect::<Vec<_>>());
                let gains: Vec<u32> = order.iter().map(|&i| labels[i] as u32).collect();
                values.push(config.metrics.evaluate(&gains)?.columns());
            }
            rows.push(ReportRow {
                session_id: s.id.clone(),
                user_id: s.user_id.clone(),
                query_id: s.query_id.clone(),
                h,
                clicks,
                bad_clicks: s.examined[..h].iter().filter(|e| e.is_bad_click()).count(),
                values,
            });
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} IRF rows skipped: unseen documents without external labels");
    }
    let mode = if adaptive { "adaptive" } else { "irf" };
    Ok(report(mode, methods, config, rows, skipped))
}

/// Retrospective evaluation: one re-ranking of the examined list per session,
/// graded by the landing judgement when clicked and the snippet judgement otherwise.
pub fn run_rrf(dataset: &Dataset, decoded: &DecodedScores, methods: &[Method], config: &EvalConfig) -> Result<ExperimentReport> {
    run_rrf_with(dataset, decoded, methods, config, &CosineScorer)
}

pub fn run_rrf_with<S: SimilarityScorer + ?Sized>(
    dataset: &Dataset,
    decoded: &DecodedScores,
    methods: &[Method],
    config: &EvalConfig,
    scorer: &S,
) -> Result<ExperimentReport> {
    config.validate()?;
    check_methods(methods)?;
    check_decoded(dataset, decoded)?;
    if methods.iter().any(|m| matches!(m.policy, WeightPolicy::Adaptive { .. })) {
        return Err(Error::Config("adaptive weights are only defined for IRF".into()));
    }
    let idx = dataset.index();
    let mut rows = Vec::new();
    for (si, s) in dataset.sessions.iter().enumerate() {
        if s.examined.is_empty() {
            continue;
        }
        let p = prepare(&idx, s, &decoded.sessions[si])?;
        let clicks = s.click_count();
        let bad = s.bad_click_count();
        let gains: Vec<u32> = s.examined.iter().map(|e| e.final_grade().gain()).collect();
        let mut values = Vec::with_capacity(methods.len());
        for m in methods {
            let weights = match &m.policy {
                WeightPolicy::Fixed { weights } => *weights,
                WeightPolicy::Scenario { base } => scenario_weights(Mode::Rrf, clicks, Some(bad > 0), *base),
                WeightPolicy::Adaptive { .. } => unreachable!(),
            };
            let scores = rrf_scores(p.query, &p.examined, &p.records, &weights, scorer)?;
            let ranked = RankedList::from_score_vector(&scores)?;
            let pos: HashMap<&str, usize> = s.examined.iter().enumerate().map(|(i, e)| (e.doc_id.as_str(), i)).collect();
            let ordered: Vec<u32> = ranked.ids().map(|id| gains[pos[id]]).collect();
            values.push(config.metrics.evaluate(&ordered)?.columns());
        }
        rows.push(ReportRow {
            session_id: s.id.clone(),
            user_id: s.user_id.clone(),
            query_id: s.query_id.clone(),
            h: s.h_max(),
            clicks,
            bad_clicks: bad,
            values,
        });
    }
    Ok(report("rrf", methods, config, rows, 0))
}

/// IRF where weights are searched per step; `baseline` adds a fixed-weight
/// column for comparison on the same rows.
pub fn run_adaptive_irf(
    dataset: &Dataset,
    decoded: &DecodedScores,
    adaptive: &AdaptiveConfig,
    baseline: Option<CombinationWeights>,
    config: &EvalConfig,
) -> Result<ExperimentReport> {
    let mut methods = vec![Method {
        name: "adaptive".into(),
        policy: WeightPolicy::Adaptive {
            config: adaptive.clone(),
        },
    }];
    if let Some(w) = baseline {
        methods.push(Method::fixed("fixed", w));
    }
    run_irf(dataset, decoded, &methods, config)
}

/// Synthesis parameters fitted to a cohort: click rates and snippet brain-score
/// moments per external relevance class over all examined documents.
pub fn estimate_synthesis_params(dataset: &Dataset, decoded: &DecodedScores, n_synth: usize) -> Result<SynthesisParams> {
    check_decoded(dataset, decoded)?;
    let idx = dataset.index();
    let mut obs = Vec::new();
    for (s, d) in dataset.sessions.iter().zip(&decoded.sessions) {
        for (e, r) in s.examined.iter().zip(&d.records) {
            if let Some(relevant) = idx.documents.get(e.doc_id.as_str()).and_then(|doc| doc.external_label) {
                obs.push(Observation {
                    relevant,
                    clicked: e.clicked,
                    brain_score: r.snippet,
                });
            }
        }
    }
    estimate_params(&obs, n_synth)
}

fn report(mode: &str, methods: &[Method], config: &EvalConfig, rows: Vec<ReportRow>, skipped: usize) -> ExperimentReport {
    let embedded = serde_json::json!({ "eval": config, "methods": methods });
    ExperimentReport::new(
        mode,
        methods.iter().map(|m| m.name.clone()).collect(),
        config.metrics.column_names(),
        rows,
        skipped,
        config.seed,
        embedded,
    )
}
