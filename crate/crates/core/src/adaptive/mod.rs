//! Scenario-specific combination weights chosen by simulating, for every
//! plausible search intent, the clicks and brain responses a user could have
//! produced, and keeping the weight triple that re-ranks best on average.

mod cluster;
mod synth;

pub use cluster::{cluster_documents, ClusterAssignment};
pub use synth::{
    cluster_ground_truth, draw_seeds, estimate_params, sample_constrained_bernoulli, synth_brain,
    synth_brain_from_membership, synth_clicks, synth_clicks_from_membership, Observation, SynthesisParams,
    REJECTION_BUDGET,
};

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::combiner::{CombinationWeights, WEIGHT_GRID};
use crate::error::{Error, Result};
use crate::expansion::{blend, softmax_weights, top_k_indices, ExpansionConfig};
use crate::metrics::{average_precision_from_flags, ndcg_from_gains};
use crate::signals::SimilarityScorer;
use crate::types::{stable_argsort_desc, Document};

/// A point in a search: examined documents in order, the unseen pool, and how
/// many examined documents were clicked.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub query_id: String,
    pub examined: Vec<String>,
    pub unseen: Vec<String>,
    pub n_clicks: usize,
}

impl Scenario {
    pub fn new(query_id: impl Into<String>, examined: Vec<String>, unseen: Vec<String>, n_clicks: usize) -> Result<Self> {
        if n_clicks > examined.len() {
            return Err(Error::input(format!(
                "{n_clicks} clicks but only {} examined documents",
                examined.len()
            )));
        }
        let seen: HashSet<&str> = examined.iter().map(String::as_str).collect();
        if let Some(dup) = unseen.iter().find(|u| seen.contains(u.as_str())) {
            return Err(Error::input(format!("document {dup} is both examined and unseen")));
        }
        Ok(Self {
            query_id: query_id.into(),
            examined,
            unseen,
            n_clicks,
        })
    }
}

/// Ranking quality functional maximized by the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    Ndcg(usize),
    Map,
}

impl Default for Objective {
    fn default() -> Self {
        Objective::Ndcg(10)
    }
}

impl Objective {
    /// Scores binary relevance flags listed in ranked order.
    pub fn evaluate(&self, ranked_flags: &[bool]) -> Result<f64> {
        match *self {
            Objective::Ndcg(k) => {
                let gains: Vec<u32> = ranked_flags.iter().map(|&f| f as u32).collect();
                ndcg_from_gains(&gains, k)
            }
            Objective::Map => {
                let total = ranked_flags.iter().filter(|f| **f).count();
                Ok(average_precision_from_flags(ranked_flags, total))
            }
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Ndcg(k) => write!(f, "ndcg@{k}"),
            Objective::Map => f.write_str("map"),
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if lower == "map" {
            return Ok(Objective::Map);
        }
        let k = lower
            .strip_prefix("ndcg@")
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|k| *k > 0)
            .ok_or_else(|| Error::Config(format!("unknown objective {s:?}; use ndcg@K or map")))?;
        Ok(Objective::Ndcg(k))
    }
}

/// Everything the search needs besides the scenario itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub params: SynthesisParams,
    /// Values each weight may take; candidates are all triples but `(0, 0, 0)`.
    pub grid: Vec<f64>,
    pub objective: Objective,
    pub expansion: ExpansionConfig,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            params: SynthesisParams::default(),
            grid: WEIGHT_GRID.to_vec(),
            objective: Objective::default(),
            expansion: ExpansionConfig::default(),
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.expansion.validate()?;
        if let Objective::Ndcg(0) = self.objective {
            return Err(Error::Config("NDCG cutoff must be at least 1".into()));
        }
        if candidates(&self.grid)?.is_empty() {
            return Err(Error::Config("weight grid yields no non-zero triple".into()));
        }
        Ok(())
    }
}

/// Every triple over the sorted, de-duplicated grid except the all-zero one,
/// in ascending lexicographic order.
pub fn candidates(grid: &[f64]) -> Result<Vec<CombinationWeights>> {
    if grid.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(Error::Config("grid values must be finite and non-negative".into()));
    }
    let mut values = grid.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut out = Vec::with_capacity(values.len().pow(3));
    for &bs in &values {
        for &c in &values {
            for &p in &values {
                if bs == 0.0 && c == 0.0 && p == 0.0 {
                    continue;
                }
                out.push(CombinationWeights {
                    theta_bs: bs,
                    theta_c: c,
                    theta_p: p,
                });
            }
        }
    }
    Ok(out)
}

/// Similarities a scenario needs, computed once: pseudo relevance of the
/// examined documents, query relevance of unseen ones, and examined-by-unseen
/// document similarity (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTables {
    pub pseudo_examined: Vec<f64>,
    pub query_unseen: Vec<f64>,
    pub doc_doc: Vec<f64>,
    pub unseen_count: usize,
}

impl ScenarioTables {
    pub fn build<S: SimilarityScorer + ?Sized>(
        query: &[f64],
        examined: &[&Document],
        unseen: &[&Document],
        scorer: &S,
    ) -> Self {
        let pseudo_examined = examined.iter().map(|d| scorer.score(query, &d.embedding)).collect();
        let query_unseen = unseen.iter().map(|d| scorer.score(query, &d.embedding)).collect();
        let mut doc_doc = Vec::with_capacity(examined.len() * unseen.len());
        for e in examined {
            for u in unseen {
                doc_doc.push(scorer.score(&e.embedding, &u.embedding));
            }
        }
        Self {
            pseudo_examined,
            query_unseen,
            doc_doc,
            unseen_count: unseen.len(),
        }
    }

    pub fn examined_count(&self) -> usize {
        self.pseudo_examined.len()
    }

    /// Scores of unseen documents after fusing the three examined-document
    /// channels with `theta` and expanding from the top-k feedback set.
    pub fn rerank_scores(
        &self,
        brain: &[f64],
        clicks: &[f64],
        theta: &CombinationWeights,
        expansion: &ExpansionConfig,
    ) -> Vec<f64> {
        let combined: Vec<f64> = brain
            .iter()
            .zip(clicks)
            .zip(&self.pseudo_examined)
            .map(|((&b, &c), &p)| theta.apply(b, c, p))
            .collect();
        let selected = top_k_indices(&combined, expansion.k);
        let selected_scores: Vec<f64> = selected.iter().map(|&i| combined[i]).collect();
        let weights = softmax_weights(&selected_scores);
        let u = self.unseen_count;
        blend(
            &weights,
            |j, col| self.doc_doc[selected[j] * u + col],
            &self.query_unseen,
            expansion.c,
        )
    }
}

/// Synthesized channels for one (cluster, draw) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDraw {
    pub cluster: usize,
    pub clicks: Vec<f64>,
    pub brain: Vec<f64>,
}

/// Generates the common draws shared by every candidate: `n_synth` per cluster,
/// seeded by [`draw_seeds`] from each cluster's key. Clusters come in
/// [`ClusterAssignment::canonical_order`].
pub fn synthesize_draws(
    scenario: &Scenario,
    assignment: &ClusterAssignment,
    params: &SynthesisParams,
    seed: u64,
) -> Result<Vec<SynthDraw>> {
    params.validate()?;
    let mut out = Vec::with_capacity(assignment.cluster_count() * params.n_synth);
    for cluster in assignment.canonical_order() {
        let members = assignment.membership(&scenario.examined, cluster)?;
        let key = assignment.cluster_key(cluster);
        for t in 0..params.n_synth {
            let (click_seed, brain_seed) = draw_seeds(seed, key, t);
            let clicks = synth_clicks_from_membership(&members, scenario.n_clicks, params, click_seed)?
                .into_iter()
                .map(|c| if c { 1.0 } else { 0.0 })
                .collect();
            let brain = synth_brain_from_membership(&members, params, brain_seed)?;
            out.push(SynthDraw { cluster, clicks, brain });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub weights: CombinationWeights,
    /// Average objective of the winning triple.
    pub score: f64,
    pub candidates_evaluated: usize,
}

/// Exhaustive search over the grid. Each candidate's value is the mean over
/// clusters of the mean over that cluster's draws; ties go to the
/// lexicographically smallest triple.
pub fn adaptive_search(
    scenario: &Scenario,
    tables: &ScenarioTables,
    assignment: &ClusterAssignment,
    config: &AdaptiveConfig,
    seed: u64,
) -> Result<SearchOutcome> {
    config.validate()?;
    if tables.examined_count() != scenario.examined.len() || tables.unseen_count != scenario.unseen.len() {
        return Err(Error::input("similarity tables do not match the scenario"));
    }
    if scenario.examined.is_empty() {
        return Err(Error::input("adaptive search needs at least one examined document"));
    }
    let draws = synthesize_draws(scenario, assignment, &config.params, seed)?;
    let truth: Vec<Vec<bool>> = (0..assignment.cluster_count())
        .map(|c| assignment.membership(&scenario.unseen, c))
        .collect::<Result<_>>()?;

    let all = candidates(&config.grid)?;
    let mut best: Option<(CombinationWeights, f64)> = None;
    let n_synth = config.params.n_synth as f64;
    let q_m = assignment.cluster_count() as f64;
    for theta in &all {
        let mut total = 0.0;
        for chunk in draws.chunks(config.params.n_synth) {
            let mut cluster_sum = 0.0;
            for draw in chunk {
                let scores = tables.rerank_scores(&draw.brain, &draw.clicks, theta, &config.expansion);
                let flags: Vec<bool> = stable_argsort_desc(&scores).into_iter().map(|i| truth[draw.cluster][i]).collect();
                cluster_sum += config.objective.evaluate(&flags)?;
            }
            total += cluster_sum / n_synth;
        }
        let value = total / q_m;
        if best.is_none_or(|(_, b)| value > b) {
            best = Some((*theta, value));
        }
    }
    let (weights, score) = best.expect("candidate list is non-empty");
    Ok(SearchOutcome {
        weights,
        score,
        candidates_evaluated: all.len(),
    })
}
