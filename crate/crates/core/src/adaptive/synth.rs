//! Synthetic click and brain channels for an assumed search intent.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ScoreVector;

use super::{ClusterAssignment, Scenario};

/// Rejection attempts before switching to exact conditional sampling.
pub const REJECTION_BUDGET: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisParams {
    pub p_click_rel: f64,
    pub p_click_irrel: f64,
    pub mu_rel: f64,
    pub sigma_rel: f64,
    pub mu_irrel: f64,
    pub sigma_irrel: f64,
    /// Draws per cluster.
    pub n_synth: usize,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        Self {
            p_click_rel: 0.35,
            p_click_irrel: 0.05,
            mu_rel: 0.65,
            sigma_rel: 0.15,
            mu_irrel: 0.35,
            sigma_irrel: 0.15,
            n_synth: 20,
        }
    }
}

impl SynthesisParams {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_click_rel", self.p_click_rel), ("p_click_irrel", self.p_click_irrel)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        for (name, s) in [("sigma_rel", self.sigma_rel), ("sigma_irrel", self.sigma_irrel)] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !self.mu_rel.is_finite() || !self.mu_irrel.is_finite() {
            return Err(Error::Config("synthesis means must be finite".into()));
        }
        if self.n_synth == 0 {
            return Err(Error::Config("n_synth must be at least 1".into()));
        }
        Ok(())
    }

    /// Non-fatal oddities worth reporting.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.p_click_rel < self.p_click_irrel {
            out.push(format!(
                "p_click_rel ({}) is below p_click_irrel ({})",
                self.p_click_rel, self.p_click_irrel
            ));
        }
        out
    }

    fn click_probability(&self, relevant: bool) -> f64 {
        if relevant {
            self.p_click_rel
        } else {
            self.p_click_irrel
        }
    }
}

/// One labelled examination used to fit [`SynthesisParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub relevant: bool,
    pub clicked: bool,
    pub brain_score: f64,
}

/// Point estimates per relevance class: click frequency, brain-score mean and
/// standard deviation (floored at `1e-3`).
pub fn estimate_params(observations: &[Observation], n_synth: usize) -> Result<SynthesisParams> {
    let class = |relevant: bool| -> Result<(f64, f64, f64)> {
        let rows: Vec<&Observation> = observations.iter().filter(|o| o.relevant == relevant).collect();
        if rows.is_empty() {
            let kind = if relevant { "relevant" } else { "irrelevant" };
            return Err(Error::input(format!("no {kind} observations to estimate from")));
        }
        let n = rows.len() as f64;
        let p = rows.iter().filter(|o| o.clicked).count() as f64 / n;
        let mu = rows.iter().map(|o| o.brain_score).sum::<f64>() / n;
        let var = rows.iter().map(|o| (o.brain_score - mu).powi(2)).sum::<f64>() / n;
        Ok((p, mu, var.sqrt().max(1e-3)))
    };
    let (p_rel, mu_rel, sigma_rel) = class(true)?;
    let (p_irrel, mu_irrel, sigma_irrel) = class(false)?;
    let params = SynthesisParams {
        p_click_rel: p_rel,
        p_click_irrel: p_irrel,
        mu_rel,
        sigma_rel,
        mu_irrel,
        sigma_irrel,
        n_synth,
    };
    params.validate()?;
    Ok(params)
}

/// `tail[i][m]` = probability that trials `i..` sum to exactly `m`.
fn tail_sum_probabilities(probs: &[f64], max_sum: usize) -> Vec<Vec<f64>> {
    let h = probs.len();
    let mut tail = vec![vec![0.0; max_sum + 1]; h + 1];
    tail[h][0] = 1.0;
    for i in (0..h).rev() {
        for m in 0..=max_sum {
            let skip = (1.0 - probs[i]) * tail[i + 1][m];
            let take = if m > 0 { probs[i] * tail[i + 1][m - 1] } else { 0.0 };
            tail[i][m] = skip + take;
        }
    }
    tail
}

/// Independent Bernoulli draws with success probabilities `probs`, conditioned
/// on exactly `n` successes.
///
/// Plain rejection is used while its expected cost fits within
/// [`REJECTION_BUDGET`]; otherwise, or when the budget runs out, draws come
/// sequentially from the exact conditional distribution.
pub fn sample_constrained_bernoulli<R: Rng + ?Sized>(probs: &[f64], n: usize, rng: &mut R) -> Result<Vec<bool>> {
    let h = probs.len();
    if n > h {
        return Err(Error::Synthesis(format!("{n} clicks requested among {h} documents")));
    }
    let tail = tail_sum_probabilities(probs, n);
    let feasible = tail[0][n];
    if feasible <= 0.0 {
        return Err(Error::Synthesis(format!(
            "exactly {n} clicks among {h} documents has zero probability under the click model"
        )));
    }
    if 1.0 / feasible <= REJECTION_BUDGET as f64 {
        for _ in 0..REJECTION_BUDGET {
            let draw: Vec<bool> = probs.iter().map(|&p| rng.random::<f64>() < p).collect();
            if draw.iter().filter(|c| **c).count() == n {
                return Ok(draw);
            }
        }
    }
    let mut out = Vec::with_capacity(h);
    let mut remaining = n;
    for i in 0..h {
        let here = tail[i][remaining];
        let take = if remaining == 0 {
            0.0
        } else {
            probs[i] * tail[i + 1][remaining - 1] / here
        };
        let clicked = rng.random::<f64>() < take;
        if clicked {
            remaining -= 1;
        }
        out.push(clicked);
    }
    Ok(out)
}

/// Click indicators over examined documents given their membership in the
/// assumed cluster.
pub fn synth_clicks_from_membership(
    members: &[bool],
    n_clicks: usize,
    params: &SynthesisParams,
    seed: u64,
) -> Result<Vec<bool>> {
    let probs: Vec<f64> = members.iter().map(|&m| params.click_probability(m)).collect();
    sample_constrained_bernoulli(&probs, n_clicks, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Normal brain scores per membership, clamped to `[0, 1]`.
pub fn synth_brain_from_membership(members: &[bool], params: &SynthesisParams, seed: u64) -> Result<Vec<f64>> {
    let rel = Normal::new(params.mu_rel, params.sigma_rel).map_err(|e| Error::Config(e.to_string()))?;
    let irrel = Normal::new(params.mu_irrel, params.sigma_irrel).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(members
        .iter()
        .map(|&m| {
            let v = if m { rel.sample(&mut rng) } else { irrel.sample(&mut rng) };
            v.clamp(0.0, 1.0)
        })
        .collect())
}

pub fn synth_clicks(
    scenario: &Scenario,
    assignment: &ClusterAssignment,
    assumed_cluster: usize,
    params: &SynthesisParams,
    seed: u64,
) -> Result<ScoreVector> {
    params.validate()?;
    let members = assignment.membership(&scenario.examined, assumed_cluster)?;
    let clicks = synth_clicks_from_membership(&members, scenario.n_clicks, params, seed)?;
    let values: Vec<f64> = clicks.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();
    ScoreVector::from_scores(&scenario.examined, &values)
}

pub fn synth_brain(
    scenario: &Scenario,
    assignment: &ClusterAssignment,
    assumed_cluster: usize,
    params: &SynthesisParams,
    seed: u64,
) -> Result<ScoreVector> {
    params.validate()?;
    let members = assignment.membership(&scenario.examined, assumed_cluster)?;
    let values = synth_brain_from_membership(&members, params, seed)?;
    ScoreVector::from_scores(&scenario.examined, &values)
}

/// 1 for unseen documents in the assumed cluster, else 0.
pub fn cluster_ground_truth(unseen: &[String], assignment: &ClusterAssignment, assumed_cluster: usize) -> Result<ScoreVector> {
    let members = assignment.membership(unseen, assumed_cluster)?;
    let values: Vec<f64> = members.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    ScoreVector::from_scores(unseen, &values)
}

/// Seeds of the click and brain draws for `(cluster_key, draw)` under a search
/// seed. Each pair is independent of every other pair.
pub fn draw_seeds(seed: u64, cluster_key: u64, draw: usize) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cluster_key);
    rng.set_word_pos(draw as u128 * 4);
    (rng.next_u64(), rng.next_u64())
}
