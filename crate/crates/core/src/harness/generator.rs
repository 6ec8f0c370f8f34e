//! Synthetic cohorts: cluster-structured documents, users with a task intent,
//! graded examinations, a relevance-driven click model with clickbait, and
//! EEG responses whose decodability is set by a target AUC.

use std::f64::consts::{PI, SQRT_2};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

use crate::eeg::{binarize_grade, extract_de, preprocess, Band, EegSegment, PreprocessConfig, DEFAULT_CHANNELS};
use crate::error::{Error, Result};
use crate::types::{normalize, Document, RelevanceGrade};

use super::dataset::{Dataset, Examination, FeatureKey, FeatureTable, Query, Session, StimulusKind};

/// Separation inflation that offsets what the decoder loses to finite,
/// high-dimensional training data. Fitted on generated cohorts.
const FEATURE_SEPARATION_GAIN: f64 = 2.3;

/// Spread of emitted brain scores in score mode.
const SCORE_SIGMA: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmissionMode {
    /// Differential-entropy feature rows.
    Features,
    /// Precomputed brain scores.
    Scores,
    /// Raw EEG segments, preprocessed and reduced to features at generation time.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub users: usize,
    pub sessions_per_user: usize,
    pub queries: usize,
    pub docs_per_query: usize,
    pub clusters_per_query: usize,
    pub embedding_dim: usize,
    /// Norm of the noise added to a cluster centroid to make a document.
    pub doc_spread: f64,
    /// Weight of non-intent centroids in the query embedding (intent has 1).
    pub query_ambiguity: f64,
    /// Noise on the initial result ordering.
    pub serp_noise: f64,
    pub examined_mean: f64,
    /// Snippet grade distribution (grades 1-4) for documents in the task intent.
    pub grades_in_intent: [f64; 4],
    pub grades_off_intent: [f64; 4],
    /// Click probability per snippet grade.
    pub click_by_grade: [f64; 4],
    /// Probability that a session ends without clicks because the snippets
    /// were enough.
    pub abandonment_rate: f64,
    /// Probability that a click lands on a page judged irrelevant.
    pub clickbait_rate: f64,
    /// Probability of flipping a document's external label.
    pub label_noise: f64,
    /// Target AUC of decoded brain scores.
    pub brain_auc: f64,
    /// Share of the relevance signal along a user-specific direction.
    pub user_specificity: f64,
    pub channels: usize,
    pub emission: EmissionMode,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            users: 20,
            sessions_per_user: 25,
            queries: 50,
            docs_per_query: 30,
            clusters_per_query: 3,
            embedding_dim: 32,
            doc_spread: 0.6,
            query_ambiguity: 0.85,
            serp_noise: 0.05,
            examined_mean: 10.9,
            grades_in_intent: [0.1, 0.2, 0.35, 0.35],
            grades_off_intent: [0.55, 0.3, 0.1, 0.05],
            click_by_grade: [0.046, 0.152, 0.379, 0.605],
            abandonment_rate: 0.3,
            clickbait_rate: 0.218,
            label_noise: 0.1,
            brain_auc: 0.69,
            user_specificity: 0.5,
            channels: DEFAULT_CHANNELS,
            emission: EmissionMode::Features,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("users", self.users),
            ("sessions_per_user", self.sessions_per_user),
            ("queries", self.queries),
            ("clusters_per_query", self.clusters_per_query),
            ("embedding_dim", self.embedding_dim),
            ("channels", self.channels),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.docs_per_query < 2 || self.docs_per_query < self.clusters_per_query {
            return Err(Error::Config("docs_per_query must be at least 2 and cover every cluster".into()));
        }
        if self.sessions_per_user > self.queries {
            return Err(Error::Config("each user needs a distinct query per session".into()));
        }
        let probs = [
            ("abandonment_rate", self.abandonment_rate),
            ("clickbait_rate", self.clickbait_rate),
            ("label_noise", self.label_noise),
            ("user_specificity", self.user_specificity),
        ];
        for (name, p) in probs.into_iter().chain(self.click_by_grade.iter().map(|&p| ("click_by_grade", p))) {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        for (name, dist) in [("grades_in_intent", self.grades_in_intent), ("grades_off_intent", self.grades_off_intent)] {
            if dist.iter().any(|p| !(0.0..=1.0).contains(p)) || (dist.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("{name} must be a probability distribution")));
            }
        }
        if !(self.brain_auc > 0.5 && self.brain_auc < 1.0) {
            return Err(Error::Config("brain_auc must lie in (0.5, 1)".into()));
        }
        if !(self.examined_mean > 0.0) || !(self.doc_spread >= 0.0) || !(self.serp_noise >= 0.0) || !(self.query_ambiguity >= 0.0) {
            return Err(Error::Config("examined_mean must be positive and spreads non-negative".into()));
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        self.channels * Band::ALL.len()
    }

    /// Mean separation between relevant and irrelevant responses along the
    /// discriminant direction, in noise standard deviations.
    fn separation(&self) -> f64 {
        let z = StatNormal::standard().inverse_cdf(self.brain_auc);
        SQRT_2 * z * FEATURE_SEPARATION_GAIN
    }
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if let Some(u) = normalize(v) {
            return u;
        }
    }
}

fn categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let mut u: f64 = rng.random();
    for (i, p) in probs.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    probs.len() - 1
}

struct BrainModel {
    dim: usize,
    separation: f64,
    directions: Vec<Vec<f64>>,
}

impl BrainModel {
    fn new(config: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Self {
        let dim = config.feature_dim();
        let shared = unit(rng, dim);
        let (a, b) = ((1.0 - config.user_specificity).sqrt(), config.user_specificity.sqrt());
        let directions = (0..config.users)
            .map(|_| {
                let own = unit(rng, dim);
                let mixed: Vec<f64> = shared.iter().zip(&own).map(|(s, o)| a * s + b * o).collect();
                normalize(mixed).unwrap_or_else(|| shared.clone())
            })
            .collect();
        Self {
            dim,
            separation: config.separation(),
            directions,
        }
    }

    fn features(&self, rng: &mut ChaCha8Rng, user: usize, relevant: bool) -> Vec<f64> {
        let sign = if relevant { 0.5 } else { -0.5 };
        self.directions[user]
            .iter()
            .take(self.dim)
            .map(|d| {
                let z: f64 = StandardNormal.sample(rng);
                z + sign * self.separation * d
            })
            .collect()
    }
}

/// Raw EEG whose band-wise differential entropy follows `de_shift` (channel-major,
/// band-minor): each band holds four random-phase tones scaled by `exp(shift)`.
pub fn synth_raw_segment(
    rng: &mut ChaCha8Rng,
    channels: usize,
    de_shift: &[f64],
    rate_hz: f64,
    pre_ms: f64,
    post_ms: f64,
) -> Result<EegSegment> {
    let n = ((pre_ms + post_ms) * rate_hz / 1000.0).round() as usize;
    let mut samples = Vec::with_capacity(channels);
    for c in 0..channels {
        let mut x: Vec<f64> = (0..n).map(|_| 0.1 * Distribution::<f64>::sample(&StandardNormal, rng)).collect();
        for (b, band) in Band::ALL.iter().enumerate() {
            let (lo, hi) = band.edges();
            let amp = 5.0 * de_shift.get(c * Band::ALL.len() + b).copied().unwrap_or(0.0).exp();
            for _ in 0..4 {
                let f = rng.random_range(lo + 0.25 * (hi - lo)..hi - 0.25 * (hi - lo));
                let phase = rng.random_range(0.0..2.0 * PI);
                for (i, v) in x.iter_mut().enumerate() {
                    *v += amp * (2.0 * PI * f * i as f64 / rate_hz + phase).sin();
                }
            }
        }
        samples.push(x);
    }
    EegSegment::new(samples, rate_hz, pre_ms)
}

/// A labelled raw response for decoder evaluation.
#[derive(Debug, Clone)]
pub struct RawTrial {
    pub user: usize,
    pub relevant: bool,
    pub segment: EegSegment,
}

/// Raw 1000 Hz trials with 500 ms baseline and 2000 ms post-stimulus window.
pub fn generate_raw_trials(config: &GeneratorConfig, trials: usize, seed: u64) -> Result<Vec<RawTrial>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let brain = BrainModel::new(config, &mut rng);
    let mut out = Vec::with_capacity(trials);
    for t in 0..trials {
        let user = t % config.users;
        let relevant = rng.random_bool(0.5);
        let shift: Vec<f64> = brain.features(&mut rng, user, relevant).iter().map(|v| 0.1 * v).collect();
        let segment = synth_raw_segment(&mut rng, config.channels, &shift, 1000.0, 500.0, 2000.0)?;
        out.push(RawTrial { user, relevant, segment });
    }
    Ok(out)
}

struct QueryWorld {
    query: Query,
    docs: Vec<Document>,
    intent: usize,
}

fn build_query(config: &GeneratorConfig, rng: &mut ChaCha8Rng, qi: usize) -> Result<QueryWorld> {
    let dim = config.embedding_dim;
    let centroids: Vec<Vec<f64>> = (0..config.clusters_per_query).map(|_| unit(rng, dim)).collect();
    let intent = rng.random_range(0..config.clusters_per_query);
    let qid = format!("q{qi:03}");
    let mut q = vec![0.0; dim];
    for (c, mu) in centroids.iter().enumerate() {
        let w = if c == intent { 1.0 } else { config.query_ambiguity };
        q.iter_mut().zip(mu).for_each(|(a, m)| *a += w * m);
    }
    let q = normalize(q).ok_or_else(|| Error::Synthesis("degenerate query embedding".into()))?;
    let mut docs = Vec::with_capacity(config.docs_per_query);
    for di in 0..config.docs_per_query {
        // Every cluster gets at least one document.
        let cluster = if di < config.clusters_per_query {
            di
        } else {
            rng.random_range(0..config.clusters_per_query)
        };
        let noise = unit(rng, dim);
        let raw: Vec<f64> = centroids[cluster]
            .iter()
            .zip(&noise)
            .map(|(m, z)| m + config.doc_spread * z)
            .collect();
        let label = (cluster == intent) != rng.random_bool(config.label_noise);
        docs.push(
            Document::normalized(format!("{qid}-d{di:02}"), qid.clone(), raw)?
                .with_cluster(cluster)
                .with_external_label(label),
        );
    }
    Ok(QueryWorld {
        query: Query { id: qid, embedding: q },
        docs,
        intent,
    })
}

/// A reproducible cohort. Users' sessions are emitted in time order.
pub fn generate_sessions(config: &GeneratorConfig, seed: u64) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let worlds: Vec<QueryWorld> = (0..config.queries)
        .map(|qi| build_query(config, &mut rng, qi))
        .collect::<Result<_>>()?;
    let brain = BrainModel::new(config, &mut rng);
    let poisson = Poisson::new(config.examined_mean).map_err(|e| Error::Config(e.to_string()))?;
    let serp = Normal::new(0.0, config.serp_noise.max(1e-12)).map_err(|e| Error::Config(e.to_string()))?;
    let score_gap = SCORE_SIGMA * SQRT_2 * StatNormal::standard().inverse_cdf(config.brain_auc);

    let mut features = match config.emission {
        EmissionMode::Scores => None,
        _ => Some(FeatureTable::new(config.feature_dim())),
    };
    let preprocess_cfg = PreprocessConfig::default();
    let mut sessions = Vec::with_capacity(config.users * config.sessions_per_user);
    let emit = |rng: &mut ChaCha8Rng,
                    table: &mut Option<FeatureTable>,
                    user: usize,
                    session_id: &str,
                    position: usize,
                    kind: StimulusKind,
                    relevant: bool|
     -> Result<Option<f64>> {
        match config.emission {
            EmissionMode::Scores => {
                let mu = 0.5 + if relevant { 0.5 } else { -0.5 } * score_gap;
                let z: f64 = StandardNormal.sample(rng);
                let v = mu + SCORE_SIGMA * z;
                Ok(Some(v.clamp(0.0, 1.0)))
            }
            EmissionMode::Features | EmissionMode::Raw => {
                let mut row = brain.features(rng, user, relevant);
                if config.emission == EmissionMode::Raw {
                    let shift: Vec<f64> = row.iter().map(|v| 0.1 * v).collect();
                    let raw = synth_raw_segment(rng, config.channels, &shift, 1000.0, 500.0, 2000.0)?;
                    row = extract_de(&preprocess(&raw, &preprocess_cfg)?)?.into_vec();
                }
                let key = FeatureKey {
                    session_id: session_id.to_string(),
                    position,
                    kind,
                };
                table.as_mut().expect("feature table exists").push(key, &row)?;
                Ok(None)
            }
        }
    };

    for user in 0..config.users {
        let mut order: Vec<usize> = (0..config.queries).collect();
        order.shuffle(&mut rng);
        for (t, &qi) in order.iter().take(config.sessions_per_user).enumerate() {
            let world = &worlds[qi];
            let sid = format!("u{user:02}-s{t:02}");
            let mut ranked: Vec<(f64, usize)> = world
                .docs
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let cos: f64 = d.embedding.iter().zip(&world.query.embedding).map(|(a, b)| a * b).sum();
                    (cos + serp.sample(&mut rng), i)
                })
                .collect();
            ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
            let h_max = (poisson.sample(&mut rng) as usize).clamp(1, config.docs_per_query - 1);
            let abandons = rng.random_bool(config.abandonment_rate);

            let mut examined = Vec::with_capacity(h_max);
            for (pos, &(_, di)) in ranked.iter().take(h_max).enumerate() {
                let doc = &world.docs[di];
                let dist = if doc.cluster == Some(world.intent) {
                    &config.grades_in_intent
                } else {
                    &config.grades_off_intent
                };
                let snippet_grade = RelevanceGrade::new(categorical(&mut rng, dist) as u8 + 1)?;
                let clicked = !abandons && rng.random_bool(config.click_by_grade[snippet_grade.value() as usize - 1]);
                let landing_grade = if clicked {
                    let g = if rng.random_bool(config.clickbait_rate) {
                        if rng.random_bool(0.7) {
                            1
                        } else {
                            2
                        }
                    } else {
                        snippet_grade.value().max(3)
                    };
                    Some(RelevanceGrade::new(g)?)
                } else {
                    None
                };
                let snippet_score = emit(
                    &mut rng,
                    &mut features,
                    user,
                    &sid,
                    pos,
                    StimulusKind::Snippet,
                    binarize_grade(snippet_grade),
                )?;
                let landing_score = match landing_grade {
                    Some(g) => emit(&mut rng, &mut features, user, &sid, pos, StimulusKind::Landing, binarize_grade(g))?,
                    None => None,
                };
                examined.push(Examination {
                    doc_id: doc.id.clone(),
                    clicked,
                    snippet_grade,
                    landing_grade,
                    snippet_score,
                    landing_score,
                });
            }
            let unseen = ranked[h_max..].iter().map(|&(_, di)| world.docs[di].id.clone()).collect();
            sessions.push(Session {
                id: sid,
                user_id: format!("u{user:02}"),
                seq: t as u64,
                query_id: world.query.id.clone(),
                intent_cluster: Some(world.intent),
                examined,
                unseen,
            });
        }
    }

    let (queries, documents): (Vec<Query>, Vec<Vec<Document>>) = worlds.into_iter().map(|w| (w.query, w.docs)).unzip();
    Ok(Dataset {
        queries,
        documents: documents.into_iter().flatten().collect(),
        sessions,
        features,
    })
}

/// Summary statistics of a cohort's behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortStats {
    pub sessions: usize,
    pub mean_examined: f64,
    pub mean_clicks: f64,
    /// Bad clicks over all clicks.
    pub bad_click_fraction: f64,
    /// Sessions without any click.
    pub no_click_fraction: f64,
}

pub fn cohort_stats(dataset: &Dataset) -> CohortStats {
    let n = dataset.sessions.len().max(1) as f64;
    let examined: usize = dataset.sessions.iter().map(Session::h_max).sum();
    let clicks: usize = dataset.sessions.iter().map(Session::click_count).sum();
    let bad: usize = dataset.sessions.iter().map(Session::bad_click_count).sum();
    let silent = dataset.sessions.iter().filter(|s| s.click_count() == 0).count();
    CohortStats {
        sessions: dataset.sessions.len(),
        mean_examined: examined as f64 / n,
        mean_clicks: clicks as f64 / n,
        bad_click_fraction: if clicks == 0 { 0.0 } else { bad as f64 / clicks as f64 },
        no_click_fraction: silent as f64 / n,
    }
}
