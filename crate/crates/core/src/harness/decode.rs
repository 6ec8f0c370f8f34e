//! Split-by-timepoint decoding of brain scores for a whole dataset.
//!
//! Each user's sessions are walked in time order. The generalized decoder for
//! a user is trained once on every other user's responses. The personalized
//! decoder is retrained from the user's strictly earlier responses and takes
//! over once they number at least [`PERSONALIZATION_THRESHOLD`].

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eeg::{binarize_grade, select_model, train, DecoderConfig, DecoderModel, DecoderScope, PERSONALIZATION_THRESHOLD};
use crate::error::{Error, Result};
use crate::metrics::auc;

use super::dataset::{Dataset, FeatureTable, StimulusKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    pub decoder: DecoderConfig,
    /// Retrain the personalized decoder every this many sessions.
    pub retrain_every: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            decoder: DecoderConfig::default(),
            retrain_every: 1,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        self.decoder.validate()?;
        if self.retrain_every == 0 {
            return Err(Error::Config("retrain_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodedRecord {
    pub snippet: f64,
    pub landing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDecoding {
    pub records: Vec<DecodedRecord>,
    /// Decoder used for this session; `None` when every score was precomputed.
    pub scope: Option<DecoderScope>,
    /// The user's labelled responses strictly before this session.
    pub personal_samples: usize,
}

/// Brain scores for every session, aligned with `Dataset::sessions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedScores {
    pub sessions: Vec<SessionDecoding>,
}

impl DecodedScores {
    /// AUC of all decoded snippet and landing scores against binarized grades.
    pub fn auc(&self, dataset: &Dataset) -> Result<f64> {
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for (s, d) in dataset.sessions.iter().zip(&self.sessions) {
            for (e, r) in s.examined.iter().zip(&d.records) {
                scores.push(r.snippet);
                labels.push(binarize_grade(e.snippet_grade));
                if let (Some(l), Some(g)) = (r.landing, e.landing_grade) {
                    scores.push(l);
                    labels.push(binarize_grade(g));
                }
            }
        }
        auc(&scores, &labels)
    }
}

/// Deterministic per-purpose seed from a base seed.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.next_u64()
}

#[derive(Clone, Copy)]
struct Sample {
    row: usize,
    label: bool,
}

/// Labelled feature rows of one session, snippet before landing per position.
fn session_samples(dataset: &Dataset, table: &FeatureTable, session: usize) -> Vec<Sample> {
    let s = &dataset.sessions[session];
    let mut out = Vec::new();
    for (pos, e) in s.examined.iter().enumerate() {
        if let Some(row) = table.find(&s.id, pos, StimulusKind::Snippet) {
            out.push(Sample {
                row,
                label: binarize_grade(e.snippet_grade),
            });
        }
        if let (Some(row), Some(g)) = (table.find(&s.id, pos, StimulusKind::Landing), e.landing_grade) {
            out.push(Sample {
                row,
                label: binarize_grade(g),
            });
        }
    }
    out
}

fn train_on(rows: &[Vec<f64>], samples: &[Sample], scope: DecoderScope, config: &DecoderConfig) -> Result<DecoderModel> {
    let features: Vec<&[f64]> = samples.iter().map(|s| rows[s.row].as_slice()).collect();
    let labels: Vec<bool> = samples.iter().map(|s| s.label).collect();
    train(&features, &labels, scope, config)
}

fn precomputed(dataset: &Dataset, session: usize) -> Result<SessionDecoding> {
    let s = &dataset.sessions[session];
    let records = s
        .examined
        .iter()
        .enumerate()
        .map(|(pos, e)| {
            let snippet = e.snippet_score.ok_or_else(|| {
                Error::input(format!(
                    "session {} position {pos} has neither EEG features nor a precomputed brain score",
                    s.id
                ))
            })?;
            Ok(DecodedRecord {
                snippet,
                landing: e.landing_score.filter(|_| e.clicked),
            })
        })
        .collect::<Result<_>>()?;
    Ok(SessionDecoding {
        records,
        scope: None,
        personal_samples: 0,
    })
}

/// Brain scores for every session. Precomputed scores are used where no
/// feature row exists.
pub fn decode_brain_scores(dataset: &Dataset, config: &DecodeConfig) -> Result<DecodedScores> {
    config.validate()?;
    dataset.check_time_order()?;
    let Some(table) = dataset.features.as_ref().filter(|t| !t.is_empty()) else {
        let sessions = (0..dataset.sessions.len())
            .map(|i| precomputed(dataset, i))
            .collect::<Result<_>>()?;
        return Ok(DecodedScores { sessions });
    };

    let rows: Vec<Vec<f64>> = (0..table.len()).map(|i| table.row_f64(i)).collect();
    let samples: Vec<Vec<Sample>> = (0..dataset.sessions.len())
        .map(|i| session_samples(dataset, table, i))
        .collect();
    let users = dataset.sessions_by_user();
    let mut out: Vec<Option<SessionDecoding>> = vec![None; dataset.sessions.len()];

    for (u, (user, idx)) in users.iter().enumerate() {
        let own: std::collections::HashSet<usize> = idx.iter().copied().collect();
        let others: Vec<Sample> = (0..dataset.sessions.len())
            .filter(|i| !own.contains(i))
            .flat_map(|i| samples[i].iter().copied())
            .collect();
        let needs_features = idx.iter().any(|&i| !samples[i].is_empty());
        let generalized = if needs_features && !others.is_empty() {
            let cfg = DecoderConfig {
                seed: derive_seed(config.decoder.seed, u as u64),
                ..config.decoder.clone()
            };
            train_on(&rows, &others, DecoderScope::Generalized, &cfg)?
        } else {
            DecoderModel::untrained(DecoderScope::Generalized)
        };

        let mut personal: Vec<Sample> = Vec::new();
        let mut personalized = DecoderModel::untrained(DecoderScope::Personalized);
        let mut since_retrain = usize::MAX;
        for (k, &si) in idx.iter().enumerate() {
            let s = &dataset.sessions[si];
            let count = personal.len();
            if count >= PERSONALIZATION_THRESHOLD {
                if !personalized.is_trained() || since_retrain >= config.retrain_every {
                    let cfg = DecoderConfig {
                        seed: derive_seed(config.decoder.seed, ((u as u64) << 32) | (k as u64 + 1)),
                        ..config.decoder.clone()
                    };
                    personalized = train_on(&rows, &personal, DecoderScope::Personalized, &cfg)?;
                    since_retrain = 0;
                }
                since_retrain += 1;
            }
            let model = select_model(&generalized, &personalized, count);

            let mut used_model = false;
            let mut records = Vec::with_capacity(s.examined.len());
            for (pos, e) in s.examined.iter().enumerate() {
                let snippet = match table.find(&s.id, pos, StimulusKind::Snippet) {
                    Some(row) => {
                        used_model = true;
                        predict(model, &rows[row], user)?
                    }
                    None => e.snippet_score.ok_or_else(|| {
                        Error::input(format!(
                            "session {} position {pos} has neither EEG features nor a precomputed brain score",
                            s.id
                        ))
                    })?,
                };
                let landing = if e.clicked {
                    match table.find(&s.id, pos, StimulusKind::Landing) {
                        Some(row) => {
                            used_model = true;
                            Some(predict(model, &rows[row], user)?)
                        }
                        None => e.landing_score,
                    }
                } else {
                    None
                };
                records.push(DecodedRecord { snippet, landing });
            }
            out[si] = Some(SessionDecoding {
                records,
                scope: used_model.then_some(model.scope()),
                personal_samples: count,
            });
            personal.extend_from_slice(&samples[si]);
        }
    }
    Ok(DecodedScores {
        sessions: out.into_iter().map(|s| s.expect("every session belongs to a user")).collect(),
    })
}

fn predict(model: &DecoderModel, row: &[f64], user: &str) -> Result<f64> {
    if !model.is_trained() {
        return Err(Error::Training(format!(
            "no decoder available for user {user}: the generalized model needs labelled features from other users"
        )));
    }
    model.predict(row)
}
