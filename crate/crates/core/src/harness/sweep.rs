//! Cross-validated decoder AUC over raw trials for a grid of post-stimulus
//! window lengths and resampling rates.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eeg::{extract_de, preprocess, train, DecoderConfig, DecoderScope, PreprocessConfig};
use crate::error::{Error, Result};
use crate::metrics::auc;

use super::decode::derive_seed;
use super::generator::RawTrial;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub post_ms: f64,
    pub rate_hz: f64,
    pub trials: usize,
    pub auc: f64,
}

/// Pooled out-of-fold AUC for every `(post_ms, rate_hz)` pair, in row-major
/// order of the two lists. Fold membership is seeded by `decoder.seed`.
pub fn decoder_sweep(
    trials: &[RawTrial],
    base: &PreprocessConfig,
    post_ms: &[f64],
    rate_hz: &[f64],
    folds: usize,
    decoder: &DecoderConfig,
) -> Result<Vec<SweepPoint>> {
    if folds < 2 || trials.len() < folds {
        return Err(Error::input(format!("{} trials cannot fill {folds} folds", trials.len())));
    }
    let labels: Vec<bool> = trials.iter().map(|t| t.relevant).collect();
    let mut order: Vec<usize> = (0..trials.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(decoder.seed));
    let mut fold_of = vec![0; trials.len()];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }

    let mut out = Vec::new();
    for &post in post_ms {
        for &rate in rate_hz {
            let cfg = PreprocessConfig {
                post_ms: post,
                target_rate_hz: rate,
                ..base.clone()
            };
            let features = trials
                .iter()
                .map(|t| Ok(extract_de(&preprocess(&t.segment, &cfg)?)?.into_vec()))
                .collect::<Result<Vec<_>>>()?;
            let mut scores = vec![0.0; trials.len()];
            for f in 0..folds {
                let train_idx: Vec<usize> = (0..trials.len()).filter(|&i| fold_of[i] != f).collect();
                let x: Vec<&[f64]> = train_idx.iter().map(|&i| features[i].as_slice()).collect();
                let y: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();
                let cfg = DecoderConfig {
                    seed: derive_seed(decoder.seed, f as u64),
                    ..decoder.clone()
                };
                let model = train(&x, &y, DecoderScope::Generalized, &cfg)?;
                for i in (0..trials.len()).filter(|&i| fold_of[i] == f) {
                    scores[i] = model.predict(&features[i])?;
                }
            }
            out.push(SweepPoint {
                post_ms: post,
                rate_hz: rate,
                trials: trials.len(),
                auc: auc(&scores, &labels)?,
            });
        }
    }
    Ok(out)
}
