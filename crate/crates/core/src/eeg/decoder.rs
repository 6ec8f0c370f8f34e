//! Brain-relevance decoder: standardization, RBF-SVM, Platt calibration, and
//! the generalized-to-personalized model switch.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::RelevanceGrade;

use super::svm::{solve, subset_decisions, Gram, PlattScaling, RbfSvm, SmoParams};

/// Personal samples required before the personalized model takes over.
pub const PERSONALIZATION_THRESHOLD: usize = 100;

/// Grade 1 is the negative (irrelevant) class; grades 2-4 are positive.
pub fn binarize_grade(grade: RelevanceGrade) -> bool {
    grade.value() >= 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderScope {
    Generalized,
    Personalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderConfig {
    pub c: f64,
    /// RBF width; `None` selects `1 / (dim * var(standardized features))`.
    pub gamma: Option<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Folds of internal cross-validation that produce the decision values
    /// used to fit the calibration sigmoid.
    pub calibration_folds: usize,
    /// Larger training sets are subsampled (seeded) to this many rows.
    pub max_train_samples: Option<usize>,
    pub seed: u64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            tolerance: 1e-3,
            max_iterations: 1_000_000,
            calibration_folds: 5,
            max_train_samples: Some(1000),
            seed: 0,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config("decoder C must be positive".into()));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config("decoder gamma must be positive".into()));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("decoder tolerance must be positive".into()));
        }
        if self.calibration_folds == 1 {
            return Err(Error::Config("calibration needs 0 (in-sample) or at least 2 folds".into()));
        }
        if self.max_train_samples == Some(0) {
            return Err(Error::Config("max_train_samples must be positive".into()));
        }
        Ok(())
    }

    fn smo(&self) -> SmoParams {
        SmoParams {
            c: self.c,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrainedState {
    mean: Vec<f64>,
    scale: Vec<f64>,
    svm: RbfSvm,
    calibration: PlattScaling,
}

/// Brain decoder. An untrained model (zero samples) refuses to predict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderModel {
    scope: DecoderScope,
    trained_sample_count: usize,
    state: Option<TrainedState>,
}

impl DecoderModel {
    pub fn untrained(scope: DecoderScope) -> Self {
        Self {
            scope,
            trained_sample_count: 0,
            state: None,
        }
    }

    pub fn scope(&self) -> DecoderScope {
        self.scope
    }

    pub fn trained_sample_count(&self) -> usize {
        self.trained_sample_count
    }

    pub fn is_trained(&self) -> bool {
        self.state.is_some()
    }

    pub fn support_vector_count(&self) -> usize {
        self.state.as_ref().map_or(0, |s| s.svm.support_vector_count())
    }

    pub fn dimension(&self) -> Option<usize> {
        self.state.as_ref().map(|s| s.mean.len())
    }

    fn state(&self) -> Result<&TrainedState> {
        self.state
            .as_ref()
            .ok_or_else(|| Error::State(format!("{:?} decoder has not been trained", self.scope)))
    }

    /// Raw SVM decision value for one feature vector.
    pub fn decision_value(&self, feature: &[f64]) -> Result<f64> {
        let state = self.state()?;
        if feature.len() != state.mean.len() {
            return Err(Error::input(format!(
                "feature has {} dimensions, decoder expects {}",
                feature.len(),
                state.mean.len()
            )));
        }
        let x = standardize(feature, &state.mean, &state.scale);
        Ok(state.svm.decision_value(&x))
    }

    /// Calibrated probability that the stimulus was relevant.
    pub fn predict(&self, feature: &[f64]) -> Result<f64> {
        let f = self.decision_value(feature)?;
        Ok(self.state()?.calibration.probability(f))
    }
}

fn standardize(x: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    x.iter().zip(mean).zip(scale).map(|((v, m), s)| (v - m) / s).collect()
}

/// Trains a decoder on feature rows and binary labels.
///
/// Features are standardized per dimension with training statistics stored in
/// the model. The calibration sigmoid is fitted on out-of-fold decision values.
pub fn train<F: AsRef<[f64]>>(
    features: &[F],
    labels: &[bool],
    scope: DecoderScope,
    config: &DecoderConfig,
) -> Result<DecoderModel> {
    config.validate()?;
    if features.len() != labels.len() {
        return Err(Error::Training(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let dim = features.first().map(|f| f.as_ref().len()).unwrap_or(0);
    if dim == 0 || features.iter().any(|f| f.as_ref().len() != dim) {
        return Err(Error::Training("feature rows must be non-empty and share one dimension".into()));
    }
    if features.iter().any(|f| f.as_ref().iter().any(|v| !v.is_finite())) {
        return Err(Error::Training("features must be finite".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::Training("training set needs both relevant and irrelevant samples".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut chosen: Vec<usize> = (0..features.len()).collect();
    if let Some(cap) = config.max_train_samples {
        if chosen.len() > cap {
            chosen.shuffle(&mut rng);
            chosen.truncate(cap);
            chosen.sort_unstable();
            let pos = chosen.iter().filter(|&&i| labels[i]).count();
            if pos == 0 || pos == chosen.len() {
                return Err(Error::Training("subsampled training set lost a class".into()));
            }
        }
    }
    let n = chosen.len();

    let mut mean = vec![0.0; dim];
    for &i in &chosen {
        for (m, v) in mean.iter_mut().zip(features[i].as_ref()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut scale = vec![0.0; dim];
    for &i in &chosen {
        for ((s, v), m) in scale.iter_mut().zip(features[i].as_ref()).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    scale.iter_mut().for_each(|s| {
        let sd = (*s / n as f64).sqrt();
        *s = if sd > 1e-12 { sd } else { 1.0 };
    });

    let rows: Vec<Vec<f64>> = chosen
        .iter()
        .map(|&i| standardize(features[i].as_ref(), &mean, &scale))
        .collect();
    let y: Vec<f64> = chosen.iter().map(|&i| if labels[i] { 1.0 } else { -1.0 }).collect();
    let sub_labels: Vec<bool> = chosen.iter().map(|&i| labels[i]).collect();

    let gamma = match config.gamma {
        Some(g) => g,
        None => {
            let total = (n * dim) as f64;
            let mu = rows.iter().flatten().sum::<f64>() / total;
            let var = rows.iter().flatten().map(|v| (v - mu) * (v - mu)).sum::<f64>() / total;
            if var > 0.0 {
                1.0 / (dim as f64 * var)
            } else {
                1.0 / dim as f64
            }
        }
    };

    let gram = Gram::rbf(&rows, gamma);
    let all: Vec<usize> = (0..n).collect();
    let sol = solve(&gram, &all, &y, config.smo());
    log::debug!("{scope:?} decoder: {n} samples, {} SMO iterations", sol.iterations);
    let svm = RbfSvm::from_solution(&rows, &sol, gamma);

    let decisions = if config.calibration_folds >= 2 && n >= config.calibration_folds {
        out_of_fold_decisions(&gram, &y, config, &mut rng)
    } else {
        subset_decisions(&gram, &all, &sol, &all)
    };
    let calibration = PlattScaling::fit(&decisions, &sub_labels);

    Ok(DecoderModel {
        scope,
        trained_sample_count: n,
        state: Some(TrainedState {
            mean,
            scale,
            svm,
            calibration,
        }),
    })
}

fn out_of_fold_decisions(gram: &Gram, y: &[f64], config: &DecoderConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = y.len();
    let folds = config.calibration_folds;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut out = vec![0.0; n];
    for f in 0..folds {
        let start = f * n / folds;
        let end = (f + 1) * n / folds;
        let held: Vec<usize> = perm[start..end].to_vec();
        let train_idx: Vec<usize> = perm[..start].iter().chain(&perm[end..]).copied().collect();
        let train_y: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
        let pos = train_y.iter().filter(|&&v| v > 0.0).count();
        let fixed = if pos == 0 {
            Some(-1.0)
        } else if pos == train_y.len() {
            Some(1.0)
        } else {
            None
        };
        let dec = match fixed {
            Some(v) => vec![v; held.len()],
            None => {
                let sol = solve(gram, &train_idx, &train_y, config.smo());
                subset_decisions(gram, &train_idx, &sol, &held)
            }
        };
        for (&h, d) in held.iter().zip(dec) {
            out[h] = d;
        }
    }
    out
}

/// The personalized model once the user has contributed enough samples,
/// otherwise the generalized one.
pub fn select_model<'a>(
    generalized: &'a DecoderModel,
    personalized: &'a DecoderModel,
    personal_sample_count: usize,
) -> &'a DecoderModel {
    if personal_sample_count >= PERSONALIZATION_THRESHOLD {
        personalized
    } else {
        generalized
    }
}
