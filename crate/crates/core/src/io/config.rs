//! Resolved run configuration shared by every subcommand.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adaptive::AdaptiveConfig;
use crate::combiner::{default_weights, CombinationWeights};
use crate::error::{Error, Result};
use crate::expansion::ExpansionConfig;
use crate::harness::{AssignmentSource, DecodeConfig, EvalConfig, GeneratorConfig};
use crate::metrics::MetricSet;
use crate::types::Mode;

/// Segment-length and sampling-rate grid for decoder evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub post_ms: Vec<f64>,
    pub rate_hz: Vec<f64>,
    pub folds: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            post_ms: vec![2000.0],
            rate_hz: vec![500.0],
            folds: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// The only source of randomness; every component seed derives from it.
    pub seed: u64,
    pub irf_weights: CombinationWeights,
    pub rrf_weights: CombinationWeights,
    /// Switch to the click-count and bad-click dependent weights.
    pub scenario_policy: bool,
    pub expansion: ExpansionConfig,
    pub metrics: MetricSet,
    pub clusters: AssignmentSource,
    pub decode: DecodeConfig,
    pub adaptive: AdaptiveConfig,
    /// Fit synthesis parameters to the cohort before adaptive search.
    pub estimate_synthesis: bool,
    pub generator: GeneratorConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            irf_weights: default_weights(Mode::Irf),
            rrf_weights: default_weights(Mode::Rrf),
            scenario_policy: false,
            expansion: ExpansionConfig::default(),
            metrics: MetricSet::default(),
            clusters: AssignmentSource::Ingested,
            decode: DecodeConfig::default(),
            adaptive: AdaptiveConfig::default(),
            estimate_synthesis: false,
            generator: GeneratorConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads a config file, or the config embedded in a run summary.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let body = match value.get("fingerprint").and(value.get("config")) {
            Some(embedded) => embedded.clone(),
            None => value,
        };
        serde_json::from_value(body).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.irf_weights.validate()?;
        self.rrf_weights.validate()?;
        self.expansion.validate()?;
        self.metrics.validate()?;
        self.decode.validate()?;
        self.adaptive.validate()?;
        self.generator.validate()?;
        if let AssignmentSource::KMeans { clusters: 0 } = self.clusters {
            return Err(Error::Config("k-means needs at least one cluster".into()));
        }
        let s = &self.sweep;
        if s.post_ms.is_empty() || s.rate_hz.is_empty() || s.folds < 2 {
            return Err(Error::Config("sweep needs segment lengths, rates and at least two folds".into()));
        }
        if s.post_ms.iter().chain(&s.rate_hz).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("sweep values must be positive".into()));
        }
        Ok(())
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            expansion: self.expansion,
            metrics: self.metrics.clone(),
            clusters: self.clusters,
            seed: self.seed,
        }
    }

    pub fn decode_config(&self) -> DecodeConfig {
        let mut d = self.decode.clone();
        d.decoder.seed = self.seed;
        d
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
