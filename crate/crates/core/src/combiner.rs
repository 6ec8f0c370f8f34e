//! Linear fusion of the brain, click, and pseudo-relevance channels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Mode, ScoreVector};

/// Values each weight takes during grid searches.
pub const WEIGHT_GRID: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

/// Fusion weights `(theta_bs, theta_c, theta_p)` for one feedback mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinationWeights {
    pub theta_bs: f64,
    pub theta_c: f64,
    pub theta_p: f64,
}

impl CombinationWeights {
    pub fn new(theta_bs: f64, theta_c: f64, theta_p: f64) -> Result<Self> {
        let w = Self {
            theta_bs,
            theta_c,
            theta_p,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.as_array();
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(format!("weights {self} must be finite and non-negative")));
        }
        if all.iter().all(|v| *v == 0.0) {
            return Err(Error::Config("at least one combination weight must be non-zero".into()));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.theta_bs, self.theta_c, self.theta_p]
    }

    /// Replaces the given components, keeping the rest.
    pub fn with_overrides(self, bs: Option<f64>, c: Option<f64>, p: Option<f64>) -> Result<Self> {
        Self::new(
            bs.unwrap_or(self.theta_bs),
            c.unwrap_or(self.theta_c),
            p.unwrap_or(self.theta_p),
        )
    }

    /// Same weights with the brain channel switched off.
    pub fn without_brain(self) -> Result<Self> {
        Self::new(0.0, self.theta_c, self.theta_p)
    }

    #[inline]
    pub fn apply(&self, bs: f64, c: f64, p: f64) -> f64 {
        self.theta_bs * bs + self.theta_c * c + self.theta_p * p
    }
}

impl fmt::Display for CombinationWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.theta_bs, self.theta_c, self.theta_p)
    }
}

impl FromStr for CombinationWeights {
    type Err = Error;

    /// Parses `"bs,c,p"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!("expected three comma-separated weights, got {s:?}")));
        }
        let mut v = [0.0; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::Config(format!("weight {p:?} is not a number")))?;
        }
        Self::new(v[0], v[1], v[2])
    }
}

/// Per-document `theta_bs * r_bs + theta_c * r_c + theta_p * r_p`.
///
/// The result is not renormalized and may exceed 1 when the weights sum above 1.
pub fn combine(
    r_bs: &ScoreVector,
    r_c: &ScoreVector,
    r_p: &ScoreVector,
    theta: &CombinationWeights,
) -> Result<ScoreVector> {
    theta.validate()?;
    r_bs.check_aligned(r_c)?;
    r_bs.check_aligned(r_p)?;
    if r_bs.has_masked() || r_c.has_masked() || r_p.has_masked() {
        return Err(Error::input("cannot combine masked scores"));
    }
    let mut out = ScoreVector::unbounded();
    for ((b, c), p) in r_bs.entries().iter().zip(r_c.entries()).zip(r_p.entries()) {
        out.push(b.doc_id.clone(), theta.apply(b.score, c.score, p.score))?;
    }
    Ok(out)
}

/// Slice form of [`combine`] for hot loops over pre-aligned channels.
pub fn combine_values(bs: &[f64], c: &[f64], p: &[f64], theta: &CombinationWeights) -> Vec<f64> {
    bs.iter()
        .zip(c)
        .zip(p)
        .map(|((&b, &c), &p)| theta.apply(b, c, p))
        .collect()
}

/// Fixed weights: 3:1:1 for IRF and 5:2:0 for RRF, expressed on the grid.
pub fn default_weights(mode: Mode) -> CombinationWeights {
    match mode {
        Mode::Irf => CombinationWeights {
            theta_bs: 0.6,
            theta_c: 0.2,
            theta_p: 0.2,
        },
        Mode::Rrf => CombinationWeights {
            theta_bs: 1.0,
            theta_c: 0.4,
            theta_p: 0.0,
        },
    }
}

/// Brain-heavy weights where clicks are absent (IRF, 5:1:1) or known to be
/// misleading (RRF with a bad click, 5:1:0); otherwise `base`.
pub fn scenario_weights(
    mode: Mode,
    n_clicks: usize,
    bad_click_flag: Option<bool>,
    base: CombinationWeights,
) -> CombinationWeights {
    match mode {
        Mode::Irf if n_clicks == 0 => CombinationWeights {
            theta_bs: 1.0,
            theta_c: 0.2,
            theta_p: 0.2,
        },
        Mode::Rrf if bad_click_flag == Some(true) => CombinationWeights {
            theta_bs: 1.0,
            theta_c: 0.2,
            theta_p: 0.0,
        },
        _ => base,
    }
}
