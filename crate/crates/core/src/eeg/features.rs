//! Differential-entropy (DE) features per channel and frequency band.
//!
//! For a band-limited signal treated as Gaussian, DE = 0.5 * ln(2*pi*e*var).

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::filter::{butter_bandpass, butter_highpass, Sos};
use super::preprocess::EegSegment;

/// Variance floor applied before the logarithm.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Order (poles per edge) of the band filters.
pub const BAND_FILTER_ORDER: usize = 4;

/// Lowest sampling rate at which every band, including gamma, is representable.
pub const MIN_FEATURE_RATE_HZ: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl Band {
    pub const ALL: [Band; 5] = [Band::Delta, Band::Theta, Band::Alpha, Band::Beta, Band::Gamma];

    /// Pass band edges in Hz.
    pub fn edges(self) -> (f64, f64) {
        match self {
            Band::Delta => (0.5, 4.0),
            Band::Theta => (4.0, 8.0),
            Band::Alpha => (8.0, 13.0),
            Band::Beta => (13.0, 30.0),
            Band::Gamma => (30.0, 50.0),
        }
    }

    /// Zero-phase filter isolating this band at sampling rate `fs`. When the
    /// upper edge reaches Nyquist the band becomes a high-pass.
    pub fn filter(self, fs: f64) -> Result<Sos> {
        let (lo, hi) = self.edges();
        if hi < fs / 2.0 {
            butter_bandpass(BAND_FILTER_ORDER, lo, hi, fs)
        } else {
            butter_highpass(BAND_FILTER_ORDER, lo, fs)
        }
    }
}

/// DE values, `channels x 5` bands, in natural-log units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeFeatureVector {
    channels: usize,
    values: Vec<f64>,
}

impl DeFeatureVector {
    pub const BANDS: usize = 5;

    /// Wraps a row-major `channels x 5` matrix.
    pub fn from_flat(channels: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 || values.len() != channels * Self::BANDS {
            return Err(Error::input(format!(
                "DE feature vector needs {} values for {channels} channels, got {}",
                channels * Self::BANDS,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("DE features must be finite"));
        }
        Ok(Self { channels, values })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn get(&self, channel: usize, band: Band) -> f64 {
        self.values[channel * Self::BANDS + band as usize]
    }

    /// Row-major flattening (channel-major, band-minor).
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// DE of a signal's sample variance, with the variance floored at [`VARIANCE_FLOOR`].
pub fn differential_entropy(signal: &[f64]) -> f64 {
    let var = variance(signal).max(VARIANCE_FLOOR);
    0.5 * (2.0 * PI * E * var).ln()
}

fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Band-wise DE for every channel of a preprocessed segment.
pub fn extract_de(segment: &EegSegment) -> Result<DeFeatureVector> {
    let fs = segment.sampling_rate_hz();
    if fs < MIN_FEATURE_RATE_HZ {
        return Err(Error::input(format!(
            "sampling rate {fs} Hz is below the {MIN_FEATURE_RATE_HZ} Hz needed for the gamma band"
        )));
    }
    let filters = Band::ALL
        .iter()
        .map(|b| b.filter(fs))
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(segment.channel_count() * Band::ALL.len());
    for channel in segment.channels() {
        for f in &filters {
            values.push(differential_entropy(&f.filtfilt(channel)?));
        }
    }
    DeFeatureVector::from_flat(segment.channel_count(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn full_band_gaussian_entropy() {
        let de = differential_entropy(&noise(200_000, 1));
        let analytic = 0.5 * (2.0 * PI * E).ln();
        assert!((de - analytic).abs() / analytic < 0.01, "{de} vs {analytic}");
    }

    #[test]
    fn constant_signal_hits_floor() {
        let de = differential_entropy(&[3.0; 100]);
        assert!((de - 0.5 * (2.0 * PI * E * VARIANCE_FLOOR).ln()).abs() < 1e-12);
        assert!(de.is_finite());
    }

    #[test]
    fn shape_and_low_rate_rejection() {
        let seg = EegSegment::new(vec![noise(1000, 2), noise(1000, 3)], 500.0, 0.0).unwrap();
        let de = extract_de(&seg).unwrap();
        assert_eq!(de.channels(), 2);
        assert_eq!(de.as_slice().len(), 10);

        let slow = EegSegment::new(vec![noise(200, 4)], 80.0, 0.0).unwrap();
        assert!(extract_de(&slow).is_err());
    }

    #[test]
    fn gamma_band_at_100hz_uses_highpass() {
        let seg = EegSegment::new(vec![noise(400, 5)], 100.0, 0.0).unwrap();
        assert!(extract_de(&seg).is_ok());
    }

    #[test]
    fn from_flat_validates() {
        assert!(DeFeatureVector::from_flat(2, vec![0.0; 9]).is_err());
        assert!(DeFeatureVector::from_flat(1, vec![0.0, 0.0, f64::INFINITY, 0.0, 0.0]).is_err());
    }
}
