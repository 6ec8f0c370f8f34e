use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::filter::{butter_highpass, butter_lowpass};

/// Channel count of the recording montage.
pub const DEFAULT_CHANNELS: usize = 62;

/// One stimulus-locked EEG epoch: `channels x time` samples in microvolts.
/// The first `pre_stimulus_ms` of every channel precede stimulus onset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EegSegment {
    samples: Vec<Vec<f64>>,
    sampling_rate_hz: f64,
    pre_stimulus_ms: f64,
}

impl EegSegment {
    pub fn new(samples: Vec<Vec<f64>>, sampling_rate_hz: f64, pre_stimulus_ms: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::input("EEG segment has no channels"));
        }
        let len = samples[0].len();
        if len == 0 || samples.iter().any(|c| c.len() != len) {
            return Err(Error::input("EEG channels must be non-empty and equally long"));
        }
        if !(sampling_rate_hz > 0.0 && sampling_rate_hz.is_finite()) {
            return Err(Error::input("sampling rate must be positive"));
        }
        if !(pre_stimulus_ms >= 0.0) {
            return Err(Error::input("pre-stimulus duration must be non-negative"));
        }
        if samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("EEG samples must be finite"));
        }
        Ok(Self {
            samples,
            sampling_rate_hz,
            pre_stimulus_ms,
        })
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn channel_count(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sampling_rate_hz(&self) -> f64 {
        self.sampling_rate_hz
    }

    pub fn pre_stimulus_ms(&self) -> f64 {
        self.pre_stimulus_ms
    }

    pub fn duration_ms(&self) -> f64 {
        self.len() as f64 * 1000.0 / self.sampling_rate_hz
    }

    fn samples_for(&self, ms: f64) -> usize {
        (ms * self.sampling_rate_hz / 1000.0).round() as usize
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.samples
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// Post-stimulus window kept after preprocessing.
    pub post_ms: f64,
    pub target_rate_hz: f64,
    pub highpass_hz: f64,
    pub lowpass_hz: f64,
    pub highpass_order: usize,
    pub lowpass_order: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            post_ms: 2000.0,
            target_rate_hz: 500.0,
            highpass_hz: 0.5,
            lowpass_hz: 50.0,
            highpass_order: 4,
            lowpass_order: 8,
        }
    }
}

/// Baseline correction, 0.5-50 Hz zero-phase band-pass, resampling, and
/// truncation to the post-stimulus window.
///
/// The returned segment starts at stimulus onset (`pre_stimulus_ms == 0`).
pub fn preprocess(raw: &EegSegment, config: &PreprocessConfig) -> Result<EegSegment> {
    let fs = raw.sampling_rate_hz;
    if !(config.post_ms > 0.0) {
        return Err(Error::input("post-stimulus window must be positive"));
    }
    if !(config.target_rate_hz > 0.0) || config.target_rate_hz > fs {
        return Err(Error::input(format!(
            "target rate {} Hz must be positive and at most the raw rate {fs} Hz",
            config.target_rate_hz
        )));
    }
    let pre = raw.samples_for(raw.pre_stimulus_ms);
    let post = raw.samples_for(config.post_ms);
    if pre + post > raw.len() {
        return Err(Error::input(format!(
            "segment of {:.1} ms is shorter than {:.1} ms baseline + {:.1} ms window",
            raw.duration_ms(),
            raw.pre_stimulus_ms,
            config.post_ms
        )));
    }

    let highpass = butter_highpass(config.highpass_order, config.highpass_hz, fs)?;
    // A low-pass edge at or above Nyquist has nothing left to remove.
    let lowpass = if config.lowpass_hz < fs / 2.0 {
        Some(butter_lowpass(config.lowpass_order, config.lowpass_hz, fs)?)
    } else {
        None
    };

    let out_len = (config.post_ms * config.target_rate_hz / 1000.0).round() as usize;
    let mut out = Vec::with_capacity(raw.channel_count());
    for channel in &raw.samples {
        let baseline = if pre > 0 {
            channel[..pre].iter().sum::<f64>() / pre as f64
        } else {
            0.0
        };
        let corrected: Vec<f64> = channel.iter().map(|v| v - baseline).collect();
        let mut filtered = highpass.filtfilt(&corrected)?;
        if let Some(lp) = &lowpass {
            filtered = lp.filtfilt(&filtered)?;
        }
        let window = &filtered[pre..pre + post];
        out.push(resample(window, fs, config.target_rate_hz, out_len));
    }
    EegSegment::new(out, config.target_rate_hz, 0.0)
}

/// Decimates by an integer factor when possible, otherwise interpolates linearly.
fn resample(x: &[f64], from_hz: f64, to_hz: f64, out_len: usize) -> Vec<f64> {
    let ratio = from_hz / to_hz;
    let step = ratio.round();
    if (ratio - step).abs() < 1e-9 {
        let step = step as usize;
        return x.iter().step_by(step).take(out_len).copied().collect();
    }
    (0..out_len)
        .map(|i| {
            let t = i as f64 * ratio;
            let i0 = t.floor() as usize;
            let frac = t - i0 as f64;
            match (x.get(i0), x.get(i0 + 1)) {
                (Some(&a), Some(&b)) => a + (b - a) * frac,
                (Some(&a), None) => a,
                _ => *x.last().unwrap_or(&0.0),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_segment(value: f64, channels: usize, len: usize, fs: f64) -> EegSegment {
        EegSegment::new(vec![vec![value; len]; channels], fs, 500.0).unwrap()
    }

    #[test]
    fn output_length_follows_rate_and_window() {
        let raw = constant_segment(0.0, 4, 2500, 1000.0);
        let out = preprocess(&raw, &PreprocessConfig::default()).unwrap();
        assert_eq!(out.channel_count(), 4);
        assert_eq!(out.len(), 1000);
        assert_eq!(out.sampling_rate_hz(), 500.0);
        assert_eq!(out.pre_stimulus_ms(), 0.0);
    }

    #[test]
    fn non_integer_ratio_interpolates() {
        let raw = constant_segment(0.0, 1, 2500, 1000.0);
        let cfg = PreprocessConfig {
            target_rate_hz: 300.0,
            ..Default::default()
        };
        assert_eq!(preprocess(&raw, &cfg).unwrap().len(), 600);
    }

    #[test]
    fn dc_offset_is_removed() {
        let raw = constant_segment(10.0, 3, 2500, 1000.0);
        let out = preprocess(&raw, &PreprocessConfig::default()).unwrap();
        assert!(out.channels().iter().flatten().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn short_segment_is_rejected() {
        let raw = constant_segment(0.0, 2, 2000, 1000.0);
        assert!(matches!(
            preprocess(&raw, &PreprocessConfig::default()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn upsampling_is_rejected() {
        let raw = constant_segment(0.0, 1, 2500, 1000.0);
        let cfg = PreprocessConfig {
            target_rate_hz: 2000.0,
            ..Default::default()
        };
        assert!(preprocess(&raw, &cfg).is_err());
    }

    #[test]
    fn segment_validation() {
        assert!(EegSegment::new(vec![], 500.0, 0.0).is_err());
        assert!(EegSegment::new(vec![vec![0.0; 3], vec![0.0; 2]], 500.0, 0.0).is_err());
        assert!(EegSegment::new(vec![vec![f64::NAN]], 500.0, 0.0).is_err());
        assert!(EegSegment::new(vec![vec![0.0]], 0.0, 0.0).is_err());
    }
}
