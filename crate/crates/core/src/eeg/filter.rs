//! Butterworth IIR design as second-order sections, with forward-backward
//! (zero-phase) application.
//!
//! Designs follow the analog-prototype route: Butterworth poles, frequency
//! transform with pre-warped edges, bilinear transform, then conjugate pole
//! pairs grouped into biquads. Gain is normalized at the reference frequency
//! (DC, Nyquist, or the band centre) where a Butterworth response is exactly 1.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One biquad: `[b0, b1, b2, a0, a1, a2]` with `a0 == 1`.
pub type Section = [f64; 6];

#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    sections: Vec<Section>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Lowpass(f64),
    Highpass(f64),
    Bandpass(f64, f64),
}

pub fn butter_lowpass(order: usize, cutoff_hz: f64, fs: f64) -> Result<Sos> {
    design(order, Kind::Lowpass(cutoff_hz), fs)
}

pub fn butter_highpass(order: usize, cutoff_hz: f64, fs: f64) -> Result<Sos> {
    design(order, Kind::Highpass(cutoff_hz), fs)
}

/// Band-pass with `order` poles per edge (2 * order poles in total).
pub fn butter_bandpass(order: usize, low_hz: f64, high_hz: f64, fs: f64) -> Result<Sos> {
    design(order, Kind::Bandpass(low_hz, high_hz), fs)
}

fn check_edge(f: f64, fs: f64) -> Result<()> {
    if !(f > 0.0 && f < fs / 2.0) {
        return Err(Error::input(format!(
            "filter edge {f} Hz must lie strictly between 0 and Nyquist ({} Hz)",
            fs / 2.0
        )));
    }
    Ok(())
}

fn design(order: usize, kind: Kind, fs: f64) -> Result<Sos> {
    if order == 0 {
        return Err(Error::input("filter order must be at least 1"));
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::input("sampling rate must be positive"));
    }
    let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
    let proto: Vec<Complex64> = (0..order)
        .map(|k| {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect();

    // Analog poles plus the digital zeros implied by the transform.
    let (analog_poles, digital_zeros, ref_omega): (Vec<Complex64>, Vec<f64>, f64) = match kind {
        Kind::Lowpass(fc) => {
            check_edge(fc, fs)?;
            let wc = warp(fc);
            (proto.iter().map(|p| p * wc).collect(), vec![-1.0; order], 0.0)
        }
        Kind::Highpass(fc) => {
            check_edge(fc, fs)?;
            let wc = warp(fc);
            (proto.iter().map(|p| wc / p).collect(), vec![1.0; order], PI)
        }
        Kind::Bandpass(lo, hi) => {
            check_edge(lo, fs)?;
            check_edge(hi, fs)?;
            if lo >= hi {
                return Err(Error::input(format!("band edges {lo}..{hi} Hz are not increasing")));
            }
            let (wl, wh) = (warp(lo), warp(hi));
            let bw = wh - wl;
            let w0 = (wl * wh).sqrt();
            let mut poles = Vec::with_capacity(2 * order);
            for p in &proto {
                let plp = p * (bw / 2.0);
                let disc = (plp * plp - w0 * w0).sqrt();
                poles.push(plp + disc);
                poles.push(plp - disc);
            }
            let mut zeros = vec![1.0; order];
            zeros.extend(std::iter::repeat(-1.0).take(order));
            // Digital frequency where the analog centre w0 lands.
            let centre = 2.0 * (w0 / (2.0 * fs)).atan();
            (poles, zeros, centre)
        }
    };

    let fs2 = Complex64::new(2.0 * fs, 0.0);
    let digital_poles: Vec<Complex64> = analog_poles.iter().map(|p| (fs2 + p) / (fs2 - p)).collect();
    let mut sections = group_sections(&digital_poles, &digital_zeros);
    normalize_gain(&mut sections, ref_omega);
    Ok(Sos { sections })
}

/// Groups poles into conjugate pairs (or pairs of real poles) and assigns two
/// zeros to each section.
fn group_sections(poles: &[Complex64], zeros: &[f64]) -> Vec<Section> {
    const IMAG_EPS: f64 = 1e-10;
    let mut complex: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > IMAG_EPS).collect();
    let mut real: Vec<f64> = poles.iter().filter(|p| p.im.abs() <= IMAG_EPS).map(|p| p.re).collect();
    // Poles closest to the unit circle last, matching the usual SOS ordering.
    complex.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    real.sort_by(|a, b| a.abs().total_cmp(&b.abs()));

    let mut denominators: Vec<[f64; 3]> = complex
        .iter()
        .map(|p| [1.0, -2.0 * p.re, p.norm_sqr()])
        .collect();
    for pair in real.chunks(2) {
        match pair {
            [a, b] => denominators.push([1.0, -(a + b), a * b]),
            [a] => denominators.push([1.0, -a, 0.0]),
            _ => unreachable!(),
        }
    }

    let mut zero_iter = zeros.chunks(2);
    denominators
        .into_iter()
        .map(|den| {
            let num = match zero_iter.next() {
                Some([a, b]) => [1.0, -(a + b), a * b],
                Some([a]) => [1.0, -a, 0.0],
                _ => [1.0, 0.0, 0.0],
            };
            [num[0], num[1], num[2], den[0], den[1], den[2]]
        })
        .collect()
}

fn section_response(s: &Section, omega: f64) -> Complex64 {
    let z1 = Complex64::from_polar(1.0, -omega);
    let z2 = z1 * z1;
    (s[0] + s[1] * z1 + s[2] * z2) / (s[3] + s[4] * z1 + s[5] * z2)
}

fn normalize_gain(sections: &mut [Section], omega: f64) {
    for s in sections.iter_mut() {
        let g = section_response(s, omega).norm();
        if g > 0.0 && g.is_finite() {
            s[0] /= g;
            s[1] /= g;
            s[2] /= g;
        }
    }
}

impl Sos {
    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    /// Magnitude response at `freq_hz` for sampling rate `fs`.
    pub fn magnitude(&self, freq_hz: f64, fs: f64) -> f64 {
        let omega = 2.0 * PI * freq_hz / fs;
        self.sections
            .iter()
            .map(|s| section_response(s, omega))
            .product::<Complex64>()
            .norm()
    }

    /// Causal filtering from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let zeros = vec![[0.0; 2]; self.sections.len()];
        self.filter_with_state(x, &zeros)
    }

    fn filter_with_state(&self, x: &[f64], init: &[[f64; 2]]) -> Vec<f64> {
        let mut y = x.to_vec();
        for (s, z0) in self.sections.iter().zip(init) {
            let (b0, b1, b2, a1, a2) = (s[0], s[1], s[2], s[4], s[5]);
            let (mut z1, mut z2) = (z0[0], z0[1]);
            for v in y.iter_mut() {
                let xin = *v;
                let out = b0 * xin + z1;
                z1 = b1 * xin - a1 * out + z2;
                z2 = b2 * xin - a2 * out;
                *v = out;
            }
        }
        y
    }

    /// Per-section steady-state initial conditions for a unit step input.
    fn step_state(&self) -> Vec<[f64; 2]> {
        let mut level = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let (b0, b1, b2, a1, a2) = (s[0], s[1], s[2], s[4], s[5]);
                let g = (b0 + b1 + b2) / (1.0 + a1 + a2);
                let z2 = b2 - a2 * g;
                let z1 = b1 - a1 * g + z2;
                let state = [z1 * level, z2 * level];
                level *= g;
                state
            })
            .collect()
    }

    /// Zero-phase filtering: forward pass, then a backward pass over the
    /// reversed output. The signal is extended at both ends by odd reflection
    /// and each pass starts from the steady state of its first sample.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = x.len();
        if n < 2 {
            return Err(Error::input("zero-phase filtering needs at least two samples"));
        }
        let pad = self.default_padlen().min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        for i in (1..=pad).rev() {
            ext.push(2.0 * x[0] - x[i]);
        }
        ext.extend_from_slice(x);
        for i in 1..=pad {
            ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
        }

        let zi = self.step_state();
        let scaled = |v: f64| zi.iter().map(|z| [z[0] * v, z[1] * v]).collect::<Vec<_>>();

        let mut fwd = self.filter_with_state(&ext, &scaled(ext[0]));
        fwd.reverse();
        let mut back = self.filter_with_state(&fwd, &scaled(fwd[0]));
        back.reverse();
        Ok(back[pad..pad + n].to_vec())
    }

    fn default_padlen(&self) -> usize {
        3 * (2 * self.sections.len() + 1)
    }
}
