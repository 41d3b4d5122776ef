//! Discrete Fourier magnitude spectra.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::sum::pairwise_sum;

/// One-sided amplitude spectrum; `amplitudes[k]` belongs to `freqs_khz[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs_khz: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

/// Local maximum of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub freq_khz: f64,
    pub amplitude: f64,
}

/// Mirrors the `t ≥ 0` part of a uniform series about `t = 0`.
pub fn symmetrized(t0: f64, dt: f64, samples: &[f64]) -> Vec<f64> {
    let first = samples
        .iter()
        .enumerate()
        .position(|(i, _)| t0 + i as f64 * dt >= -1e-9 * dt)
        .unwrap_or(samples.len());
    let tail = &samples[first..];
    if tail.is_empty() {
        return Vec::new();
    }
    tail.iter().skip(1).rev().chain(tail.iter()).copied().collect()
}

/// Magnitude of the DFT of the mean-removed series, scaled by `2/L` so that
/// a sinusoid of amplitude `A` on a bin shows up with height `A`.
/// `dt` is in µs; frequencies are reported in kHz.
pub fn amplitude_spectrum(dt: f64, samples: &[f64]) -> Spectrum {
    let len = samples.len();
    if len == 0 {
        return Spectrum { freqs_khz: Vec::new(), amplitudes: Vec::new() };
    }
    let mean = pairwise_sum(samples) / len as f64;
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|x| Complex::new(x - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let half = len / 2 + 1;
    let scale = 2.0 / len as f64;
    Spectrum {
        freqs_khz: (0..half).map(|k| k as f64 / (len as f64 * dt) * 1e3).collect(),
        amplitudes: buf[..half].iter().map(|c| c.norm() * scale).collect(),
    }
}

/// Spectrum of a uniform series starting at `t0`, optionally after
/// mirroring it about `t = 0`.
pub fn spectrum(t0: f64, dt: f64, samples: &[f64], symmetrize: bool) -> Spectrum {
    if symmetrize {
        amplitude_spectrum(dt, &symmetrized(t0, dt, samples))
    } else {
        amplitude_spectrum(dt, samples)
    }
}

impl Spectrum {
    /// Interior local maxima, largest first.
    pub fn peaks(&self) -> Vec<Peak> {
        let a = &self.amplitudes;
        let mut peaks: Vec<Peak> = (1..a.len().saturating_sub(1))
            .filter(|&k| a[k] > a[k - 1] && a[k] >= a[k + 1])
            .map(|k| Peak { freq_khz: self.freqs_khz[k], amplitude: a[k] })
            .collect();
        peaks.sort_by(|x, y| y.amplitude.total_cmp(&x.amplitude));
        peaks
    }

    /// Frequency of the largest nonzero-frequency bin, refined by a parabola
    /// through its neighbours.
    pub fn dominant_khz(&self) -> Option<f64> {
        let a = &self.amplitudes;
        if a.len() < 3 {
            return None;
        }
        let k = (1..a.len()).max_by(|&i, &j| a[i].total_cmp(&a[j]))?;
        if a[k] == 0.0 {
            return None;
        }
        let df = self.freqs_khz[1] - self.freqs_khz[0];
        if k + 1 >= a.len() {
            return Some(self.freqs_khz[k]);
        }
        let (l, c, r) = (a[k - 1], a[k], a[k + 1]);
        let denom = l - 2.0 * c + r;
        let shift = if denom != 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
        Some(self.freqs_khz[k] + shift.clamp(-0.5, 0.5) * df)
    }
}
