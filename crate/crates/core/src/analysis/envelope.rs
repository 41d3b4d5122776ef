//! Oscillation envelopes, collapse and revival.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::spectrum::amplitude_spectrum;
use super::AnalysisError;
use crate::sum::pairwise_sum;

pub const MIN_PERIODS: f64 = 8.0;
pub const MIN_POINTS_PER_PERIOD: f64 = 16.0;

/// Thresholds, as fractions of the initial amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeOptions {
    /// Collapse once the amplitude drops below `theta · A₀`.
    pub theta: f64,
    /// Revival once it climbs back to `revival_fraction · A₀`.
    pub revival_fraction: f64,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        EnvelopeOptions { theta: 0.5, revival_fraction: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Revival {
    /// First time the amplitude is back above threshold.
    pub onset: f64,
    /// Time of the largest amplitude in the revival lobe.
    pub time: f64,
    /// Largest amplitude in the lobe over `A₀`.
    pub recovered_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub times: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    /// Smoothed oscillation amplitude.
    pub amplitude: Vec<f64>,
    pub mean: f64,
    /// Dominant oscillation period (µs).
    pub period: f64,
    /// Mean amplitude over the first period.
    pub initial_amplitude: f64,
    pub collapse_time: Option<f64>,
    pub revival: Option<Revival>,
}

/// `|x + i·H[x]|` with the series reflected at both ends to tame edge effects.
fn analytic_magnitude(x: &[f64]) -> Vec<f64> {
    let len = x.len();
    let pad = len.saturating_sub(1).min(len / 2);
    let mut ext: Vec<f64> = Vec::with_capacity(len + 2 * pad);
    ext.extend(x[1..=pad].iter().rev());
    ext.extend_from_slice(x);
    ext.extend(x[len - 1 - pad..len - 1].iter().rev());
    let n = ext.len();
    let mut buf: Vec<Complex<f64>> = ext.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let h = if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *c *= h / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf[pad..pad + len].iter().map(|c| c.norm()).collect()
}

/// Centered moving average over `width` samples, shrinking at the edges.
fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Envelope of a uniformly sampled signal.
pub fn envelope(t0: f64, dt: f64, samples: &[f64], options: &EnvelopeOptions) -> Result<EnvelopeReport, AnalysisError> {
    let len = samples.len();
    let insufficient = |periods: f64, per: f64| AnalysisError::InsufficientSampling { periods, points_per_period: per };
    if len < 4 {
        return Err(insufficient(0.0, 0.0));
    }
    let mean = pairwise_sum(samples) / len as f64;
    let centered: Vec<f64> = samples.iter().map(|w| w - mean).collect();
    let f_khz = amplitude_spectrum(dt, &centered).dominant_khz().ok_or_else(|| insufficient(0.0, 0.0))?;
    let period = 1e3 / f_khz;
    let per = period / dt;
    let periods = len as f64 * dt / period;
    if periods < MIN_PERIODS || per < MIN_POINTS_PER_PERIOD {
        return Err(insufficient(periods, per));
    }

    let width = per.round() as usize;
    let raw = analytic_magnitude(&centered);
    let (max, min) = samples.iter().fold((f64::MIN, f64::MAX), |(hi, lo), &w| (hi.max(w), lo.min(w)));
    let cap = (max - mean).max(mean - min);
    let amplitude: Vec<f64> = moving_average(&raw, width).into_iter().map(|a| a.min(cap)).collect();
    let upper = amplitude.iter().map(|a| (mean + a).min(max)).collect();
    let lower = amplitude.iter().map(|a| (mean - a).max(min)).collect();
    let times: Vec<f64> = (0..len).map(|i| t0 + i as f64 * dt).collect();

    let a0 = amplitude[..width].iter().sum::<f64>() / width as f64;
    let collapse = amplitude.iter().position(|&a| a < options.theta * a0);
    let revival = collapse.and_then(|c| {
        let threshold = options.revival_fraction * a0;
        let start = c + amplitude[c..].iter().position(|&a| a >= threshold)?;
        let end = amplitude[start..].iter().position(|&a| a < threshold).map_or(len, |k| start + k);
        let peak = (start..end).max_by(|&i, &j| amplitude[i].total_cmp(&amplitude[j]))?;
        Some(Revival { onset: times[start], time: times[peak], recovered_fraction: amplitude[peak] / a0 })
    });

    Ok(EnvelopeReport {
        collapse_time: collapse.map(|i| times[i]),
        times,
        upper,
        lower,
        amplitude,
        mean,
        period,
        initial_amplitude: a0,
        revival,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pure_oscillation_has_flat_envelope() {
        let g = 0.3;
        let dt = 0.25;
        let x: Vec<f64> = (0..4001).map(|i| 0.5 - (g * i as f64 * dt).sin().powi(2)).collect();
        let r = envelope(0.0, dt, &x, &EnvelopeOptions::default()).unwrap();
        assert!((r.period - PI / g).abs() / (PI / g) < 1e-3);
        assert!(r.collapse_time.is_none());
        assert!(r.revival.is_none());
        for a in &r.amplitude {
            assert!((a - 0.5).abs() < 0.02, "{a}");
        }
    }

    #[test]
    fn damped_collapse_time() {
        let t_cav = 80.0;
        let dt = 0.1;
        let x: Vec<f64> = (0..6000)
            .map(|i| {
                let t = i as f64 * dt;
                (-t / t_cav).exp() * (0.9 * t).cos()
            })
            .collect();
        let r = envelope(0.0, dt, &x, &EnvelopeOptions::default()).unwrap();
        let want = t_cav * 2f64.ln();
        let got = r.collapse_time.unwrap();
        assert!((got - want).abs() < 0.1 * want, "{got} vs {want}");
    }

    #[test]
    fn beat_revives() {
        // two close lines: amplitude |cos(δt/2)|, collapse at π/δ, revival at 2π/δ
        let dt = 0.1;
        let delta = 0.02;
        let x: Vec<f64> = (0..8000)
            .map(|i| {
                let t = i as f64 * dt;
                (1.0 * t).cos() + ((1.0 + delta) * t).cos()
            })
            .collect();
        let r = envelope(0.0, dt, &x, &EnvelopeOptions::default()).unwrap();
        let c = r.collapse_time.unwrap();
        assert!((c - 2.0 * PI / 3.0 / delta).abs() < 5.0, "{c}");
        let rev = r.revival.unwrap();
        assert!((rev.time - 2.0 * PI / delta).abs() < 5.0, "{rev:?}");
        assert!(rev.recovered_fraction > 0.9);
    }

    #[test]
    fn undersampled_is_rejected() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64).cos()).collect();
        assert!(matches!(
            envelope(0.0, 1.0, &x, &EnvelopeOptions::default()),
            Err(AnalysisError::InsufficientSampling { .. })
        ));
        let x: Vec<f64> = (0..100).map(|i| (0.05 * i as f64).cos()).collect();
        assert!(envelope(0.0, 1.0, &x, &EnvelopeOptions::default()).is_err());
    }
}
