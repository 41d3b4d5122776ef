//! Rabi-term kernel and the generic line sum shared by every model.
//!
//! Every closed-form inversion signal in this crate has the shape
//!
//! ```text
//! w(t) = offset + Σⱼ weightⱼ · T(κⱼ, t)
//! T(κ, t) = g²κ · sin²(t √(Δ²/4 + g²κ)) / (Δ²/4 + g²κ),   T(0, t) = 0
//! ```
//!
//! where `κ` is the occupation factor of one term. Models differ only in how
//! they produce the `(weight, κ)` list.

use rayon::prelude::*;

use crate::sum::pairwise_sum;
use crate::weights::WeightTable;

/// One oscillating contribution: `weight · T(occupancy, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiTerm {
    pub weight: f64,
    pub occupancy: f64,
}

impl RabiTerm {
    /// `|g|² κ`.
    pub fn effective_rate(&self, g: f64) -> f64 {
        g * g * self.occupancy
    }

    /// `Ω_R² = Δ²/4 + |g|² κ`.
    pub fn rabi_sq(&self, g: f64, delta: f64) -> f64 {
        delta * delta / 4.0 + self.effective_rate(g)
    }
}

/// `T(κ, t)` evaluated directly.
pub fn kernel(g: f64, delta: f64, occupancy: f64, t: f64) -> f64 {
    if occupancy == 0.0 {
        return 0.0;
    }
    let rate = g * g * occupancy;
    let rabi_sq = delta * delta / 4.0 + rate;
    let s = (t * rabi_sq.sqrt()).sin();
    rate * s * s / rabi_sq
}

/// A field sector: probability `weight`, occupation factor `occupancy` and
/// the photon-number distribution inside the sector.
#[derive(Debug, Clone)]
pub struct Sector {
    pub weight: f64,
    pub occupancy: f64,
    pub photons: WeightTable,
}

/// `w(t) = offset + Σ weight · T(κ, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RabiLines {
    pub offset: f64,
    pub terms: Vec<RabiTerm>,
}

impl RabiLines {
    /// Builds the line list for an atomic mixture `(p₊, p₋)`.
    ///
    /// With photon distribution `q` in a sector of occupation `κ`, the excited
    /// atom contributes `−q(m−1) T(mκ)` and the ground atom `+q(m) T(mκ)`, so
    ///
    /// ```text
    /// w = (p₊ − p₋)/2 + Σ_s B_s Σ_{m≥1} (p₋ q(m) − p₊ q(m−1)) T(m κ_s).
    /// ```
    ///
    /// Terms are ordered sector-major, then by photon number. Zero-weight and
    /// zero-occupancy terms are dropped.
    pub fn from_sectors(p_plus: f64, p_minus: f64, sectors: &[Sector]) -> RabiLines {
        let mut terms = Vec::new();
        for sector in sectors {
            if sector.weight == 0.0 || sector.occupancy == 0.0 {
                continue;
            }
            let q = &sector.photons;
            for m in 1..=q.end() + 1 {
                let coef = p_minus * q.get(m) - p_plus * q.get(m - 1);
                let weight = sector.weight * coef;
                if weight != 0.0 {
                    terms.push(RabiTerm { weight, occupancy: m as f64 * sector.occupancy });
                }
            }
        }
        RabiLines { offset: (p_plus - p_minus) / 2.0, terms }
    }

    /// Evaluates the signal at arbitrary times.
    ///
    /// Each sample is a pairwise sum in term order, so results do not depend
    /// on how the samples are split across threads.
    pub fn evaluate(&self, g: f64, delta: f64, times: &[f64]) -> Vec<f64> {
        let prepared: Vec<(f64, f64)> = self
            .terms
            .iter()
            .map(|term| {
                let rate = term.effective_rate(g);
                let rabi_sq = term.rabi_sq(g, delta);
                (term.weight * (rate / rabi_sq), rabi_sq.sqrt())
            })
            .collect();
        times
            .par_iter()
            .with_min_len(64)
            .map_init(
                || Vec::with_capacity(prepared.len()),
                |buf, &t| {
                    buf.clear();
                    buf.extend(prepared.iter().map(|&(amp, freq)| {
                        let s = (t * freq).sin();
                        amp * (s * s)
                    }));
                    self.offset + pairwise_sum(buf)
                },
            )
            .collect()
    }
}
