//! Closed-form inversion signals `w(t) = ⟨R₃(t)⟩`.
//!
//! All models reduce to a weighted sum of Rabi terms (see [`kernel`]); the
//! strategies in [`models`] differ only in how the sectors are weighted.
//! Times are in µs, couplings in rad/µs.

pub mod kernel;
pub mod models;

use thiserror::Error;

use crate::params::{FieldState, PhysicalParams};
use crate::sum::pairwise_sum;
use crate::weights::{WeightsError, DEFAULT_TAIL_EPS};

pub use kernel::{kernel, RabiLines, RabiTerm, Sector};
pub use models::{
    InversionModel, Irreducible, LimitNInf, ModelKind, ModelOptions, ModelRegistry, ReducibleFiniteN, Weighting,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("the reducible model needs a finite oscillator count")]
    RequiresFiniteN,
    #[error("cavity lifetime must be positive, got {0}")]
    NonPositiveLifetime(f64),
    #[error("occupation factor must lie in (0, 1], got {0}")]
    InvalidZeta(f64),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("unknown model '{0}'")]
    UnknownModel(String),
    #[error(transparent)]
    Weights(#[from] WeightsError),
}

/// Uniform grid `t0 + i·dt`, `i < count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, count: usize) -> Result<Self, DynamicsError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(DynamicsError::InvalidGrid(format!("dt = {dt} must be positive")));
        }
        if count == 0 {
            return Err(DynamicsError::InvalidGrid("empty grid".into()));
        }
        if !t0.is_finite() {
            return Err(DynamicsError::InvalidGrid(format!("t0 = {t0}")));
        }
        Ok(TimeGrid { t0, dt, count })
    }

    /// `0, dt, …` up to and including `t_max` (within rounding).
    pub fn window(t_max: f64, dt: f64) -> Result<Self, DynamicsError> {
        if !(t_max >= 0.0 && t_max.is_finite()) {
            return Err(DynamicsError::InvalidGrid(format!("t_max = {t_max}")));
        }
        if !(dt > 0.0) {
            return Err(DynamicsError::InvalidGrid(format!("dt = {dt} must be positive")));
        }
        let count = (t_max / dt + 1e-9).floor() as usize + 1;
        Self::new(0.0, dt, count)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.t0 + i as f64 * self.dt).collect()
    }
}

/// Sampled inversion on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionSignal {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
    pub model: ModelKind,
    pub state: FieldState,
    pub params_digest: String,
    pub damped: bool,
}

impl InversionSignal {
    pub fn grid(&self) -> TimeGrid {
        TimeGrid { t0: self.t0, dt: self.dt, count: self.samples.len() }
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid().times()
    }

    /// Whether every sample lies in `[−½ − slack, ½ + slack]`.
    pub fn is_bounded(&self, slack: f64) -> bool {
        self.samples.iter().all(|w| (-0.5 - slack..=0.5 + slack).contains(w))
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.samples) / self.samples.len() as f64
    }
}

/// Runs `model` on `grid`.
pub fn simulate(
    model: &dyn InversionModel,
    params: &PhysicalParams,
    state: &FieldState,
    grid: &TimeGrid,
) -> Result<InversionSignal, DynamicsError> {
    let samples = model.evaluate(params, state, &grid.times())?;
    Ok(InversionSignal {
        t0: grid.t0,
        dt: grid.dt,
        samples,
        model: model.kind(),
        state: *state,
        params_digest: params.digest(),
        damped: false,
    })
}

fn reducible() -> ReducibleFiniteN {
    ReducibleFiniteN { weighting: Weighting::Binomial, tail_eps: DEFAULT_TAIL_EPS }
}

fn limit() -> LimitNInf {
    LimitNInf { tail_eps: DEFAULT_TAIL_EPS }
}

fn excited(params: &PhysicalParams) -> PhysicalParams {
    params.with_p_plus(1.0).expect("p₊ = 1 is always valid")
}

/// `½ − T(𝒵, t)` for an excited atom.
pub fn w_vacuum_irreducible(params: &PhysicalParams, zeta: f64, grid: &TimeGrid) -> Result<InversionSignal, DynamicsError> {
    let model = Irreducible { zeta, tail_eps: DEFAULT_TAIL_EPS };
    simulate(&model, &excited(params), &FieldState::Vacuum, grid)
}

/// `½ − Σ_s B(s; N, Z_ω) T(s/(Z N), t)` for an excited atom.
pub fn w_vacuum_reducible(params: &PhysicalParams, grid: &TimeGrid) -> Result<InversionSignal, DynamicsError> {
    simulate(&reducible(), &excited(params), &FieldState::Vacuum, grid)
}

/// `½ − T(χ_ω, t)` for an excited atom.
pub fn w_vacuum_limit(params: &PhysicalParams, grid: &TimeGrid) -> Result<InversionSignal, DynamicsError> {
    simulate(&limit(), &excited(params), &FieldState::Vacuum, grid)
}

/// Ground-state atom in the vacuum: `−½` at all times.
pub fn w_ground_state(grid: &TimeGrid) -> InversionSignal {
    InversionSignal {
        t0: grid.t0,
        dt: grid.dt,
        samples: vec![-0.5; grid.count],
        model: ModelKind::Irreducible,
        state: FieldState::Vacuum,
        params_digest: String::new(),
        damped: false,
    }
}

pub fn w_thermal_reducible(params: &PhysicalParams, n_bar: f64, grid: &TimeGrid) -> Result<InversionSignal, DynamicsError> {
    simulate(&reducible(), params, &FieldState::Thermal { n_bar }, grid)
}

pub fn w_thermal_limit(params: &PhysicalParams, n_bar: f64, grid: &TimeGrid) -> Result<InversionSignal, DynamicsError> {
    simulate(&limit(), params, &FieldState::Thermal { n_bar }, grid)
}

pub fn w_coherent_reducible(params: &PhysicalParams, n_coh: f64, grid: &TimeGrid) -> Result<InversionSignal, DynamicsError> {
    simulate(&reducible(), params, &FieldState::Coherent { n_coh }, grid)
}

pub fn w_coherent_limit(params: &PhysicalParams, n_coh: f64, grid: &TimeGrid) -> Result<InversionSignal, DynamicsError> {
    simulate(&limit(), params, &FieldState::Coherent { n_coh }, grid)
}

/// Level the damped signal relaxes to.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Baseline {
    /// Mean of the undamped samples over the whole window.
    #[default]
    LongTimeMean,
    Explicit(f64),
}

/// `b + (w − b)·e^{−t/T_cav}` applied to raw samples.
pub fn damp_samples(times: &[f64], samples: &[f64], t_cav: f64, b: f64) -> Vec<f64> {
    times.iter().zip(samples).map(|(t, w)| b + (w - b) * (-t / t_cav).exp()).collect()
}

/// `w_d(t) = b + (w(t) − b)·e^{−t/T_cav}`.
pub fn apply_damping(signal: &InversionSignal, t_cav: f64, baseline: Baseline) -> Result<InversionSignal, DynamicsError> {
    if !(t_cav > 0.0) {
        return Err(DynamicsError::NonPositiveLifetime(t_cav));
    }
    let b = match baseline {
        Baseline::LongTimeMean => signal.mean(),
        Baseline::Explicit(v) => v,
    };
    Ok(InversionSignal {
        samples: damp_samples(&signal.times(), &signal.samples, t_cav, b),
        damped: true,
        ..signal.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::FreqConvention;
    use std::f64::consts::PI;

    fn angular(g_khz: f64) -> crate::params::ParamsBuilder {
        PhysicalParams::builder(g_khz).convention(FreqConvention::Angular)
    }

    #[test]
    fn grid_window_counts() {
        assert_eq!(TimeGrid::window(100.0, 0.25).unwrap().count, 401);
        assert_eq!(TimeGrid::window(50000.0, 0.5).unwrap().count, 100001);
        assert!(TimeGrid::new(0.0, 0.0, 3).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn irreducible_vacuum_examples() {
        let p = angular(1000.0).build().unwrap();
        let g = p.g();
        let grid = TimeGrid::new(0.0, PI / (2.0 * g), 2).unwrap();
        let w = w_vacuum_irreducible(&p, 1.0, &grid).unwrap();
        assert_eq!(w.samples[0], 0.5);
        assert!((w.samples[1] + 0.5).abs() < 1e-15);

        // Δ = 2g: Ω_R = g√2, amplitude ½
        let p = angular(1000.0).delta_khz(2000.0).build().unwrap();
        let grid = TimeGrid::new(PI / (2.0 * g * 2f64.sqrt()), 1.0, 1).unwrap();
        let w = w_vacuum_irreducible(&p, 1.0, &grid).unwrap();
        assert!(w.samples[0].abs() < 1e-15);
    }

    #[test]
    fn irreducible_rejects_bad_zeta() {
        let p = angular(47.0).build().unwrap();
        let grid = TimeGrid::window(1.0, 0.5).unwrap();
        for z in [0.0, 1.5, f64::NAN] {
            assert!(matches!(w_vacuum_irreducible(&p, z, &grid), Err(DynamicsError::InvalidZeta(_))));
        }
    }

    #[test]
    fn reducible_single_oscillator() {
        let grid = TimeGrid::window(200.0, 0.1).unwrap();
        // Z_ω = 1: point mass at s = 1, independent of Z
        let p = PhysicalParams::builder(47.0).n_osc(1).vacuum(1.0, 1.0).build().unwrap();
        let irr = w_vacuum_irreducible(&p, 1.0, &grid).unwrap();
        assert_eq!(w_vacuum_reducible(&p, &grid).unwrap().samples, irr.samples);

        // Z_ω = Z = ½: only s = 1 with weight ½ and occupation 1/Z = 2
        let p = PhysicalParams::builder(47.0).n_osc(1).vacuum(0.5, 0.5).build().unwrap();
        let w = w_vacuum_reducible(&p, &grid).unwrap();
        let g = p.g();
        for (t, w) in grid.times().iter().zip(&w.samples) {
            let s = (2f64.sqrt() * g * t).sin();
            assert!((w - (0.5 - 0.5 * s * s)).abs() < 1e-14);
        }
    }

    #[test]
    fn limit_matches_irreducible_at_unit_chi() {
        let p = PhysicalParams::builder(47.0).build().unwrap();
        let grid = TimeGrid::window(100.0, 0.25).unwrap();
        assert_eq!(
            w_vacuum_limit(&p, &grid).unwrap().samples,
            w_vacuum_irreducible(&p, 1.0, &grid).unwrap().samples
        );
        let t = PI / (2.0 * p.g());
        let w = w_vacuum_limit(&p, &TimeGrid::new(t, 1.0, 1).unwrap()).unwrap();
        assert!((w.samples[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn ground_state_is_constant() {
        let grid = TimeGrid::new(0.0, 1000.0, 2).unwrap();
        assert_eq!(w_ground_state(&grid).samples, [-0.5, -0.5]);
    }

    #[test]
    fn thermal_initial_value() {
        let p = PhysicalParams::builder(47.0).n_osc(280).vacuum(0.1, 0.1).p_plus(0.99).build().unwrap();
        let grid = TimeGrid::window(1.0, 0.5).unwrap();
        let w = w_thermal_reducible(&p, 0.05, &grid).unwrap();
        assert!((w.samples[0] - 0.49).abs() < 1e-15);
        let w = w_thermal_limit(&p, 0.05, &grid).unwrap();
        assert!((w.samples[0] - 0.49).abs() < 1e-15);
    }

    #[test]
    fn reduction_chain_is_exact() {
        let grid = TimeGrid::window(300.0, 0.25).unwrap();
        let p = PhysicalParams::builder(47.0).n_osc(280).vacuum(0.1, 0.1).build().unwrap();
        let vac = w_vacuum_reducible(&p, &grid).unwrap().samples;
        assert_eq!(w_thermal_reducible(&p, 0.0, &grid).unwrap().samples, vac);
        assert_eq!(w_coherent_reducible(&p, 0.0, &grid).unwrap().samples, vac);
        let vac = w_vacuum_limit(&p, &grid).unwrap().samples;
        assert_eq!(w_thermal_limit(&p, 0.0, &grid).unwrap().samples, vac);
        assert_eq!(w_coherent_limit(&p, 0.0, &grid).unwrap().samples, vac);
    }

    #[test]
    fn unit_occupation_is_independent_of_n() {
        let grid = TimeGrid::window(150.0, 0.25).unwrap();
        let states = [FieldState::Vacuum, FieldState::Thermal { n_bar: 0.3 }, FieldState::Coherent { n_coh: 0.85 }];
        let irr = Irreducible { zeta: 1.0, tail_eps: DEFAULT_TAIL_EPS };
        for state in states {
            let base = PhysicalParams::builder(47.0).p_plus(0.97).build().unwrap();
            let want = simulate(&irr, &base, &state, &grid).unwrap().samples;
            for n in [1, 7] {
                let p = base.with_n_osc(crate::params::Oscillators::Finite(n)).unwrap();
                assert_eq!(simulate(&reducible(), &p, &state, &grid).unwrap().samples, want, "N={n} {state:?}");
            }
        }
    }

    #[test]
    fn coherent_limit_photon_mean() {
        // χ_ω = ½: Poisson mean n_coh·χ_ω
        let p = PhysicalParams::builder(47.0).vacuum(1.0, 0.5).build().unwrap();
        let lines = limit().lines(&p, &FieldState::Coherent { n_coh: 0.8 }).unwrap();
        let w0 = -lines.terms[0].weight;
        assert!((w0 - (-0.4f64).exp()).abs() < 1e-15);
        assert_eq!(lines.terms[0].occupancy, 0.5);
        assert_eq!(lines.terms[1].occupancy, 1.0);
    }

    #[test]
    fn damping_examples() {
        let p = PhysicalParams::builder(47.0).build().unwrap();
        let grid = TimeGrid::window(100.0, 0.25).unwrap();
        let w = w_vacuum_limit(&p, &grid).unwrap();
        let d = apply_damping(&w, 20.0, Baseline::LongTimeMean).unwrap();
        assert_eq!(d.samples[0], w.samples[0]);
        assert!(d.damped);
        let b = w.mean();
        assert!((d.samples.last().unwrap() - b).abs() < 0.01);
        let g = w_ground_state(&grid);
        assert_eq!(apply_damping(&g, 5.0, Baseline::LongTimeMean).unwrap().samples, g.samples);
        let e = apply_damping(&w, 1e-3, Baseline::Explicit(0.1)).unwrap();
        assert!((e.samples[400] - 0.1).abs() < 1e-15);
        for t in [0.0, -1.0] {
            assert!(matches!(apply_damping(&w, t, Baseline::LongTimeMean), Err(DynamicsError::NonPositiveLifetime(_))));
        }
    }

    #[test]
    fn large_detuning_amplitude_bound() {
        let p = PhysicalParams::builder(47.0).delta_khz(20.0 * 47.0).build().unwrap();
        let g = p.g();
        let d = p.delta();
        let grid = TimeGrid::window(200.0, 0.01).unwrap();
        let w = w_vacuum_limit(&p, &grid).unwrap();
        let max = w.samples.iter().cloned().fold(f64::MIN, f64::max);
        let min = w.samples.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max - min <= 2.0 * g * g / (d * d / 4.0 + g * g));
    }
}
