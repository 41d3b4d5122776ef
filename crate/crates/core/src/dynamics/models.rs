//! Inversion models as interchangeable strategies.

use std::collections::BTreeMap;
use std::fmt;

use crate::params::{FieldState, PhysicalParams};
use crate::weights::{
    binomial_weights, gaussian_approx_weights, poisson_weights, thermal_weights, GaussianForm,
    WeightTable, DEFAULT_TAIL_EPS,
};

use super::kernel::{RabiLines, Sector};
use super::DynamicsError;

/// Tag carried by every signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Irreducible,
    ReducibleFiniteN,
    LimitNInf,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Irreducible => "irreducible",
            ModelKind::ReducibleFiniteN => "reducible",
            ModelKind::LimitNInf => "limit",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Oscillator-number weighting used by the finite-`N` model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Binomial,
    Gaussian(GaussianForm),
}

/// Options shared by the model factories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    /// Occupation factor `𝒵` of the irreducible model.
    pub zeta: f64,
    /// Mass dropped from each weight table's tails.
    pub tail_eps: f64,
    pub gaussian_form: GaussianForm,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions { zeta: 1.0, tail_eps: DEFAULT_TAIL_EPS, gaussian_form: GaussianForm::Full }
    }
}

/// A closed-form inversion model.
///
/// Implementations only describe the field sectors; turning sectors into
/// Rabi lines and evaluating them is shared.
pub trait InversionModel: Send + Sync {
    fn name(&self) -> &str;
    fn kind(&self) -> ModelKind;
    fn sectors(&self, params: &PhysicalParams, state: &FieldState) -> Result<Vec<Sector>, DynamicsError>;

    fn lines(&self, params: &PhysicalParams, state: &FieldState) -> Result<RabiLines, DynamicsError> {
        let sectors = self.sectors(params, state)?;
        Ok(RabiLines::from_sectors(params.p_plus(), params.p_minus(), &sectors))
    }

    /// Inversion at arbitrary times.
    fn evaluate(&self, params: &PhysicalParams, state: &FieldState, times: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        Ok(self.lines(params, state)?.evaluate(params.g(), params.delta(), times))
    }
}

fn photon_table(state: &FieldState, mean_scale: f64, tail_eps: f64) -> Result<WeightTable, DynamicsError> {
    Ok(match *state {
        FieldState::Vacuum => poisson_weights(0.0, tail_eps)?,
        FieldState::Thermal { n_bar } => thermal_weights(n_bar, tail_eps)?,
        FieldState::Coherent { n_coh } => poisson_weights(n_coh * mean_scale, tail_eps)?,
    })
}

/// Standard single-mode model with occupation factor `𝒵`.
#[derive(Debug, Clone)]
pub struct Irreducible {
    pub zeta: f64,
    pub tail_eps: f64,
}

impl InversionModel for Irreducible {
    fn name(&self) -> &str {
        "irreducible"
    }

    fn kind(&self) -> ModelKind {
        ModelKind::Irreducible
    }

    fn sectors(&self, _params: &PhysicalParams, state: &FieldState) -> Result<Vec<Sector>, DynamicsError> {
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return Err(DynamicsError::InvalidZeta(self.zeta));
        }
        let photons = photon_table(state, self.zeta, self.tail_eps)?;
        Ok(vec![Sector { weight: 1.0, occupancy: self.zeta, photons }])
    }
}

/// Reducible representation with `N` oscillators: sectors are labelled by the
/// number `s` of oscillators in the resonant mode, occupation `s/(Z N)`.
#[derive(Debug, Clone)]
pub struct ReducibleFiniteN {
    pub weighting: Weighting,
    pub tail_eps: f64,
}

impl InversionModel for ReducibleFiniteN {
    fn name(&self) -> &str {
        match self.weighting {
            Weighting::Binomial => "reducible",
            Weighting::Gaussian(_) => "reducible-gaussian",
        }
    }

    fn kind(&self) -> ModelKind {
        ModelKind::ReducibleFiniteN
    }

    fn sectors(&self, params: &PhysicalParams, state: &FieldState) -> Result<Vec<Sector>, DynamicsError> {
        let n = params.n_osc().finite().ok_or(DynamicsError::RequiresFiniteN)?;
        let z_omega = params.z_omega();
        let z = params.z_max();
        let table = match self.weighting {
            Weighting::Binomial => binomial_weights(n, z_omega)?,
            Weighting::Gaussian(form) => gaussian_approx_weights(n, z_omega, form)?,
        }
        .trimmed(self.tail_eps);
        // thermal statistics do not depend on the sector
        let shared = match state {
            FieldState::Coherent { .. } => None,
            _ => Some(photon_table(state, 1.0, self.tail_eps)?),
        };
        let nf = n as f64;
        let mut sectors = Vec::with_capacity(table.len());
        for (s, b) in table.iter() {
            if s == 0 || b == 0.0 {
                continue;
            }
            let s_over_n = s as f64 / nf;
            let photons = match &shared {
                Some(p) => p.clone(),
                // |z|² s/N with |z|² = n_coh / Z
                None => photon_table(state, s_over_n / z, self.tail_eps)?,
            };
            sectors.push(Sector { weight: b, occupancy: s as f64 / (z * nf), photons });
        }
        Ok(sectors)
    }
}

/// `N → ∞` limit: a single sector of occupation `χ_ω = Z_ω / Z`.
#[derive(Debug, Clone)]
pub struct LimitNInf {
    pub tail_eps: f64,
}

impl InversionModel for LimitNInf {
    fn name(&self) -> &str {
        "limit"
    }

    fn kind(&self) -> ModelKind {
        ModelKind::LimitNInf
    }

    fn sectors(&self, params: &PhysicalParams, state: &FieldState) -> Result<Vec<Sector>, DynamicsError> {
        let chi = params.chi_omega();
        let photons = photon_table(state, chi, self.tail_eps)?;
        Ok(vec![Sector { weight: 1.0, occupancy: chi, photons }])
    }
}

type Factory = Box<dyn Fn(&ModelOptions) -> Box<dyn InversionModel> + Send + Sync>;

/// Name → model factory.
pub struct ModelRegistry {
    factories: BTreeMap<String, Factory>,
}

impl ModelRegistry {
    pub fn empty() -> Self {
        ModelRegistry { factories: BTreeMap::new() }
    }

    /// Registry with `irreducible`, `reducible`, `reducible-gaussian` and `limit`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("irreducible", |o| Box::new(Irreducible { zeta: o.zeta, tail_eps: o.tail_eps }));
        r.register("reducible", |o| {
            Box::new(ReducibleFiniteN { weighting: Weighting::Binomial, tail_eps: o.tail_eps })
        });
        r.register("reducible-gaussian", |o| {
            Box::new(ReducibleFiniteN { weighting: Weighting::Gaussian(o.gaussian_form), tail_eps: o.tail_eps })
        });
        r.register("limit", |o| Box::new(LimitNInf { tail_eps: o.tail_eps }));
        r
    }

    /// Adds or replaces a factory.
    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&ModelOptions) -> Box<dyn InversionModel> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn create(&self, name: &str, options: &ModelOptions) -> Result<Box<dyn InversionModel>, DynamicsError> {
        self.factories
            .get(name)
            .map(|f| f(options))
            .ok_or_else(|| DynamicsError::UnknownModel(name.to_string()))
    }
}

impl Default for ModelRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
