//! Runnable scenarios and the named figure presets.

use crate::dynamics::{apply_damping, simulate, Baseline, DynamicsError, InversionSignal, ModelOptions, ModelRegistry, TimeGrid};
use crate::params::{FieldState, FreqConvention, PhysicalParams};

/// One signal to compute: model, field, parameters, window and damping.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Registry name of the model.
    pub model: String,
    pub state: FieldState,
    pub params: PhysicalParams,
    pub options: ModelOptions,
    pub t_max: f64,
    pub dt: f64,
    /// Apply `params.t_cav()` when present.
    pub damping: bool,
    pub baseline: Baseline,
}

impl Scenario {
    pub fn new(model: &str, state: FieldState, params: PhysicalParams, t_max: f64, dt: f64) -> Self {
        Scenario {
            model: model.to_string(),
            state,
            params,
            options: ModelOptions::default(),
            t_max,
            dt,
            damping: true,
            baseline: Baseline::LongTimeMean,
        }
    }

    pub fn grid(&self) -> Result<TimeGrid, DynamicsError> {
        if !(self.t_max > 0.0) {
            return Err(DynamicsError::InvalidGrid(format!("t_max = {} must be positive", self.t_max)));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_max) {
            return Err(DynamicsError::InvalidGrid(format!("dt = {} must lie in (0, t_max]", self.dt)));
        }
        TimeGrid::window(self.t_max, self.dt)
    }

    pub fn run(&self, registry: &ModelRegistry) -> Result<InversionSignal, DynamicsError> {
        let model = registry.create(&self.model, &self.options)?;
        let signal = simulate(model.as_ref(), &self.params, &self.state, &self.grid()?)?;
        match self.params.t_cav() {
            Some(t) if self.damping => apply_damping(&signal, t, self.baseline),
            _ => Ok(signal),
        }
    }
}

/// A named curve inside a preset.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: &'static str,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub curves: Vec<Curve>,
}

pub const PRESET_NAMES: [&str; 11] =
    ["fig1", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig2"];

const G_KHZ: f64 = 47.0;
const Z: f64 = 0.1;
const DT: f64 = 0.25;
const WINDOW: f64 = 100.0;

fn base(p_plus: f64) -> crate::params::ParamsBuilder {
    PhysicalParams::builder(G_KHZ).convention(FreqConvention::Cyclic).p_plus(p_plus)
}

fn curve(name: &'static str, model: &str, state: FieldState, params: PhysicalParams, t_max: f64, dt: f64) -> Curve {
    Curve { name, scenario: Scenario::new(model, state, params, t_max, dt) }
}

/// Parameter sets behind the published figures. `fig2` is the thermal
/// photon distribution and has no time signal, so it yields no curves.
pub fn preset(name: &str) -> Option<Preset> {
    let thermal = FieldState::Thermal { n_bar: 0.05 };
    let ok = |b: crate::params::ParamsBuilder| b.build().expect("preset parameters are valid");
    let reducible = |n: u64, p_plus: f64| base(p_plus).n_osc(n).vacuum(Z, Z);
    let curves = match name {
        "fig1" => vec![
            curve("tcav220", "irreducible", thermal, ok(base(0.99).t_cav(220.0)), WINDOW, DT),
            curve("tcav45", "irreducible", thermal, ok(base(0.99).t_cav(45.0)), WINDOW, DT),
        ],
        "fig2" => vec![],
        "fig3" => vec![
            curve("ideal", "reducible", thermal, ok(reducible(280, 0.99)), WINDOW, DT),
            curve("tcav220", "reducible", thermal, ok(reducible(280, 0.99).t_cav(220.0)), WINDOW, DT),
        ],
        "fig4" => vec![curve("ideal", "reducible", thermal, ok(reducible(280, 0.99)), 1500.0, DT)],
        "fig5" => vec![curve("tcav500", "reducible", thermal, ok(reducible(280, 0.99).t_cav(500.0)), 1500.0, DT)],
        "fig6" => vec![
            curve("short", "reducible", FieldState::Vacuum, ok(reducible(10_000, 1.0)), WINDOW, DT),
            curve("long", "reducible", FieldState::Vacuum, ok(reducible(10_000, 1.0)), 50_000.0, 0.5),
        ],
        "fig7" | "fig9" => {
            let (n_coh, p_plus) = if name == "fig7" { (0.4, 0.97) } else { (0.85, 0.99) };
            let state = FieldState::Coherent { n_coh };
            vec![
                curve("tcav50", "irreducible", state, ok(base(p_plus).t_cav(50.0)), WINDOW, DT),
                curve("tcav220", "irreducible", state, ok(base(p_plus).t_cav(220.0)), WINDOW, DT),
                curve("ideal", "irreducible", state, ok(base(p_plus)), WINDOW, DT),
            ]
        }
        "fig8" | "fig10" => {
            let (n_coh, p_plus) = if name == "fig8" { (0.4, 0.97) } else { (0.85, 0.99) };
            let state = FieldState::Coherent { n_coh };
            vec![
                curve("reducible_tcav220", "reducible", state, ok(reducible(420, p_plus).t_cav(220.0)), WINDOW, DT),
                curve("irreducible_tcav50", "irreducible", state, ok(base(p_plus).t_cav(50.0)), WINDOW, DT),
            ]
        }
        "fig11" => {
            let state = FieldState::Coherent { n_coh: 0.85 };
            vec![
                curve("irreducible", "irreducible", state, ok(base(1.0)), WINDOW, DT),
                curve("n200", "reducible", state, ok(reducible(200, 1.0)), WINDOW, DT),
                curve("n2000", "reducible", state, ok(reducible(2000, 1.0)), WINDOW, DT),
                curve("n10000", "reducible", state, ok(reducible(10_000, 1.0)), WINDOW, DT),
            ]
        }
        _ => return None,
    };
    Some(Preset { name: PRESET_NAMES.iter().find(|n| **n == name)?, curves })
}
