//! Merging of config files and flags into a scenario.

use std::path::Path;

use rabi_core::dynamics::{Baseline, ModelOptions};
use rabi_core::params::{normalize, parse_config, FieldState, RawConfig, PARAM_KEYS};
use rabi_core::scenario::Scenario;

use crate::CliError;

pub const KEY_MODEL: &str = "model";
pub const KEY_WEIGHTS: &str = "weights";
pub const KEY_STATE: &str = "state";
pub const KEY_NBAR: &str = "nbar";
pub const KEY_N_COH: &str = "n_coh";
pub const KEY_T_MAX: &str = "t_max_us";
pub const KEY_DT: &str = "dt_us";
pub const KEY_ZETA: &str = "zeta";
pub const KEY_BASELINE: &str = "baseline";

const SCENARIO_KEYS: [&str; 9] =
    [KEY_MODEL, KEY_WEIGHTS, KEY_STATE, KEY_NBAR, KEY_N_COH, KEY_T_MAX, KEY_DT, KEY_ZETA, KEY_BASELINE];

/// Config file contents, if any, with flag values layered on top.
pub fn merged(file: Option<&Path>, flags: &[(&str, Option<String>)]) -> Result<RawConfig, CliError> {
    let mut raw = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => RawConfig::new(),
    };
    for key in raw.keys() {
        if !PARAM_KEYS.contains(&key.as_str()) && !SCENARIO_KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
    }
    for (key, value) in flags {
        if let Some(v) = value {
            raw.insert(key.to_string(), v.clone());
        }
    }
    Ok(raw)
}

fn number(raw: &RawConfig, key: &str) -> Result<Option<f64>, CliError> {
    raw.get(key)
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Config(format!("cannot parse value `{v}` for key `{key}`")))
        })
        .transpose()
}

fn required(raw: &RawConfig, key: &str, for_what: &str) -> Result<f64, CliError> {
    number(raw, key)?.ok_or_else(|| CliError::Config(format!("missing required key `{key}` for {for_what}")))
}

pub fn field_state(raw: &RawConfig) -> Result<FieldState, CliError> {
    let kind = raw.get(KEY_STATE).map(String::as_str).unwrap_or("vacuum");
    let state = match kind {
        "vacuum" => Ok(FieldState::Vacuum),
        "thermal" => FieldState::thermal(required(raw, KEY_NBAR, "state = thermal")?),
        "coherent" => FieldState::coherent(required(raw, KEY_N_COH, "state = coherent")?),
        other => {
            return Err(CliError::Config(format!(
                "invalid value `{other}` for key `{KEY_STATE}` (vacuum, thermal, coherent)"
            )))
        }
    };
    state.map_err(|e| CliError::Config(e.to_string()))
}

/// Registry name from `model` and `weights`.
pub fn model_name(raw: &RawConfig) -> Result<String, CliError> {
    let model = raw.get(KEY_MODEL).map(String::as_str).unwrap_or("irreducible");
    match raw.get(KEY_WEIGHTS).map(String::as_str) {
        None | Some("binomial") => Ok(model.to_string()),
        Some("gaussian") if model == "reducible" => Ok("reducible-gaussian".into()),
        Some("gaussian") => Err(CliError::Config(format!(
            "key `{KEY_WEIGHTS}` = gaussian requires model = reducible, got `{model}`"
        ))),
        Some(other) => Err(CliError::Config(format!(
            "invalid value `{other}` for key `{KEY_WEIGHTS}` (binomial, gaussian)"
        ))),
    }
}

pub fn baseline(raw: &RawConfig) -> Result<Baseline, CliError> {
    match raw.get(KEY_BASELINE).map(String::as_str) {
        None | Some("mean") => Ok(Baseline::LongTimeMean),
        Some(_) => Ok(Baseline::Explicit(number(raw, KEY_BASELINE)?.expect("key present"))),
    }
}

pub fn scenario(raw: &RawConfig) -> Result<Scenario, CliError> {
    let mut raw = raw.clone();
    raw.entry("g_khz".into()).or_insert_with(|| "47".into());
    let params = normalize(&raw).map_err(|e| CliError::Config(e.to_string()))?;
    let t_max = number(&raw, KEY_T_MAX)?.unwrap_or(100.0);
    let dt = number(&raw, KEY_DT)?.unwrap_or(0.25);
    if !(t_max > 0.0) {
        return Err(CliError::Config(format!("key `{KEY_T_MAX}` must be positive, got {t_max}")));
    }
    if !(dt > 0.0 && dt <= t_max) {
        return Err(CliError::Config(format!("key `{KEY_DT}` must lie in (0, {t_max}], got {dt}")));
    }
    let model = model_name(&raw)?;
    if model.starts_with("reducible") && params.n_osc().finite().is_none() {
        return Err(CliError::Config(format!("missing required key `N` for model = {model}")));
    }
    let mut scenario = Scenario::new(&model, field_state(&raw)?, params, t_max, dt);
    scenario.baseline = baseline(&raw)?;
    if let Some(zeta) = number(&raw, KEY_ZETA)? {
        scenario.options = ModelOptions { zeta, ..ModelOptions::default() };
    }
    Ok(scenario)
}
