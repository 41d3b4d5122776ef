//! Physical and numerical parameters, their validation, and unit conversion.
//!
//! User-facing frequencies are given in kHz. Internally every frequency is an
//! angular frequency in rad/µs and every time is in µs.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Raw `key = value` configuration, ordered by key.
pub type RawConfig = BTreeMap<String, String>;

pub const KEY_G: &str = "g_khz";
pub const KEY_DELTA: &str = "delta_khz";
pub const KEY_N: &str = "N";
pub const KEY_Z: &str = "Z";
pub const KEY_Z_OMEGA: &str = "z_omega";
pub const KEY_P_PLUS: &str = "p_plus";
pub const KEY_P_MINUS: &str = "p_minus";
pub const KEY_T_CAV: &str = "tcav_us";
pub const KEY_CONVENTION: &str = "convention";

/// Every key understood by [`normalize`].
pub const PARAM_KEYS: [&str; 9] = [
    KEY_G,
    KEY_DELTA,
    KEY_N,
    KEY_Z,
    KEY_Z_OMEGA,
    KEY_P_PLUS,
    KEY_P_MINUS,
    KEY_T_CAV,
    KEY_CONVENTION,
];

const MIXTURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("cannot parse value `{value}` for key `{key}`")]
    Parse { key: String, value: String },
    #[error("value for key `{key}` out of range: {reason}")]
    OutOfRange { key: String, reason: String },
    #[error("inconsistent atomic mixture: p_plus + p_minus = {sum} (must be 1)")]
    InconsistentMixture { sum: f64 },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
}

impl ParamsError {
    fn out_of_range(key: &str, reason: impl Into<String>) -> Self {
        ParamsError::OutOfRange { key: key.to_string(), reason: reason.into() }
    }
}

/// How a frequency quoted in kHz maps onto an angular frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FreqConvention {
    /// `f` kHz is a cyclic frequency: ω = 2π f.
    #[default]
    Cyclic,
    /// `f` kHz is already angular: ω = f (in 10³ rad/s).
    Angular,
}

impl FreqConvention {
    /// Converts kHz into rad/µs.
    pub fn khz_to_rad_per_us(self, f_khz: f64) -> f64 {
        match self {
            FreqConvention::Cyclic => TAU * f_khz * 1e-3,
            FreqConvention::Angular => f_khz * 1e-3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FreqConvention::Cyclic => "cyclic",
            FreqConvention::Angular => "angular",
        }
    }
}

impl FromStr for FreqConvention {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cyclic" => Ok(FreqConvention::Cyclic),
            "angular" => Ok(FreqConvention::Angular),
            _ => Err(()),
        }
    }
}

/// Number of oscillators of the reducible representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Oscillators {
    Finite(u64),
    /// The `N → ∞` limit.
    #[default]
    Infinite,
}

impl Oscillators {
    pub fn finite(self) -> Option<u64> {
        match self {
            Oscillators::Finite(n) => Some(n),
            Oscillators::Infinite => None,
        }
    }
}

impl fmt::Display for Oscillators {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Oscillators::Finite(n) => write!(f, "{n}"),
            Oscillators::Infinite => f.write_str("inf"),
        }
    }
}

/// Validated physical parameters.
///
/// Invariants: `g > 0`, `0 < z_omega <= z_max <= 1`, `p_plus + p_minus = 1`,
/// `t_cav > 0` when present, `N >= 1` when finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    g_khz: f64,
    delta_khz: f64,
    convention: FreqConvention,
    g: f64,
    delta: f64,
    n_osc: Oscillators,
    z_max: f64,
    z_omega: f64,
    p_plus: f64,
    p_minus: f64,
    t_cav: Option<f64>,
}

impl PhysicalParams {
    pub fn builder(g_khz: f64) -> ParamsBuilder {
        ParamsBuilder::new(g_khz)
    }

    /// Renormalized coupling `g_ph` in rad/µs.
    pub fn g(&self) -> f64 {
        self.g
    }

    /// Detuning `Δ = ω₀ − ω` in rad/µs.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn g_khz(&self) -> f64 {
        self.g_khz
    }

    pub fn delta_khz(&self) -> f64 {
        self.delta_khz
    }

    pub fn convention(&self) -> FreqConvention {
        self.convention
    }

    pub fn n_osc(&self) -> Oscillators {
        self.n_osc
    }

    /// Invariant vacuum probability `Z`.
    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    /// Resonant-mode vacuum probability `Z_ω`.
    pub fn z_omega(&self) -> f64 {
        self.z_omega
    }

    /// Cut-off `χ_ω = Z_ω / Z`.
    pub fn chi_omega(&self) -> f64 {
        self.z_omega / self.z_max
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    /// Cavity photon lifetime in µs; `None` for an ideal cavity.
    pub fn t_cav(&self) -> Option<f64> {
        self.t_cav
    }

    /// Same parameters with a different oscillator number.
    pub fn with_n_osc(&self, n_osc: Oscillators) -> Result<Self, ParamsError> {
        if n_osc == Oscillators::Finite(0) {
            return Err(ParamsError::out_of_range(KEY_N, "N must be at least 1"));
        }
        Ok(PhysicalParams { n_osc, ..self.clone() })
    }

    /// Same parameters with a different atomic mixture.
    pub fn with_p_plus(&self, p_plus: f64) -> Result<Self, ParamsError> {
        check_probability(KEY_P_PLUS, p_plus)?;
        Ok(PhysicalParams { p_plus, p_minus: 1.0 - p_plus, ..self.clone() })
    }

    /// Same parameters with a different cavity lifetime.
    pub fn with_t_cav(&self, t_cav: Option<f64>) -> Result<Self, ParamsError> {
        check_lifetime(t_cav)?;
        Ok(PhysicalParams { t_cav, ..self.clone() })
    }

    /// Serializes to the flat config form. Re-normalizing the result yields
    /// bit-identical parameters.
    pub fn to_raw(&self) -> RawConfig {
        let mut raw = RawConfig::new();
        raw.insert(KEY_G.into(), fmt_f64(self.g_khz));
        raw.insert(KEY_DELTA.into(), fmt_f64(self.delta_khz));
        raw.insert(KEY_N.into(), self.n_osc.to_string());
        raw.insert(KEY_Z.into(), fmt_f64(self.z_max));
        raw.insert(KEY_Z_OMEGA.into(), fmt_f64(self.z_omega));
        raw.insert(KEY_P_PLUS.into(), fmt_f64(self.p_plus));
        raw.insert(KEY_P_MINUS.into(), fmt_f64(self.p_minus));
        raw.insert(
            KEY_T_CAV.into(),
            self.t_cav.map_or_else(|| "none".to_string(), fmt_f64),
        );
        raw.insert(KEY_CONVENTION.into(), self.convention.as_str().into());
        raw
    }

    /// Config-file text (`key = value` per line).
    pub fn to_config_string(&self) -> String {
        self.to_raw().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Short stable identifier of these parameters.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_config_string().as_bytes());
        hex::encode(&hash[..8])
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn check_probability(key: &str, p: f64) -> Result<(), ParamsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ParamsError::out_of_range(key, format!("{p} is not in [0, 1]")));
    }
    Ok(())
}

fn check_lifetime(t_cav: Option<f64>) -> Result<(), ParamsError> {
    match t_cav {
        Some(t) if !(t.is_finite() && t > 0.0) => {
            Err(ParamsError::out_of_range(KEY_T_CAV, format!("lifetime {t} must be positive")))
        }
        _ => Ok(()),
    }
}

/// Programmatic construction; runs the same validation as [`normalize`].
#[derive(Debug, Clone)]
pub struct ParamsBuilder {
    raw: RawConfig,
}

impl ParamsBuilder {
    pub fn new(g_khz: f64) -> Self {
        let mut raw = RawConfig::new();
        raw.insert(KEY_G.into(), fmt_f64(g_khz));
        ParamsBuilder { raw }
    }

    fn set(mut self, key: &str, value: String) -> Self {
        self.raw.insert(key.to_string(), value);
        self
    }

    pub fn delta_khz(self, delta: f64) -> Self {
        self.set(KEY_DELTA, fmt_f64(delta))
    }

    pub fn convention(self, c: FreqConvention) -> Self {
        self.set(KEY_CONVENTION, c.as_str().into())
    }

    pub fn n_osc(self, n: u64) -> Self {
        self.set(KEY_N, n.to_string())
    }

    /// Sets `Z` and `Z_ω`.
    pub fn vacuum(self, z_max: f64, z_omega: f64) -> Self {
        self.set(KEY_Z, fmt_f64(z_max)).set(KEY_Z_OMEGA, fmt_f64(z_omega))
    }

    pub fn p_plus(self, p: f64) -> Self {
        self.set(KEY_P_PLUS, fmt_f64(p))
    }

    pub fn t_cav(self, t: f64) -> Self {
        self.set(KEY_T_CAV, fmt_f64(t))
    }

    pub fn build(self) -> Result<PhysicalParams, ParamsError> {
        normalize(&self.raw)
    }
}

/// Parses config text: one `key = value` per line, `#` starts a comment.
pub fn parse_config(text: &str) -> Result<RawConfig, ParamsError> {
    let mut raw = RawConfig::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ParamsError::Syntax { line: idx + 1, text: line.to_string() })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ParamsError::Syntax { line: idx + 1, text: line.to_string() });
        }
        raw.insert(key.to_string(), value.trim().to_string());
    }
    Ok(raw)
}

fn parse_f64(raw: &RawConfig, key: &str) -> Result<Option<f64>, ParamsError> {
    raw.get(key)
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| ParamsError::Parse { key: key.into(), value: v.clone() })
        })
        .transpose()
}

/// Validates a raw configuration and converts it to internal units.
///
/// Keys not listed in [`PARAM_KEYS`] are ignored. Only `g_khz` is required;
/// defaults are `Δ = 0`, `N = ∞`, `Z = 1`, `Z_ω = Z`, `p₊ = 1`, ideal cavity
/// and the cyclic frequency convention.
pub fn normalize(raw: &RawConfig) -> Result<PhysicalParams, ParamsError> {
    let g_khz = parse_f64(raw, KEY_G)?.ok_or_else(|| ParamsError::MissingKey(KEY_G.into()))?;
    if g_khz <= 0.0 {
        return Err(ParamsError::out_of_range(KEY_G, "coupling must be positive"));
    }
    let delta_khz = parse_f64(raw, KEY_DELTA)?.unwrap_or(0.0);

    let convention = match raw.get(KEY_CONVENTION) {
        None => FreqConvention::default(),
        Some(v) => v
            .parse()
            .map_err(|_| ParamsError::Parse { key: KEY_CONVENTION.into(), value: v.clone() })?,
    };

    let n_osc = match raw.get(KEY_N).map(|v| v.trim()) {
        None => Oscillators::Infinite,
        Some(v) if v.eq_ignore_ascii_case("inf") || v.eq_ignore_ascii_case("infinite") => {
            Oscillators::Infinite
        }
        Some(v) => {
            let n: u64 = v
                .parse()
                .map_err(|_| ParamsError::Parse { key: KEY_N.into(), value: v.into() })?;
            if n == 0 {
                return Err(ParamsError::out_of_range(KEY_N, "N must be at least 1"));
            }
            Oscillators::Finite(n)
        }
    };

    let z_max = parse_f64(raw, KEY_Z)?.unwrap_or(1.0);
    if !(z_max > 0.0 && z_max <= 1.0) {
        return Err(ParamsError::out_of_range(KEY_Z, format!("{z_max} is not in (0, 1]")));
    }
    let z_omega = parse_f64(raw, KEY_Z_OMEGA)?.unwrap_or(z_max);
    if !(z_omega > 0.0 && z_omega <= 1.0) {
        return Err(ParamsError::out_of_range(KEY_Z_OMEGA, format!("{z_omega} is not in (0, 1]")));
    }
    if z_omega > z_max {
        return Err(ParamsError::out_of_range(
            KEY_Z_OMEGA,
            format!("chi_omega = {} exceeds 1 (z_omega > Z)", z_omega / z_max),
        ));
    }

    let p_plus = parse_f64(raw, KEY_P_PLUS)?;
    let p_minus = parse_f64(raw, KEY_P_MINUS)?;
    if let Some(p) = p_plus {
        check_probability(KEY_P_PLUS, p)?;
    }
    if let Some(p) = p_minus {
        check_probability(KEY_P_MINUS, p)?;
    }
    let (p_plus, p_minus) = match (p_plus, p_minus) {
        (None, None) => (1.0, 0.0),
        (Some(p), None) => (p, 1.0 - p),
        (None, Some(m)) => (1.0 - m, m),
        (Some(p), Some(m)) => {
            if ((p + m) - 1.0).abs() > MIXTURE_TOL {
                return Err(ParamsError::InconsistentMixture { sum: p + m });
            }
            (p, m)
        }
    };

    let t_cav = match raw.get(KEY_T_CAV).map(|v| v.trim()) {
        None => None,
        Some(v) if v.eq_ignore_ascii_case("none") || v.eq_ignore_ascii_case("inf") => None,
        Some(_) => parse_f64(raw, KEY_T_CAV)?,
    };
    check_lifetime(t_cav)?;

    Ok(PhysicalParams {
        g_khz,
        delta_khz,
        convention,
        g: convention.khz_to_rad_per_us(g_khz),
        delta: convention.khz_to_rad_per_us(delta_khz),
        n_osc,
        z_max,
        z_omega,
        p_plus,
        p_minus,
        t_cav,
    })
}

/// Tagged initial field condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldState {
    Vacuum,
    /// Thermal mixture with mean photon number `n_bar`.
    Thermal { n_bar: f64 },
    /// Coherent state with mean photon number `n_coh` (physical amplitude `√n_coh`).
    Coherent { n_coh: f64 },
}

impl FieldState {
    pub fn thermal(n_bar: f64) -> Result<Self, ParamsError> {
        if !(n_bar.is_finite() && n_bar >= 0.0) {
            return Err(ParamsError::out_of_range("nbar", format!("{n_bar} must be >= 0")));
        }
        Ok(FieldState::Thermal { n_bar })
    }

    pub fn coherent(n_coh: f64) -> Result<Self, ParamsError> {
        if !(n_coh.is_finite() && n_coh >= 0.0) {
            return Err(ParamsError::out_of_range("n_coh", format!("{n_coh} must be >= 0")));
        }
        Ok(FieldState::Coherent { n_coh })
    }

    pub fn kind_str(&self) -> &'static str {
        match self {
            FieldState::Vacuum => "vacuum",
            FieldState::Thermal { .. } => "thermal",
            FieldState::Coherent { .. } => "coherent",
        }
    }
}
