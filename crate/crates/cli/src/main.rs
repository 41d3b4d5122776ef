//! `rabi`: batch driver for inversion signals, spectra, fits and oracle checks.
//!
//! Exit codes: 0 success, 1 failed oracle identity, 2 configuration or input
//! error, 3 I/O failure, 4 fit did not converge, 5 truncation leak.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    NoConvergence(String),
    Leak(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::NoConvergence(_) => 4,
            CliError::Leak(_) => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::NoConvergence(m) => write!(f, "fit failed: {m}"),
            CliError::Leak(m) => write!(f, "truncation leak: {m}"),
            CliError::Failed(m) => write!(f, "verification failed: {m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "rabi", version, about = "Jaynes-Cummings inversion signals under reducible CCR representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute w(t) for one scenario or every curve of a preset.
    Simulate(SimulateArgs),
    /// Fit model parameters to `t_us,p_excited` data.
    Fit(FitArgs),
    /// Build the dense-matrix model and check its identities.
    Oracle(OracleArgs),
    /// Amplitude spectrum of a `t_us,w` series.
    Spectrum(SpectrumArgs),
}

/// Model and field flags; each maps to the config key with `-` replaced by `_`.
#[derive(Args, Debug, Clone, Default)]
struct ModelArgs {
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// irreducible | reducible | reducible-gaussian | limit
    #[arg(long)]
    model: Option<String>,
    /// binomial | gaussian (reducible model only)
    #[arg(long)]
    weights: Option<String>,
    /// Number of oscillators, or `inf`.
    #[arg(long = "N")]
    n_osc: Option<String>,
    #[arg(long = "Z")]
    z: Option<String>,
    #[arg(long)]
    z_omega: Option<String>,
    /// Coupling in kHz [default: 47].
    #[arg(long)]
    g_khz: Option<String>,
    #[arg(long)]
    delta_khz: Option<String>,
    /// cyclic | angular
    #[arg(long)]
    convention: Option<String>,
    /// vacuum | thermal | coherent
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    nbar: Option<String>,
    #[arg(long)]
    n_coh: Option<String>,
    #[arg(long)]
    p_plus: Option<String>,
    /// Cavity lifetime in µs; absent for an ideal cavity.
    #[arg(long)]
    tcav_us: Option<String>,
    /// Damping baseline: `mean` or a number.
    #[arg(long)]
    baseline: Option<String>,
    /// Irreducible representation scale 𝒵.
    #[arg(long)]
    zeta: Option<String>,
}

impl ModelArgs {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            (config::KEY_MODEL, self.model.clone()),
            (config::KEY_WEIGHTS, self.weights.clone()),
            ("N", self.n_osc.clone()),
            ("Z", self.z.clone()),
            ("z_omega", self.z_omega.clone()),
            ("g_khz", self.g_khz.clone()),
            ("delta_khz", self.delta_khz.clone()),
            ("convention", self.convention.clone()),
            (config::KEY_STATE, self.state.clone()),
            (config::KEY_NBAR, self.nbar.clone()),
            (config::KEY_N_COH, self.n_coh.clone()),
            ("p_plus", self.p_plus.clone()),
            ("tcav_us", self.tcav_us.clone()),
            (config::KEY_BASELINE, self.baseline.clone()),
            (config::KEY_ZETA, self.zeta.clone()),
        ]
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// End of the window in µs [default: 100].
    #[arg(long)]
    t_max_us: Option<String>,
    /// Step in µs [default: 0.25].
    #[arg(long)]
    dt_us: Option<String>,
    /// Emit `t_us,p_excited` instead of `t_us,w`.
    #[arg(long)]
    p_excited: bool,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Named figure preset (fig1..fig11); writes `<out-dir>/<preset>_<curve>.csv`.
    #[arg(long, conflicts_with = "out")]
    preset: Option<String>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Two-column `t_us,p_excited` CSV.
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated free parameters, each `name[=initial[:lower:upper]]`
    /// with name in NZ, tcav_us, p_plus, photons.
    #[arg(long, default_value = "NZ,tcav_us")]
    free: String,
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    /// Result CSV; printed after the summary when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long = "N", default_value_t = 2)]
    n_osc: usize,
    #[arg(long, default_value_t = 2)]
    modes: usize,
    /// Fock levels per mode.
    #[arg(long, default_value_t = 6)]
    fock: usize,
    #[arg(long = "Z", default_value_t = 0.5)]
    z: f64,
    /// Defaults to Z.
    #[arg(long)]
    z_omega: Option<f64>,
    #[arg(long, default_value_t = 47.0)]
    g_khz: f64,
    #[arg(long, default_value_t = 0.0)]
    delta_khz: f64,
    #[arg(long, default_value = "cyclic")]
    convention: String,
    /// Mean photon number of the displaced vacuum used for the overlap check.
    #[arg(long, default_value_t = 0.005)]
    n_coh: f64,
    #[arg(long, default_value_t = 200.0)]
    t_max_us: f64,
    #[arg(long, default_value_t = 0.25)]
    dt_us: f64,
    /// ladder-normalization | swapped-hat-projector | flipped-atomic-sign
    #[arg(long)]
    negative_control: Option<String>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    /// Uniformly sampled two-column CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Mirror the t ≥ 0 part about t = 0 before transforming.
    #[arg(long)]
    symmetrize: bool,
    /// Emit local maxima sorted by amplitude instead of the full spectrum.
    #[arg(long)]
    peaks: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Oracle(a) => commands::oracle(&a),
        Command::Spectrum(a) => commands::spectrum(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rabi: {e}");
            ExitCode::from(e.code())
        }
    }
}
