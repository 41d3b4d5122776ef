//! Envelopes, spectra and least-squares fitting of inversion signals.

pub mod envelope;
pub mod fit;
pub mod spectrum;

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::params::ParamsError;

pub use envelope::{envelope, EnvelopeOptions, EnvelopeReport, Revival};
pub use fit::{fit, levenberg_marquardt, Bounded, FitResult, FitTemplate, FreeParam, LmOptions, LmOutcome};
pub use spectrum::{spectrum, Peak, Spectrum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("need at least {min_periods} periods at {min_per} points each, got {periods:.2} periods at {points_per_period:.2}", min_periods = envelope::MIN_PERIODS, min_per = envelope::MIN_POINTS_PER_PERIOD)]
    InsufficientSampling { periods: f64, points_per_period: f64 },
    #[error("need at least {need} data points, got {have}")]
    TooFewPoints { have: usize, need: usize },
    #[error("no convergence after {iterations} iterations (rss {rss:e})")]
    NoConvergence { iterations: usize, rss: f64 },
    #[error("singular Jacobian")]
    SingularJacobian,
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Params(#[from] ParamsError),
}
