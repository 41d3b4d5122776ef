//! Damped least squares (Levenberg–Marquardt) and the inversion-model fit.

use nalgebra::{DMatrix, DVector};

use super::AnalysisError;
use crate::dynamics::{damp_samples, InversionModel, ModelRegistry, ModelOptions};
use crate::params::{FieldState, Oscillators, PhysicalParams};
use crate::sum::pairwise_sum;

/// A free parameter with its starting value and box bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounded {
    pub initial: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Forward-difference step relative to the parameter magnitude.
    pub relative_step: f64,
    /// Stop when an accepted step lowers the residual by less than this fraction.
    pub ftol: f64,
    /// Stop when the step is this small relative to the parameters.
    pub xtol: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { max_iterations: 200, relative_step: 1e-6, ftol: 1e-10, xtol: 1e-10, initial_lambda: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Residual sum of squares after each accepted step, starting with the
    /// initial guess.
    pub rss_history: Vec<f64>,
}

fn clamp(theta: &mut [f64], bounds: &[Bounded]) {
    for (x, b) in theta.iter_mut().zip(bounds) {
        *x = x.clamp(b.lower, b.upper);
    }
}

fn rss_of(r: &[f64]) -> f64 {
    pairwise_sum(&r.iter().map(|x| x * x).collect::<Vec<_>>())
}

/// Minimizes `Σ (model(θ)ᵢ − yᵢ)²` over the box `bounds`.
pub fn levenberg_marquardt<F>(
    model: F,
    y: &[f64],
    bounds: &[Bounded],
    options: &LmOptions,
) -> Result<LmOutcome, AnalysisError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, AnalysisError>,
{
    let p = bounds.len();
    let m = y.len();
    if p == 0 {
        return Err(AnalysisError::InvalidBounds("no free parameters".into()));
    }
    if m < 2 * p {
        return Err(AnalysisError::TooFewPoints { have: m, need: 2 * p });
    }
    for b in bounds {
        if !(b.lower <= b.upper) {
            return Err(AnalysisError::InvalidBounds(format!("[{}, {}]", b.lower, b.upper)));
        }
    }
    let residuals = |theta: &[f64]| -> Result<Vec<f64>, AnalysisError> {
        let f = model(theta)?;
        Ok(f.iter().zip(y).map(|(a, b)| a - b).collect())
    };
    let jacobian = |theta: &[f64], r0: &[f64]| -> Result<DMatrix<f64>, AnalysisError> {
        let mut jac = DMatrix::zeros(m, p);
        for j in 0..p {
            let mut h = options.relative_step * theta[j].abs().max(1e-3);
            // step inward at an upper bound
            if theta[j] + h > bounds[j].upper {
                h = -h;
            }
            let mut shifted = theta.to_vec();
            shifted[j] += h;
            let r = residuals(&shifted)?;
            for i in 0..m {
                jac[(i, j)] = (r[i] - r0[i]) / h;
            }
        }
        Ok(jac)
    };

    let mut theta: Vec<f64> = bounds.iter().map(|b| b.initial).collect();
    clamp(&mut theta, bounds);
    let mut r = residuals(&theta)?;
    let mut rss = rss_of(&r);
    let mut history = vec![rss];
    let mut lambda = options.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        let jac = jacobian(&theta, &r)?;
        if jac.column_iter().any(|c| c.norm() == 0.0) {
            return Err(AnalysisError::SingularJacobian);
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * DVector::from_column_slice(&r);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..p {
                a[(k, k)] += lambda * jtj[(k, k)];
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&grad))) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
            clamp(&mut trial, bounds);
            let r_trial = residuals(&trial)?;
            let rss_trial = rss_of(&r_trial);
            if rss_trial < rss {
                let moved: f64 = theta.iter().zip(&trial).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let scale: f64 = theta.iter().map(|x| x * x).sum::<f64>().sqrt();
                let small_gain = rss - rss_trial <= options.ftol * rss;
                theta = trial;
                r = r_trial;
                rss = rss_trial;
                history.push(rss);
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if small_gain || moved <= options.xtol * (scale + options.xtol) {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        // no downhill step left at any damping: stationary point
        if !accepted || converged {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(AnalysisError::NoConvergence { iterations, rss });
    }

    let jac = jacobian(&theta, &r)?;
    let jtj = jac.transpose() * &jac;
    let cov = jtj.try_inverse().ok_or(AnalysisError::SingularJacobian)?;
    let sigma2 = rss / (m - p) as f64;
    let std_errors = (0..p).map(|k| (cov[(k, k)] * sigma2).max(0.0).sqrt()).collect();
    Ok(LmOutcome { values: theta, std_errors, rss, iterations, converged, rss_history: history })
}

/// Parameters the inversion fit can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FreeParam {
    /// Product `N·Z`; `N = NZ/Z` is interpolated linearly between integers.
    NZ,
    TCav,
    PPlus,
    /// `n̄` for a thermal field or `n_coh` for a coherent one.
    Photons,
}

impl FreeParam {
    pub fn as_str(self) -> &'static str {
        match self {
            FreeParam::NZ => "NZ",
            FreeParam::TCav => "tcav_us",
            FreeParam::PPlus => "p_plus",
            FreeParam::Photons => "photons",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "NZ" | "nz" => Some(FreeParam::NZ),
            "tcav_us" | "tcav-us" | "tcav" | "T_cav" => Some(FreeParam::TCav),
            "p_plus" | "p-plus" => Some(FreeParam::PPlus),
            "photons" | "nbar" | "n_coh" | "n-coh" => Some(FreeParam::Photons),
            _ => None,
        }
    }

    /// Box used when the caller does not supply one.
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            FreeParam::NZ => (0.1, 1e6),
            FreeParam::TCav => (1e-3, 1e7),
            FreeParam::PPlus => (0.0, 1.0),
            FreeParam::Photons => (0.0, 50.0),
        }
    }
}

/// What to fit: a registered model, the fixed parameters, the field state
/// and the damping baseline. Damping is applied when the parameters carry a
/// cavity lifetime or `TCav` is free.
pub struct FitTemplate<'a> {
    pub model: &'a dyn InversionModel,
    pub params: PhysicalParams,
    pub state: FieldState,
    /// Fixed baseline; `None` uses the mean of the undamped model.
    pub baseline: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub names: Vec<&'static str>,
    pub free: Vec<FreeParam>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub rss_history: Vec<f64>,
}

impl FitResult {
    pub fn value(&self, p: FreeParam) -> Option<f64> {
        self.free.iter().position(|&q| q == p).map(|i| self.values[i])
    }

    pub fn std_error(&self, p: FreeParam) -> Option<f64> {
        self.free.iter().position(|&q| q == p).map(|i| self.std_errors[i])
    }
}

impl FitTemplate<'_> {
    fn with_state(&self, photons: f64) -> FieldState {
        match self.state {
            FieldState::Vacuum => FieldState::Vacuum,
            FieldState::Thermal { .. } => FieldState::Thermal { n_bar: photons },
            FieldState::Coherent { .. } => FieldState::Coherent { n_coh: photons },
        }
    }

    fn photons(&self) -> f64 {
        match self.state {
            FieldState::Vacuum => 0.0,
            FieldState::Thermal { n_bar } => n_bar,
            FieldState::Coherent { n_coh } => n_coh,
        }
    }

    /// Inversion at `times` with the free parameters set to `theta`.
    pub fn evaluate(&self, free: &[FreeParam], theta: &[f64], times: &[f64]) -> Result<Vec<f64>, AnalysisError> {
        let mut params = self.params.clone();
        let mut state = self.state;
        let mut nz = None;
        let mut t_cav = params.t_cav();
        for (&p, &v) in free.iter().zip(theta) {
            match p {
                FreeParam::NZ => nz = Some(v),
                FreeParam::TCav => t_cav = Some(v),
                FreeParam::PPlus => params = params.with_p_plus(v)?,
                FreeParam::Photons => state = self.with_state(v),
            }
        }
        let undamped = match nz {
            None => self.model.evaluate(&params, &state, times)?,
            Some(nz) => {
                let n_real = (nz / params.z_max()).max(1.0);
                let lo = n_real.floor();
                let frac = n_real - lo;
                let at = |n: f64| -> Result<Vec<f64>, AnalysisError> {
                    let p = params.with_n_osc(Oscillators::Finite(n as u64))?;
                    Ok(self.model.evaluate(&p, &state, times)?)
                };
                let a = at(lo)?;
                if frac == 0.0 {
                    a
                } else {
                    let b = at(lo + 1.0)?;
                    a.iter().zip(&b).map(|(x, y)| x + frac * (y - x)).collect()
                }
            }
        };
        Ok(match t_cav {
            Some(t) if t > 0.0 => {
                let b = self.baseline.unwrap_or_else(|| pairwise_sum(&undamped) / undamped.len() as f64);
                damp_samples(times, &undamped, t, b)
            }
            Some(t) => return Err(crate::dynamics::DynamicsError::NonPositiveLifetime(t).into()),
            None => undamped,
        })
    }

    /// Starting value taken from the template for `p`.
    pub fn current(&self, p: FreeParam) -> f64 {
        match p {
            FreeParam::NZ => match self.params.n_osc() {
                Oscillators::Finite(n) => n as f64 * self.params.z_max(),
                Oscillators::Infinite => 28.0,
            },
            FreeParam::TCav => self.params.t_cav().unwrap_or(200.0),
            FreeParam::PPlus => self.params.p_plus(),
            FreeParam::Photons => self.photons(),
        }
    }
}

/// Fits `(t µs, P_excited)` data, mapped to `w = P_e − ½`.
pub fn fit(
    data: &[(f64, f64)],
    template: &FitTemplate<'_>,
    free: &[(FreeParam, Bounded)],
    options: &LmOptions,
) -> Result<FitResult, AnalysisError> {
    if data.is_empty() {
        return Err(AnalysisError::TooFewPoints { have: 0, need: 2 * free.len().max(1) });
    }
    let times: Vec<f64> = data.iter().map(|d| d.0).collect();
    let w: Vec<f64> = data.iter().map(|d| d.1 - 0.5).collect();
    let kinds: Vec<FreeParam> = free.iter().map(|f| f.0).collect();
    let bounds: Vec<Bounded> = free.iter().map(|f| f.1.clone()).collect();
    let out = levenberg_marquardt(|theta| template.evaluate(&kinds, theta, &times), &w, &bounds, options)?;
    Ok(FitResult {
        names: kinds.iter().map(|k| k.as_str()).collect(),
        free: kinds,
        values: out.values,
        std_errors: out.std_errors,
        rss: out.rss,
        iterations: out.iterations,
        converged: out.converged,
        rss_history: out.rss_history,
    })
}

/// Convenience: build the model by registry name.
pub fn registry_model(name: &str) -> Result<Box<dyn InversionModel>, AnalysisError> {
    Ok(ModelRegistry::builtin().create(name, &ModelOptions::default())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_recovered() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.5 * (-0.7 * t).exp()).collect();
        let bounds = [
            Bounded { initial: 1.0, lower: 0.0, upper: 10.0 },
            Bounded { initial: 0.2, lower: 0.0, upper: 5.0 },
        ];
        let out = levenberg_marquardt(
            |th| Ok(t.iter().map(|t| th[0] * (-th[1] * t).exp()).collect()),
            &y,
            &bounds,
            &LmOptions::default(),
        )
        .unwrap();
        assert!(out.converged);
        assert!((out.values[0] - 2.5).abs() < 1e-6);
        assert!((out.values[1] - 0.7).abs() < 1e-6);
        assert!(out.rss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn bounds_are_respected() {
        let y = vec![3.0; 10];
        let bounds = [Bounded { initial: 0.5, lower: 0.0, upper: 1.0 }];
        let out = levenberg_marquardt(|th| Ok(vec![th[0]; 10]), &y, &bounds, &LmOptions::default()).unwrap();
        assert_eq!(out.values[0], 1.0);
    }

    #[test]
    fn flat_direction_is_singular() {
        let y = vec![1.0; 10];
        let bounds = [
            Bounded { initial: 0.5, lower: -5.0, upper: 5.0 },
            Bounded { initial: 0.5, lower: -5.0, upper: 5.0 },
        ];
        let r = levenberg_marquardt(|th| Ok(vec![th[0]; 10]), &y, &bounds, &LmOptions::default());
        assert!(matches!(r, Err(AnalysisError::SingularJacobian)));
    }

    #[test]
    fn too_few_points() {
        let bounds = [Bounded { initial: 0.5, lower: 0.0, upper: 1.0 }];
        let r = levenberg_marquardt(|th| Ok(vec![th[0]]), &[1.0], &bounds, &LmOptions::default());
        assert!(matches!(r, Err(AnalysisError::TooFewPoints { have: 1, need: 2 })));
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| (3.0 * t).sin()).collect();
        let bounds = [Bounded { initial: 1.0, lower: 0.0, upper: 10.0 }];
        let opts = LmOptions { max_iterations: 1, ftol: 0.0, xtol: 0.0, ..LmOptions::default() };
        let r = levenberg_marquardt(|th| Ok(t.iter().map(|t| (th[0] * t).sin()).collect()), &y, &bounds, &opts);
        assert!(matches!(r, Err(AnalysisError::NoConvergence { iterations: 1, .. })));
    }
}
