//! Dense-matrix realization of the reducible representation on a truncated
//! Fock space.
//!
//! One oscillator lives in `span{|k, f⟩ : k < M, f < F}` with
//! `a(k) = |k⟩⟨k| ⊗ a` and `I(k) = |k⟩⟨k| ⊗ 1`. The `N`-oscillator field
//! operators are
//!
//! ```text
//! ā(k) = N^{-1/2} Σₙ a(k)⁽ⁿ⁾,    Ī(k) = N^{-1} Σₙ I(k)⁽ⁿ⁾
//! ```
//!
//! and the atom is the outermost tensor factor, `|+⟩` first. With a real
//! coupling every operator is a real matrix, so the Hamiltonian is real
//! symmetric and the dynamics only needs a symmetric eigensolver.
//!
//! Truncated ladder operators violate the commutation relations on the top
//! Fock level, so identities are checked only on columns whose states stay
//! below it after one raising step.

mod checks;
mod evolve;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::params::PhysicalParams;

pub use checks::{
    coherent_overlaps, verify_ccr, verify_constants_of_motion, verify_overlaps, verify_projectors, Check,
    ConstantsReport, Report,
};
pub use evolve::{evolve_exact, Evolution, InitialField, InitialState};

pub const MAX_OSCILLATORS: usize = 3;
pub const MAX_MODES: usize = 4;
pub const MAX_FOCK: usize = 12;
pub const MAX_DIM: usize = 2000;
/// Initial-state mass allowed on the top Fock level.
pub const LEAK_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{what} = {value} exceeds the cap {cap}")]
    DimensionCap { what: &'static str, value: usize, cap: usize },
    #[error("vacuum profile has norm² {0}, expected 1")]
    UnnormalizedProfile(f64),
    #[error("invalid oracle specification: {0}")]
    InvalidSpec(String),
    #[error("initial state has mass {mass:e} on the top Fock level")]
    TruncationLeak { mass: f64 },
    #[error("full and reduced propagators disagree by {0:e}")]
    FactorizationMismatch(f64),
}

/// Deliberate defects used as negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// `ā = N⁻¹ Σ a⁽ⁿ⁾` instead of `N^{-1/2}`.
    LadderNormalization,
    /// `Π̂(n,s) = |+⟩⟨+|Π(n,s) + |−⟩⟨−|Π(n−1,s)`.
    SwappedHatProjector,
    /// `−R₃` in both constants of motion.
    FlippedAtomicSign,
}

/// Dimensions and vacuum profile of an oracle model.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpec {
    pub n_osc: usize,
    pub n_modes: usize,
    pub fock: usize,
    pub resonant: usize,
    /// Amplitudes `O(k)`. When absent, `O(ω) = √Z_ω` and the remaining mass
    /// is spread evenly over the other modes.
    pub profile: Option<Vec<f64>>,
    pub fault: Option<Fault>,
}

impl OracleSpec {
    pub fn new(n_osc: usize, n_modes: usize, fock: usize) -> Self {
        OracleSpec { n_osc, n_modes, fock, resonant: 0, profile: None, fault: None }
    }

    pub fn with_fault(mut self, fault: Fault) -> Self {
        self.fault = Some(fault);
        self
    }

    pub fn with_profile(mut self, profile: Vec<f64>) -> Self {
        self.profile = Some(profile);
        self
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_modes * self.fock).pow(self.n_osc as u32)
    }
}

/// Profile with `|O(resonant)|² = z_omega` and the rest spread evenly.
pub fn default_profile(n_modes: usize, resonant: usize, z_omega: f64) -> Vec<f64> {
    let rest = if n_modes > 1 { (1.0 - z_omega) / (n_modes - 1) as f64 } else { 0.0 };
    (0..n_modes).map(|k| if k == resonant { z_omega.sqrt() } else { rest.sqrt() }).collect()
}

/// Single-oscillator basis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Level {
    mode: usize,
    fock: usize,
}

/// Materialized operators. Field operators act on the `(MF)^N` field space,
/// full operators on `atom ⊗ field` with `|+⟩` first.
pub struct OracleModel {
    pub spec: OracleSpec,
    /// Bare coupling `g = g_ph/√Z` (rad/µs).
    pub g: f64,
    pub delta: f64,
    /// Resonant mode frequency; other modes are detuned multiples of it.
    pub omega: f64,
    pub mode_freqs: Vec<f64>,
    pub profile: Vec<f64>,
    /// `Z = max |O(k)|²`.
    pub z_max: f64,
    pub z_omega: f64,
    levels: Vec<Vec<Level>>,
    pub a_bar: Vec<DMatrix<f64>>,
    pub i_bar: Vec<DMatrix<f64>>,
    pub n_omega: DMatrix<f64>,
    pub h0: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub omega_op: DMatrix<f64>,
    pub x_op: DMatrix<f64>,
    pub m_op: DMatrix<f64>,
    pub n_op: DMatrix<f64>,
    /// `Π(n, s)`, keyed by `(s, n)`, on the field space.
    pub pi: BTreeMap<(usize, usize), DMatrix<f64>>,
    /// Largest `|λN/s − n|` met while grouping eigenvalues of `a(s)†a(s)`.
    pub grouping_residual: f64,
    pub vacuum: DVector<f64>,
}

fn identity(d: usize) -> DMatrix<f64> {
    DMatrix::identity(d, d)
}

fn embed(op: &DMatrix<f64>, n: usize, n_osc: usize, d: usize) -> DMatrix<f64> {
    let left = identity(d.pow(n as u32));
    let right = identity(d.pow((n_osc - n - 1) as u32));
    left.kronecker(op).kronecker(&right)
}

pub(crate) fn atom(a: [[f64; 2]; 2]) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]])
}

pub(crate) const R3: [[f64; 2]; 2] = [[0.5, 0.0], [0.0, -0.5]];
pub(crate) const R_PLUS: [[f64; 2]; 2] = [[0.0, 1.0], [0.0, 0.0]];
pub(crate) const R_MINUS: [[f64; 2]; 2] = [[0.0, 0.0], [1.0, 0.0]];
pub(crate) const UP: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 0.0]];
pub(crate) const DOWN: [[f64; 2]; 2] = [[0.0, 0.0], [0.0, 1.0]];

/// Builds every operator of the model. `params` supplies the physical
/// coupling, detuning and `(Z, Z_ω)`; the profile must reproduce the latter.
pub fn build_model(spec: &OracleSpec, params: &PhysicalParams) -> Result<OracleModel, OracleError> {
    let caps = [
        ("N", spec.n_osc, MAX_OSCILLATORS),
        ("M", spec.n_modes, MAX_MODES),
        ("F", spec.fock, MAX_FOCK),
    ];
    for (what, value, cap) in caps {
        if value > cap {
            return Err(OracleError::DimensionCap { what, value, cap });
        }
        if value == 0 {
            return Err(OracleError::InvalidSpec(format!("{what} must be positive")));
        }
    }
    if spec.fock < 2 {
        return Err(OracleError::InvalidSpec("F must be at least 2".into()));
    }
    if spec.resonant >= spec.n_modes {
        return Err(OracleError::InvalidSpec("resonant mode index out of range".into()));
    }
    let dim = spec.dim();
    if dim > MAX_DIM {
        return Err(OracleError::DimensionCap { what: "dimension", value: dim, cap: MAX_DIM });
    }

    let (n, m, f, p) = (spec.n_osc, spec.n_modes, spec.fock, spec.resonant);
    let profile = match &spec.profile {
        Some(v) => v.clone(),
        None => default_profile(m, p, params.z_omega()),
    };
    if profile.len() != m {
        return Err(OracleError::InvalidSpec(format!("profile has {} entries, expected {m}", profile.len())));
    }
    let norm_sq: f64 = profile.iter().map(|o| o * o).sum();
    if (norm_sq - 1.0).abs() > 1e-12 {
        return Err(OracleError::UnnormalizedProfile(norm_sq));
    }
    let z_max = profile.iter().map(|o| o * o).fold(0.0, f64::max);
    let z_omega = profile[p] * profile[p];
    if (z_max - params.z_max()).abs() > 1e-12 || (z_omega - params.z_omega()).abs() > 1e-12 {
        return Err(OracleError::InvalidSpec(format!(
            "profile gives Z = {z_max}, Z_ω = {z_omega}; parameters say Z = {}, Z_ω = {}",
            params.z_max(),
            params.z_omega()
        )));
    }

    let d1 = m * f;
    let d = d1.pow(n as u32);
    let nf = n as f64;
    let ladder_norm = match spec.fault {
        Some(Fault::LadderNormalization) => 1.0 / nf,
        _ => 1.0 / nf.sqrt(),
    };

    let levels: Vec<Vec<Level>> = (0..d)
        .map(|mut idx| {
            let mut out = vec![Level { mode: 0, fock: 0 }; n];
            for slot in out.iter_mut().rev() {
                let j = idx % d1;
                idx /= d1;
                *slot = Level { mode: j / f, fock: j % f };
            }
            out
        })
        .collect();

    let single_ladder = |k: usize| {
        let mut a = DMatrix::zeros(d1, d1);
        for q in 1..f {
            a[(k * f + q - 1, k * f + q)] = (q as f64).sqrt();
        }
        a
    };
    let single_proj = |k: usize| {
        let mut a = DMatrix::zeros(d1, d1);
        for q in 0..f {
            a[(k * f + q, k * f + q)] = 1.0;
        }
        a
    };
    let sum_embedded = |op: &DMatrix<f64>, scale: f64| {
        let mut acc = DMatrix::zeros(d, d);
        for slot in 0..n {
            acc += embed(op, slot, n, d1);
        }
        acc * scale
    };

    let a_bar: Vec<_> = (0..m).map(|k| sum_embedded(&single_ladder(k), ladder_norm)).collect();
    let i_bar: Vec<_> = (0..m).map(|k| sum_embedded(&single_proj(k), 1.0 / nf)).collect();

    let omega = 0.3;
    let mode_freqs: Vec<f64> = (0..m)
        .map(|k| if k == p { omega } else { omega * (1.0 + 0.25 * (k + 1) as f64) })
        .collect();
    let mut number_p = DMatrix::zeros(d1, d1);
    let mut h0_single = DMatrix::zeros(d1, d1);
    for k in 0..m {
        for q in 0..f {
            h0_single[(k * f + q, k * f + q)] = mode_freqs[k] * q as f64;
            if k == p {
                number_p[(k * f + q, k * f + q)] = q as f64;
            }
        }
    }
    let n_omega = sum_embedded(&number_p, 1.0);
    let h0 = sum_embedded(&h0_single, 1.0);

    let g = params.g() / z_max.sqrt();
    let delta = params.delta();
    let ap = &a_bar[p];
    let apd = ap.transpose();
    let ip = &i_bar[p];
    let id = identity(d);
    let num = &apd * ap;

    let coupling = atom(R_PLUS).kronecker(ap) + atom(R_MINUS).kronecker(&apd);
    let h = atom(R3).kronecker(&id) * (omega + delta) + identity(2).kronecker(&h0) + &coupling * g;
    let omega_op = atom(R3).kronecker(&id) * delta + &coupling * g;
    let x_op = atom(R3).kronecker(ip) + identity(2).kronecker(&num) + identity(2).kronecker(ip) * 0.5;
    let sign = if spec.fault == Some(Fault::FlippedAtomicSign) { -1.0 } else { 1.0 };
    let m_op = atom(R3).kronecker(ip) * sign + identity(2).kronecker(&num);
    let n_op = atom(R3).kronecker(&id) * sign + identity(2).kronecker(&n_omega);

    let mut model = OracleModel {
        spec: spec.clone(),
        g,
        delta,
        omega,
        mode_freqs,
        profile,
        z_max,
        z_omega,
        levels,
        a_bar,
        i_bar,
        n_omega,
        h0,
        h,
        omega_op,
        x_op,
        m_op,
        n_op,
        pi: BTreeMap::new(),
        grouping_residual: 0.0,
        vacuum: DVector::zeros(0),
    };
    model.vacuum = model.vacuum_state();
    model.build_spectral_projectors();
    Ok(model)
}

impl OracleModel {
    pub fn n_osc(&self) -> usize {
        self.spec.n_osc
    }

    pub fn fock(&self) -> usize {
        self.spec.fock
    }

    pub fn field_dim(&self) -> usize {
        self.levels.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.field_dim()
    }

    /// Number of oscillators in the resonant mode.
    pub fn sector(&self, idx: usize) -> usize {
        self.levels[idx].iter().filter(|l| l.mode == self.spec.resonant).count()
    }

    /// Total resonant-mode photon number.
    pub fn resonant_photons(&self, idx: usize) -> usize {
        self.levels[idx].iter().filter(|l| l.mode == self.spec.resonant).map(|l| l.fock).sum()
    }

    /// Highest Fock level over all oscillators.
    pub fn top_level(&self, idx: usize) -> usize {
        self.levels[idx].iter().map(|l| l.fock).max().unwrap_or(0)
    }

    /// `P(s/N)` on the field space.
    pub fn sector_projector(&self, s: usize) -> DMatrix<f64> {
        let d = self.field_dim();
        DMatrix::from_fn(d, d, |i, j| if i == j && self.sector(i) == s { 1.0 } else { 0.0 })
    }

    /// `|O⟩^{⊗N}` on the field space.
    pub fn vacuum_state(&self) -> DVector<f64> {
        let f = self.spec.fock;
        let mut single = DVector::zeros(self.spec.n_modes * f);
        for (k, o) in self.profile.iter().enumerate() {
            single[k * f] = *o;
        }
        let mut v = DVector::from_element(1, 1.0);
        for _ in 0..self.spec.n_osc {
            v = v.kronecker(&single);
        }
        v
    }

    /// `D(z) = exp(z(ā† − ā))` for real `z`, on the field space.
    pub fn displacement(&self, z: f64) -> DMatrix<f64> {
        let ap = &self.a_bar[self.spec.resonant];
        ((ap.transpose() - ap) * z).exp()
    }

    /// `Π̂(n, s)` on the full space.
    pub fn hat_projector(&self, n: usize, s: usize) -> DMatrix<f64> {
        let d = self.field_dim();
        let zero = DMatrix::zeros(d, d);
        let get = |n: Option<usize>| n.and_then(|n| self.pi.get(&(s, n))).unwrap_or(&zero);
        let (up, down) = match self.spec.fault {
            Some(Fault::SwappedHatProjector) => (get(Some(n)), get(n.checked_sub(1))),
            _ => (get(n.checked_sub(1)), get(Some(n))),
        };
        atom(UP).kronecker(up) + atom(DOWN).kronecker(down)
    }

    /// Field states whose resonant photon number is at most `k_max`.
    fn photon_window(&self, s: usize, k_max: usize) -> Vec<usize> {
        (0..self.field_dim()).filter(|&i| self.sector(i) == s && self.resonant_photons(i) <= k_max).collect()
    }

    /// Diagonalizes `a(s)†a(s)` where the truncation is exact (resonant
    /// photon number ≤ F − 1) and groups eigenvectors by `n = λN/s`.
    fn build_spectral_projectors(&mut self) {
        let d = self.field_dim();
        let ap = &self.a_bar[self.spec.resonant];
        let num = ap.transpose() * ap;
        let nf = self.spec.n_osc as f64;
        let mut pi = BTreeMap::new();
        let mut residual: f64 = 0.0;
        for s in 0..=self.spec.n_osc {
            let basis = self.photon_window(s, self.spec.fock - 1);
            if basis.is_empty() {
                continue;
            }
            if s == 0 {
                // a(0) = 0: everything is in Π(0, 0)
                let mut proj = DMatrix::zeros(d, d);
                for &i in &basis {
                    proj[(i, i)] = 1.0;
                }
                pi.insert((0, 0), proj);
                continue;
            }
            let sub = DMatrix::from_fn(basis.len(), basis.len(), |i, j| num[(basis[i], basis[j])]);
            let eig = SymmetricEigen::new(sub);
            for (col, &lambda) in eig.eigenvalues.iter().enumerate() {
                let x = lambda * nf / s as f64;
                let label = x.round().max(0.0);
                residual = residual.max((x - label).abs());
                let v = eig.eigenvectors.column(col);
                let proj = pi.entry((s, label as usize)).or_insert_with(|| DMatrix::zeros(d, d));
                for (a, &ia) in basis.iter().enumerate() {
                    for (b, &ib) in basis.iter().enumerate() {
                        proj[(ia, ib)] += v[a] * v[b];
                    }
                }
            }
        }
        self.pi = pi;
        self.grouping_residual = residual;
    }

    /// Largest photon label present for sector `s`.
    pub fn max_label(&self, s: usize) -> Option<usize> {
        self.pi.keys().filter(|(ss, _)| *ss == s).map(|(_, n)| *n).max()
    }
}
