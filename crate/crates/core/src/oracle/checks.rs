//! Identity checks on a built [`OracleModel`].

use std::fmt;

use nalgebra::{DMatrix, DVector};

use super::{atom, OracleError, OracleModel, LEAK_THRESHOLD, R_MINUS, R_PLUS};
use crate::weights::joint_coherent_weights;

/// One named deviation with its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: &str, deviation: f64, tolerance: f64) -> Self {
        Check { name: name.to_string(), deviation, tolerance }
    }

    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "ok  " } else { "FAIL" };
        write!(f, "{verdict} {:<24} {:.3e} (tol {:.0e})", self.name, self.deviation, self.tolerance)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &str, deviation: f64, tolerance: f64) {
        self.checks.push(Check::new(name, deviation, tolerance));
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Columns `cols` of `m`.
fn cols(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    m.select_columns(cols)
}

/// `‖[A, B] Q‖` with `Q` the coordinate projector onto `cols`.
fn commutator_on(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &[usize]) -> f64 {
    max_abs(&(a * cols(b, q) - b * cols(a, q)))
}

impl OracleModel {
    /// Field states whose every oscillator can be raised once without
    /// hitting the truncation.
    fn safe_field(&self) -> Vec<usize> {
        let top = self.fock() - 2;
        (0..self.field_dim()).filter(|&i| self.top_level(i) <= top).collect()
    }

    /// Lifts field indices to both atomic states.
    fn lift(&self, field: &[usize]) -> Vec<usize> {
        let d = self.field_dim();
        field.iter().copied().chain(field.iter().map(|i| i + d)).collect()
    }

    fn sector_ladder(&self, s: usize) -> DMatrix<f64> {
        &self.a_bar[self.spec.resonant] * self.sector_projector(s)
    }
}

/// Commutation relations, resolution of the identity, vacuum annihilation,
/// the rescaled relations inside each sector and sector invariance of `H`.
pub fn verify_ccr(model: &OracleModel) -> Report {
    let mut report = Report::default();
    let safe = model.safe_field();
    let d = model.field_dim();
    let m = model.spec.n_modes;

    let mut ccr: f64 = 0.0;
    for k in 0..m {
        for kp in 0..m {
            let a = &model.a_bar[k];
            let adp = model.a_bar[kp].transpose();
            let mut c = a * cols(&adp, &safe) - &adp * cols(a, &safe);
            if k == kp {
                c -= cols(&model.i_bar[k], &safe);
            }
            ccr = ccr.max(max_abs(&c));
        }
    }
    report.push("ccr", ccr, 1e-13);

    let total = model.i_bar.iter().fold(DMatrix::zeros(d, d), |acc, i| acc + i);
    report.push("identity_resolution", max_abs(&(total - DMatrix::identity(d, d))), 1e-13);

    let vac = model.a_bar.iter().map(|a| (a * &model.vacuum).norm()).fold(0.0, f64::max);
    report.push("vacuum_annihilation", vac, 1e-13);

    let nf = model.n_osc() as f64;
    let mut sector_ccr: f64 = 0.0;
    let mut proj_sum = DMatrix::zeros(d, d);
    for s in 0..=model.n_osc() {
        let p = model.sector_projector(s);
        let a = model.sector_ladder(s);
        let ad = a.transpose();
        let c = &a * cols(&ad, &safe) - &ad * cols(&a, &safe) - cols(&p, &safe) * (s as f64 / nf);
        sector_ccr = sector_ccr.max(max_abs(&c));
        proj_sum += p;
    }
    report.push("sector_ccr", sector_ccr, 1e-12);
    report.push("sector_completeness", max_abs(&(proj_sum - DMatrix::identity(d, d))), 0.0);

    let mut leak: f64 = 0.0;
    for (j, col) in model.h.column_iter().enumerate() {
        let sj = model.sector(j % d);
        for (i, x) in col.iter().enumerate() {
            if model.sector(i % d) != sj {
                leak = leak.max(x.abs());
            }
        }
    }
    report.push("sector_invariance", leak, 1e-12);
    report
}

/// Spectral-projector identities for `a(s)†a(s)` and `X(s)`.
pub fn verify_projectors(model: &OracleModel) -> Report {
    let mut report = Report::default();
    report.push("eigenvalue_grouping", model.grouping_residual, 1e-9);
    let f = model.fock();
    let d = model.field_dim();
    let zero = DMatrix::zeros(d, d);

    let mut shift: f64 = 0.0;
    let mut ground: f64 = 0.0;
    let mut complete: f64 = 0.0;
    let mut raise: f64 = 0.0;
    let mut lower: f64 = 0.0;
    let mut omega: f64 = 0.0;
    for s in 0..=model.n_osc() {
        let Some(top) = model.max_label(s) else { continue };
        let pi = |n: usize| model.pi.get(&(s, n)).unwrap_or(&zero);
        let a = model.sector_ladder(s);
        for n in 0..=top {
            for m in 0..=top {
                if m + 1 != n {
                    shift = shift.max(max_abs(&(pi(m) * &a * pi(n))));
                }
            }
        }
        ground = ground.max(max_abs(&(&a * pi(0))));

        let window = model.photon_window(s, f - 1);
        let sum = (0..=top).fold(DMatrix::zeros(d, d), |acc, n| acc + pi(n));
        complete = complete.max(max_abs(&cols(&(sum - model.sector_projector(s)), &window)));

        let q = model.lift(&model.photon_window(s, f - 2));
        let p_full = DMatrix::identity(2, 2).kronecker(&model.sector_projector(s));
        let raise_op = atom(R_PLUS).kronecker(&a);
        let lower_op = atom(R_MINUS).kronecker(&a.transpose());
        let omega_s = &model.omega_op * &p_full;
        for n in 0..=top + 1 {
            let hat = model.hat_projector(n, s);
            raise = raise.max(commutator_on(&raise_op, &hat, &q));
            lower = lower.max(commutator_on(&lower_op, &hat, &q));
            omega = omega.max(commutator_on(&omega_s, &hat, &q));
        }
    }
    report.push("ladder_shift", shift, 1e-12);
    report.push("ground_annihilation", ground, 1e-12);
    report.push("projector_completeness", complete, 1e-12);
    report.push("raise_commutes_hat", raise, 1e-12);
    report.push("lower_commutes_hat", lower, 1e-12);
    report.push("omega_commutes_hat", omega, 1e-12);
    report
}

/// Commutators of `ℳ` and `𝒩` with `H`, plus `‖ℳ − 𝒩‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub report: Report,
    /// Largest entry of `ℳ − 𝒩`; nonzero when the two differ.
    pub m_minus_n: f64,
}

pub fn verify_constants_of_motion(model: &OracleModel) -> ConstantsReport {
    let q = model.lift(&model.safe_field());
    let mut report = Report::default();
    report.push("M_commutes_H", commutator_on(&model.m_op, &model.h, &q), 1e-12);
    report.push("N_commutes_H", commutator_on(&model.n_op, &model.h, &q), 1e-12);
    ConstantsReport { report, m_minus_n: max_abs(&(&model.m_op - &model.n_op)) }
}

/// Mass of `state` (field space) on the top Fock level.
pub(crate) fn top_level_mass(model: &OracleModel, state: &DVector<f64>) -> f64 {
    let top = model.fock() - 1;
    state.iter().enumerate().filter(|(i, _)| model.top_level(*i) >= top).map(|(_, x)| x * x).sum()
}

/// `D(z)|O⟩^{⊗N}`, rejected when it leaks onto the top Fock level.
pub(crate) fn displaced_vacuum(model: &OracleModel, z: f64) -> Result<DVector<f64>, OracleError> {
    let state = model.displacement(z) * &model.vacuum;
    let mass = top_level_mass(model, &state);
    if mass > LEAK_THRESHOLD {
        return Err(OracleError::TruncationLeak { mass });
    }
    Ok(state)
}

/// `⟨z|Π(n,s)|z⟩` indexed `[s][n]`.
pub fn coherent_overlaps(model: &OracleModel, z: f64) -> Result<Vec<Vec<f64>>, OracleError> {
    let state = displaced_vacuum(model, z)?;
    Ok((0..=model.n_osc())
        .map(|s| {
            let top = model.max_label(s).map_or(0, |t| t + 1);
            (0..top)
                .map(|n| model.pi.get(&(s, n)).map_or(0.0, |p| state.dot(&(p * &state))))
                .collect()
        })
        .collect())
}

/// Compares [`coherent_overlaps`] with the Poisson × binomial closed form on
/// photon labels below `F − 1`, and the row sums with the binomial weights.
pub fn verify_overlaps(model: &OracleModel, z: f64) -> Result<Report, OracleError> {
    let table = coherent_overlaps(model, z)?;
    let n = model.n_osc() as u64;
    let closed = joint_coherent_weights(n, model.z_omega, z * z, 1e-16)
        .map_err(|e| OracleError::InvalidSpec(e.to_string()))?;
    let limit = model.fock() - 1;
    let mut entry: f64 = 0.0;
    let mut marginal: f64 = 0.0;
    for (s, row) in table.iter().enumerate() {
        for (label, v) in row.iter().enumerate().take(limit) {
            entry = entry.max((v - closed.get(s, label)).abs());
        }
        let b = closed.rows.iter().find(|(ss, _)| *ss == s).map_or(0.0, |(_, r)| r.mass() + r.tail_mass);
        marginal = marginal.max((row.iter().sum::<f64>() - b).abs());
    }
    let mut report = Report::default();
    report.push("overlap_entries", entry, 1e-10);
    report.push("overlap_marginals", marginal, 1e-10);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::{build_model, Fault, OracleSpec};
    use super::*;
    use crate::params::PhysicalParams;

    fn params(z: f64) -> PhysicalParams {
        PhysicalParams::builder(47.0).vacuum(z, z).build().unwrap()
    }

    fn model(n: usize, m: usize, f: usize, fault: Option<Fault>) -> OracleModel {
        let z = if m == 1 { 1.0 } else { 0.5 };
        let mut spec = OracleSpec::new(n, m, f);
        spec.fault = fault;
        build_model(&spec, &params(z)).unwrap()
    }

    #[test]
    fn identities_hold() {
        for (n, m) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let model = model(n, m, 4, None);
            let ccr = verify_ccr(&model);
            assert!(ccr.all_passed(), "N={n} M={m}\n{ccr}");
            let proj = verify_projectors(&model);
            assert!(proj.all_passed(), "N={n} M={m}\n{proj}");
            let com = verify_constants_of_motion(&model);
            assert!(com.report.all_passed(), "N={n} M={m}\n{}", com.report);
            let ov = verify_overlaps(&self::model(n, m, 6, None), 0.1).unwrap_or_else(|e| panic!("N={n} M={m}: {e}"));
            assert!(ov.all_passed(), "N={n} M={m}\n{ov}");
        }
    }

    #[test]
    fn constants_of_motion_differ_only_when_reducible() {
        assert!(verify_constants_of_motion(&model(2, 2, 3, None)).m_minus_n > 0.1);
        assert!(verify_constants_of_motion(&model(1, 1, 4, None)).m_minus_n < 1e-15);
    }

    #[test]
    fn vacuum_overlaps_are_binomial() {
        let model = model(2, 2, 3, None);
        let table = coherent_overlaps(&model, 0.0).unwrap();
        for (s, want) in [0.25, 0.5, 0.25].iter().enumerate() {
            assert!((table[s][0] - want).abs() < 1e-14);
            assert!(table[s][1..].iter().all(|v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn negative_controls_fail() {
        let ccr = verify_ccr(&model(2, 2, 4, Some(Fault::LadderNormalization)));
        assert!(ccr.get("ccr").unwrap().deviation > 0.1);
        assert!(!verify_projectors(&model(2, 2, 4, Some(Fault::SwappedHatProjector))).all_passed());
        assert!(!verify_constants_of_motion(&model(2, 2, 4, Some(Fault::FlippedAtomicSign))).report.all_passed());
        assert!(!verify_overlaps(&model(2, 2, 6, Some(Fault::LadderNormalization)), 0.1).unwrap().all_passed());
    }

    #[test]
    fn large_displacement_leaks() {
        let model = model(1, 1, 2, None);
        assert!(matches!(coherent_overlaps(&model, 2.0), Err(OracleError::TruncationLeak { .. })));
    }
}
