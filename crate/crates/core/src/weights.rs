//! Discrete probability weights entering the inversion sums.
//!
//! Binomial and Poisson probabilities are evaluated with Loader's saddle-point
//! form (Stirling-error and deviance terms in log space, exponentiated last),
//! which keeps full relative accuracy for `N` up to 10⁶ and beyond.

use std::f64::consts::PI;

use thiserror::Error;

use crate::sum::pairwise_sum;

/// Default mass-based truncation threshold.
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightsError {
    #[error("gaussian approximation needs N*Z_omega >= 1, got {0}")]
    DegenerateWidth(f64),
    #[error("probability {0} outside (0, 1]")]
    InvalidProbability(f64),
    #[error("tail threshold {0} outside (0, 1)")]
    InvalidTail(f64),
    #[error("negative or non-finite mean {0}")]
    InvalidMean(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    Binomial,
    GaussianApprox,
    Thermal,
    PoissonScaled,
    Joint,
}

/// Non-negative weights on the contiguous index range `start..start + len`.
///
/// `tail_mass` is the (declared) probability mass outside the stored range;
/// `normalization_defect` is the mass missing before renormalization (only
/// nonzero for the Gaussian approximation).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub kind: WeightKind,
    pub start: usize,
    pub values: Vec<f64>,
    pub tail_mass: f64,
    pub normalization_defect: f64,
}

impl WeightTable {
    fn new(kind: WeightKind, values: Vec<f64>) -> Self {
        WeightTable { kind, start: 0, values, tail_mass: 0.0, normalization_defect: 0.0 }
    }

    /// Weight at index `i` (zero outside the stored range).
    pub fn get(&self, i: usize) -> f64 {
        i.checked_sub(self.start)
            .and_then(|k| self.values.get(k))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().map(move |(k, &v)| (self.start + k, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last stored index.
    pub fn end(&self) -> usize {
        self.start + self.values.len().saturating_sub(1)
    }

    pub fn mass(&self) -> f64 {
        pairwise_sum(&self.values)
    }

    pub fn mean(&self) -> f64 {
        let terms: Vec<f64> = self.iter().map(|(i, v)| i as f64 * v).collect();
        pairwise_sum(&terms) / self.mass()
    }

    /// Index of the largest weight (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = k;
            }
        }
        self.start + best
    }

    /// Drops low-probability entries from both ends while the total dropped
    /// mass stays at most `eps`; exact zeros are always dropped.
    pub fn trimmed(&self, eps: f64) -> WeightTable {
        let budget = eps / 2.0;
        let mut lo = 0;
        let mut dropped_lo = 0.0;
        while lo < self.values.len() && dropped_lo + self.values[lo] <= budget {
            dropped_lo += self.values[lo];
            lo += 1;
        }
        let mut hi = self.values.len();
        let mut dropped_hi = 0.0;
        while hi > lo && dropped_hi + self.values[hi - 1] <= budget {
            dropped_hi += self.values[hi - 1];
            hi -= 1;
        }
        WeightTable {
            kind: self.kind,
            start: self.start + lo,
            values: self.values[lo..hi].to_vec(),
            tail_mass: self.tail_mass + dropped_lo + dropped_hi,
            normalization_defect: self.normalization_defect,
        }
    }
}

/// Weights over `(s, n)`: one row per sector `s`, each row already multiplied
/// by the sector probability.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub rows: Vec<(usize, WeightTable)>,
}

impl JointTable {
    pub fn get(&self, s: usize, n: usize) -> f64 {
        self.rows
            .iter()
            .find(|(row_s, _)| *row_s == s)
            .map_or(0.0, |(_, t)| t.get(n))
    }

    pub fn mass(&self) -> f64 {
        let rows: Vec<f64> = self.rows.iter().map(|(_, t)| t.mass()).collect();
        pairwise_sum(&rows)
    }
}

// Stirling-series coefficients for ln n! − ln(√(2πn)(n/e)ⁿ).
const S0: f64 = 1.0 / 12.0;
const S1: f64 = 1.0 / 360.0;
const S2: f64 = 1.0 / 1260.0;
const S3: f64 = 1.0 / 1680.0;
const S4: f64 = 1.0 / 1188.0;

/// Stirling error `ln n! − (n + ½) ln n + n − ½ ln 2π`.
fn stirling_error(n: f64) -> f64 {
    if n <= 15.0 {
        // n! is exact in f64 here
        let fact: f64 = (1..=n as u64).map(|k| k as f64).product();
        return fact.ln() - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * PI).ln();
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/m) + m − x`, evaluated without cancellation near `x ≈ m`.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// `C(n, x) pˣ (1−p)ⁿ⁻ˣ` with `q = 1 − p` supplied separately.
fn binomial_pmf(x: u64, n: u64, p: f64, q: f64) -> f64 {
    if p == 0.0 {
        return if x == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if x == n { 1.0 } else { 0.0 };
    }
    let (xf, nf) = (x as f64, n as f64);
    if x == 0 {
        return (nf * (-p).ln_1p()).exp();
    }
    if x == n {
        return (nf * p.ln()).exp();
    }
    let lc = stirling_error(nf) - stirling_error(xf) - stirling_error(nf - xf)
        - deviance(xf, nf * p)
        - deviance(nf - xf, nf * q);
    let lf = (2.0 * PI).ln() + xf.ln() + (-xf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// Poisson probability of `x` at mean `lambda`.
fn poisson_pmf(x: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if x == 0 { 1.0 } else { 0.0 };
    }
    if x == 0 {
        return (-lambda).exp();
    }
    let xf = x as f64;
    (-stirling_error(xf) - deviance(xf, lambda)).exp() / (2.0 * PI * xf).sqrt()
}

/// Binomial distribution of the number `s` of oscillators occupying the
/// resonant mode: `C(N,s) Z_ωˢ (1−Z_ω)ᴺ⁻ˢ`, `s = 0..=N`.
pub fn binomial_weights(n_osc: u64, z_omega: f64) -> Result<WeightTable, WeightsError> {
    if !(z_omega > 0.0 && z_omega <= 1.0) {
        return Err(WeightsError::InvalidProbability(z_omega));
    }
    let q = 1.0 - z_omega;
    let values = (0..=n_osc).map(|s| binomial_pmf(s, n_osc, z_omega, q)).collect();
    Ok(WeightTable::new(WeightKind::Binomial, values))
}

/// Variance used by the Gaussian approximation of the binomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GaussianForm {
    /// `N Z (1 − Z)`, the full binomial variance.
    #[default]
    Full,
    /// `N Z`, the small-`Z` simplification.
    SmallZ,
}

/// Gaussian approximation of [`binomial_weights`], renormalized to unit mass
/// over `s = 0..=N`. The mass missing before renormalization is recorded in
/// `normalization_defect`.
pub fn gaussian_approx_weights(
    n_osc: u64,
    z_omega: f64,
    form: GaussianForm,
) -> Result<WeightTable, WeightsError> {
    if !(z_omega > 0.0 && z_omega <= 1.0) {
        return Err(WeightsError::InvalidProbability(z_omega));
    }
    let mean = n_osc as f64 * z_omega;
    if mean < 1.0 {
        return Err(WeightsError::DegenerateWidth(mean));
    }
    let var = match form {
        GaussianForm::Full => mean * (1.0 - z_omega),
        GaussianForm::SmallZ => mean,
    };
    if var <= 0.0 {
        return Err(WeightsError::DegenerateWidth(var));
    }
    let norm = (2.0 * PI * var).sqrt();
    let raw: Vec<f64> = (0..=n_osc)
        .map(|s| {
            let d = s as f64 - mean;
            (-d * d / (2.0 * var)).exp() / norm
        })
        .collect();
    let total = pairwise_sum(&raw);
    let mut table = WeightTable::new(WeightKind::GaussianApprox, raw.iter().map(|v| v / total).collect());
    table.normalization_defect = 1.0 - total;
    Ok(table)
}

fn check_tail(eps: f64) -> Result<(), WeightsError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(WeightsError::InvalidTail(eps))
    }
}

/// Thermal photon statistics `P(n) = n̄ⁿ / (1 + n̄)ⁿ⁺¹`, truncated at the
/// smallest `n_max` whose analytic tail `(n̄/(1+n̄))^(n_max+1)` is at most
/// `tail_eps`.
pub fn thermal_weights(n_bar: f64, tail_eps: f64) -> Result<WeightTable, WeightsError> {
    if !(n_bar.is_finite() && n_bar >= 0.0) {
        return Err(WeightsError::InvalidMean(n_bar));
    }
    check_tail(tail_eps)?;
    if n_bar == 0.0 {
        return Ok(WeightTable::new(WeightKind::Thermal, vec![1.0]));
    }
    let ratio = n_bar / (1.0 + n_bar);
    let mut values = Vec::new();
    let mut term = 1.0 / (1.0 + n_bar);
    let mut tail = ratio;
    loop {
        values.push(term);
        if tail <= tail_eps {
            break;
        }
        term *= ratio;
        tail *= ratio;
    }
    let mut table = WeightTable::new(WeightKind::Thermal, values);
    table.tail_mass = tail;
    Ok(table)
}

/// Poisson weights with mean `z_sq · s_over_n`, truncated once the retained
/// mass reaches `1 − tail_eps`.
pub fn coherent_weights(z_sq: f64, s_over_n: f64, tail_eps: f64) -> Result<WeightTable, WeightsError> {
    if !(0.0..=1.0).contains(&s_over_n) {
        return Err(WeightsError::InvalidProbability(s_over_n));
    }
    poisson_weights(z_sq * s_over_n, tail_eps)
}

/// Poisson weights at mean `lambda`, mass-truncated.
pub fn poisson_weights(lambda: f64, tail_eps: f64) -> Result<WeightTable, WeightsError> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(WeightsError::InvalidMean(lambda));
    }
    check_tail(tail_eps)?;
    if lambda == 0.0 {
        return Ok(WeightTable::new(WeightKind::PoissonScaled, vec![1.0]));
    }
    let cap = (lambda + 60.0 * lambda.sqrt() + 200.0) as u64;
    let mut values = Vec::new();
    for n in 0..=cap {
        values.push(poisson_pmf(n, lambda));
        // past the mode the retained mass only grows
        if n as f64 >= lambda && 1.0 - pairwise_sum(&values) <= tail_eps {
            break;
        }
    }
    let mut table = WeightTable::new(WeightKind::PoissonScaled, values);
    table.tail_mass = (1.0 - table.mass()).max(0.0);
    Ok(table)
}

/// `⟨z|Π(n,s)|z⟩`: Poisson(n; |z|² s/N) × Binomial(s; N, Z_ω).
pub fn joint_coherent_weights(
    n_osc: u64,
    z_omega: f64,
    z_sq: f64,
    tail_eps: f64,
) -> Result<JointTable, WeightsError> {
    let sectors = binomial_weights(n_osc, z_omega)?;
    let mut rows = Vec::with_capacity(sectors.len());
    for (s, b) in sectors.iter() {
        let mut row = coherent_weights(z_sq, s as f64 / n_osc as f64, tail_eps)?;
        row.kind = WeightKind::Joint;
        for v in &mut row.values {
            *v *= b;
        }
        row.tail_mass *= b;
        rows.push((s, row));
    }
    Ok(JointTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    /// Exact rational binomial pmf, for cross-checking.
    fn exact_binomial(n: u64, s: u64, num: i64, den: i64) -> f64 {
        let p = BigRational::new(BigInt::from(num), BigInt::from(den));
        let q = BigRational::from_integer(BigInt::from(1)) - p.clone();
        let mut c = BigInt::from(1);
        for k in 0..s {
            c = c * BigInt::from(n - k) / BigInt::from(k + 1);
        }
        let pmf = BigRational::from_integer(c) * pow(&p, s) * pow(&q, n - s);
        rational_to_f64(&pmf)
    }

    fn pow(x: &BigRational, e: u64) -> BigRational {
        let mut acc = BigRational::from_integer(BigInt::from(1));
        for _ in 0..e {
            acc *= x;
        }
        acc
    }

    fn rational_to_f64(x: &BigRational) -> f64 {
        x.to_f64().unwrap()
    }

    #[test]
    fn fair_bernoulli() {
        let t = binomial_weights(1, 0.5).unwrap();
        assert_eq!(t.values.len(), 2);
        assert!((t.values[0] - 0.5).abs() < 1e-15);
        assert!((t.values[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_trials() {
        let t = binomial_weights(2, 0.1).unwrap();
        for (got, want) in t.values.iter().zip([0.81, 0.18, 0.01]) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn n280_matches_exact_rationals() {
        let t = binomial_weights(280, 0.1).unwrap();
        assert_eq!(t.argmax(), 28);
        assert!((t.mass() - 1.0).abs() < 1e-12);
        for s in [0u64, 1, 10, 28, 50, 100, 280] {
            let want = exact_binomial(280, s, 1, 10);
            let got = t.get(s as usize);
            assert!(
                (got - want).abs() <= 1e-13 * want.max(1e-300),
                "s={s}: {got:e} vs {want:e}"
            );
        }
    }

    #[test]
    fn certain_success_is_point_mass() {
        for n in [1u64, 7, 1000] {
            let t = binomial_weights(n, 1.0).unwrap();
            assert_eq!(t.get(n as usize), 1.0);
            assert_eq!(t.mass(), 1.0);
        }
    }

    #[test]
    fn large_n_stays_finite_and_normalized() {
        let t = binomial_weights(100_000, 1e-3).unwrap();
        assert!(t.values.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert!((t.mass() - 1.0).abs() < 1e-9);
        let m = binomial_weights(1_000_000, 0.1).unwrap();
        assert!((m.mass() - 1.0).abs() < 1e-9);
        assert!((m.mean() - 100_000.0).abs() < 1e-9 * 100_000.0);
    }

    #[test]
    fn invalid_probability() {
        assert!(binomial_weights(3, 0.0).is_err());
        assert!(binomial_weights(3, 1.5).is_err());
    }

    fn total_variation(a: &WeightTable, b: &WeightTable) -> f64 {
        let n = a.end().max(b.end());
        0.5 * (0..=n).map(|s| (a.get(s) - b.get(s)).abs()).sum::<f64>()
    }

    #[test]
    fn gaussian_full_variance_is_close_to_binomial() {
        let b = binomial_weights(10_000, 0.1).unwrap();
        let g = gaussian_approx_weights(10_000, 0.1, GaussianForm::Full).unwrap();
        assert!((g.mass() - 1.0).abs() < 1e-12);
        assert!(total_variation(&b, &g) < 0.01);
    }

    #[test]
    fn gaussian_small_z_is_wider() {
        // The small-Z variance N·Z overshoots N·Z·(1−Z) by 1/(1−Z) ≈ 11%,
        // which costs about 0.026 in total variation at N = 10⁴.
        let b = binomial_weights(10_000, 0.1).unwrap();
        let g = gaussian_approx_weights(10_000, 0.1, GaussianForm::SmallZ).unwrap();
        let tv = total_variation(&b, &g);
        assert!((tv - 0.02566).abs() < 2e-4, "tv = {tv}");
    }

    #[test]
    fn gaussian_argmax_matches_binomial() {
        let b = binomial_weights(280, 0.1).unwrap();
        for form in [GaussianForm::Full, GaussianForm::SmallZ] {
            let g = gaussian_approx_weights(280, 0.1, form).unwrap();
            assert!((g.argmax() as i64 - b.argmax() as i64).abs() <= 1);
            assert!(g.normalization_defect.abs() < 1e-6);
        }
    }

    #[test]
    fn gaussian_rejects_narrow_width() {
        assert_eq!(
            gaussian_approx_weights(4, 0.1, GaussianForm::SmallZ),
            Err(WeightsError::DegenerateWidth(0.4))
        );
    }

    #[test]
    fn zero_temperature_is_vacuum() {
        let t = thermal_weights(0.0, 1e-12).unwrap();
        assert_eq!(t.values, vec![1.0]);
        assert_eq!(t.tail_mass, 0.0);
    }

    #[test]
    fn thermal_closed_form_values() {
        let t = thermal_weights(0.05, 1e-12).unwrap();
        assert!((t.get(0) - 1.0 / 1.05).abs() < 1e-15);
        assert!((t.get(0) - 0.952381).abs() < 1e-6);
        assert!((t.get(1) - 0.05 / (1.05f64 * 1.05)).abs() < 1e-15);
        assert!((t.get(1) - 0.0453515).abs() < 1e-6);
        // (0.05/1.05)^(n+1) <= 1e-12  <=>  n + 1 >= 9.08
        assert_eq!(t.end(), 9);
        assert!(t.tail_mass <= 1e-12);
        assert!(t.mass() >= 1.0 - 1e-12);
        assert!((t.mass() + t.tail_mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn poisson_vacuum_and_values() {
        assert_eq!(coherent_weights(0.0, 0.5, 1e-12).unwrap().values, vec![1.0]);
        let t = coherent_weights(0.8, 0.5, 1e-12).unwrap();
        assert!((t.get(0) - (-0.4f64).exp()).abs() < 1e-15);
        assert!((t.get(0) - 0.670320).abs() < 1e-6);
        assert!((t.get(3) - (-0.4f64).exp() * 0.4f64.powi(3) / 6.0).abs() < 1e-16);
        assert!(t.mass() >= 1.0 - 1e-12);
    }

    #[test]
    fn joint_rows_marginalize_to_binomial() {
        let j = joint_coherent_weights(3, 0.3, 0.7, 1e-14).unwrap();
        let b = binomial_weights(3, 0.3).unwrap();
        for (s, row) in &j.rows {
            assert!((row.mass() + row.tail_mass - b.get(*s)).abs() < 1e-15);
        }
        assert!((j.mass() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn trimming_respects_budget() {
        let b = binomial_weights(10_000, 0.1).unwrap();
        let t = b.trimmed(1e-12);
        assert!(t.len() < 1000);
        assert!(t.tail_mass <= 1e-12);
        assert!((t.mass() + t.tail_mass - b.mass()).abs() < 1e-14);
        let point = binomial_weights(7, 1.0).unwrap().trimmed(1e-12);
        assert_eq!((point.start, point.values.clone()), (7, vec![1.0]));
    }

    proptest! {
        #[test]
        fn binomial_invariants(n in 1u64..3000, z in 1e-4f64..=1.0) {
            let t = binomial_weights(n, z).unwrap();
            prop_assert!(t.values.iter().all(|v| *v >= 0.0 && v.is_finite()));
            prop_assert!((t.mass() - 1.0).abs() < 1e-12);
            prop_assert!((t.mean() - n as f64 * z).abs() < 1e-9 * (1.0 + n as f64 * z));
        }

        #[test]
        fn thermal_invariants(n_bar in 0.0f64..50.0, k in 2i32..14) {
            let eps = 10f64.powi(-k);
            let t = thermal_weights(n_bar, eps).unwrap();
            prop_assert!(t.tail_mass <= eps);
            prop_assert!(t.mass() >= 1.0 - eps - 1e-13);
            // minimality of n_max
            if t.end() > 0 {
                let r = n_bar / (1.0 + n_bar);
                prop_assert!(r.powi(t.end() as i32) > eps);
            }
        }

        #[test]
        fn poisson_invariants(lambda in 0.0f64..40.0) {
            let t = poisson_weights(lambda, 1e-12).unwrap();
            prop_assert!(t.values.iter().all(|v| *v >= 0.0));
            prop_assert!(t.mass() >= 1.0 - 1e-12);
            prop_assert!(t.mass() <= 1.0 + 1e-12);
        }
    }
}
