//! Fock-state quadrature wavefunctions and the loss-convolved mixture
//! kernel `A_n(y; eta)`.
//!
//! `A_n(y)` is the density of a phase-averaged lossy homodyne outcome `y`
//! for the Fock state `|n>`: a binomial mixture over the number `k` of
//! photons that survive the loss, each contributing `psi_k(y)^2`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest Fock index the kernels accept.
pub const DEFAULT_FOCK_CAP: usize = 256;

/// Binomial prefactors are accumulated in log space above this index.
const LOG_SPACE_THRESHOLD: usize = 30;

const RESCALE_LIMIT: f64 = 1e150;

fn check_cap(k: usize) -> Result<()> {
    if k > DEFAULT_FOCK_CAP {
        return Err(Error::Config(format!(
            "Fock index {k} exceeds the cap of {DEFAULT_FOCK_CAP}"
        )));
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!(
            "detector efficiency must lie in (0, 1], got {eta}"
        )));
    }
    Ok(())
}

/// Fills `out[k] = psi_k(y)` for `k < out.len()`.
///
/// The recurrence runs on a scaled copy of the wavefunction so that the
/// Gaussian factor `exp(-y^2/2)` is applied once per stored value; this
/// keeps large `|y|` from underflowing the seed value `psi_0`.
pub fn fock_wavefunctions_into(y: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let mut log_scale = -0.5 * y * y;
    let mut factor = log_scale.exp();
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    out[0] = cur * factor;
    for k in 1..out.len() {
        let kf = k as f64;
        let next = (2.0 / kf).sqrt() * y * cur - ((kf - 1.0) / kf).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_LIMIT {
            cur /= RESCALE_LIMIT;
            prev /= RESCALE_LIMIT;
            log_scale += RESCALE_LIMIT.ln();
            factor = log_scale.exp();
        }
        out[k] = cur * factor;
    }
}

/// Normalized harmonic-oscillator eigenfunction `psi_k(y)` (vacuum
/// variance 1/2).
pub fn fock_wavefunction(k: usize, y: f64) -> Result<f64> {
    check_cap(k)?;
    if !y.is_finite() {
        return Err(Error::Domain(format!("quadrature value must be finite, got {y}")));
    }
    let mut buf = vec![0.0; k + 1];
    fock_wavefunctions_into(y, &mut buf);
    Ok(buf[k])
}

/// Binomial loss weights `C(n,k) (1-eta)^(n-k) eta^k` for `0 <= k <= n < n_max`,
/// stored as a lower-triangular table.
#[derive(Debug, Clone)]
pub struct LossWeights {
    eta: f64,
    rows: Vec<Vec<f64>>,
}

impl LossWeights {
    pub fn new(n_max: usize, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        if n_max > 0 {
            check_cap(n_max - 1)?;
        }
        let rows = (0..n_max).map(|n| binomial_row(n, eta)).collect();
        Ok(LossWeights { eta, rows })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.rows[n]
    }

    pub fn n_max(&self) -> usize {
        self.rows.len()
    }

    /// Mixes squared wavefunctions into kernel values: `out[n] = sum_k w[n][k] psi2[k]`.
    pub fn mix_into(&self, psi2: &[f64], out: &mut [f64]) {
        if self.eta == 1.0 {
            out.copy_from_slice(&psi2[..out.len()]);
            return;
        }
        for (n, slot) in out.iter_mut().enumerate() {
            *slot = self.rows[n].iter().zip(psi2).map(|(w, p)| w * p).sum();
        }
    }
}

fn binomial_row(n: usize, eta: f64) -> Vec<f64> {
    if eta == 1.0 {
        let mut row = vec![0.0; n + 1];
        row[n] = 1.0;
        return row;
    }
    let loss = 1.0 - eta;
    if n <= LOG_SPACE_THRESHOLD {
        let mut binom = 1.0_f64;
        (0..=n)
            .map(|k| {
                if k > 0 {
                    binom = binom * (n - k + 1) as f64 / k as f64;
                }
                binom * loss.powi((n - k) as i32) * eta.powi(k as i32)
            })
            .collect()
    } else {
        let ln_fact = ln_factorials(n);
        let (ln_loss, ln_eta) = (loss.ln(), eta.ln());
        (0..=n)
            .map(|k| {
                let ln_w = ln_fact[n] - ln_fact[k] - ln_fact[n - k]
                    + (n - k) as f64 * ln_loss
                    + k as f64 * ln_eta;
                ln_w.exp()
            })
            .collect()
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for j in 1..=n {
        acc += (j as f64).ln();
        out.push(acc);
    }
    out
}

/// Mixture kernel `A_n(y; eta)`.
pub fn coefficient_a(n: usize, y: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let psi = fock_wavefunction(n, y)?;
    if eta == 1.0 {
        return Ok(psi * psi);
    }
    let mut psi_all = vec![0.0; n + 1];
    fock_wavefunctions_into(y, &mut psi_all);
    let weights = binomial_row(n, eta);
    Ok(weights
        .iter()
        .zip(&psi_all)
        .map(|(w, p)| w * p * p)
        .sum())
}

/// Kernel values `A_n(y_i)` for a batch of outcomes, row-major
/// (`events x n_max`).
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    n_max: usize,
    eta: f64,
    values: Vec<f64>,
    excluded: Vec<bool>,
}

impl CoefficientTable {
    /// Builds a table from precomputed values. Rows whose entries are all
    /// zero are flagged as excluded.
    pub fn from_values(n_max: usize, eta: f64, values: Vec<f64>) -> Result<Self> {
        check_eta(eta)?;
        if n_max == 0 || values.is_empty() || values.len() % n_max != 0 {
            return Err(Error::Config(format!(
                "table of {} values does not split into rows of {n_max}",
                values.len()
            )));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain("kernel values must be finite and nonnegative".into()));
        }
        let excluded = values
            .chunks_exact(n_max)
            .map(|row| row.iter().all(|&a| a == 0.0))
            .collect();
        Ok(CoefficientTable { n_max, eta, values, excluded })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn events(&self) -> usize {
        self.values.len() / self.n_max
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_max..(i + 1) * self.n_max]
    }

    pub fn get(&self, i: usize, n: usize) -> f64 {
        self.values[i * self.n_max + n]
    }

    pub fn is_excluded(&self, i: usize) -> bool {
        self.excluded[i]
    }

    pub fn excluded_count(&self) -> usize {
        self.excluded.iter().filter(|&&e| e).count()
    }

    /// Number of rows that take part in the likelihood.
    pub fn active_count(&self) -> usize {
        self.events() - self.excluded_count()
    }

    /// Iterates over the rows that take part in the likelihood.
    pub fn active_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values
            .chunks_exact(self.n_max)
            .zip(&self.excluded)
            .filter(|(_, &ex)| !ex)
            .map(|(row, _)| row)
    }
}

/// Tabulates `A_n(y_i)` for `n < n_max` and every outcome `y_i`.
pub fn coefficient_table(outcomes: &[f64], n_max: usize, eta: f64) -> Result<CoefficientTable> {
    check_eta(eta)?;
    if outcomes.is_empty() {
        return Err(Error::Config("no outcomes to tabulate".into()));
    }
    if n_max == 0 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    check_cap(n_max - 1)?;
    if let Some(y) = outcomes.iter().find(|y| !y.is_finite()) {
        return Err(Error::Domain(format!("non-finite outcome {y}")));
    }
    let weights = LossWeights::new(n_max, eta)?;
    let mut values = vec![0.0; outcomes.len() * n_max];
    values
        .par_chunks_mut(n_max)
        .zip(outcomes.par_iter())
        .for_each_init(
            || vec![0.0; n_max],
            |psi2, (row, &y)| {
                fock_wavefunctions_into(y, psi2);
                psi2.iter_mut().for_each(|p| *p *= *p);
                weights.mix_into(psi2, row);
            },
        );
    let excluded: Vec<bool> = values
        .chunks_exact(n_max)
        .map(|row| row.iter().all(|&a| a == 0.0))
        .collect();
    let dropped = excluded.iter().filter(|&&e| e).count();
    if dropped > 0 {
        log::warn!("{dropped} of {} outcomes underflow every kernel and are excluded", outcomes.len());
    }
    Ok(CoefficientTable { n_max, eta, values, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn wavefunction_base_cases() {
        let c = PI.powf(-0.25);
        assert_eq!(fock_wavefunction(0, 0.0).unwrap(), c);
        assert_eq!(fock_wavefunction(1, 0.0).unwrap(), 0.0);
        assert!(close(fock_wavefunction(2, 0.0).unwrap(), -c / 2f64.sqrt(), 1e-15));
        assert!(close(c, 0.75113, 1e-5));
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(fock_wavefunction(257, 0.1), Err(Error::Config(_))));
        assert!(fock_wavefunction(256, 0.1).is_ok());
        assert!(matches!(coefficient_table(&[0.0], 258, 0.9), Err(Error::Config(_))));
    }

    #[test]
    fn kernel_spot_values() {
        let sqrt_pi = PI.sqrt();
        assert!(close(coefficient_a(0, 0.0, 0.9).unwrap(), 1.0 / sqrt_pi, 1e-15));
        assert!(close(coefficient_a(1, 0.0, 0.5).unwrap(), 0.5 / sqrt_pi, 1e-15));
        let expect = 2.0 * (-1.0f64).exp() / sqrt_pi;
        assert!(close(coefficient_a(1, 1.0, 1.0).unwrap(), expect, 1e-15));
        assert!(close(expect, 0.41511, 1e-5));
    }

    #[test]
    fn kernel_rejects_bad_eta() {
        for eta in [0.0, -0.1, 1.0 + 1e-12, f64::NAN] {
            assert!(matches!(coefficient_a(2, 0.3, eta), Err(Error::Domain(_))));
            assert!(matches!(coefficient_table(&[0.3], 2, eta), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn eta_one_is_squared_wavefunction() {
        for n in [0, 1, 7, 39, 80] {
            for y in [-3.3, -0.2, 0.0, 1.7, 6.0] {
                let psi = fock_wavefunction(n, y).unwrap();
                let a = coefficient_a(n, y, 1.0).unwrap();
                assert_eq!(a, psi * psi);
            }
        }
    }

    #[test]
    fn table_matches_scalar_kernel() {
        let ys = [-2.5, 0.0, 0.4, 3.1];
        for eta in [0.37, 0.9, 1.0] {
            let t = coefficient_table(&ys, 45, eta).unwrap();
            assert_eq!(t.events(), 4);
            for (i, &y) in ys.iter().enumerate() {
                for n in 0..45 {
                    let a = coefficient_a(n, y, eta).unwrap();
                    assert!((t.get(i, n) - a).abs() <= 1e-15 + 1e-13 * a);
                }
            }
        }
        let t = coefficient_table(&[0.0], 1, 0.9).unwrap();
        assert!(close(t.get(0, 0), 0.56419, 1e-5));
    }

    #[test]
    fn far_outcomes_are_excluded() {
        let t = coefficient_table(&[0.0, 1e4, -2.0], 4, 0.9).unwrap();
        assert!(!t.is_excluded(0));
        assert!(t.is_excluded(1));
        assert_eq!(t.excluded_count(), 1);
        assert_eq!(t.active_count(), 2);
        assert_eq!(t.active_rows().count(), 2);
    }

    #[test]
    fn large_argument_does_not_underflow_high_orders() {
        // psi_200(30) is tiny but representable; psi_0(30) ~ e^{-450}.
        let mut buf = vec![0.0; 201];
        fock_wavefunctions_into(30.0, &mut buf);
        assert!(buf[200].abs() > 0.0 && buf[200].is_finite());
        assert!(buf.iter().all(|v| v.abs() <= 0.8));
    }

    #[test]
    fn table_rejects_bad_input() {
        assert!(coefficient_table(&[], 3, 0.9).is_err());
        assert!(coefficient_table(&[0.1], 0, 0.9).is_err());
        assert!(matches!(coefficient_table(&[f64::INFINITY], 3, 0.9), Err(Error::Domain(_))));
    }
}
