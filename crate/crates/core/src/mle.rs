//! Constrained maximum-likelihood estimation of displaced-Fock weights.
//!
//! For a phase-space point `(q, p)` the events are shifted to
//! `y_i = x_i - sqrt(eta) (q cos(theta_i) + p sin(theta_i))`, whose
//! phase-averaged density is the mixture `sum_n A_n(y) rho_n` with
//! `rho_n` the populations of the state displaced back to the origin.
//! The weights are found by the EM fixed-point iteration
//!
//! ```text
//! rho_m <- (1/N) sum_i A_m(y_i) rho_m / sum_n A_n(y_i) rho_n
//! ```
//!
//! which never leaves the probability simplex, and the Wigner value is
//! the parity `(1/pi) sum_n (-1)^n rho_n`.

use std::f64::consts::FRAC_1_PI;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kernels::{coefficient_table, CoefficientTable};

/// Tolerance on `|sum rho_n - 1|` accepted for a weight vector.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Weights that decay below this are set to exactly zero. Products with
/// small kernel values would otherwise drift into subnormal arithmetic,
/// which is far slower; the likelihood changes by less than
/// `n_max * WEIGHT_FLOOR` relative.
pub const WEIGHT_FLOOR: f64 = 1e-150;

/// Iterations between likelihood-delta convergence checks.
pub const TOL_CHECK_INTERVAL: usize = 50;

/// Probability vector over displaced Fock populations.
#[derive(Debug, Clone, PartialEq)]
pub struct FockWeights(Vec<f64>);

impl FockWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Domain("weight vector is empty".into()));
        }
        if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain("weights must be finite and nonnegative".into()));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Domain(format!("weights sum to {total}, not 1")));
        }
        Ok(FockWeights(w))
    }

    pub fn flat(n_max: usize) -> Self {
        FockWeights(vec![1.0 / n_max as f64; n_max])
    }

    /// Unit vector `e_m` of length `n_max`.
    pub fn basis(n_max: usize, m: usize) -> Self {
        let mut w = vec![0.0; n_max];
        w[m] = 1.0;
        FockWeights(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Flat,
    Custom(FockWeights),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionConfig {
    /// Number of displaced Fock populations estimated (indices `0..n_max`).
    pub n_max: usize,
    pub max_iters: usize,
    /// Stop once the log-likelihood gains less than this over
    /// [`TOL_CHECK_INTERVAL`] iterations; `0` runs the full budget.
    pub loglik_tol: f64,
    pub init: Init,
    /// Keep every `trace_stride`-th log-likelihood value in the diagnostics.
    pub trace_stride: usize,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            n_max: 40,
            max_iters: 10_000,
            loglik_tol: 0.0,
            init: Init::Flat,
            trace_stride: 1,
        }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if self.trace_stride == 0 {
            return Err(Error::Config("trace_stride must be at least 1".into()));
        }
        if !(self.loglik_tol >= 0.0) {
            return Err(Error::Config("loglik_tol must be nonnegative".into()));
        }
        if let Init::Custom(w) = &self.init {
            if w.len() != self.n_max {
                return Err(Error::Config(format!(
                    "initial weights have length {}, expected {}",
                    w.len(),
                    self.n_max
                )));
            }
        }
        Ok(())
    }

    fn initial_weights(&self) -> FockWeights {
        match &self.init {
            Init::Flat => FockWeights::flat(self.n_max),
            Init::Custom(w) => w.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateDiagnostics {
    pub iterations_run: usize,
    pub final_loglik: f64,
    /// `(iteration, log-likelihood)` samples, always ending with the final iterate.
    pub loglik_trace: Vec<(usize, f64)>,
    pub excluded_events: usize,
}

/// `y_i = x_i - sqrt(eta) (q cos(theta_i) + p sin(theta_i))`, in record order.
pub fn shift_outcomes(data: &Dataset, q: f64, p: f64) -> Vec<f64> {
    let sqrt_eta = data.eta.sqrt();
    data.records
        .iter()
        .map(|r| r.x - sqrt_eta * (q * r.theta.cos() + p * r.theta.sin()))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut lanes = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            lanes[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
}

fn check_shape(w: &FockWeights, table: &CoefficientTable) -> Result<()> {
    if w.len() != table.n_max() {
        return Err(Error::Config(format!(
            "weights have length {} but the table has {} columns",
            w.len(),
            table.n_max()
        )));
    }
    if table.active_count() == 0 {
        return Err(Error::Estimation("every event is excluded".into()));
    }
    Ok(())
}

/// Mixture log-densities and per-component scores for one pass over the table.
struct Sweep {
    sum_ln_mix: f64,
    score: Vec<f64>,
}

const SWEEP_BLOCK: usize = 1024;

fn sweep(w: &[f64], table: &CoefficientTable, want_ln: bool, want_score: bool) -> Result<Sweep> {
    let n_max = w.len();
    let mut score = vec![0.0; if want_score { n_max } else { 0 }];
    let mut sum_ln_mix = 0.0;
    let mut block = 0.0;
    for (count, row) in table.active_rows().enumerate() {
        let mix = dot(row, w);
        if !(mix > 0.0) {
            return Err(Error::Evaluation(format!(
                "mixture density {mix} is not positive for an active event"
            )));
        }
        if want_ln {
            block += mix.ln();
            if (count + 1) % SWEEP_BLOCK == 0 {
                sum_ln_mix += block;
                block = 0.0;
            }
        }
        if want_score {
            let inv = mix.recip();
            for (s, a) in score.iter_mut().zip(row) {
                *s += a * inv;
            }
        }
    }
    Ok(Sweep { sum_ln_mix: sum_ln_mix + block, score })
}

fn lagrange_term(w: &FockWeights, n: usize) -> f64 {
    n as f64 * w.sum()
}

/// `L = sum_i ln(sum_n A_n(y_i) rho_n) - N sum_n rho_n` over the active rows.
pub fn log_likelihood(w: &FockWeights, table: &CoefficientTable) -> Result<f64> {
    check_shape(w, table)?;
    let s = sweep(w.as_slice(), table, true, false)?;
    Ok(s.sum_ln_mix - lagrange_term(w, table.active_count()))
}

fn apply_update(w: &FockWeights, score: &[f64], n_events: usize) -> FockWeights {
    let inv_n = 1.0 / n_events as f64;
    let mut next: Vec<f64> = w
        .0
        .iter()
        .zip(score)
        .map(|(r, s)| {
            let v = r * s * inv_n;
            if v < WEIGHT_FLOOR { 0.0 } else { v }
        })
        .collect();
    // the exact map preserves the sum; strip accumulated rounding
    let total: f64 = next.iter().sum();
    next.iter_mut().for_each(|v| *v /= total);
    FockWeights(next)
}

/// One application of the EM fixed-point map.
pub fn em_step(w: &FockWeights, table: &CoefficientTable) -> Result<FockWeights> {
    check_shape(w, table)?;
    let s = sweep(w.as_slice(), table, false, true)?;
    Ok(apply_update(w, &s.score, table.active_count()))
}

/// Runs EM on a prebuilt table. Returns the final weights and diagnostics.
pub fn run_em(
    table: &CoefficientTable,
    cfg: &ReconstructionConfig,
) -> Result<(FockWeights, EstimateDiagnostics)> {
    cfg.validate()?;
    let mut w = cfg.initial_weights();
    check_shape(&w, table)?;
    let n_events = table.active_count();
    let mut trace = Vec::new();
    let mut checkpoint = f64::NEG_INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let traced = iterations % cfg.trace_stride == 0;
        let checked = cfg.loglik_tol > 0.0 && iterations % TOL_CHECK_INTERVAL == 0;
        let s = sweep(w.as_slice(), table, traced || checked, true)?;
        let ll = s.sum_ln_mix - lagrange_term(&w, n_events);
        if traced {
            trace.push((iterations, ll));
        }
        if checked {
            if ll - checkpoint < cfg.loglik_tol {
                break;
            }
            checkpoint = ll;
        }
        w = apply_update(&w, &s.score, n_events);
        iterations += 1;
    }
    let final_loglik = log_likelihood(&w, table)?;
    if trace.last().map(|&(it, _)| it) != Some(iterations) {
        trace.push((iterations, final_loglik));
    }
    let diag = EstimateDiagnostics {
        iterations_run: iterations,
        final_loglik,
        loglik_trace: trace,
        excluded_events: table.excluded_count(),
    };
    Ok((w, diag))
}

/// Estimates the displaced Fock populations at `(q, p)` from raw events.
pub fn estimate_weights(
    data: &Dataset,
    q: f64,
    p: f64,
    cfg: &ReconstructionConfig,
) -> Result<(FockWeights, EstimateDiagnostics)> {
    cfg.validate()?;
    data.validate()?;
    let y = shift_outcomes(data, q, p);
    let table = coefficient_table(&y, cfg.n_max, data.eta)?;
    if table.active_count() == 0 {
        return Err(Error::Estimation(format!(
            "all {} events underflow at ({q}, {p})",
            table.events()
        )));
    }
    run_em(&table, cfg)
}

/// Parity sum `(1/pi) sum_n (-1)^n rho_n`, computed as
/// `(even - odd)/(even + odd)` so the result never leaves `[-1/pi, 1/pi]`.
pub fn wigner_from_weights(w: &FockWeights) -> f64 {
    let (mut even, mut odd) = (0.0, 0.0);
    for (n, v) in w.0.iter().enumerate() {
        if n % 2 == 0 {
            even += v;
        } else {
            odd += v;
        }
    }
    FRAC_1_PI * ((even - odd) / (even + odd))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimate {
    pub weights: FockWeights,
    pub wigner: f64,
    pub diagnostics: EstimateDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub q: f64,
    pub p: f64,
    pub outcome: Result<PointEstimate>,
}

/// Independent reconstructions at every grid point, in grid order.
pub fn reconstruct_grid(
    data: &Dataset,
    grid: &GridSpec,
    cfg: &ReconstructionConfig,
) -> Result<Vec<GridResult>> {
    cfg.validate()?;
    data.validate()?;
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::Config("grid has no points".into()));
    }
    Ok(points
        .into_par_iter()
        .map(|(q, p)| {
            let outcome = estimate_weights(data, q, p, cfg).map(|(weights, diagnostics)| {
                let wigner = wigner_from_weights(&weights);
                PointEstimate { weights, wigner, diagnostics }
            });
            GridResult { q, p, outcome }
        })
        .collect())
}
