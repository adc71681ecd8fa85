//! Seeded Monte Carlo generation of lossy homodyne records.
//!
//! Every phase `j` owns two ChaCha8 streams derived from `(seed, j)`: stream
//! `2j` drives the ideal quadrature draws and stream `2j + 1` the loss noise.
//! Output is therefore independent of thread count, and datasets that
//! differ only in `eta` share their ideal draws.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::{Dataset, HomodyneRecord};
use crate::error::{Error, Result};
use crate::states::{QuadratureProfile, StateSpec};

/// Upper bound on the pitch of the inverse-CDF table.
pub const SAMPLER_PITCH: f64 = 0.005;

/// Inverse-CDF sampler for the perfect-detection quadrature density at a
/// fixed phase. The CDF is tabulated on a uniform grid and interpolated
/// linearly inside each cell.
#[derive(Debug, Clone)]
pub struct QuadratureSampler {
    lo: f64,
    pitch: f64,
    cdf: Vec<f64>,
}

impl QuadratureSampler {
    pub fn new(spec: &StateSpec, theta: f64) -> Result<Self> {
        let profile = QuadratureProfile::new(spec, theta)?;
        let extent = profile.extent();
        let cells = (2.0 * extent / SAMPLER_PITCH).ceil() as usize;
        let pitch = 2.0 * extent / cells as f64;
        let lo = -extent;
        let node = |i: usize| profile.ideal_pdf(lo + i as f64 * pitch);
        let mut cdf = Vec::with_capacity(cells + 1);
        cdf.push(0.0);
        let mut left = node(0);
        let mut acc = 0.0;
        for i in 0..cells {
            let mid = profile.ideal_pdf(lo + (i as f64 + 0.5) * pitch);
            let right = node(i + 1);
            acc += pitch * (left + 4.0 * mid + right) / 6.0;
            cdf.push(acc);
            left = right;
        }
        let total = acc;
        if !(total > 0.0) {
            return Err(Error::Evaluation("quadrature density has no mass".into()));
        }
        cdf.iter_mut().for_each(|c| *c /= total);
        Ok(QuadratureSampler { lo, pitch, cdf })
    }

    /// Maps a uniform variate in `[0, 1)` to a quadrature value.
    pub fn invert(&self, u: f64) -> f64 {
        let cells = self.cdf.len() - 1;
        // first node with cdf > u, minus one, is the containing cell
        let cell = self.cdf.partition_point(|&c| c <= u).clamp(1, cells) - 1;
        let (c0, c1) = (self.cdf[cell], self.cdf[cell + 1]);
        let frac = if c1 > c0 { ((u - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.5 };
        self.lo + (cell as f64 + frac) * self.pitch
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.invert(rng.random::<f64>())
    }
}

/// Single draw from the perfect-detection quadrature density.
///
/// Builds a fresh table; use [`QuadratureSampler`] for repeated draws.
pub fn sample_ideal<R: Rng + ?Sized>(spec: &StateSpec, theta: f64, rng: &mut R) -> Result<f64> {
    Ok(QuadratureSampler::new(spec, theta)?.sample(rng))
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!(
            "detector efficiency must lie in (0, 1], got {eta}"
        )));
    }
    Ok(())
}

/// Pushes an ideal outcome through the lossy detector: mean
/// `sqrt(eta) x`, added Gaussian noise of variance `(1 - eta)/2`.
pub fn apply_efficiency<R: Rng + ?Sized>(x_ideal: f64, eta: f64, rng: &mut R) -> Result<f64> {
    check_eta(eta)?;
    if eta == 1.0 {
        return Ok(x_ideal);
    }
    let g: f64 = rng.sample(StandardNormal);
    Ok(eta.sqrt() * x_ideal + g * ((1.0 - eta) / 2.0).sqrt())
}

/// The two random streams owned by phase `j`: (ideal draws, loss noise).
pub fn phase_streams(seed: u64, phase: usize) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut ideal = ChaCha8Rng::seed_from_u64(seed);
    ideal.set_stream(2 * phase as u64);
    let mut noise = ChaCha8Rng::seed_from_u64(seed);
    noise.set_stream(2 * phase as u64 + 1);
    (ideal, noise)
}

/// Phase grid `theta_j = j pi / phases`.
pub fn phase_grid(phases: usize) -> Vec<f64> {
    (0..phases).map(|j| j as f64 * PI / phases as f64).collect()
}

/// Simulates `per_phase` events at each of `phases` equally spaced phases
/// on `[0, pi)`. Records are ordered phase-major.
pub fn simulate(
    spec: &StateSpec,
    eta: f64,
    phases: usize,
    per_phase: usize,
    seed: u64,
) -> Result<Dataset> {
    check_eta(eta)?;
    spec.validate()?;
    if phases == 0 || per_phase == 0 {
        return Err(Error::Config("phases and per_phase must both be at least 1".into()));
    }
    let blocks: Vec<Vec<HomodyneRecord>> = phase_grid(phases)
        .into_par_iter()
        .enumerate()
        .map(|(j, theta)| {
            let sampler = QuadratureSampler::new(spec, theta)?;
            let (mut ideal, mut noise) = phase_streams(seed, j);
            (0..per_phase)
                .map(|_| {
                    let x = apply_efficiency(sampler.sample(&mut ideal), eta, &mut noise)?;
                    Ok(HomodyneRecord { theta, x })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let records = blocks.into_iter().flatten().collect();
    Dataset::new(records, eta, spec.to_string(), seed, phases, per_phase)
}

/// Event counts per bin for one local-oscillator phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    /// Number of records that matched the phase selection.
    pub selected: u64,
    /// Set when no record matched the phase selection.
    pub empty_selection: bool,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let w = self.bin_width();
        (self.lo + i as f64 * w, self.lo + (i + 1) as f64 * w)
    }
}

/// Histograms the outcomes of records with `|theta - theta_select| <= tol`
/// into `bins` equal cells over `[lo, hi)`.
pub fn histogram(
    data: &Dataset,
    theta_select: f64,
    tol: f64,
    bins: usize,
    range: (f64, f64),
) -> Result<Histogram> {
    let (lo, hi) = range;
    if bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Config(format!("invalid histogram range [{lo}, {hi})")));
    }
    let width = (hi - lo) / bins as f64;
    let mut h = Histogram {
        lo,
        hi,
        counts: vec![0; bins],
        underflow: 0,
        overflow: 0,
        selected: 0,
        empty_selection: false,
    };
    for r in data.records.iter().filter(|r| (r.theta - theta_select).abs() <= tol) {
        h.selected += 1;
        if r.x < lo {
            h.underflow += 1;
        } else if r.x >= hi {
            h.overflow += 1;
        } else {
            let i = (((r.x - lo) / width) as usize).min(bins - 1);
            h.counts[i] += 1;
        }
    }
    if h.selected == 0 {
        log::warn!("no records within {tol} of phase {theta_select}");
        h.empty_selection = true;
    }
    Ok(h)
}
