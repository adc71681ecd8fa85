//! Filtered back-projection baseline.
//!
//! Each event is back-projected through the band-limited ramp kernel
//! `K(z) = int_0^kc k cos(kz) dk`, without binning. On data recorded with
//! efficiency `eta < 1` this estimates the blurred, rescaled
//! quasidistribution rather than the Wigner function; no deconvolution is
//! attempted.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Default cutoff frequency (inverse quadrature units).
pub const DEFAULT_CUTOFF: f64 = 8.0;

/// Events per partial sum; partial sums are combined in index order.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbpConfig {
    pub cutoff: f64,
}

impl Default for FbpConfig {
    fn default() -> Self {
        FbpConfig { cutoff: DEFAULT_CUTOFF }
    }
}

impl FbpConfig {
    pub fn new(cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::Config(format!("cutoff must be positive, got {cutoff}")));
        }
        Ok(FbpConfig { cutoff })
    }
}

/// `K(z) = (cos(kc z) - 1)/z^2 + kc sin(kc z)/z`, with `K(0) = kc^2/2`.
pub fn fbp_kernel(z: f64, kc: f64) -> f64 {
    let u = kc * z;
    if u.abs() < 1e-2 {
        // kc^2 (1/2 - u^2/8 + u^4/144 - u^6/5760)
        let u2 = u * u;
        return kc * kc * (0.5 - u2 * (1.0 / 8.0 - u2 * (1.0 / 144.0 - u2 / 5760.0)));
    }
    (u.cos() - 1.0) / (z * z) + kc * u.sin() / z
}

/// Back-projection estimate at `(q, p)`:
/// `(1/(2 pi N)) sum_i K(q cos(theta_i) + p sin(theta_i) - x_i)`.
pub fn fbp_point(data: &Dataset, q: f64, p: f64, cfg: &FbpConfig) -> Result<f64> {
    data.validate()?;
    FbpConfig::new(cfg.cutoff)?;
    let kc = cfg.cutoff;
    let partial: Vec<f64> = data
        .records
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk
                .iter()
                .map(|r| fbp_kernel(q * r.theta.cos() + p * r.theta.sin() - r.x, kc))
                .sum::<f64>()
        })
        .collect();
    let total: f64 = partial.iter().sum();
    Ok(total / (2.0 * PI * data.len() as f64))
}
