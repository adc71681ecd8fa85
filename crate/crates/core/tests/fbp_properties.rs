//! Back-projection estimator checks: consistency with the analytic
//! expectation and linearity in the data.

use std::f64::consts::{FRAC_1_PI, PI};

use homodyne::numerics::simpson_step;
use homodyne::simulator::phase_grid;
use homodyne::{fbp_kernel, fbp_point, quadrature_pdf, simulate, Dataset, FbpConfig, StateSpec};

/// Mean of the estimator over the density of `spec` at the given phases:
/// `(1/(2 pi)) (1/P) sum_j int pdf(x, theta_j) K(q cos + p sin - x) dx`.
fn expected_estimate(spec: &StateSpec, eta: f64, phases: usize, q: f64, p: f64, kc: f64) -> f64 {
    let total: f64 = phase_grid(phases)
        .into_iter()
        .map(|t| {
            let centre = q * t.cos() + p * t.sin();
            simpson_step(
                |x| quadrature_pdf(spec, t, x, eta).unwrap() * fbp_kernel(centre - x, kc),
                -10.0,
                10.0,
                0.004,
            )
        })
        .sum();
    total / (2.0 * PI * phases as f64)
}

#[test]
fn vacuum_origin_at_moderate_cutoff() {
    let ds = simulate(&StateSpec::Vacuum, 1.0, 64, 1563, 17).unwrap();
    let cfg = FbpConfig::new(5.0).unwrap();
    let w = fbp_point(&ds, 0.0, 0.0, &cfg).unwrap();
    assert!((w - FRAC_1_PI).abs() <= 0.02, "{w}");
}

#[test]
fn concatenation_averages_by_event_count() {
    let a = simulate(&StateSpec::odd_cat(0.0, 2.0), 0.9, 8, 700, 1).unwrap();
    let b = simulate(&StateSpec::Fock(1), 1.0, 4, 333, 2).unwrap();
    let mut joined = a.records.clone();
    joined.extend_from_slice(&b.records);
    let ab = Dataset::new(joined, 0.9, "mixed", 0, 12, 0).unwrap();
    let cfg = FbpConfig::default();
    for (q, p) in [(0.0, 0.0), (0.4, -1.1), (-2.0, 0.5)] {
        let (fa, fb) = (fbp_point(&a, q, p, &cfg).unwrap(), fbp_point(&b, q, p, &cfg).unwrap());
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let expect = (na * fa + nb * fb) / (na + nb);
        let got = fbp_point(&ab, q, p, &cfg).unwrap();
        assert!((got - expect).abs() <= 1e-12 * (1.0 + expect.abs()), "{got} vs {expect}");
    }
}

#[test]
fn error_shrinks_with_more_events() {
    let spec = StateSpec::odd_cat(0.0, 2.0);
    let cfg = FbpConfig::new(6.0).unwrap();
    let qs: Vec<f64> = (0..11).map(|i| -1.5 + 0.3 * i as f64).collect();
    let expected: Vec<f64> = qs.iter().map(|&q| expected_estimate(&spec, 1.0, 64, q, 0.0, 6.0)).collect();
    let mut last = f64::INFINITY;
    // about 10^4, 10^5 and 6.4 10^5 events
    for per_phase in [157, 1563, 10_000] {
        let ds = simulate(&spec, 1.0, 64, per_phase, 5).unwrap();
        let ms: f64 = qs
            .iter()
            .zip(&expected)
            .map(|(&q, e)| (fbp_point(&ds, q, 0.0, &cfg).unwrap() - e).powi(2))
            .sum::<f64>()
            / qs.len() as f64;
        let rms = ms.sqrt();
        assert!(rms < last, "rms {rms} did not drop below {last}");
        last = rms;
    }
    assert!(last < 0.01, "{last}");
}

#[test]
fn expected_estimate_tracks_band_limited_truth() {
    // with a wide band the mean estimate approaches the Wigner function
    let spec = StateSpec::Fock(1);
    let e = expected_estimate(&spec, 1.0, 64, 0.0, 0.0, 12.0);
    assert!((e + FRAC_1_PI).abs() < 1e-3, "{e}");
}

#[test]
fn tiny_cutoff_flattens_the_output() {
    let ds = simulate(&StateSpec::odd_cat(0.0, 2.0), 1.0, 16, 500, 3).unwrap();
    let cfg = FbpConfig::new(0.5).unwrap();
    let vals: Vec<f64> = (0..9).map(|i| fbp_point(&ds, -2.0 + 0.5 * i as f64, 0.0, &cfg).unwrap()).collect();
    let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vals.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 0.01);
}

#[test]
fn rejects_nonpositive_cutoff() {
    let ds = simulate(&StateSpec::Vacuum, 1.0, 2, 10, 3).unwrap();
    assert!(fbp_point(&ds, 0.0, 0.0, &FbpConfig { cutoff: 0.0 }).is_err());
    assert!(FbpConfig::new(-1.0).is_err());
}
