//! Behaviour of the EM estimator on synthetic data and random tables.

use std::f64::consts::FRAC_1_PI;

use homodyne::grid::GridSpec;
use homodyne::kernels::coefficient_table;
use homodyne::mle::run_em;
use homodyne::{
    em_step, estimate_weights, log_likelihood, reconstruct_grid, shift_outcomes, simulate,
    wigner_from_weights, CoefficientTable, Dataset, FockWeights, HomodyneRecord, Init,
    ReconstructionConfig, StateSpec,
};
use proptest::prelude::*;

fn cfg(n_max: usize, iters: usize) -> ReconstructionConfig {
    ReconstructionConfig { n_max, max_iters: iters, ..Default::default() }
}

fn simplex_ok(w: &FockWeights) -> bool {
    w.as_slice().iter().all(|v| *v >= 0.0) && (w.sum() - 1.0).abs() <= 1e-12
}

#[test]
fn recovers_vacuum_and_single_photon_at_origin() {
    for (spec, m) in [(StateSpec::Vacuum, 0usize), (StateSpec::Fock(1), 1)] {
        for seed in [1u64, 2, 3] {
            // 10^4 events over 16 phases
            let ds = simulate(&spec, 1.0, 16, 625, seed).unwrap();
            let (w, diag) = estimate_weights(&ds, 0.0, 0.0, &cfg(40, 500)).unwrap();
            assert_eq!(diag.iterations_run, 500);
            assert!(w.as_slice()[m] >= 0.95, "{spec} seed {seed}: {:?}", &w.as_slice()[..4]);
            let target = if m == 0 { FRAC_1_PI } else { -FRAC_1_PI };
            assert!((wigner_from_weights(&w) - target).abs() <= 0.05 * FRAC_1_PI);
        }
    }
}

#[test]
fn em_on_cat_data_is_monotone_and_stays_on_simplex() {
    let ds = simulate(&StateSpec::odd_cat(0.0, 2.0), 0.9, 16, 625, 4).unwrap();
    let table = coefficient_table(&shift_outcomes(&ds, 0.0, 0.0), 40, 0.9).unwrap();
    let mut w = FockWeights::flat(40);
    let mut ll = log_likelihood(&w, &table).unwrap();
    for it in 0..300 {
        w = em_step(&w, &table).unwrap();
        assert!(simplex_ok(&w), "iteration {it}");
        let next = log_likelihood(&w, &table).unwrap();
        assert!(next >= ll - 1e-9 * ll.abs(), "iteration {it}: {ll} -> {next}");
        ll = next;
    }
}

#[test]
fn trace_matches_stepwise_likelihood() {
    let ds = simulate(&StateSpec::Coherent { re: 0.5, im: 0.3 }, 0.8, 8, 200, 12).unwrap();
    let table = coefficient_table(&shift_outcomes(&ds, 0.2, -0.1), 12, 0.8).unwrap();
    let c = ReconstructionConfig { trace_stride: 5, ..cfg(12, 40) };
    let (w, diag) = run_em(&table, &c).unwrap();
    let mut v = FockWeights::flat(12);
    for it in 0..=40 {
        if it % 5 == 0 {
            let (i, ll) = diag.loglik_trace[it / 5];
            assert_eq!(i, it);
            assert_eq!(ll, log_likelihood(&v, &table).unwrap());
        }
        if it < 40 {
            v = em_step(&v, &table).unwrap();
        }
    }
    assert_eq!(v, w);
    assert_eq!(diag.final_loglik, log_likelihood(&w, &table).unwrap());
    assert_eq!(diag.loglik_trace.len(), 9);
}

#[test]
fn zero_components_stay_zero() {
    let ds = simulate(&StateSpec::Fock(2), 0.9, 8, 500, 3).unwrap();
    let mut init = vec![0.0; 10];
    for n in [0, 2, 3, 7] {
        init[n] = 0.25;
    }
    let c = ReconstructionConfig { init: Init::Custom(FockWeights::new(init.clone()).unwrap()), ..cfg(10, 200) };
    let (w, _) = estimate_weights(&ds, 0.3, 0.1, &c).unwrap();
    for (n, v) in w.as_slice().iter().enumerate() {
        if init[n] == 0.0 {
            assert_eq!(*v, 0.0, "component {n}");
        }
    }
}

#[test]
fn converged_single_component_is_a_fixed_point() {
    let ds = simulate(&StateSpec::Vacuum, 1.0, 8, 250, 21).unwrap();
    let table = coefficient_table(&shift_outcomes(&ds, 0.0, 0.0), 6, 1.0).unwrap();
    let (w, _) = run_em(&table, &cfg(6, 20_000)).unwrap();
    let next = em_step(&w, &table).unwrap();
    let residual = w.as_slice().iter().zip(next.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(residual < 1e-8, "residual {residual}");
    assert!(w.as_slice()[0] > 0.95);
}

#[test]
fn displaced_estimate_equals_estimate_on_preshifted_data() {
    let ds = simulate(&StateSpec::odd_cat(0.0, 1.5), 0.85, 12, 300, 8).unwrap();
    let (q, p) = (0.7, -1.2);
    let sqrt_eta = ds.eta.sqrt();
    let shifted: Vec<HomodyneRecord> = ds
        .records
        .iter()
        .map(|r| HomodyneRecord { theta: r.theta, x: r.x - sqrt_eta * (q * r.theta.cos() + p * r.theta.sin()) })
        .collect();
    let moved = Dataset { records: shifted, ..ds.clone() };
    let c = cfg(20, 100);
    let (a, da) = estimate_weights(&ds, q, p, &c).unwrap();
    let (b, db) = estimate_weights(&moved, 0.0, 0.0, &c).unwrap();
    assert_eq!(a, b);
    assert_eq!(da, db);
}

#[test]
fn single_point_grid_matches_scalar_pipeline() {
    let ds = simulate(&StateSpec::odd_cat(0.0, 2.0), 0.9, 8, 200, 2).unwrap();
    let c = cfg(40, 50);
    let (w, diag) = estimate_weights(&ds, 0.0, 0.0, &c).unwrap();
    let grid = reconstruct_grid(&ds, &GridSpec::point(0.0, 0.0), &c).unwrap();
    assert_eq!(grid.len(), 1);
    let est = grid[0].outcome.as_ref().unwrap();
    assert_eq!(est.weights, w);
    assert_eq!(est.diagnostics, diag);
    assert_eq!(est.wigner, wigner_from_weights(&w));
}

#[test]
fn grid_results_do_not_depend_on_thread_count() {
    let ds = simulate(&StateSpec::odd_cat(0.0, 2.0), 0.9, 8, 200, 2).unwrap();
    let grid = GridSpec::q_slice(-1.0, 1.0, 5, 0.2);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| reconstruct_grid(&ds, &grid, &cfg(30, 40)).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn vacuum_slice_follows_the_gaussian() {
    // 10^5 events
    let ds = simulate(&StateSpec::Vacuum, 1.0, 16, 6250, 1).unwrap();
    let results = reconstruct_grid(&ds, &GridSpec::q_slice(-3.0, 3.0, 7, 0.0), &cfg(40, 1000)).unwrap();
    for r in results {
        let w = r.outcome.unwrap().wigner;
        let truth = FRAC_1_PI * (-r.q * r.q).exp();
        assert!((w - truth).abs() <= 0.02, "q={}: {w} vs {truth}", r.q);
    }
}

#[test]
fn excluded_events_are_reported() {
    let mut records: Vec<HomodyneRecord> = (0..50).map(|i| HomodyneRecord { theta: 0.0, x: 0.01 * i as f64 }).collect();
    records.push(HomodyneRecord { theta: 0.0, x: 60.0 });
    let ds = Dataset::new(records, 1.0, "vacuum", 0, 1, 51).unwrap();
    let (w, diag) = estimate_weights(&ds, 0.0, 0.0, &cfg(5, 10)).unwrap();
    assert_eq!(diag.excluded_events, 1);
    assert!(simplex_ok(&w));
}

fn random_problem() -> impl Strategy<Value = (CoefficientTable, FockWeights)> {
    (1usize..8, 1usize..30).prop_flat_map(|(n_max, events)| {
        (
            prop::collection::vec(1e-6f64..1.0, n_max * events),
            prop::collection::vec(0.0f64..1.0, n_max),
            Just(n_max),
        )
            .prop_filter_map("weights need mass", |(values, raw, n_max)| {
                let total: f64 = raw.iter().sum();
                if total <= 1e-3 {
                    return None;
                }
                let mut w: Vec<f64> = raw.iter().map(|v| v / total).collect();
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= s);
                let table = CoefficientTable::from_values(n_max, 0.9, values).ok()?;
                Some((table, FockWeights::new(w).ok()?))
            })
    })
}

proptest! {
    #[test]
    fn em_step_is_monotone_on_random_tables((table, w) in random_problem()) {
        let before = log_likelihood(&w, &table).unwrap();
        let next = em_step(&w, &table).unwrap();
        prop_assert!(simplex_ok(&next));
        let after = log_likelihood(&next, &table).unwrap();
        prop_assert!(after >= before - 1e-9 * before.abs().max(1.0), "{} -> {}", before, after);
        let wig = wigner_from_weights(&next);
        prop_assert!((-FRAC_1_PI..=FRAC_1_PI).contains(&wig));
    }

    #[test]
    fn repeated_steps_keep_zeros((table, w) in random_problem(), mask in prop::collection::vec(any::<bool>(), 8)) {
        let mut v: Vec<f64> = w.as_slice().iter().zip(&mask).map(|(x, keep)| if *keep { *x } else { 0.0 }).collect();
        let total: f64 = v.iter().sum();
        prop_assume!(total > 1e-3);
        v.iter_mut().for_each(|x| *x /= total);
        let s: f64 = v.iter().sum();
        prop_assume!((s - 1.0).abs() <= 1e-12);
        let mut cur = FockWeights::new(v.clone()).unwrap();
        for _ in 0..5 {
            cur = em_step(&cur, &table).unwrap();
            for (a, b) in v.iter().zip(cur.as_slice()) {
                if *a == 0.0 {
                    prop_assert_eq!(*b, 0.0);
                }
            }
        }
    }

    #[test]
    fn wigner_of_any_simplex_vector_is_bounded(raw in prop::collection::vec(0.0f64..1.0, 1..50)) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 0.0);
        let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        if let Ok(w) = FockWeights::new(w) {
            let v = wigner_from_weights(&w);
            prop_assert!((-FRAC_1_PI..=FRAC_1_PI).contains(&v));
        }
    }
}
