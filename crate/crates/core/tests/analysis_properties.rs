mod common;

use std::f64::consts::PI;

use optobell::analysis::*;
use optobell::model::{Experiment, ExperimentConfig, HeatingParams, PhaseSetting};
use proptest::prelude::*;

const TABLE_S2: [(u64, u64, u64, u64, u64, u64); 4] = [
    (708, 194, 175, 611, 645858, 597302527),
    (606, 162, 164, 521, 546488, 500363903),
    (752, 212, 185, 589, 680260, 622224596),
    (170, 586, 590, 198, 592728, 540137661),
];

fn s2_tables() -> [CoincidenceTable; 4] {
    TABLE_S2.map(|(a, b, c, d, h, n)| CoincidenceTable::from_counts(a, b, c, d, h, n))
}

fn small_table() -> impl Strategy<Value = CoincidenceTable> {
    (1u64..=30)
        .prop_flat_map(|n| (Just(n), 0..=n))
        .prop_flat_map(|(n, c)| (Just(n), Just(c), 0..=c))
        .prop_filter("coincidences", |(_, c, _)| *c > 0)
        .prop_map(|(n, c, same)| {
            let diff = c - same;
            CoincidenceTable::from_counts(same - same / 2, diff / 2, diff - diff / 2, same / 2, c, n)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn small_instances_match_enumeration(t in small_table(), nodes in prop_oneof![Just(E_GRID_NODES), 2usize..64]) {
        let grid = e_distribution_on(&t, nodes).unwrap();
        let oracle = common::brute_force_e_distribution(&t, nodes);
        for (i, (a, b)) in grid.values.iter().zip(&oracle).enumerate() {
            prop_assert_eq!(*a == 0.0, *b == 0.0, "support differs at node {}", i);
            prop_assert!((a - b).abs() <= 1e-12, "node {}: {} vs {}", i, a, b);
        }
    }

    #[test]
    fn swapping_ports_mirrors_the_distribution(t in small_table()) {
        let g = e_distribution(&t).unwrap();
        let s = e_distribution(&t.swap_red()).unwrap();
        let step = g.step();
        // ties go upward in both, so mirroring is exact up to one node
        prop_assert!((g.expectation() + s.expectation()).abs() <= step + 1e-12);
        prop_assert!((g.quantile(0.5) + s.quantile(0.5)).abs() <= step + 1e-12);
    }

    #[test]
    fn s_expectation_is_linear(ts in prop::array::uniform4(small_table())) {
        let grids = ts.map(|t| e_distribution(&t).unwrap());
        let s = s_distribution(&grids).unwrap();
        let direct: f64 = grids.iter().zip(CHSH_SIGNS).map(|(g, sign)| sign * g.expectation()).sum();
        prop_assert!((s.expectation() - direct).abs() < 1e-9);
        prop_assert!((s.total() - 1.0).abs() < 1e-12);
        prop_assert_eq!(s.values.len(), 4 * (E_GRID_NODES - 1) + 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn model_correlations_respect_tsirelson(phi in prop::array::uniform4(0.0..2.0 * PI)) {
        let exp = Experiment::new(ExperimentConfig::ideal()).unwrap();
        let e = |b: f64, r: f64| exp.outcome_distribution(&PhaseSetting::new(b, r)).unwrap().correlation().unwrap();
        let s = chsh_point([e(phi[0], phi[2]), e(phi[0], phi[3]), e(phi[1], phi[2]), e(phi[1], phi[3])]);
        prop_assert!(s <= 2.0 * 2f64.sqrt() + 1e-9, "S = {}", s);
    }
}

#[test]
fn table_s2_point_estimates() {
    let r = chsh_analysis(&s2_tables()).unwrap();
    let expected = [950.0 / 1688.0, 801.0 / 1453.0, 944.0 / 1738.0, -808.0 / 1544.0];
    for (c, e) in r.correlations.iter().zip(expected) {
        assert!((c.point - e).abs() < 1e-15);
    }
    assert!((r.s_point - 2.18055).abs() < 1e-4);
}

#[test]
fn estimates_converge_under_scaling() {
    let base = CoincidenceTable::from_counts(12, 3, 4, 10, 29, 30_000);
    let point = correlation_coefficient(&base).unwrap();
    let width = |k: u64| {
        let s = summarize_distribution(&e_distribution(&base.scaled(k)).unwrap());
        (s.ci_hi - s.ci_lo, (s.expectation - point).abs())
    };
    let (w1, b1) = width(1);
    let (w10, b10) = width(10);
    let (w100, b100) = width(100);
    for (wide, narrow) in [(w1, w10), (w10, w100)] {
        let ratio = wide / narrow;
        assert!((ratio - 10f64.sqrt()).abs() < 0.6, "width ratio {ratio}");
    }
    assert!(b100 < b10 && b10 < b1, "bias {b1} {b10} {b100}");
    assert!(b100 < 2.0 / (E_GRID_NODES - 1) as f64);
}

#[test]
fn grid_resolution_is_converged() {
    for t in s2_tables() {
        let coarse = e_distribution_on(&t, E_GRID_NODES).unwrap().expectation();
        let fine = e_distribution_on(&t, 2 * E_GRID_NODES - 1).unwrap().expectation();
        assert!((coarse - fine).abs() < 1e-4, "{coarse} vs {fine}");
    }
}

#[test]
fn extreme_tables() {
    // all coincidences in same ports: a point mass at +1
    let t = CoincidenceTable::from_counts(5, 0, 0, 0, 5, 5);
    let g = e_distribution(&t).unwrap();
    assert_eq!(g.values[E_GRID_NODES - 1], 1.0);
    assert!(e_distribution(&CoincidenceTable::from_counts(0, 0, 0, 0, 3, 10)).is_err());
    assert!(e_distribution(&CoincidenceTable::default()).is_err());
}

fn fringe(v: f64, phi0: f64, n: usize) -> Vec<FitPoint> {
    (0..n)
        .map(|k| {
            let x = 2.0 * PI * k as f64 / n as f64;
            FitPoint::new(x, v * (x - phi0).cos(), 0.03)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fringe_fit_ignores_full_turns(v in 0.05..1.0f64, phi0 in 0.0..2.0 * PI, n in 4usize..24) {
        let a = fit_visibility(&fringe(v, phi0, n)).unwrap();
        let b = fit_visibility(&fringe(v, phi0 + 2.0 * PI, n)).unwrap();
        prop_assert!((a.get("V").unwrap() - v).abs() < 1e-9);
        prop_assert!(a.residual_norm < 1e-9);
        prop_assert!((a.get("V").unwrap() - b.get("V").unwrap()).abs() < 1e-12);
        let d = (a.get("phi0").unwrap() - b.get("phi0").unwrap()).rem_euclid(2.0 * PI);
        prop_assert!(d.min(2.0 * PI - d) < 1e-9);
    }
}

#[test]
fn fit_preconditions() {
    let two = fringe(0.8, 0.3, 2);
    assert!(matches!(fit_visibility(&two), Err(AnalysisError::Underdetermined(_))));
    let narrow: Vec<FitPoint> = (0..6).map(|k| FitPoint::new(0.2 * k as f64, 0.5, 0.1)).collect();
    assert!(matches!(fit_visibility(&narrow), Err(AnalysisError::Underdetermined(_))));
    let h = exact_heating_points(&SYNTHETIC_HEATING, SYNTHETIC_N_INIT, &synthetic_delays()[..3]);
    assert!(matches!(fit_heating(&h, None), Err(AnalysisError::Underdetermined(_))));
}

#[test]
fn single_exponential_heating() {
    // b = 0: only tau, n_init and the net slow amplitude a - b are
    // identified; the fit may park eta next to tau
    let h = HeatingParams {
        a: 0.4,
        b: 0.0,
        tau: 2.5e-6,
        eta_rise: 0.3e-6,
    };
    let fit = fit_heating(&exact_heating_points(&h, 0.05, &synthetic_delays()), None).unwrap();
    let tau = fit.get("tau").unwrap();
    assert!((tau / h.tau - 1.0).abs() < 1e-5, "tau = {tau}");
    assert!(fit.residual_norm < 1e-9);
    assert!((fit.get("n_init").unwrap() - 0.05).abs() < 1e-9);
    let (fh, n0) = heating_params(&fit).unwrap();
    for t in [0.0, 1e-6, 2e-5] {
        assert!((heating_curve(&fh, n0, t) - heating_curve(&h, 0.05, t)).abs() < 1e-9);
    }
}

#[test]
fn noiseless_heating_recovers_parameters() {
    let pts = exact_heating_points(&SYNTHETIC_HEATING, SYNTHETIC_N_INIT, &synthetic_delays());
    let fit = fit_heating(&pts, None).unwrap();
    let (h, n0) = heating_params(&fit).unwrap();
    assert!((h.tau / SYNTHETIC_HEATING.tau - 1.0).abs() < 1e-4);
    assert!((h.eta_rise / SYNTHETIC_HEATING.eta_rise - 1.0).abs() < 1e-4);
    assert!((n0 - SYNTHETIC_N_INIT).abs() < 1e-6);
    let fixed = fit_heating(&pts, Some(SYNTHETIC_N_INIT)).unwrap();
    assert_eq!(fixed.get("n_init"), Some(SYNTHETIC_N_INIT));
    assert!(fixed.uncertainty("n_init").is_none());
    assert!((fixed.get("tau").unwrap() / SYNTHETIC_HEATING.tau - 1.0).abs() < 1e-4);
}

#[test]
fn bundled_heating_points_are_reproducible() {
    let text = include_str!("../data/heating_synthetic.points");
    let bundled = read_points(text.as_bytes()).unwrap();
    let fresh = synthetic_heating_points(
        &SYNTHETIC_HEATING,
        SYNTHETIC_N_INIT,
        &synthetic_delays(),
        SYNTHETIC_COUNTS_PER_PHONON,
        SYNTHETIC_SEED,
    )
    .unwrap();
    assert_eq!(bundled, fresh);
}

#[test]
fn noisy_heating_fit_over_seeds() {
    // the lifetime lands within 0.5 us for all but a few noise draws
    let mut misses = 0;
    for seed in 0..20 {
        let pts = synthetic_heating_points(
            &SYNTHETIC_HEATING,
            SYNTHETIC_N_INIT,
            &synthetic_delays(),
            SYNTHETIC_COUNTS_PER_PHONON,
            seed,
        )
        .unwrap();
        let tau = fit_heating(&pts, None).unwrap().get("tau").unwrap();
        misses += ((tau - 3.3e-6).abs() > 0.5e-6) as usize;
    }
    assert!(misses <= 2, "{misses} of 20 seeds missed");
}

#[test]
fn cross_correlation_of_model_distribution() {
    let cfg = ExperimentConfig::reference();
    let exp = Experiment::new(cfg).unwrap();
    let d = exp
        .single_device_distribution(optobell::model::Device::A, &PhaseSetting::new(0.0, 0.0))
        .unwrap();
    let g2 = d.both_any() / (d.blue_any() * d.red_any());
    assert!((8.0..=13.0).contains(&g2), "g2 = {g2}");
    let v = predicted_visibility(g2).visibility;
    assert!((v - (g2 - 1.0) / (g2 + 1.0)).abs() < 1e-15);
}
