use num_complex::Complex64;
use optobell::fock::{ModeId, TruncatedState};
use proptest::prelude::*;

const A: ModeId = ModeId(0);
const B: ModeId = ModeId(1);
const CUTOFF: usize = 3;

/// Basis states of two modes with at most `CUTOFF` quanta in total, so that
/// passive operations stay inside the truncated space.
fn low_number_basis() -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for n in 0..=CUTOFF {
        for m in 0..=CUTOFF - n {
            out.push(vec![n, m]);
        }
    }
    out
}

fn ket_state(amps: &[(f64, f64)]) -> TruncatedState {
    let ket: Vec<(Vec<usize>, Complex64)> = low_number_basis()
        .into_iter()
        .zip(amps)
        .map(|(occ, &(re, im))| (occ, Complex64::new(re, im)))
        .collect();
    TruncatedState::from_ket(&[A, B], CUTOFF, &ket).unwrap()
}

fn amplitudes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 10)
        .prop_filter("nonzero ket", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
}

/// Pure low-number state, optionally made mixed by a lossy pass.
fn states() -> impl Strategy<Value = TruncatedState> {
    (amplitudes(), 0.2..1.0f64).prop_map(|(amps, eta)| ket_state(&amps).apply_loss(B, eta).unwrap())
}

fn max_diff(x: &TruncatedState, y: &TruncatedState) -> f64 {
    (x.matrix() - y.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
enum Op {
    Squeeze(f64, f64),
    Split(f64, f64),
    Phase(f64),
    Loss(f64),
    Amplify(f64),
    Noise(f64),
}

fn ops() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0.0..0.3f64, 0.0..6.3f64).prop_map(|(e, p)| Op::Squeeze(e, p)),
        (0.0..1.0f64, 0.0..6.3f64).prop_map(|(t, p)| Op::Split(t, p)),
        (0.0..6.3f64).prop_map(Op::Phase),
        (0.0..1.0f64).prop_map(Op::Loss),
        (1.0..1.5f64).prop_map(Op::Amplify),
        (0.0..0.3f64).prop_map(Op::Noise),
    ]
}

fn apply(s: &TruncatedState, op: &Op) -> TruncatedState {
    match *op {
        Op::Squeeze(e, p) => s.apply_two_mode_squeeze(A, B, e, p),
        Op::Split(t, p) => s.apply_beamsplitter(A, B, t, p),
        Op::Phase(p) => s.apply_phase(A, p),
        Op::Loss(eta) => s.apply_loss(B, eta),
        Op::Amplify(g) => s.apply_amplifier(A, g),
        Op::Noise(n) => s.apply_thermal_noise(B, n),
    }
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_operation_preserves_trace(s in states(), op in ops()) {
        let out = apply(&s, &op);
        prop_assert!((out.trace() - 1.0).abs() < 1e-9);
        prop_assert!(out.validate().is_ok());
    }

    #[test]
    fn passive_operations_conserve_number(s in states(), t in 0.0..1.0f64, p in 0.0..6.3f64) {
        let n0 = s.total_number();
        let split = s.apply_beamsplitter(A, B, t, p).unwrap();
        prop_assert!((split.total_number() - n0).abs() < 1e-9);
        let shifted = s.apply_phase(B, p).unwrap();
        prop_assert!((shifted.total_number() - n0).abs() < 1e-9);
    }

    #[test]
    fn losses_compose(s in states(), e1 in 0.0..1.0f64, e2 in 0.0..1.0f64) {
        let twice = s.apply_loss(A, e1).unwrap().apply_loss(A, e2).unwrap();
        let once = s.apply_loss(A, e1 * e2).unwrap();
        prop_assert!(max_diff(&twice, &once) < 1e-9);
    }

    #[test]
    fn click_distributions_are_normalized(
        s in states(),
        sequence in prop::collection::vec(ops(), 0..5),
    ) {
        let out = sequence.iter().fold(s, |acc, op| apply(&acc, op));
        for measured in [vec![A], vec![B], vec![A, B], vec![B, A]] {
            let d = out.click_distribution(&measured).unwrap();
            prop_assert!((d.total() - 1.0).abs() < 1e-9);
            prop_assert!(d.probabilities().iter().all(|&p| p >= -1e-12));
        }
    }

    #[test]
    fn phase_conjugated_splitter(t in 0.0..1.0f64, phi in 0.0..6.3f64, which in 0usize..2) {
        let occ = if which == 0 { vec![1, 0] } else { vec![1, 1] };
        let s = TruncatedState::from_ket(&[A, B], CUTOFF, &[(occ, Complex64::new(1.0, 0.0))]).unwrap();
        let direct = s.apply_beamsplitter(A, B, t, phi).unwrap();
        let conjugated = s
            .apply_phase(A, -phi).unwrap()
            .apply_beamsplitter(A, B, t, 0.0).unwrap()
            .apply_phase(A, phi).unwrap();
        prop_assert!(max_diff(&direct, &conjugated) < 1e-9);
    }
}

#[test]
fn squeezed_vacuum_matches_closed_form() {
    for p in [0.001, 0.008, 0.01] {
        let s = TruncatedState::vacuum(&[A, B], CUTOFF)
            .unwrap()
            .apply_two_mode_squeeze(A, B, f64::sqrt(p), 0.0)
            .unwrap();
        for n in 0..=CUTOFF {
            for m in 0..=CUTOFF {
                let want = if n == m { (1.0 - p) * p.powi(n as i32) } else { 0.0 };
                let got = s.population(&[n, m]);
                assert!((got - want).abs() < 1e-6, "p={p} n={n} m={m}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn squeezing_truncation_leak_is_bounded() {
    for k in 1..=50 {
        let p = 0.001 * k as f64;
        let s = TruncatedState::vacuum(&[A, B], 4)
            .unwrap()
            .apply_two_mode_squeeze(A, B, p.sqrt(), 0.0)
            .unwrap();
        assert!(s.truncation_loss() < 1e-6, "p={p}: {}", s.truncation_loss());
    }
}

#[test]
fn readout_swap_equals_loss() {
    // photon-phonon pair plus thermal phonons, then partial swap of the
    // phonon onto a vacuum readout mode
    let r = 0.3;
    let source = TruncatedState::vacuum(&[A, B], CUTOFF)
        .unwrap()
        .set_thermal(B, 0.1)
        .unwrap()
        .apply_two_mode_squeeze(A, B, 0.2, 0.0)
        .unwrap();
    let readout = ModeId(2);
    let swapped = source
        .with_vacuum_mode(readout)
        .unwrap()
        .apply_beamsplitter(B, readout, 1.0 - r, 0.0)
        .unwrap()
        .partial_trace(B)
        .unwrap();
    // the readout field now holds the phonon after a loss channel of
    // efficiency r, up to a fixed phase of pi from the reflection
    let lossy = source.apply_loss(B, r).unwrap();
    let rotated = swapped.apply_phase(readout, std::f64::consts::PI).unwrap();
    let aligned = if max_diff(&swapped, &lossy) < max_diff(&rotated, &lossy) {
        swapped
    } else {
        rotated
    };
    assert!(max_diff(&aligned, &lossy) < 1e-9, "{}", max_diff(&aligned, &lossy));
    // populations never depend on that phase
    for n in 0..=CUTOFF {
        for m in 0..=CUTOFF {
            let got = aligned.population(&[n, m]);
            assert!((got - lossy.population(&[n, m])).abs() < 1e-12);
        }
    }
}
