use proptest::prelude::*;
use ucesim_core::column::{dense_unitary_oracle, simulate_first_column, unitarity_residual};
use ucesim_core::cue::{cue_correlator, cue_log_cumulative, cue_moment};
use ucesim_core::ensemble::ConvergenceCurve;
use ucesim_core::gateset::{sample_circuit, u2_matrix, Circuit, GateAngles};
use ucesim_core::scaling::n_star;
use ucesim_core::stats::{hellinger_from_masses, StatisticKind};

const TAU: f64 = std::f64::consts::TAU;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn u2_matrix_is_unitary(alpha in 0.0..TAU, psi in 0.0..TAU, chi in 0.0..TAU, xi in 0.0..=1.0f64) {
        let m = u2_matrix(&GateAngles::from_xi(alpha, psi, chi, xi));
        for i in 0..2 {
            for j in 0..2 {
                let dot = m[0][i].conj() * m[0][j] + m[1][i].conj() * m[1][j];
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot.re - target).abs() < 1e-14 && dot.im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn column_matches_dense_oracle(seed in any::<u64>(), n_qubits in 1usize..=5, n_gates in 0usize..40) {
        let circuit = sample_circuit(seed, 0, n_qubits, n_gates, 0.5).unwrap();
        let state = simulate_first_column(&circuit, &[n_gates]).unwrap().remove(0);
        let dense = dense_unitary_oracle(&circuit).unwrap();
        prop_assert!(unitarity_residual(&dense) < 1e-12);
        for (row, amp) in state.amplitudes().iter().enumerate() {
            prop_assert!((amp - dense[(row, 0)]).norm() < 1e-12);
        }
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circuit_text_round_trips(seed in any::<u64>(), idx in any::<u64>(), n_qubits in 1usize..=8, n_gates in 0usize..30) {
        let circuit = sample_circuit(seed, idx, n_qubits, n_gates, 0.5).unwrap();
        let parsed: Circuit = circuit.to_text().parse().unwrap();
        prop_assert_eq!(parsed, circuit);
    }

    #[test]
    fn cue_moments_are_ordered(dim in 2u64..5000, k in 1u32..8) {
        let mu = cue_moment(k, dim);
        let factorial = (1..=k).map(f64::from).product::<f64>();
        prop_assert!(mu <= factorial * (1.0 + 1e-12));
        prop_assert!(cue_moment(k + 1, dim) >= mu);
        prop_assert!((cue_correlator(k, dim) - mu / factorial).abs() <= 1e-12 * mu);
    }

    #[test]
    fn cue_cumulative_is_monotone(dim in 2u64..4096, a in -40.0..8.0f64, b in -40.0..8.0f64) {
        let ln_n = (dim as f64).ln();
        let (lo, hi) = if a < b { (a.min(ln_n), b.min(ln_n)) } else { (b.min(ln_n), a.min(ln_n)) };
        let (f_lo, f_hi) = (cue_log_cumulative(lo, dim), cue_log_cumulative(hi, dim));
        prop_assert!((0.0..=1.0).contains(&f_lo) && (0.0..=1.0).contains(&f_hi));
        prop_assert!(f_lo <= f_hi + 1e-15);
    }

    #[test]
    fn hellinger_is_bounded_and_zero_on_identity(raw in prop::collection::vec(0.0..1.0f64, 2..50)) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 0.0);
        let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let mut q = p.clone();
        q.rotate_left(1);
        prop_assert!(hellinger_from_masses(&p, &p) < 1e-12);
        let d = hellinger_from_masses(&p, &q);
        prop_assert!((0.0..=2.0).contains(&d));
    }

    #[test]
    fn n_star_grows_as_eps_shrinks(decay in 0.05..1.0f64, e1 in 1e-3..0.9f64, e2 in 1e-3..0.9f64) {
        let points: Vec<(usize, f64)> = (1..=400).map(|g| (g, (-decay * g as f64).exp())).collect();
        let mut curve = ConvergenceCurve::new(3, StatisticKind::Moment(2), points, 1, 0);
        curve.d_min = None;
        let (loose, tight) = if e1 > e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(n_star(&curve, tight, 2.0).unwrap() >= n_star(&curve, loose, 2.0).unwrap());
    }
}
