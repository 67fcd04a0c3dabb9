//! Randomized structural properties: identities that must hold for every
//! admissible input, not just hand-picked examples.

use proptest::prelude::*;

use hybridyn::ensemble::gamma_factor;
use hybridyn::hermitian::HermitianMatrix;
use hybridyn::integrator::{step, IntegratorConfig, Method};
use hybridyn::models::make_bilinear_oscillators;
use hybridyn::numeric::CompensatedSum;
use hybridyn::oscillator::{
    eval_observable, phase_to_state, qm_poisson, state_to_phase,
};
use hybridyn::phase::{ClPhasePoint, HybridPoint, QmPhasePoint};
use hybridyn::rng::seeded;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric(dim in 2usize..6, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let f = HermitianMatrix::random(dim, &mut rng);
        let g = HermitianMatrix::random(dim, &mut rng);
        let z = QmPhasePoint::random_on_sphere(dim, &mut rng);
        let fg = qm_poisson(&f, &g, &z).unwrap();
        let gf = qm_poisson(&g, &f, &z).unwrap();
        let scale = 1.0 + f.max_abs() * g.max_abs();
        prop_assert!((fg + gf).abs() < 1e-12 * scale, "{fg} vs {gf}");
    }

    #[test]
    fn bracket_agrees_with_commutator_route(dim in 2usize..6, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let f = HermitianMatrix::random(dim, &mut rng);
        let g = HermitianMatrix::random(dim, &mut rng);
        let z = QmPhasePoint::random_on_sphere(dim, &mut rng);
        let direct = qm_poisson(&f, &g, &z).unwrap();
        let commutator = HermitianMatrix::commutator_over_i(&f, &g).unwrap();
        let via_matrix = eval_observable(&commutator, &z).unwrap();
        prop_assert!((direct - via_matrix).abs() < 1e-10, "{direct} vs {via_matrix}");
    }

    #[test]
    fn phase_state_roundtrip_is_lossless(dim in 1usize..8, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let z = QmPhasePoint::random_on_sphere(dim, &mut rng);
        let back = state_to_phase(&phase_to_state(&z).unwrap());
        prop_assert!(z.max_component_distance(&back) < 1e-14);
    }

    #[test]
    fn single_step_preserves_constraint(seed in any::<u64>(), dt in 1e-4..3e-3f64) {
        let mut rng = seeded(seed);
        let model = make_bilinear_oscillators(&[1.0], &[1.0], &[0.1], 1.0, 1.0, 6).unwrap();
        let start = HybridPoint::new(
            ClPhasePoint::from_slices(&[0.4], &[-0.2]).unwrap(),
            QmPhasePoint::random_on_sphere(6, &mut rng),
        );
        for method in [Method::Rk4, Method::ImplicitMidpoint] {
            let cfg = IntegratorConfig::new(method, dt, dt);
            let next = step(&model, &start, &cfg).unwrap();
            let drift = (next.qm.constraint() - start.qm.constraint()).abs();
            prop_assert!(drift < 1e-10, "{method:?}: constraint drift {drift:.3e}");
        }
    }

    #[test]
    fn compensated_sum_is_permutation_stable(values in prop::collection::vec(-1e6..1e6f64, 2..64)) {
        let forward: f64 = {
            let mut acc = CompensatedSum::new();
            values.iter().for_each(|&v| acc.add(v));
            acc.value()
        };
        let backward: f64 = {
            let mut acc = CompensatedSum::new();
            values.iter().rev().for_each(|&v| acc.add(v));
            acc.value()
        };
        let magnitude: f64 = values.iter().map(|v| v.abs()).sum();
        prop_assert!(
            (forward - backward).abs() <= 1e-15 * (1.0 + magnitude),
            "{forward} vs {backward}"
        );
    }

    #[test]
    fn flatten_roundtrip_is_bit_exact(n_cl in 1usize..4, n_qm in 1usize..6, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let qm = QmPhasePoint::random_on_sphere(n_qm, &mut rng);
        let xs: Vec<f64> = (0..n_cl).map(|k| 0.3 * k as f64 - 0.7).collect();
        let ps: Vec<f64> = (0..n_cl).map(|k| 0.1 - 0.2 * k as f64).collect();
        let point = HybridPoint::new(ClPhasePoint::from_slices(&xs, &ps).unwrap(), qm);
        let back = HybridPoint::unflatten(n_cl, n_qm, &point.flatten()).unwrap();
        prop_assert!(back.max_distance(&point) == 0.0);
    }
}

#[test]
fn gamma_factors_satisfy_the_recurrence() {
    let two_pi = 2.0 * std::f64::consts::PI;
    for n in 1..=11usize {
        let current = gamma_factor(n).unwrap();
        let next = gamma_factor(n + 1).unwrap();
        let expected = (n + 1) as f64 / two_pi;
        let rel = (next / current - expected).abs() / expected;
        assert!(rel < 1e-14, "n = {n}: ratio off by {rel:.3e}");
    }
}
