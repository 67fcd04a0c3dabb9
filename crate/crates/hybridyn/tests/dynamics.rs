//! Cross-module dynamics checks: integrated trajectories against
//! closed-form references and against the mean-value equations of motion.

use num_complex::Complex64;

use hybridyn::decoherence::{offdiagonal_element, offdiagonal_from_point};
use hybridyn::hermitian::HermitianMatrix;
use hybridyn::integrator::{integrate, IntegratorConfig, Method};
use hybridyn::models::{make_bilinear_oscillators, make_qbit_environment, HybridModel};
use hybridyn::oscillator::{schrodinger_reference, state_to_phase};
use hybridyn::phase::{ClPhasePoint, HybridPoint, QuantumState};

/// Mean values along a recorded trajectory.
fn means(model: &HybridModel, traj: &hybridyn::integrator::Trajectory) -> Vec<[f64; 4]> {
    traj.points
        .iter()
        .zip(traj.times.iter())
        .map(|(pt, &t)| {
            let rec = model.ehrenfest_observables(pt, t).unwrap();
            [rec.cl_x[0], rec.cl_p[0], rec.x_mean, rec.p_mean]
        })
        .collect()
}

#[test]
fn mean_values_satisfy_coupled_equations_of_motion() {
    // The time derivatives of the recorded means must close on the means
    // themselves: the bilinear coupling adds no fluctuation back-reaction.
    let (m, om, qm_mass, qm_om, lam) = (1.0, 1.0, 1.0, 1.0, 0.1);
    let model = make_bilinear_oscillators(&[m], &[om], &[lam], qm_mass, qm_om, 10).unwrap();
    let packet =
        hybridyn::models::displaced_ground_state(10, 1.0, 0.4, -0.1).unwrap();
    let start = HybridPoint::new(
        ClPhasePoint::from_slices(&[0.5], &[0.2]).unwrap(),
        state_to_phase(&packet),
    );
    let dt = 1e-3;
    let cfg = IntegratorConfig::new(Method::Rk4, dt, 1.0);
    let traj = integrate(&model, &start, &cfg).unwrap();
    let recs = means(&model, &traj);

    let mut worst: f64 = 0.0;
    for k in (100..recs.len() - 100).step_by(97) {
        let dot = |i: usize| (recs[k + 1][i] - recs[k - 1][i]) / (2.0 * dt);
        let [x, p, qx, qp] = recs[k];
        worst = worst.max((dot(0) - p / m).abs());
        worst = worst.max((dot(1) + m * om * om * x + lam * qx).abs());
        worst = worst.max((dot(2) - qp / qm_mass).abs());
        worst = worst.max((dot(3) + qm_mass * qm_om * qm_om * qx + lam * x).abs());
    }
    assert!(worst < 1e-6, "worst closure residual {worst:.3e}");
}

#[test]
fn uncoupled_qbit_environment_matches_both_closed_forms() {
    // With the coupling off, the two-level system follows the exact
    // propagator of diag(E1, E2) and the environment oscillator follows the
    // classical closed form, independently.
    let (e1, e2) = (0.9, 2.1);
    let (m, om) = (1.4, 0.8);
    let model =
        make_qbit_environment(e1, e2, HermitianMatrix::pauli_x(), &[m], &[om], &[0.0]).unwrap();
    let initial = QuantumState::from_components(&[
        Complex64::new(0.6, 0.0),
        Complex64::new(0.0, 0.8),
    ])
    .unwrap();
    let (x0, p0) = (0.7, -0.3);
    let start = HybridPoint::new(
        ClPhasePoint::from_slices(&[x0], &[p0]).unwrap(),
        state_to_phase(&initial),
    );
    let cfg = IntegratorConfig::new(Method::Rk4, 1e-3, 9.0).with_stride(500);
    let traj = integrate(&model, &start, &cfg).unwrap();

    let times: Vec<f64> = traj.times.clone();
    let reference = schrodinger_reference(model.h_qm(), &initial, &times).unwrap();
    for (k, &t) in times.iter().enumerate() {
        let qm_dev = traj.points[k]
            .qm
            .max_component_distance(&state_to_phase(&reference[k]));
        assert!(qm_dev < 1e-7, "quantum deviation {qm_dev:.3e} at t = {t}");
        let x = x0 * (om * t).cos() + p0 / (m * om) * (om * t).sin();
        let p = p0 * (om * t).cos() - m * om * x0 * (om * t).sin();
        let cl_dev = (traj.points[k].cl.x[0] - x)
            .abs()
            .max((traj.points[k].cl.p[0] - p).abs());
        assert!(cl_dev < 1e-7, "classical deviation {cl_dev:.3e} at t = {t}");
    }
}

#[test]
fn offdiagonal_element_composes_single_frequency_solutions() {
    // The closed form is the product of two single-frequency dressed
    // oscillations with undressed amplitudes, expanded through xi^2; the
    // residual against the unexpanded product is fourth order in xi.
    use hybridyn::decoherence::weak_coupling_frequencies;
    let (e1, e2) = (1.0, 2.3);
    for &xi in &[0.2, 0.1] {
        let (om1, om2) = weak_coupling_frequencies(e1, e2, xi).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..=1200 {
            let t = 0.01 * k as f64;
            let c1 = Complex64::new((om1 * t).cos(), -(om1 / e1) * (om1 * t).sin());
            let c2 = Complex64::new((om2 * t).cos(), -(om2 / e2) * (om2 * t).sin());
            let product = c1 * c2.conj();
            let element = offdiagonal_element(e1, e2, xi, t).unwrap();
            worst = worst.max((product - element).norm());
        }
        assert!(
            worst < 0.05 * xi.powi(4),
            "xi = {xi}: residual {worst:.3e} beyond fourth order"
        );
    }
}

/// Worst modulus deviation between the simulated off-diagonal element under
/// a quasi-static environment and the second-order closed form.
fn static_field_modulus_deviation(xi: f64) -> f64 {
    let (e1, e2) = (1.0, 2.3);
    // A heavy, slow oscillator pins the classical coordinate at x0 = xi for
    // the duration of the run, so the two-level system sees a static field.
    let model =
        make_qbit_environment(e1, e2, HermitianMatrix::pauli_x(), &[1e6], &[1e-3], &[1.0])
            .unwrap();
    let start = HybridPoint::new(
        ClPhasePoint::from_slices(&[xi], &[0.0]).unwrap(),
        state_to_phase(&QuantumState::uniform_superposition(2)),
    );
    let cfg = IntegratorConfig::new(Method::Rk4, 1e-3, 12.0).with_stride(100);
    let traj = integrate(&model, &start, &cfg).unwrap();
    let mut worst: f64 = 0.0;
    for (k, &t) in traj.times.iter().enumerate() {
        // rho_12(0) = 1/2 for the uniform superposition; the closed form is
        // normalized to rho_12(0) = 1.
        let simulated = 2.0 * offdiagonal_from_point(&traj.points[k].qm);
        let predicted = offdiagonal_element(e1, e2, xi, t).unwrap();
        worst = worst.max((simulated.norm() - predicted.norm()).abs());
    }
    worst
}

#[test]
fn static_environment_modulus_matches_at_second_order() {
    // Mode mixing shifts the complex phase of the true coupled dynamics at
    // first order in xi, but the modulus, which carries the dephasing
    // signal, deviates from the closed form only at second order.
    let dev_full = static_field_modulus_deviation(0.1);
    let dev_half = static_field_modulus_deviation(0.05);
    assert!(
        dev_full < 8.0 * 0.1f64.powi(2),
        "modulus deviation {dev_full:.3e} too large at xi = 0.1"
    );
    let ratio = dev_full / dev_half;
    assert!(
        (2.5..6.0).contains(&ratio),
        "deviation ratio {ratio:.3} not consistent with quadratic scaling \
         ({dev_full:.3e} vs {dev_half:.3e})"
    );
}

#[test]
fn rapid_oscillator_raises_regime_warning_but_still_runs() {
    // A fast environment invalidates the adiabatic reading of the averaged
    // dephasing; the parameter set flags it while the dynamics stay sound.
    let params = hybridyn::decoherence::DecoherenceParams {
        e1: 4.0,
        e2: 8.0,
        lambda: 0.05,
        env_mass: 1.0,
        env_omega: 3.0,
        dt: 1e-3,
        t_max: 2.0,
        record_stride: 10,
    };
    assert_eq!(params.regime_warnings().len(), 1);
    params.validate().unwrap();
}
