//! End-to-end acceptance checks. Each test prints a single [PASS]/[FAIL]
//! line (visible with `cargo test --test acceptance -- --nocapture`) and
//! asserts the stated tolerance. A process-wide lock keeps the criteria from
//! sharing the machine, so the wall-clock budgets mean what they say.

use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use num_complex::Complex64;

use hybridyn::config::{
    BracketClosureConfig, EnsembleSeparabilityConfig, PeresTernoConfig, QbitDecoherenceConfig,
    SphereIdentitiesConfig, TwoBodyConfig,
};
use hybridyn::experiments::ExperimentOutcome;
use hybridyn::hermitian::HermitianMatrix;
use hybridyn::integrator::{convergence_order, integrate, IntegratorConfig, Method};
use hybridyn::models::{displaced_ground_state, make_bilinear_oscillators};
use hybridyn::oscillator::{eval_observable, qm_poisson, schrodinger_reference, state_to_phase};
use hybridyn::phase::{ClPhasePoint, HybridPoint, QmPhasePoint, QuantumState};
use hybridyn::rng::seeded;

fn serial() -> MutexGuard<'static, ()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    LOCK.get_or_init(Mutex::default)
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn report(criterion: &str, pass: bool, detail: &str) {
    let tag = if pass { "[PASS]" } else { "[FAIL]" };
    println!("{tag} {criterion}: {detail}");
    assert!(pass, "{criterion}: {detail}");
}

fn report_budget(criterion: &str, started: Instant, budget_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    report(
        criterion,
        elapsed < budget_s,
        &format!("wall clock {elapsed:.2}s within {budget_s:.0}s budget"),
    );
}

fn all_checks_pass(criterion: &str, outcome: &ExperimentOutcome) {
    for check in &outcome.checks {
        let relation = if check.pass { "within" } else { "violates" };
        report(
            criterion,
            check.pass,
            &format!(
                "{} = {:.3e} {} threshold {:.3e}",
                check.name, check.value, relation, check.threshold
            ),
        );
    }
}

#[test]
fn criterion_01_bracket_matches_commutator_route() {
    let _guard = serial();
    let started = Instant::now();
    let mut rng = seeded(101);
    let mut worst: f64 = 0.0;
    let mut pairs = 0usize;
    for &dim in &[2usize, 4, 8, 16] {
        for _ in 0..50 {
            let f = HermitianMatrix::random(dim, &mut rng);
            let g = HermitianMatrix::random(dim, &mut rng);
            let z = QmPhasePoint::random_on_sphere(dim, &mut rng);
            let via_bracket = qm_poisson(&f, &g, &z).unwrap();
            let commutator = HermitianMatrix::commutator_over_i(&f, &g).unwrap();
            let via_matrix = eval_observable(&commutator, &z).unwrap();
            worst = worst.max((via_bracket - via_matrix).abs());
            pairs += 1;
        }
    }
    report(
        "criterion 01",
        worst < 1e-10,
        &format!("max |bracket - commutator route| = {worst:.3e} over {pairs} pairs (< 1e-10)"),
    );
    report_budget("criterion 01", started, 5.0);
}

#[test]
fn criterion_02_midpoint_conserves_energy_and_constraint() {
    let _guard = serial();
    let started = Instant::now();
    let model = make_bilinear_oscillators(&[1.0], &[1.0], &[0.1], 1.0, 1.0, 8).unwrap();
    let packet = displaced_ground_state(8, 1.0, 0.2, 0.0).unwrap();
    let start = HybridPoint::new(
        ClPhasePoint::from_slices(&[0.3], &[0.0]).unwrap(),
        state_to_phase(&packet),
    );
    let cfg = IntegratorConfig::new(Method::ImplicitMidpoint, 1e-3, 50.0).with_stride(100);
    let traj = integrate(&model, &start, &cfg).unwrap();
    report(
        "criterion 02",
        traj.max_constraint_drift() < 1e-9,
        &format!(
            "constraint drift = {:.3e} over t = 50 (< 1e-9)",
            traj.max_constraint_drift()
        ),
    );
    report(
        "criterion 02",
        traj.max_energy_drift() < 1e-8,
        &format!(
            "energy drift = {:.3e} over t = 50 (< 1e-8)",
            traj.max_energy_drift()
        ),
    );
    report_budget("criterion 02", started, 30.0);
}

#[test]
fn criterion_03_coupled_means_match_normal_mode_solution() {
    let _guard = serial();
    let outcome = hybridyn::experiments::run_experiment(
        &hybridyn::config::ExperimentConfig::PeresTerno(PeresTernoConfig::default()),
        "acceptance",
    )
    .unwrap();
    all_checks_pass("criterion 03", &outcome);
}

#[test]
fn criterion_04_uncoupled_run_matches_both_closed_forms() {
    let _guard = serial();
    let started = Instant::now();
    let n_trunc = 8;
    let model = make_bilinear_oscillators(&[1.0], &[1.0], &[0.0], 1.0, 1.0, n_trunc).unwrap();
    // A superposition with support on every level, so the comparison
    // exercises all truncated frequencies at once.
    let weights: Vec<Complex64> = (0..n_trunc)
        .map(|k| Complex64::new(1.0 + 0.3 * k as f64, 0.2 * k as f64))
        .collect();
    let norm = weights.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let comps: Vec<Complex64> = weights.into_iter().map(|c| c / norm).collect();
    let initial = QuantumState::from_components(&comps).unwrap();
    let (x0, p0) = (0.7, -0.4);
    let start = HybridPoint::new(
        ClPhasePoint::from_slices(&[x0], &[p0]).unwrap(),
        state_to_phase(&initial),
    );
    let cfg = IntegratorConfig::new(Method::Rk4, 1e-3, 16.0).with_stride(250);
    let traj = integrate(&model, &start, &cfg).unwrap();

    // 65 recorded points; t = 0 is trivially exact, leaving 64 comparisons.
    let times: Vec<f64> = traj.times[1..].to_vec();
    assert_eq!(times.len(), 64);
    let reference = schrodinger_reference(model.h_qm(), &initial, &times).unwrap();
    let mut qm_err: f64 = 0.0;
    let mut cl_err: f64 = 0.0;
    for (k, t) in times.iter().enumerate() {
        let point = &traj.points[k + 1];
        qm_err = qm_err.max(point.qm.max_component_distance(&state_to_phase(&reference[k])));
        let x = x0 * t.cos() + p0 * t.sin();
        let p = p0 * t.cos() - x0 * t.sin();
        cl_err = cl_err.max((point.cl.x[0] - x).abs().max((point.cl.p[0] - p).abs()));
    }
    report(
        "criterion 04",
        qm_err < 1e-7,
        &format!("max quantum deviation from exact propagator = {qm_err:.3e} at 64 times (< 1e-7)"),
    );
    report(
        "criterion 04",
        cl_err < 1e-7,
        &format!("max classical deviation from closed form = {cl_err:.3e} at 64 times (< 1e-7)"),
    );
    report_budget("criterion 04", started, 10.0);
}

#[test]
fn criterion_05_factorized_ensembles_stay_separable() {
    let _guard = serial();
    let started = Instant::now();
    let outcome = hybridyn::experiments::run_experiment(
        &hybridyn::config::ExperimentConfig::EnsembleSeparability(
            EnsembleSeparabilityConfig::default(),
        ),
        "acceptance",
    )
    .unwrap();
    all_checks_pass("criterion 05", &outcome);
    report_budget("criterion 05", started, 120.0);
}

#[test]
fn criterion_06_sphere_moments_and_normalization_factors() {
    let _guard = serial();
    let outcome = hybridyn::experiments::run_experiment(
        &hybridyn::config::ExperimentConfig::SphereIdentities(SphereIdentitiesConfig::default()),
        "acceptance",
    )
    .unwrap();
    all_checks_pass("criterion 06", &outcome);
}

#[test]
fn criterion_07_two_body_invariants_and_relative_frequency() {
    let _guard = serial();
    let outcome = hybridyn::experiments::run_experiment(
        &hybridyn::config::ExperimentConfig::TwoBody(TwoBodyConfig::default()),
        "acceptance",
    )
    .unwrap();
    all_checks_pass("criterion 07", &outcome);
}

#[test]
fn criterion_08_dephasing_envelope_matches_average() {
    let _guard = serial();
    let started = Instant::now();
    let outcome = hybridyn::experiments::run_experiment(
        &hybridyn::config::ExperimentConfig::QbitDecoherence(QbitDecoherenceConfig::default()),
        "acceptance",
    )
    .unwrap();
    all_checks_pass("criterion 08", &outcome);
    report_budget("criterion 08", started, 180.0);
}

#[test]
fn criterion_09_quartic_terms_match_finite_differences() {
    let _guard = serial();
    let outcome = hybridyn::experiments::run_experiment(
        &hybridyn::config::ExperimentConfig::BracketClosure(BracketClosureConfig::default()),
        "acceptance",
    )
    .unwrap();
    all_checks_pass("criterion 09", &outcome);
}

#[test]
fn criterion_10_measured_convergence_orders() {
    let _guard = serial();
    let model = make_bilinear_oscillators(&[1.0], &[1.0], &[0.1], 1.0, 1.0, 6).unwrap();
    let mut rng = seeded(110);
    let start = HybridPoint::new(
        ClPhasePoint::from_slices(&[0.4], &[-0.2]).unwrap(),
        QmPhasePoint::random_on_sphere(6, &mut rng),
    );
    let orders = convergence_order(&model, &start, 0.05, 2.0).unwrap();
    report(
        "criterion 10",
        (orders.implicit_midpoint - 2.0).abs() < 0.2,
        &format!(
            "implicit midpoint measured order = {:.3} (2 +- 0.2)",
            orders.implicit_midpoint
        ),
    );
    report(
        "criterion 10",
        (orders.rk4 - 4.0).abs() < 0.3,
        &format!("rk4 measured order = {:.3} (4 +- 0.3)", orders.rk4),
    );
}
