//! Experiment runners behind the command line. Each runner assembles a
//! model, produces its data table, and reduces the comparison against the
//! matching closed-form or statistical reference to named pass/fail checks.

use crate::bracket::{eval_hybrid, quartic_terms, HybridObservable, MatrixField};
use crate::config::{
    BracketClosureConfig, EnsembleSeparabilityConfig, ExperimentConfig, PeresTernoConfig,
    QbitDecoherenceConfig, SphereIdentitiesConfig, TwoBodyConfig,
};
use crate::decoherence::decoherence_experiment;
use crate::ensemble::{
    evolve_ensemble_recorded, gamma_factor, hybrid_cross_covariance, marginal_cl,
    sphere_identity_check, ClAxis, HybridEnsemble,
};
use crate::error::{HybridError, Result};
use crate::hermitian::{random_unitary, HermitianMatrix};
use crate::integrator::{integrate, IntegratorConfig};
use crate::models::{
    displaced_ground_state, make_bilinear_oscillators, make_qbit_environment,
    make_two_body_harmonic,
};
use crate::numeric::{linspace, CompensatedSum};
use crate::oscillator::{eval_observable, qm_poisson, state_to_phase};
use crate::phase::{ClPhasePoint, HybridPoint, QmPhasePoint};
use crate::report::{Check, CsvTable};
use crate::rng::{seeded, standard_normal};

/// Everything a finished experiment hands back to the command line: the
/// check list, regime warnings, the stamped data table, and optionally a
/// final ensemble snapshot.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub table: CsvTable,
    pub snapshot: Option<HybridEnsemble>,
}

/// Dispatch a validated configuration and stamp the shared metadata onto
/// the data table. `digest` identifies the exact configuration bytes.
pub fn run_experiment(cfg: &ExperimentConfig, digest: &str) -> Result<ExperimentOutcome> {
    let mut outcome = match cfg {
        ExperimentConfig::PeresTerno(c) => run_peres_terno(c),
        ExperimentConfig::QbitDecoherence(c) => run_qbit_decoherence(c),
        ExperimentConfig::TwoBody(c) => run_two_body(c),
        ExperimentConfig::EnsembleSeparability(c) => run_ensemble_separability(c),
        ExperimentConfig::SphereIdentities(c) => run_sphere_identities(c),
        ExperimentConfig::BracketClosure(c) => run_bracket_closure(c),
    }?;
    outcome.table.metadata.splice(
        0..0,
        [
            ("experiment".to_string(), cfg.name().to_string()),
            ("seed".to_string(), cfg.seed().to_string()),
            ("params_digest".to_string(), digest.to_string()),
        ],
    );
    Ok(outcome)
}

/// Closed-form mean-value dynamics of one classical and one quantum
/// oscillator with bilinear coupling. Both mean positions obey the same
/// linear two-oscillator system, so the exact solution follows from the
/// normal modes of the mass-weighted coupling matrix
/// [[omega^2, kappa], [kappa, Omega^2]] with kappa = lambda / sqrt(m M).
#[derive(Debug, Clone)]
pub struct MeanFieldPair {
    omega: [f64; 2],
    basis: [[f64; 2]; 2],
    q0: [f64; 2],
    qdot0: [f64; 2],
    sqrt_cl: f64,
    sqrt_qm: f64,
}

/// Mean values of both oscillators at one time.
#[derive(Debug, Clone, Copy)]
pub struct MeanFieldState {
    pub x: f64,
    pub p: f64,
    pub qm_x: f64,
    pub qm_p: f64,
}

impl MeanFieldPair {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cl_mass: f64,
        cl_omega: f64,
        qm_mass: f64,
        qm_omega: f64,
        lambda: f64,
        x0: f64,
        p0: f64,
        qm_x0: f64,
        qm_p0: f64,
    ) -> Result<Self> {
        if !(cl_mass > 0.0 && cl_omega > 0.0 && qm_mass > 0.0 && qm_omega > 0.0) {
            return Err(HybridError::InvalidParameter {
                name: "mean_field_pair".into(),
                reason: "masses and frequencies must be positive".into(),
            });
        }
        let a = cl_omega * cl_omega;
        let b = qm_omega * qm_omega;
        let kappa = lambda / (cl_mass * qm_mass).sqrt();
        let half_sum = 0.5 * (a + b);
        let half_diff = 0.5 * (a - b);
        let disc = (half_diff * half_diff + kappa * kappa).sqrt();
        let mu = [half_sum + disc, half_sum - disc];
        if !(mu[1] > 0.0) {
            return Err(HybridError::InvalidParameter {
                name: "lambda".into(),
                reason: format!(
                    "coupling destabilizes the lower normal mode (mu = {})",
                    mu[1]
                ),
            });
        }
        let basis = if kappa != 0.0 {
            let unit = |vx: f64, vy: f64| {
                let norm = vx.hypot(vy);
                [vx / norm, vy / norm]
            };
            [unit(kappa, mu[0] - a), unit(kappa, mu[1] - a)]
        } else if half_diff >= 0.0 {
            [[1.0, 0.0], [0.0, 1.0]]
        } else {
            [[0.0, 1.0], [1.0, 0.0]]
        };
        // Mass-weighted coordinates u = (sqrt(m) x, sqrt(M) X) and their
        // velocities, projected onto the orthonormal eigenvectors.
        let sqrt_cl = cl_mass.sqrt();
        let sqrt_qm = qm_mass.sqrt();
        let u0 = [sqrt_cl * x0, sqrt_qm * qm_x0];
        let udot0 = [p0 / sqrt_cl, qm_p0 / sqrt_qm];
        let project = |v: &[f64; 2], w: &[f64; 2]| v[0] * w[0] + v[1] * w[1];
        Ok(Self {
            omega: [mu[0].sqrt(), mu[1].sqrt()],
            q0: [project(&basis[0], &u0), project(&basis[1], &u0)],
            qdot0: [project(&basis[0], &udot0), project(&basis[1], &udot0)],
            basis,
            sqrt_cl,
            sqrt_qm,
        })
    }

    /// The two normal-mode angular frequencies, higher first.
    pub fn frequencies(&self) -> (f64, f64) {
        (self.omega[0], self.omega[1])
    }

    pub fn evaluate(&self, t: f64) -> MeanFieldState {
        let mut u = [0.0; 2];
        let mut udot = [0.0; 2];
        for i in 0..2 {
            let (s, c) = (self.omega[i] * t).sin_cos();
            let q = self.q0[i] * c + self.qdot0[i] / self.omega[i] * s;
            let qdot = -self.q0[i] * self.omega[i] * s + self.qdot0[i] * c;
            u[0] += q * self.basis[i][0];
            u[1] += q * self.basis[i][1];
            udot[0] += qdot * self.basis[i][0];
            udot[1] += qdot * self.basis[i][1];
        }
        MeanFieldState {
            x: u[0] / self.sqrt_cl,
            p: udot[0] * self.sqrt_cl,
            qm_x: u[1] / self.sqrt_qm,
            qm_p: udot[1] * self.sqrt_qm,
        }
    }
}

fn run_peres_terno(c: &PeresTernoConfig) -> Result<ExperimentOutcome> {
    let model = make_bilinear_oscillators(
        &[c.cl_mass],
        &[c.cl_omega],
        &[c.lambda],
        c.qm_mass,
        c.qm_omega,
        c.n_trunc,
    )?;
    let length_scale = 1.0 / (c.qm_mass * c.qm_omega).sqrt();
    let ground = displaced_ground_state(c.n_trunc, length_scale, 0.0, 0.0)?;
    let start = HybridPoint::new(
        ClPhasePoint::from_slices(&[c.x0], &[c.p0])?,
        state_to_phase(&ground),
    );
    let integrator = IntegratorConfig::new(c.method, c.dt, c.t_final).with_stride(c.record_stride);
    let traj = integrate(&model, &start, &integrator)?;

    let first = model.ehrenfest_observables(&traj.points[0], traj.times[0])?;
    let reference = MeanFieldPair::new(
        c.cl_mass,
        c.cl_omega,
        c.qm_mass,
        c.qm_omega,
        c.lambda,
        c.x0,
        c.p0,
        first.x_mean,
        first.p_mean,
    )?;

    let mut table = CsvTable::new(&[
        "t",
        "x",
        "p",
        "qm_x_mean",
        "qm_p_mean",
        "x_closed_form",
        "qm_x_closed_form",
    ]);
    let mut cl_err: f64 = 0.0;
    let mut qm_err: f64 = 0.0;
    for (k, point) in traj.points.iter().enumerate() {
        let t = traj.times[k];
        let rec = model.ehrenfest_observables(point, t)?;
        let exact = reference.evaluate(t);
        cl_err = cl_err.max((rec.cl_x[0] - exact.x).abs());
        qm_err = qm_err.max((rec.x_mean - exact.qm_x).abs());
        table.push_row(vec![
            t,
            rec.cl_x[0],
            rec.cl_p[0],
            rec.x_mean,
            rec.p_mean,
            exact.x,
            exact.qm_x,
        ]);
    }
    let (omega_hi, omega_lo) = reference.frequencies();
    table.meta("normal_mode_hi", format!("{omega_hi:.16e}"));
    table.meta("normal_mode_lo", format!("{omega_lo:.16e}"));

    let checks = vec![
        Check::upper("cl_position_max_error", cl_err, 1e-6),
        Check::upper("qm_position_max_error", qm_err, 1e-6),
        Check::upper("constraint_drift", traj.max_constraint_drift(), 1e-9),
    ];
    Ok(ExperimentOutcome {
        checks,
        warnings: Vec::new(),
        table,
        snapshot: None,
    })
}

fn extra_value(row: &[(&'static str, f64)], name: &str) -> f64 {
    row.iter()
        .find(|(n, _)| *n == name)
        .map(|(_, v)| *v)
        .unwrap_or(f64::NAN)
}

/// Frequency of a uniformly sampled harmonic series from the exact
/// three-point identity r(t-h) + r(t+h) = 2 cos(omega h) r(t), inverted
/// through the discrete dispersion relation. Returns None when the series
/// is too short, vanishes, or is inconsistent with a single frequency.
pub fn fitted_frequency(times: &[f64], series: &[f64]) -> Option<f64> {
    if times.len() < 4 || times.len() != series.len() {
        return None;
    }
    let h = times[1] - times[0];
    if !(h > 0.0) {
        return None;
    }
    // The final sample may close a shorter interval; drop it if so.
    let mut last = times.len() - 1;
    if (times[last] - times[last - 1] - h).abs() > 1e-9 * h {
        last -= 1;
    }
    let r = &series[..=last];
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for k in 1..r.len() - 1 {
        num.add((2.0 * r[k] - r[k - 1] - r[k + 1]) * r[k]);
        den.add(r[k] * r[k]);
    }
    if !(den.value() > 0.0) {
        return None;
    }
    let s = num.value() / (h * h * den.value());
    if !(s >= 0.0) {
        return None;
    }
    let half_sine = 0.5 * s.sqrt() * h;
    if half_sine > 1.0 {
        return None;
    }
    Some(2.0 / h * half_sine.asin())
}

fn run_two_body(c: &TwoBodyConfig) -> Result<ExperimentOutcome> {
    let scale = c.effective_basis_scale();
    let model = make_two_body_harmonic(c.cl_mass, c.qm_mass, c.lambda, c.n_trunc, scale)?;
    let packet = displaced_ground_state(c.n_trunc, scale, c.qm_x0, c.qm_p0)?;
    let start = HybridPoint::new(
        ClPhasePoint::from_slices(&[c.x0], &[c.p0])?,
        state_to_phase(&packet),
    );
    let integrator = IntegratorConfig::new(c.method, c.dt, c.t_final).with_stride(c.record_stride);
    let traj = integrate(&model, &start, &integrator)?;

    let mut table = CsvTable::new(&[
        "t",
        "x",
        "p",
        "qm_x_mean",
        "qm_p_mean",
        "total_momentum",
        "fluctuation_energy",
        "relative_coordinate",
    ]);
    let mut relative = Vec::with_capacity(traj.len());
    for (k, point) in traj.points.iter().enumerate() {
        let t = traj.times[k];
        let rec = model.ehrenfest_observables(point, t)?;
        let r = rec.x_mean - rec.cl_x[0];
        relative.push(r);
        table.push_row(vec![
            t,
            rec.cl_x[0],
            rec.cl_p[0],
            rec.x_mean,
            rec.p_mean,
            extra_value(&traj.extras[k], "total_momentum"),
            extra_value(&traj.extras[k], "fluctuation_energy"),
            r,
        ]);
    }

    let reduced_mass = c.cl_mass * c.qm_mass / (c.cl_mass + c.qm_mass);
    let omega_expected = (2.0 * c.lambda / reduced_mass).sqrt();
    let omega_fit = fitted_frequency(&traj.times, &relative);
    let freq_rel_error = omega_fit
        .map(|w| (w - omega_expected).abs() / omega_expected)
        .unwrap_or(f64::INFINITY);
    table.meta("relative_frequency_expected", format!("{omega_expected:.16e}"));
    table.meta("basis_scale", format!("{scale:.16e}"));

    let checks = vec![
        Check::upper(
            "total_momentum_drift",
            traj.max_extra_drift("total_momentum").unwrap_or(f64::INFINITY),
            1e-8,
        ),
        Check::upper(
            "fluctuation_energy_drift",
            traj.max_extra_drift("fluctuation_energy")
                .unwrap_or(f64::INFINITY),
            1e-8,
        ),
        Check::upper("relative_frequency_rel_error", freq_rel_error, 1e-4),
        Check::upper("constraint_drift", traj.max_constraint_drift(), 1e-9),
    ];
    Ok(ExperimentOutcome {
        checks,
        warnings: Vec::new(),
        table,
        snapshot: None,
    })
}

fn run_qbit_decoherence(c: &QbitDecoherenceConfig) -> Result<ExperimentOutcome> {
    let params = c.decoherence_params();
    let warnings = params.regime_warnings();
    let result = decoherence_experiment(&params, &c.distribution, c.realizations, c.seed)?;

    // Envelope sampling: one beat period of window, kept clear of both ends
    // so every window average has full support.
    let gap = (c.e2 - c.e1).abs();
    let window = 2.0 * std::f64::consts::PI / gap;
    let sample_times = linspace(3.0 * window, c.t_max - 3.2 * window, c.envelope_samples);
    let envelope = result.envelope(window, &sample_times);
    let control = result.control_envelope(window, &sample_times);

    let mut band_excess: f64 = 0.0;
    for sample in &envelope {
        let band = 4.0 * sample.stderr + 0.02;
        band_excess = band_excess.max((sample.value - sample.analytic).abs() / band);
    }
    let control_min = control.iter().copied().fold(f64::INFINITY, f64::min);
    let initial_error = (2.0 * result.mean_rho[0].norm() - 1.0).abs();

    let mut table = CsvTable::new(&[
        "t",
        "offdiag_re",
        "offdiag_im",
        "offdiag_abs_scaled",
        "reference_abs",
        "stderr_scaled",
        "control_abs_scaled",
    ]);
    table.meta("realizations", result.realizations);
    table.meta("envelope_window", format!("{window:.16e}"));
    for (k, &t) in result.times.iter().enumerate() {
        table.push_row(vec![
            t,
            result.mean_rho[k].re,
            result.mean_rho[k].im,
            2.0 * result.mean_rho[k].norm(),
            result.analytic_abs[k],
            2.0 * result.stderr[k],
            2.0 * result.control_abs[k],
        ]);
    }

    let checks = vec![
        Check::upper("envelope_band_excess", band_excess, 1.0),
        Check::lower("control_envelope_min", control_min, 0.9),
        Check::upper("initial_offdiagonal_error", initial_error, 1e-12),
    ];
    Ok(ExperimentOutcome {
        checks,
        warnings,
        table,
        snapshot: None,
    })
}

fn sigma_excess(value: f64, se: f64) -> f64 {
    if se == 0.0 {
        if value.abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        value.abs() / se
    }
}

fn run_ensemble_separability(c: &EnsembleSeparabilityConfig) -> Result<ExperimentOutcome> {
    let center = ClPhasePoint::from_slices(&[c.cl_x0], &[c.cl_p0])?;
    let ensemble = HybridEnsemble::sample_factorized(c.members, &center, c.cl_spread, 2, c.seed)?;

    // Part one: the classical marginal must not react to member-wise
    // quantum rotations, bit for bit.
    let half_width = 8.0 * c.cl_spread;
    let axes = [ClAxis::Position(0), ClAxis::Momentum(0)];
    let edges = vec![
        linspace(c.cl_x0 - half_width, c.cl_x0 + half_width, c.bins + 1),
        linspace(c.cl_p0 - half_width, c.cl_p0 + half_width, c.bins + 1),
    ];
    let before = marginal_cl(&ensemble, &axes, &edges)?;
    let mut unitary_rng = seeded(c.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let rotated = ensemble.map_qm_unitary(|_| random_unitary(2, &mut unitary_rng))?;
    let after = marginal_cl(&rotated, &axes, &edges)?;
    let changed_bins = before
        .masses
        .iter()
        .zip(after.masses.iter())
        .filter(|(a, b)| a.to_bits() != b.to_bits())
        .count();

    // Part two: under an uncoupled evolution the classical-quantum
    // cross-covariances of the product ensemble stay statistical noise.
    let model = make_qbit_environment(
        c.e1,
        c.e2,
        HermitianMatrix::pauli_x(),
        &[c.env_mass],
        &[c.env_omega],
        &[c.lambda],
    )?;
    let integrator =
        IntegratorConfig::new(crate::integrator::Method::Rk4, c.dt, c.t_final)
            .with_stride(c.record_stride);
    let snapshots = evolve_ensemble_recorded(&model, &ensemble, &integrator)?;

    let mut table = CsvTable::new(&[
        "t",
        "cov_x_sigma_z",
        "se_x_sigma_z",
        "cov_p_sigma_x",
        "se_p_sigma_x",
    ]);
    let mut worst_sigma: f64 = 0.0;
    for (t, snap) in &snapshots {
        let (cov_a, se_a) =
            hybrid_cross_covariance(snap, ClAxis::Position(0), &HermitianMatrix::pauli_z())?;
        let (cov_b, se_b) =
            hybrid_cross_covariance(snap, ClAxis::Momentum(0), &HermitianMatrix::pauli_x())?;
        worst_sigma = worst_sigma
            .max(sigma_excess(cov_a, se_a))
            .max(sigma_excess(cov_b, se_b));
        table.push_row(vec![*t, cov_a, se_a, cov_b, se_b]);
    }
    let last = snapshots
        .last()
        .map(|(_, snap)| snap.clone())
        .expect("recorded evolution keeps at least the start");

    let checks = vec![
        Check::upper("marginal_bins_changed_by_unitaries", changed_bins as f64, 0.0),
        Check::upper("cross_covariance_worst_sigma", worst_sigma, 4.0),
    ];
    Ok(ExperimentOutcome {
        checks,
        warnings: Vec::new(),
        table,
        snapshot: Some(last),
    })
}

fn run_sphere_identities(c: &SphereIdentitiesConfig) -> Result<ExperimentOutcome> {
    let mut table = CsvTable::new(&[
        "n",
        "a",
        "b",
        "estimate_re",
        "estimate_im",
        "stderr_re",
        "stderr_im",
    ]);
    table.meta("samples", c.samples);
    let mut checks = Vec::new();
    for (i, &n) in c.dims.iter().enumerate() {
        let identity = sphere_identity_check(n, c.samples, c.seed.wrapping_add(i as u64))?;
        for a in 0..n {
            for b in 0..n {
                table.push_row(vec![
                    n as f64,
                    a as f64,
                    b as f64,
                    identity.estimate[(a, b)].re,
                    identity.estimate[(a, b)].im,
                    identity.stderr_re[(a, b)],
                    identity.stderr_im[(a, b)],
                ]);
            }
        }
        checks.push(Check::upper(
            &format!("identity_sigma_n{n}"),
            identity.max_sigma_deviation(),
            4.0,
        ));
    }

    // The normalization factor by two independent routes: the integer
    // factorial over (2 pi)^n, and the solid-angle identity
    // n / (2^(n-1) Omega_{2n}) with Omega_{2n} = 2 pi^n / (n-1)!.
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut factorial_u64: u64 = 1;
    let mut factorial_nm1 = 1.0f64;
    let mut worst_gamma: f64 = 0.0;
    for n in 1..=c.gamma_max_n {
        factorial_u64 *= n as u64;
        if n > 1 {
            factorial_nm1 *= (n - 1) as f64;
        }
        let value = gamma_factor(n)?;
        let direct = factorial_u64 as f64 / two_pi.powi(n as i32);
        let omega = 2.0 * std::f64::consts::PI.powi(n as i32) / factorial_nm1;
        let via_area = n as f64 / (2f64.powi(n as i32 - 1) * omega);
        worst_gamma = worst_gamma
            .max((value - direct).abs() / direct)
            .max((value - via_area).abs() / via_area);
    }
    checks.push(Check::upper("gamma_dual_route_rel_error", worst_gamma, 1e-14));
    let anchor = (gamma_factor(1)? - 0.15915494309189535)
        .abs()
        .max((gamma_factor(2)? - 0.05066059182116889).abs());
    checks.push(Check::upper("gamma_anchor_abs_error", anchor, 1e-16));

    Ok(ExperimentOutcome {
        checks,
        warnings: Vec::new(),
        table,
        snapshot: None,
    })
}

fn run_bracket_closure(c: &BracketClosureConfig) -> Result<ExperimentOutcome> {
    let mut rng = seeded(c.seed);
    let mut table = CsvTable::new(&["dim", "pair", "abs_difference"]);
    let mut worst_commutator: f64 = 0.0;
    for &dim in &c.dims {
        for pair in 0..c.pairs_per_dim {
            let f = HermitianMatrix::random(dim, &mut rng);
            let g = HermitianMatrix::random(dim, &mut rng);
            let point = QmPhasePoint::random_on_sphere(dim, &mut rng);
            let via_bracket = qm_poisson(&f, &g, &point)?;
            let commutator = HermitianMatrix::commutator_over_i(&f, &g)?;
            let via_commutator = eval_observable(&commutator, &point)?;
            let diff = (via_bracket - via_commutator).abs();
            worst_commutator = worst_commutator.max(diff);
            table.push_row(vec![dim as f64, pair as f64, diff]);
        }
    }

    // Classical bracket terms of matrix-valued observables, probed with the
    // coordinate-weighted Pauli pair x sigma_x and p sigma_y, against a
    // classical-sector finite difference of the full expectation values.
    let pauli_a = HybridObservable::from_matrix(
        1,
        MatrixField::new(
            2,
            |pt: &ClPhasePoint| HermitianMatrix::pauli_x().scale(pt.x[0]),
            |_, _| HermitianMatrix::pauli_x(),
            |_, _| HermitianMatrix::zeros(2),
        ),
    );
    let pauli_b = HybridObservable::from_matrix(
        1,
        MatrixField::new(
            2,
            |pt: &ClPhasePoint| HermitianMatrix::pauli_y().scale(pt.p[0]),
            |_, _| HermitianMatrix::zeros(2),
            |_, _| HermitianMatrix::pauli_y(),
        ),
    );
    let mut worst_quartic: f64 = 0.0;
    for _ in 0..c.quartic_probes {
        let cl = ClPhasePoint::from_slices(&[standard_normal(&mut rng)], &[standard_normal(
            &mut rng,
        )])?;
        let qm = QmPhasePoint::random_on_sphere(2, &mut rng);
        let tensor = quartic_terms(&pauli_a, &pauli_b, &cl)?;
        let quartic = tensor.eval(&qm);

        let h = 1e-5;
        let eval_shifted = |dx: f64, dp: f64, obs: &HybridObservable| -> Result<f64> {
            let mut shifted = cl.clone();
            shifted.x[0] += dx;
            shifted.p[0] += dp;
            eval_hybrid(obs, &HybridPoint::new(shifted, qm.clone()))
        };
        let da_dx = (eval_shifted(h, 0.0, &pauli_a)? - eval_shifted(-h, 0.0, &pauli_a)?)
            / (2.0 * h);
        let da_dp = (eval_shifted(0.0, h, &pauli_a)? - eval_shifted(0.0, -h, &pauli_a)?)
            / (2.0 * h);
        let db_dx = (eval_shifted(h, 0.0, &pauli_b)? - eval_shifted(-h, 0.0, &pauli_b)?)
            / (2.0 * h);
        let db_dp = (eval_shifted(0.0, h, &pauli_b)? - eval_shifted(0.0, -h, &pauli_b)?)
            / (2.0 * h);
        let finite_difference = da_dx * db_dp - da_dp * db_dx;
        worst_quartic = worst_quartic
            .max((quartic - finite_difference).abs() / (1.0 + finite_difference.abs()));
    }

    // Sphere-restricted degree detection: the Pauli pair produces genuinely
    // quartic classical terms, while an identity-valued factor reduces to a
    // quadratic form through the constraint.
    let probe_cl = ClPhasePoint::from_slices(&[0.3], &[0.9])?;
    let pauli_tensor = quartic_terms(&pauli_a, &pauli_b, &probe_cl)?;
    let identity_a = HybridObservable::from_matrix(
        1,
        MatrixField::new(
            2,
            |pt: &ClPhasePoint| HermitianMatrix::identity(2).scale(pt.x[0]),
            |_, _| HermitianMatrix::identity(2),
            |_, _| HermitianMatrix::zeros(2),
        ),
    );
    let identity_tensor = quartic_terms(&identity_a, &pauli_b, &probe_cl)?;
    let mut wrong_flags = 0usize;
    if pauli_tensor.is_quadratic(c.seed.wrapping_add(1)) {
        wrong_flags += 1;
    }
    if !identity_tensor.is_quadratic(c.seed.wrapping_add(2)) {
        wrong_flags += 1;
    }

    let checks = vec![
        Check::upper("commutator_route_max_abs_diff", worst_commutator, 1e-10),
        Check::upper("quartic_vs_finite_difference_rel", worst_quartic, 1e-8),
        Check::upper("quadratic_detection_errors", wrong_flags as f64, 0.0),
    ];
    Ok(ExperimentOutcome {
        checks,
        warnings: Vec::new(),
        table,
        snapshot: None,
    })
}
