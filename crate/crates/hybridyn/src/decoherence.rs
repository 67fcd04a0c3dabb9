//! Dephasing of a two-level system driven by classical oscillator
//! environments: analytic frequency averages, driven-oscillator consistency
//! solutions, and the ensemble decoherence experiment.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{HybridError, Result};
use crate::hermitian::HermitianMatrix;
use crate::integrator::{integrate, IntegratorConfig, Method};
use crate::models::make_qbit_environment;
use crate::numeric::CompensatedSum;
use crate::phase::{ClPhasePoint, HybridPoint, QuantumState};
use crate::quadrature::integrate_complex;
use crate::rng::{seeded, uniform};

/// One classical environment oscillator with free solution
/// x(t) = a cos(omega t) + b sin(omega t).
#[derive(Debug, Clone)]
pub struct EnvironmentOscillator {
    pub mass: f64,
    pub omega: f64,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
}

impl EnvironmentOscillator {
    pub fn free_solution(&self, t: f64) -> f64 {
        self.a * (self.omega * t).cos() + self.b * (self.omega * t).sin()
    }
}

/// Collection of environment oscillators acting on the two-level system.
#[derive(Debug, Clone)]
pub struct EnvironmentSpec {
    pub oscillators: Vec<EnvironmentOscillator>,
}

impl EnvironmentSpec {
    pub fn validate(&self) -> Result<()> {
        for (k, osc) in self.oscillators.iter().enumerate() {
            if !(osc.mass > 0.0) || !(osc.omega > 0.0) {
                return Err(HybridError::InvalidParameter {
                    name: format!("oscillator {k}"),
                    reason: format!(
                        "mass and frequency must be positive, got m = {}, omega = {}",
                        osc.mass, osc.omega
                    ),
                });
            }
            if !osc.lambda.is_finite() || !osc.a.is_finite() || !osc.b.is_finite() {
                return Err(HybridError::InvalidParameter {
                    name: format!("oscillator {k}"),
                    reason: "coupling and initial data must be finite".into(),
                });
            }
        }
        Ok(())
    }
}

/// Distribution of effective dephasing frequencies, supported on Omega >= 0.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrequencyDistribution {
    UniformRange { lo: f64, hi: f64 },
    Exponential { mean: f64 },
    GaussianPositive { mean: f64, width: f64 },
}

impl FrequencyDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FrequencyDistribution::UniformRange { lo, hi } => {
                if !(lo >= 0.0 && hi > lo) {
                    return Err(HybridError::InvalidParameter {
                        name: "uniform_range".into(),
                        reason: format!("need 0 <= lo < hi, got [{lo}, {hi}]"),
                    });
                }
            }
            FrequencyDistribution::Exponential { mean } => {
                if !(mean > 0.0) {
                    return Err(HybridError::InvalidParameter {
                        name: "exponential.mean".into(),
                        reason: format!("must be positive, got {mean}"),
                    });
                }
            }
            FrequencyDistribution::GaussianPositive { mean, width } => {
                if !(width > 0.0) || !mean.is_finite() {
                    return Err(HybridError::InvalidParameter {
                        name: "gaussian_positive".into(),
                        reason: format!("need finite mean and width > 0, got ({mean}, {width})"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Draw one frequency; the truncated Gaussian uses rejection sampling.
    pub fn sample(&self, rng: &mut crate::rng::SeededRng) -> f64 {
        match *self {
            FrequencyDistribution::UniformRange { lo, hi } => uniform(rng, lo, hi),
            FrequencyDistribution::Exponential { mean } => crate::rng::exponential(rng, mean),
            FrequencyDistribution::GaussianPositive { mean, width } => {
                crate::rng::normal_nonnegative(rng, mean, width)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            FrequencyDistribution::UniformRange { lo, hi } => 0.5 * (lo + hi),
            FrequencyDistribution::Exponential { mean } => mean,
            // Mean of the renormalized truncation; only used for reporting.
            FrequencyDistribution::GaussianPositive { mean, .. } => mean.max(0.0),
        }
    }
}

/// Characteristic function f(t) = E[e^{i Omega t}] of the frequency
/// distribution. Its modulus is the dephasing envelope of the averaged
/// off-diagonal density matrix element.
pub fn dephasing_average(dist: &FrequencyDistribution, t: f64) -> Result<Complex64> {
    dist.validate()?;
    match *dist {
        FrequencyDistribution::UniformRange { lo, hi } => {
            let center = 0.5 * (lo + hi);
            let half_span = 0.5 * (hi - lo);
            let phase = Complex64::new(0.0, center * t).exp();
            Ok(phase * sinc(half_span * t))
        }
        FrequencyDistribution::Exponential { mean } => {
            Ok(Complex64::new(1.0, 0.0) / Complex64::new(1.0, -mean * t))
        }
        FrequencyDistribution::GaussianPositive { mean, width } => {
            // Truncated Gaussian normalized on [0, inf); both the average and
            // the normalization are evaluated on [0, mean + 12 width], beyond
            // which the density is below 1e-31 of its peak.
            let upper = mean.max(0.0) + 12.0 * width;
            let density = move |w: f64| (-0.5 * ((w - mean) / width).powi(2)).exp();
            let numerator = integrate_complex(
                |w| Complex64::new(0.0, w * t).exp() * density(w),
                0.0,
                upper,
                1e-10,
            )?;
            let norm = integrate_complex(
                |w| Complex64::new(density(w), 0.0),
                0.0,
                upper,
                1e-10,
            )?;
            if norm.re <= 0.0 {
                return Err(HybridError::QuadratureFailure { error: norm.re });
            }
            Ok(numerator / norm.re)
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Second-order frequencies of the dressed two-level system at coupling
/// strength xi: the level splitting picks up a shift of order xi^2.
pub fn weak_coupling_frequencies(e1: f64, e2: f64, xi: f64) -> Result<(f64, f64)> {
    check_nondegenerate(e1, e2)?;
    let denom = 2.0 * (e1 * e1 - e2 * e2);
    Ok((e1 + xi * xi * e2 / denom, e2 - xi * xi * e1 / denom))
}

fn check_nondegenerate(e1: f64, e2: f64) -> Result<()> {
    if !e1.is_finite() || !e2.is_finite() {
        return Err(HybridError::InvalidParameter {
            name: "energies".into(),
            reason: "must be finite".into(),
        });
    }
    if (e1 - e2).abs() <= 1e-12 * (e1.abs() + e2.abs()).max(1.0) {
        return Err(HybridError::DegenerateEnergies { e1, e2 });
    }
    Ok(())
}

/// Normalized off-diagonal element rho_12(t) of the two-level system under a
/// static coupling xi, to second order in xi; rho_12(0) = 1 identically.
pub fn offdiagonal_element(e1: f64, e2: f64, xi: f64, t: f64) -> Result<Complex64> {
    let (om1, om2) = weak_coupling_frequencies(e1, e2, xi)?;
    if e1 == 0.0 || e2 == 0.0 {
        return Err(HybridError::InvalidParameter {
            name: "energies".into(),
            reason: "second-order amplitudes require nonzero E1, E2".into(),
        });
    }
    let xi2 = xi * xi;
    let beat = Complex64::new(0.0, (om2 - om1) * t).exp();
    let fast = Complex64::new(0.0, (om1 + om2) * t).exp();
    let denom = 4.0 * (e1 * e1 - e2 * e2);
    Ok(beat * (1.0 - xi2 / (4.0 * e1 * e2))
        - (xi2 / denom) * ((e2 / e1) * fast - (e1 / e2) * fast.conj()))
}

/// Uniformly sampled scalar series, used for the mean coupling drive.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || values.len() < 2 {
            return Err(HybridError::InvalidParameter {
                name: "time_series".into(),
                reason: "need dt > 0 and at least two samples".into(),
            });
        }
        Ok(Self { t0, dt, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t_start(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.dt * (self.values.len() - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation; times outside the stored grid are an error.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let slack = 1e-9 * self.dt;
        if t < self.t0 - slack || t > self.t_end() + slack {
            return Err(HybridError::SeriesOutOfRange { t });
        }
        let s = ((t - self.t0) / self.dt).clamp(0.0, (self.values.len() - 1) as f64);
        let j = (s.floor() as usize).min(self.values.len() - 2);
        let frac = s - j as f64;
        Ok(self.values[j] * (1.0 - frac) + self.values[j + 1] * frac)
    }
}

/// Classical trajectories of the environment oscillators driven by the mean
/// coupling signal sigma(s):
/// x_k(t) = x_k^0(t) - (lambda_k/(m_k omega_k)) int_0^t sin(omega_k (t-s)) sigma(s) ds,
/// with the memory integral starting at the preparation time of the series
/// and evaluated by the trapezoid rule on the stored grid.
pub fn driven_cl_solution(
    env: &EnvironmentSpec,
    sigma: &TimeSeries,
    t: f64,
) -> Result<Vec<f64>> {
    env.validate()?;
    let slack = 1e-9 * sigma.dt();
    if t < sigma.t_start() - slack || t > sigma.t_end() + slack {
        return Err(HybridError::SeriesOutOfRange { t });
    }
    let t0 = sigma.t_start();
    let dt = sigma.dt();
    let span = (t - t0).max(0.0);
    let full_cells = ((span / dt).floor() as usize).min(sigma.len() - 1);
    let mut out = Vec::with_capacity(env.oscillators.len());
    for osc in &env.oscillators {
        let g = |s: f64, sig: f64| (osc.omega * (t - s)).sin() * sig;
        let mut acc = CompensatedSum::new();
        for j in 0..full_cells {
            let (s0, s1) = (t0 + j as f64 * dt, t0 + (j + 1) as f64 * dt);
            let trapezoid =
                0.5 * dt * (g(s0, sigma.values()[j]) + g(s1, sigma.values()[j + 1]));
            acc.add(trapezoid);
        }
        let s_last = t0 + full_cells as f64 * dt;
        if t > s_last {
            let partial = 0.5
                * (t - s_last)
                * (g(s_last, sigma.values()[full_cells]) + g(t, sigma.value_at(t)?));
            acc.add(partial);
        }
        out.push(
            osc.free_solution(t) - osc.lambda / (osc.mass * osc.omega) * acc.value(),
        );
    }
    Ok(out)
}

/// Parameters of the decoherence ensemble experiment: a two-level system
/// coupled through sigma_x to one classical oscillator per realization.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecoherenceParams {
    pub e1: f64,
    pub e2: f64,
    pub lambda: f64,
    pub env_mass: f64,
    pub env_omega: f64,
    pub dt: f64,
    pub t_max: f64,
    pub record_stride: usize,
}

impl DecoherenceParams {
    pub fn validate(&self) -> Result<()> {
        check_nondegenerate(self.e1, self.e2)?;
        if !(self.env_mass > 0.0) || !(self.env_omega > 0.0) {
            return Err(HybridError::InvalidParameter {
                name: "env_mass/env_omega".into(),
                reason: "must be positive".into(),
            });
        }
        if !(self.lambda > 0.0) {
            return Err(HybridError::InvalidParameter {
                name: "lambda".into(),
                reason: "amplitude mapping requires lambda > 0".into(),
            });
        }
        if !(self.dt > 0.0) || !(self.t_max > self.dt) || self.record_stride == 0 {
            return Err(HybridError::InvalidParameter {
                name: "dt/t_max/record_stride".into(),
                reason: "need dt > 0, t_max > dt, record_stride >= 1".into(),
            });
        }
        Ok(())
    }

    /// Adiabatic-regime advisories; out-of-regime settings still run.
    pub fn regime_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        let min_gap = self.e1.abs().min(self.e2.abs());
        if self.env_omega > 0.1 * min_gap {
            warnings.push(format!(
                "environment frequency {} exceeds 0.1 * min(E1, E2) = {}; \
                 the adiabatic envelope comparison degrades outside this regime",
                self.env_omega,
                0.1 * min_gap
            ));
        }
        warnings
    }

    fn delta_e(&self) -> f64 {
        (self.e2 - self.e1).abs()
    }
}

/// Output of the decoherence experiment. `mean_rho` is the ensemble-averaged
/// off-diagonal element rho_12(t) = c_1 conj(c_2); the symmetric initial
/// superposition has rho_12(0) = 1/2, so normalized quantities carry a
/// factor 2.
#[derive(Debug, Clone)]
pub struct DecoherenceResult {
    pub times: Vec<f64>,
    pub mean_rho: Vec<Complex64>,
    pub analytic_abs: Vec<f64>,
    pub stderr: Vec<f64>,
    pub control_abs: Vec<f64>,
    pub realizations: usize,
}

/// Normalized envelope value at one sample time.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeSample {
    pub t: f64,
    pub value: f64,
    pub analytic: f64,
    pub stderr: f64,
}

impl DecoherenceResult {
    fn window_mean(&self, series: &[f64], t: f64, window: f64) -> f64 {
        let half = 0.5 * window;
        let mut acc = CompensatedSum::new();
        let mut count = 0usize;
        for (k, &tk) in self.times.iter().enumerate() {
            if (tk - t).abs() <= half {
                acc.add(series[k]);
                count += 1;
            }
        }
        if count == 0 {
            f64::NAN
        } else {
            acc.value() / count as f64
        }
    }

    /// Windowed average of the normalized modulus 2|<rho_12>|, compared with
    /// the analytic envelope |f(t)| at the window center. The window is meant
    /// to span the beat period so residual carrier oscillations average out.
    /// The standard error is window-averaged without a 1/sqrt(n) reduction
    /// because neighboring times are strongly correlated.
    pub fn envelope(&self, window: f64, sample_times: &[f64]) -> Vec<EnvelopeSample> {
        let moduli: Vec<f64> = self.mean_rho.iter().map(|r| 2.0 * r.norm()).collect();
        let scaled_se: Vec<f64> = self.stderr.iter().map(|s| 2.0 * s).collect();
        sample_times
            .iter()
            .map(|&t| {
                let k_nearest = self
                    .times
                    .iter()
                    .enumerate()
                    .min_by(|a, b| {
                        (a.1 - t).abs().partial_cmp(&(b.1 - t).abs()).expect("finite")
                    })
                    .map(|(k, _)| k)
                    .unwrap_or(0);
                EnvelopeSample {
                    t,
                    value: self.window_mean(&moduli, t, window),
                    analytic: self.analytic_abs[k_nearest],
                    stderr: self.window_mean(&scaled_se, t, window),
                }
            })
            .collect()
    }

    /// Windowed normalized modulus of the single-realization control run.
    pub fn control_envelope(&self, window: f64, sample_times: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = self.control_abs.iter().map(|v| 2.0 * v).collect();
        sample_times
            .iter()
            .map(|&t| self.window_mean(&scaled, t, window))
            .collect()
    }
}

/// Off-diagonal element from a quantum phase point: rho_12 = c_1 conj(c_2)
/// = (X_1 + iP_1)(X_2 - iP_2)/2.
pub fn offdiagonal_from_point(pt: &crate::phase::QmPhasePoint) -> Complex64 {
    let c1 = Complex64::new(pt.x[0], pt.p[0]);
    let c2 = Complex64::new(pt.x[1], pt.p[1]);
    0.5 * c1 * c2.conj()
}

/// Ensemble dephasing experiment. Each realization couples the two-level
/// system to a single classical oscillator whose drive amplitude realizes a
/// dephasing frequency Omega drawn from `dist`: in the adiabatic regime the
/// instantaneous splitting deviation 2 xi(s)^2 / dE with xi(s) =
/// lambda A cos(omega s - psi) has time average lambda^2 A^2 / dE, so
/// A = sqrt(dE * Omega) / lambda realizes the drawn frequency. Oscillator
/// phases are drawn uniformly. The averaged off-diagonal element decays with
/// the characteristic-function envelope |f(t)| of the drawn distribution.
pub fn decoherence_experiment(
    params: &DecoherenceParams,
    dist: &FrequencyDistribution,
    realizations: usize,
    seed: u64,
) -> Result<DecoherenceResult> {
    params.validate()?;
    dist.validate()?;
    if realizations == 0 {
        return Err(HybridError::InvalidParameter {
            name: "realizations".into(),
            reason: "need at least one realization".into(),
        });
    }

    let model = make_qbit_environment(
        params.e1,
        params.e2,
        HermitianMatrix::pauli_x(),
        &[params.env_mass],
        &[params.env_omega],
        &[params.lambda],
    )?;
    let qm0 = crate::oscillator::state_to_phase(&QuantumState::uniform_superposition(2));

    // All randomness is drawn sequentially up front so the parallel phase
    // consumes no entropy and results are independent of scheduling.
    let mut rng = seeded(seed);
    let delta_e = params.delta_e();
    let draws: Vec<(f64, f64)> = (0..realizations)
        .map(|_| {
            let omega_r = dist.sample(&mut rng);
            let psi_r = uniform(&mut rng, 0.0, 2.0 * std::f64::consts::PI);
            (omega_r, psi_r)
        })
        .collect();

    let cfg = IntegratorConfig::new(Method::Rk4, params.dt, params.t_max)
        .with_stride(params.record_stride);
    cfg.validate()?;

    let series: Vec<Vec<Complex64>> = draws
        .par_iter()
        .enumerate()
        .map(|(r, &(omega_r, psi_r))| {
            let amplitude = (delta_e * omega_r).sqrt() / params.lambda;
            let x0 = amplitude * psi_r.cos();
            let p0 = params.env_mass * params.env_omega * amplitude * psi_r.sin();
            let start = HybridPoint::new(
                ClPhasePoint::from_slices(&[x0], &[p0]).expect("one classical mode"),
                qm0.clone(),
            );
            let traj = integrate(&model, &start, &cfg).map_err(|e| {
                HybridError::MemberFailure {
                    member: r,
                    source: Box::new(e),
                }
            })?;
            Ok(traj
                .points
                .iter()
                .map(|pt| offdiagonal_from_point(&pt.qm))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let n_times = series[0].len();
    let times: Vec<f64> = (0..n_times)
        .map(|k| {
            let step = (k * params.record_stride).min(
                (params.t_max / params.dt).round() as usize,
            );
            step as f64 * params.dt
        })
        .collect();

    let m = realizations as f64;
    let mut mean_rho = Vec::with_capacity(n_times);
    let mut stderr = Vec::with_capacity(n_times);
    for k in 0..n_times {
        let mut acc_re = CompensatedSum::new();
        let mut acc_im = CompensatedSum::new();
        for row in &series {
            acc_re.add(row[k].re);
            acc_im.add(row[k].im);
        }
        let mean = Complex64::new(acc_re.value() / m, acc_im.value() / m);
        mean_rho.push(mean);
        // Spread of the projection onto the mean direction; this is the
        // fluctuation that moves the modulus of the average.
        let norm = mean.norm();
        let u = if norm > 1e-300 {
            mean / norm
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut acc_proj = CompensatedSum::new();
        let mut acc_proj_sq = CompensatedSum::new();
        for row in &series {
            let s = (u.conj() * row[k]).re;
            acc_proj.add(s);
            acc_proj_sq.add(s * s);
        }
        let mean_proj = acc_proj.value() / m;
        let var = (acc_proj_sq.value() / m - mean_proj * mean_proj).max(0.0);
        stderr.push((var / m).sqrt());
    }

    let mut analytic_abs = Vec::with_capacity(n_times);
    for &t in &times {
        analytic_abs.push(dephasing_average(dist, t)?.norm());
    }
    let control_abs: Vec<f64> = series[0].iter().map(|r| r.norm()).collect();

    Ok(DecoherenceResult {
        times,
        mean_rho,
        analytic_abs,
        stderr,
        control_abs,
        realizations,
    })
}
