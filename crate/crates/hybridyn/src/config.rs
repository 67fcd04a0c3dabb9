//! Experiment configuration: the JSON schema of the command line, defaults,
//! and validation. Every experiment is a tagged JSON object selected by the
//! top-level "experiment" key; unknown keys are rejected rather than ignored
//! so typos in parameter names cannot silently fall back to defaults.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::decoherence::{DecoherenceParams, FrequencyDistribution};
use crate::integrator::Method;

/// Output file destinations. Every entry is optional; the run summary is
/// always printed to stdout regardless.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Main data table of the experiment.
    pub csv: Option<PathBuf>,
    /// Machine-readable summary with the check results.
    pub summary: Option<PathBuf>,
    /// Final ensemble snapshot (only produced by ensemble experiments).
    pub snapshot: Option<PathBuf>,
}

/// One mean-field oscillator pair: a classical oscillator bilinearly coupled
/// to a truncated quantum oscillator, compared against the closed-form
/// normal-mode solution of the mean values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeresTernoConfig {
    pub seed: u64,
    pub cl_mass: f64,
    pub cl_omega: f64,
    pub qm_mass: f64,
    pub qm_omega: f64,
    pub lambda: f64,
    pub n_trunc: usize,
    /// Initial classical displacement and momentum.
    pub x0: f64,
    pub p0: f64,
    pub method: Method,
    pub dt: f64,
    pub t_final: f64,
    pub record_stride: usize,
    pub output: OutputConfig,
}

impl Default for PeresTernoConfig {
    fn default() -> Self {
        Self {
            seed: 11,
            cl_mass: 1.0,
            cl_omega: 1.0,
            qm_mass: 1.0,
            qm_omega: 1.0,
            lambda: 0.1,
            n_trunc: 12,
            x0: 1.0,
            p0: 0.0,
            method: Method::Rk4,
            dt: 1e-3,
            t_final: 50.0,
            record_stride: 50,
            output: OutputConfig::default(),
        }
    }
}

/// Dephasing of a two-level system driven by an ensemble of classical
/// oscillator trajectories with randomized frequency and phase, compared
/// against the closed-form ensemble average for the chosen frequency
/// distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QbitDecoherenceConfig {
    pub seed: u64,
    pub e1: f64,
    pub e2: f64,
    pub lambda: f64,
    pub env_mass: f64,
    pub env_omega: f64,
    /// Distribution of the per-realization dephasing rate.
    pub distribution: FrequencyDistribution,
    pub realizations: usize,
    pub dt: f64,
    pub t_max: f64,
    pub record_stride: usize,
    /// Number of envelope sample times used for the band comparison.
    pub envelope_samples: usize,
    pub output: OutputConfig,
}

impl Default for QbitDecoherenceConfig {
    fn default() -> Self {
        Self {
            seed: 2026,
            e1: 4.0,
            e2: 8.0,
            lambda: 0.05,
            env_mass: 1.0,
            env_omega: 0.3,
            distribution: FrequencyDistribution::Exponential { mean: 0.02 },
            realizations: 512,
            dt: 2e-3,
            t_max: 175.0,
            record_stride: 20,
            envelope_samples: 20,
            output: OutputConfig::default(),
        }
    }
}

impl QbitDecoherenceConfig {
    pub fn decoherence_params(&self) -> DecoherenceParams {
        DecoherenceParams {
            e1: self.e1,
            e2: self.e2,
            lambda: self.lambda,
            env_mass: self.env_mass,
            env_omega: self.env_omega,
            dt: self.dt,
            t_max: self.t_max,
            record_stride: self.record_stride,
        }
    }
}

/// Free classical particle elastically bound to a truncated quantum
/// particle; checks the conserved total momentum, the conserved fluctuation
/// energy, and the relative-coordinate frequency.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoBodyConfig {
    pub seed: u64,
    pub cl_mass: f64,
    pub qm_mass: f64,
    pub lambda: f64,
    pub n_trunc: usize,
    /// Oscillator length of the number basis; defaults to the relative-mode
    /// ground-state length (2 lambda M)^(-1/4) of the quantum side.
    pub basis_scale: Option<f64>,
    pub x0: f64,
    pub p0: f64,
    /// Initial displacement and momentum of the quantum wave packet.
    pub qm_x0: f64,
    pub qm_p0: f64,
    pub method: Method,
    pub dt: f64,
    pub t_final: f64,
    pub record_stride: usize,
    pub output: OutputConfig,
}

impl Default for TwoBodyConfig {
    fn default() -> Self {
        Self {
            seed: 5,
            cl_mass: 1.0,
            qm_mass: 1.0,
            lambda: 0.05,
            n_trunc: 24,
            basis_scale: None,
            x0: 0.5,
            p0: 0.0,
            qm_x0: -0.5,
            qm_p0: 0.0,
            method: Method::ImplicitMidpoint,
            dt: 1e-3,
            t_final: 100.0,
            record_stride: 50,
            output: OutputConfig::default(),
        }
    }
}

impl TwoBodyConfig {
    pub fn effective_basis_scale(&self) -> f64 {
        self.basis_scale
            .unwrap_or_else(|| (2.0 * self.lambda * self.qm_mass).powf(-0.25))
    }
}

/// Factorized product ensemble: classical marginals must be bitwise
/// invariant under member-wise unitaries, and classical-quantum
/// cross-covariances of an uncoupled evolution must stay within their
/// statistical bands.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSeparabilityConfig {
    pub seed: u64,
    pub members: usize,
    pub e1: f64,
    pub e2: f64,
    pub lambda: f64,
    pub env_mass: f64,
    pub env_omega: f64,
    pub cl_x0: f64,
    pub cl_p0: f64,
    pub cl_spread: f64,
    pub dt: f64,
    pub t_final: f64,
    pub record_stride: usize,
    /// Histogram bins per classical axis for the invariance check.
    pub bins: usize,
    pub output: OutputConfig,
}

impl Default for EnsembleSeparabilityConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            members: 10_000,
            e1: 1.0,
            e2: 2.0,
            lambda: 0.0,
            env_mass: 1.0,
            env_omega: 1.0,
            cl_x0: 0.3,
            cl_p0: 0.0,
            cl_spread: 0.25,
            dt: 0.01,
            t_final: 4.5,
            record_stride: 50,
            bins: 12,
            output: OutputConfig::default(),
        }
    }
}

/// Monte Carlo checks of the uniform sphere ensemble: the second-moment
/// identity matrix and the normalization factor of the sphere average.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SphereIdentitiesConfig {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub samples: usize,
    /// Largest mode count for the dual-route normalization comparison.
    pub gamma_max_n: usize,
    pub output: OutputConfig,
}

impl Default for SphereIdentitiesConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            dims: vec![1, 2, 4],
            samples: 100_000,
            gamma_max_n: 12,
            output: OutputConfig::default(),
        }
    }
}

/// Algebraic checks of the bracket: the oscillator bracket of quadratic
/// forms against the matrix commutator route, and the quartic classical
/// terms against finite differences.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BracketClosureConfig {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub pairs_per_dim: usize,
    pub quartic_probes: usize,
    pub output: OutputConfig,
}

impl Default for BracketClosureConfig {
    fn default() -> Self {
        Self {
            seed: 9,
            dims: vec![2, 4, 8, 16],
            pairs_per_dim: 50,
            quartic_probes: 20,
            output: OutputConfig::default(),
        }
    }
}

/// A parsed experiment configuration.
#[derive(Debug, Clone)]
pub enum ExperimentConfig {
    PeresTerno(PeresTernoConfig),
    QbitDecoherence(QbitDecoherenceConfig),
    TwoBody(TwoBodyConfig),
    EnsembleSeparability(EnsembleSeparabilityConfig),
    SphereIdentities(SphereIdentitiesConfig),
    BracketClosure(BracketClosureConfig),
}

pub const EXPERIMENT_NAMES: [&str; 6] = [
    "peres_terno",
    "qbit_decoherence",
    "two_body",
    "ensemble_separability",
    "sphere_identities",
    "bracket_closure",
];

/// Findings from configuration validation. `errors` block a run; `warnings`
/// flag parameter regimes in which the built-in comparisons degrade.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

fn require(cond: bool, message: impl Into<String>, errors: &mut Vec<String>) {
    if !cond {
        errors.push(message.into());
    }
}

fn check_grid(dt: f64, t_final: f64, stride: usize, errors: &mut Vec<String>) {
    require(
        dt.is_finite() && dt > 0.0,
        format!("dt must be positive and finite, got {dt}"),
        errors,
    );
    require(
        t_final.is_finite() && t_final > 0.0,
        format!("t_final must be positive and finite, got {t_final}"),
        errors,
    );
    require(stride >= 1, "record_stride must be at least 1", errors);
}

impl ExperimentConfig {
    /// Parse a tagged configuration document. Errors are human-readable
    /// strings suitable for direct display.
    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
        let mut obj = match value {
            serde_json::Value::Object(map) => map,
            _ => return Err("the configuration must be a JSON object".into()),
        };
        let tag = obj
            .remove("experiment")
            .ok_or_else(|| "missing required \"experiment\" field".to_string())?;
        let name = tag
            .as_str()
            .ok_or_else(|| "\"experiment\" must be a string".to_string())?
            .to_string();
        let rest = serde_json::Value::Object(obj);
        let parsed = match name.as_str() {
            "peres_terno" => serde_json::from_value(rest).map(Self::PeresTerno),
            "qbit_decoherence" => serde_json::from_value(rest).map(Self::QbitDecoherence),
            "two_body" => serde_json::from_value(rest).map(Self::TwoBody),
            "ensemble_separability" => {
                serde_json::from_value(rest).map(Self::EnsembleSeparability)
            }
            "sphere_identities" => serde_json::from_value(rest).map(Self::SphereIdentities),
            "bracket_closure" => serde_json::from_value(rest).map(Self::BracketClosure),
            other => {
                return Err(format!(
                    "unknown experiment \"{other}\"; expected one of: {}",
                    EXPERIMENT_NAMES.join(", ")
                ))
            }
        };
        parsed.map_err(|e| format!("invalid {name} configuration: {e}"))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::PeresTerno(_) => "peres_terno",
            Self::QbitDecoherence(_) => "qbit_decoherence",
            Self::TwoBody(_) => "two_body",
            Self::EnsembleSeparability(_) => "ensemble_separability",
            Self::SphereIdentities(_) => "sphere_identities",
            Self::BracketClosure(_) => "bracket_closure",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Self::PeresTerno(c) => c.seed,
            Self::QbitDecoherence(c) => c.seed,
            Self::TwoBody(c) => c.seed,
            Self::EnsembleSeparability(c) => c.seed,
            Self::SphereIdentities(c) => c.seed,
            Self::BracketClosure(c) => c.seed,
        }
    }

    pub fn output(&self) -> &OutputConfig {
        match self {
            Self::PeresTerno(c) => &c.output,
            Self::QbitDecoherence(c) => &c.output,
            Self::TwoBody(c) => &c.output,
            Self::EnsembleSeparability(c) => &c.output,
            Self::SphereIdentities(c) => &c.output,
            Self::BracketClosure(c) => &c.output,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let errors = &mut report.errors;
        match self {
            Self::PeresTerno(c) => {
                require(c.cl_mass > 0.0, "cl_mass must be positive", errors);
                require(c.cl_omega > 0.0, "cl_omega must be positive", errors);
                require(c.qm_mass > 0.0, "qm_mass must be positive", errors);
                require(c.qm_omega > 0.0, "qm_omega must be positive", errors);
                require(c.n_trunc >= 2, "n_trunc must be at least 2", errors);
                require(
                    c.lambda.is_finite() && c.x0.is_finite() && c.p0.is_finite(),
                    "lambda, x0, p0 must be finite",
                    errors,
                );
                // Both normal-mode frequencies must stay real.
                let bound = c.cl_mass
                    * c.cl_omega.powi(2)
                    * c.qm_mass
                    * c.qm_omega.powi(2);
                require(
                    c.lambda.powi(2) < bound,
                    format!(
                        "lambda^2 = {} reaches the normal-mode stability bound {}",
                        c.lambda.powi(2),
                        bound
                    ),
                    errors,
                );
                check_grid(c.dt, c.t_final, c.record_stride, errors);
                if c.n_trunc < 8 {
                    report.warnings.push(format!(
                        "n_trunc = {} is small; basis truncation may dominate the \
                         closed-form comparison",
                        c.n_trunc
                    ));
                }
            }
            Self::QbitDecoherence(c) => {
                let params = c.decoherence_params();
                if let Err(e) = params.validate() {
                    errors.push(e.to_string());
                }
                if let Err(e) = c.distribution.validate() {
                    errors.push(e.to_string());
                }
                require(
                    c.realizations >= 2,
                    "standard errors need at least 2 realizations",
                    errors,
                );
                require(
                    c.envelope_samples >= 1,
                    "envelope_samples must be at least 1",
                    errors,
                );
                let gap = (c.e2 - c.e1).abs();
                if gap > 0.0 && c.t_max.is_finite() {
                    let window = 2.0 * std::f64::consts::PI / gap;
                    require(
                        c.t_max > 8.0 * window,
                        format!(
                            "t_max = {} leaves no room for envelope sampling; need more \
                             than {:.3}",
                            c.t_max,
                            8.0 * window
                        ),
                        errors,
                    );
                }
                report.warnings.extend(params.regime_warnings());
            }
            Self::TwoBody(c) => {
                require(c.cl_mass > 0.0, "cl_mass must be positive", errors);
                require(c.qm_mass > 0.0, "qm_mass must be positive", errors);
                require(
                    c.lambda > 0.0 && c.lambda.is_finite(),
                    "lambda must be positive for the bound relative motion",
                    errors,
                );
                require(c.n_trunc >= 2, "n_trunc must be at least 2", errors);
                if let Some(s) = c.basis_scale {
                    require(
                        s > 0.0 && s.is_finite(),
                        "basis_scale must be positive",
                        errors,
                    );
                }
                require(
                    [c.x0, c.p0, c.qm_x0, c.qm_p0].iter().all(|v| v.is_finite()),
                    "initial conditions must be finite",
                    errors,
                );
                check_grid(c.dt, c.t_final, c.record_stride, errors);
                if c.n_trunc < 12 {
                    report.warnings.push(format!(
                        "n_trunc = {} is small; wave-packet leakage degrades the \
                         conservation checks",
                        c.n_trunc
                    ));
                }
            }
            Self::EnsembleSeparability(c) => {
                require(c.members >= 2, "need at least 2 members", errors);
                require(
                    c.cl_spread > 0.0 && c.cl_spread.is_finite(),
                    "cl_spread must be positive",
                    errors,
                );
                require(c.env_mass > 0.0, "env_mass must be positive", errors);
                require(c.env_omega > 0.0, "env_omega must be positive", errors);
                require(
                    c.e1.is_finite() && c.e2.is_finite() && c.lambda.is_finite(),
                    "e1, e2, lambda must be finite",
                    errors,
                );
                require(
                    c.cl_x0.is_finite() && c.cl_p0.is_finite(),
                    "cl_x0, cl_p0 must be finite",
                    errors,
                );
                require(c.bins >= 2, "bins must be at least 2", errors);
                check_grid(c.dt, c.t_final, c.record_stride, errors);
                if c.members < 1000 {
                    report.warnings.push(format!(
                        "members = {} gives noisy standard-error bands; 1000 or more \
                         is recommended",
                        c.members
                    ));
                }
                if c.lambda != 0.0 {
                    report.warnings.push(
                        "nonzero lambda couples the sectors; the cross-covariance \
                         bands are expected to fail"
                            .into(),
                    );
                }
            }
            Self::SphereIdentities(c) => {
                require(!c.dims.is_empty(), "dims must not be empty", errors);
                require(
                    c.dims.iter().all(|&d| d >= 1),
                    "every entry of dims must be at least 1",
                    errors,
                );
                require(c.samples >= 2, "samples must be at least 2", errors);
                require(
                    (1..=20).contains(&c.gamma_max_n),
                    "gamma_max_n must be between 1 and 20 (the exact integer \
                     cross-check overflows beyond 20)",
                    errors,
                );
            }
            Self::BracketClosure(c) => {
                require(!c.dims.is_empty(), "dims must not be empty", errors);
                require(
                    c.dims.iter().all(|&d| d >= 1),
                    "every entry of dims must be at least 1",
                    errors,
                );
                require(c.pairs_per_dim >= 1, "pairs_per_dim must be at least 1", errors);
                require(
                    c.quartic_probes >= 1,
                    "quartic_probes must be at least 1",
                    errors,
                );
            }
        }
        report
    }
}
