//! Concrete hybrid models and the generic hybrid equations of motion.
//!
//! A model is a Hamiltonian of the form
//!
//! ```text
//! H(x, p; X, P) = h_cl(x, p) + <H_qm> + <I(x, p)>
//! ```
//!
//! with h_cl a classical Hamiltonian, H_qm a constant Hermitian matrix and
//! I(x, p) a Hermitian interaction matrix depending on the classical
//! coordinates. The flow couples both sectors through the shared bracket:
//! classical momenta feel the expectation of the interaction gradient, and
//! the quantum coordinates evolve under the effective matrix
//! H_qm + I(x, p).
//!
//! Truncated operators: position/momentum matrices are built in a harmonic
//! number basis of `n_trunc` levels, and operator squares are formed as
//! matrix squares of the truncated factors. That choice keeps algebraic
//! identities (e.g. the split of the two-body energy into mean-value and
//! fluctuation parts) exact at finite truncation instead of holding only up
//! to truncation noise.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::bracket::{MatrixField, ScalarField};
use crate::error::{HybridError, Result};
use crate::hermitian::HermitianMatrix;
use crate::oscillator::{eval_observable, observable_gradient};
use crate::phase::{ClPhasePoint, HybridPoint, QuantumState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    BilinearOscillators,
    QbitEnvironment,
    TwoBodyHarmonic,
    Custom,
}

/// Parameter record kept for provenance and model-specific diagnostics.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub cl_masses: Vec<f64>,
    pub cl_frequencies: Vec<f64>,
    pub couplings: Vec<f64>,
    pub qm_mass: Option<f64>,
    pub qm_frequency: Option<f64>,
    pub energies: Option<(f64, f64)>,
    pub n_trunc: Option<usize>,
    pub basis_scale: Option<f64>,
}

impl ModelParams {
    /// Empty record for user-assembled models.
    pub fn custom() -> Self {
        Self {
            kind: ModelKind::Custom,
            cl_masses: Vec::new(),
            cl_frequencies: Vec::new(),
            couplings: Vec::new(),
            qm_mass: None,
            qm_frequency: None,
            energies: None,
            n_trunc: None,
            basis_scale: None,
        }
    }
}

/// Hybrid Hamiltonian model; immutable after construction.
pub struct HybridModel {
    n_cl: usize,
    n_qm: usize,
    h_cl: ScalarField,
    h_qm: HermitianMatrix,
    interaction: MatrixField,
    x_op: Option<HermitianMatrix>,
    p_op: Option<HermitianMatrix>,
    x_sq: Option<HermitianMatrix>,
    p_sq: Option<HermitianMatrix>,
    params: ModelParams,
}

impl HybridModel {
    /// Generic constructor for user-supplied Hamiltonians. Ordering of any
    /// momentum-dependent interaction matrix is the caller's responsibility;
    /// the shipped models only use functions of the position operator.
    pub fn new(
        n_cl: usize,
        h_cl: ScalarField,
        h_qm: HermitianMatrix,
        interaction: MatrixField,
        params: ModelParams,
    ) -> Result<Self> {
        if interaction.dim() != h_qm.dim() {
            return Err(HybridError::DimensionMismatch {
                expected: h_qm.dim(),
                actual: interaction.dim(),
            });
        }
        Ok(Self {
            n_cl,
            n_qm: h_qm.dim(),
            h_cl,
            h_qm,
            interaction,
            x_op: None,
            p_op: None,
            x_sq: None,
            p_sq: None,
            params,
        })
    }

    /// Attaches truncated position/momentum operators and caches their
    /// matrix squares for Ehrenfest-level observables.
    pub fn with_quadratures(mut self, x_op: HermitianMatrix, p_op: HermitianMatrix) -> Result<Self> {
        if x_op.dim() != self.n_qm || p_op.dim() != self.n_qm {
            return Err(HybridError::DimensionMismatch {
                expected: self.n_qm,
                actual: x_op.dim().max(p_op.dim()),
            });
        }
        self.x_sq = Some(x_op.square());
        self.p_sq = Some(p_op.square());
        self.x_op = Some(x_op);
        self.p_op = Some(p_op);
        Ok(self)
    }

    pub fn n_cl(&self) -> usize {
        self.n_cl
    }

    pub fn n_qm(&self) -> usize {
        self.n_qm
    }

    pub fn kind(&self) -> ModelKind {
        self.params.kind
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn h_cl(&self) -> &ScalarField {
        &self.h_cl
    }

    pub fn h_qm(&self) -> &HermitianMatrix {
        &self.h_qm
    }

    pub fn interaction(&self) -> &MatrixField {
        &self.interaction
    }

    fn quadrature<'a>(&self, op: &'a Option<HermitianMatrix>) -> Result<&'a HermitianMatrix> {
        op.as_ref().ok_or(HybridError::MissingQuadratures)
    }

    pub fn x_operator(&self) -> Result<&HermitianMatrix> {
        self.quadrature(&self.x_op)
    }

    pub fn p_operator(&self) -> Result<&HermitianMatrix> {
        self.quadrature(&self.p_op)
    }

    pub fn x_squared(&self) -> Result<&HermitianMatrix> {
        self.quadrature(&self.x_sq)
    }

    pub fn p_squared(&self) -> Result<&HermitianMatrix> {
        self.quadrature(&self.p_sq)
    }

    /// Effective quantum matrix H_qm + I(x, p) driving the quantum sector.
    pub fn effective_qm_matrix(&self, cl: &ClPhasePoint) -> HermitianMatrix {
        self.interaction
            .value(cl)
            .add_scaled(&self.h_qm, 1.0)
            .expect("interaction and h_qm share the model dimension")
    }

    fn check_point(&self, point: &HybridPoint) -> Result<()> {
        if point.n_cl() != self.n_cl {
            return Err(HybridError::DimensionMismatch {
                expected: self.n_cl,
                actual: point.n_cl(),
            });
        }
        if point.n_qm() != self.n_qm {
            return Err(HybridError::DimensionMismatch {
                expected: self.n_qm,
                actual: point.n_qm(),
            });
        }
        Ok(())
    }

    /// Total energy h_cl + <H_qm> + <I(x, p)>.
    pub fn total_hamiltonian(&self, point: &HybridPoint) -> Result<f64> {
        self.check_point(point)?;
        let qm_energy = eval_observable(&self.effective_qm_matrix(&point.cl), &point.qm)?;
        Ok(self.h_cl.value(&point.cl) + qm_energy)
    }

    /// Phase-space gradient of the total Hamiltonian in flattened layout
    /// [d/dx.., d/dp.., d/dX.., d/dP..].
    pub fn hamiltonian_gradient(&self, point: &HybridPoint) -> Result<DVector<f64>> {
        self.check_point(point)?;
        let n = self.n_cl;
        let m = self.n_qm;
        let z = point.qm.z();
        let mut grad = DVector::zeros(2 * (n + m));

        let gx = self.h_cl.grad_x(&point.cl);
        let gp = self.h_cl.grad_p(&point.cl);
        for k in 0..n {
            grad[k] = gx[k] + self.interaction.d_dx(k, &point.cl).quadratic_form(&z).re;
            grad[n + k] = gp[k] + self.interaction.d_dp(k, &point.cl).quadratic_form(&z).re;
        }

        let (wx, wp) = observable_gradient(&self.effective_qm_matrix(&point.cl), &point.qm)?;
        grad.rows_mut(2 * n, m).copy_from(&wx);
        grad.rows_mut(2 * n + m, m).copy_from(&wp);
        Ok(grad)
    }

    /// Hamiltonian flow in flattened layout [xdot.., pdot.., Xdot.., Pdot..]:
    /// xdot = dH/dp, pdot = -dH/dx, Xdot = dH/dP, Pdot = -dH/dX.
    pub fn equations_of_motion(&self, point: &HybridPoint) -> Result<DVector<f64>> {
        self.check_point(point)?;
        let n = self.n_cl;
        let m = self.n_qm;
        let z = point.qm.z();
        let mut vel = DVector::zeros(2 * (n + m));

        let gx = self.h_cl.grad_x(&point.cl);
        let gp = self.h_cl.grad_p(&point.cl);
        for k in 0..n {
            let ix = self.interaction.d_dx(k, &point.cl).quadratic_form(&z).re;
            let ip = self.interaction.d_dp(k, &point.cl).quadratic_form(&z).re;
            vel[k] = gp[k] + ip;
            vel[n + k] = -(gx[k] + ix);
        }

        // w = (H_qm + I) z; Xdot = Im w, Pdot = -Re w.
        let w = self.effective_qm_matrix(&point.cl).apply(&z);
        for i in 0..m {
            vel[2 * n + i] = w[i].im;
            vel[2 * n + m + i] = -w[i].re;
        }
        Ok(vel)
    }

    /// Flow on flattened coordinates, for integrator use.
    pub fn flow(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.equations_of_motion(&HybridPoint::unflatten(self.n_cl, self.n_qm, y)?)
    }

    /// Mean values and variances of the truncated position/momentum
    /// operators, alongside the classical coordinates.
    pub fn ehrenfest_observables(&self, point: &HybridPoint, t: f64) -> Result<EhrenfestRecord> {
        self.check_point(point)?;
        let x_op = self.x_operator()?;
        let p_op = self.p_operator()?;
        let x_mean = eval_observable(x_op, &point.qm)?;
        let p_mean = eval_observable(p_op, &point.qm)?;
        let var_x = eval_observable(self.x_squared()?, &point.qm)? - x_mean * x_mean;
        let var_p = eval_observable(self.p_squared()?, &point.qm)? - p_mean * p_mean;
        debug_assert!(var_x >= -1e-12, "negative position variance {var_x}");
        debug_assert!(var_p >= -1e-12, "negative momentum variance {var_p}");
        Ok(EhrenfestRecord {
            t,
            cl_x: point.cl.x.clone(),
            cl_p: point.cl.p.clone(),
            x_mean,
            p_mean,
            var_x,
            var_p,
        })
    }

    /// Energy carried by quantum fluctuations of the two-body model:
    /// (<P^2> - <P>^2)/2M + lambda (<X^2> - <X>^2). Conserved separately
    /// from the mean-value energy.
    pub fn fluctuation_energy(&self, point: &HybridPoint) -> Result<f64> {
        if self.params.kind != ModelKind::TwoBodyHarmonic {
            return Err(HybridError::UnsupportedModel {
                op: "fluctuation_energy",
                required: "two-body harmonic model",
            });
        }
        let r = self.ehrenfest_observables(point, 0.0)?;
        let qm_mass = self.params.qm_mass.expect("two-body model stores qm mass");
        let lambda = self.params.couplings[0];
        Ok(r.var_p / (2.0 * qm_mass) + lambda * r.var_x)
    }

    /// Model-specific conserved quantities for trajectory diagnostics,
    /// beyond energy and the constraint.
    pub fn conserved_quantities(&self, point: &HybridPoint) -> Result<Vec<(&'static str, f64)>> {
        let mut out = Vec::new();
        if self.params.kind == ModelKind::TwoBodyHarmonic {
            let p_mean = eval_observable(self.p_operator()?, &point.qm)?;
            out.push(("total_momentum", point.cl.p[0] + p_mean));
            out.push(("fluctuation_energy", self.fluctuation_energy(point)?));
        }
        Ok(out)
    }
}

/// Mean values of the quantum quadratures with the classical coordinates.
#[derive(Debug, Clone)]
pub struct EhrenfestRecord {
    pub t: f64,
    pub cl_x: DVector<f64>,
    pub cl_p: DVector<f64>,
    pub x_mean: f64,
    pub p_mean: f64,
    pub var_x: f64,
    pub var_p: f64,
}

/// Truncated position/momentum pair in a harmonic number basis with
/// oscillator length `length_scale`:
/// X = (l/sqrt(2))(a + a^dagger), P = (i/(sqrt(2) l))(a^dagger - a).
pub fn ladder_pair(n_trunc: usize, length_scale: f64) -> (HermitianMatrix, HermitianMatrix) {
    assert!(n_trunc >= 2, "need at least two levels");
    assert!(length_scale > 0.0, "length scale must be positive");
    let mut x = nalgebra::DMatrix::zeros(n_trunc, n_trunc);
    let mut p = nalgebra::DMatrix::zeros(n_trunc, n_trunc);
    let cx = length_scale / std::f64::consts::SQRT_2;
    let cp = 1.0 / (std::f64::consts::SQRT_2 * length_scale);
    for i in 0..n_trunc - 1 {
        let s = ((i + 1) as f64).sqrt();
        x[(i, i + 1)] = Complex64::new(cx * s, 0.0);
        x[(i + 1, i)] = Complex64::new(cx * s, 0.0);
        p[(i, i + 1)] = Complex64::new(0.0, -cp * s);
        p[(i + 1, i)] = Complex64::new(0.0, cp * s);
    }
    (
        HermitianMatrix::new(x).expect("construction is Hermitian"),
        HermitianMatrix::new(p).expect("construction is Hermitian"),
    )
}

fn validate_env(m: &[f64], omega: &[f64], lambda: &[f64]) -> Result<()> {
    if m.len() != omega.len() || m.len() != lambda.len() {
        return Err(HybridError::InvalidParameter {
            name: "environment".into(),
            reason: format!(
                "masses ({}), frequencies ({}) and couplings ({}) must have equal length",
                m.len(),
                omega.len(),
                lambda.len()
            ),
        });
    }
    if m.is_empty() {
        return Err(HybridError::InvalidParameter {
            name: "environment".into(),
            reason: "at least one classical oscillator is required".into(),
        });
    }
    for (k, &v) in m.iter().enumerate() {
        if !(v > 0.0) {
            return Err(HybridError::InvalidParameter {
                name: format!("m[{k}]"),
                reason: format!("mass must be positive, got {v}"),
            });
        }
    }
    for (k, &v) in omega.iter().enumerate() {
        if !(v > 0.0) {
            return Err(HybridError::InvalidParameter {
                name: format!("omega[{k}]"),
                reason: format!("frequency must be positive, got {v}"),
            });
        }
    }
    for (k, &v) in lambda.iter().enumerate() {
        if !v.is_finite() {
            return Err(HybridError::InvalidParameter {
                name: format!("lambda[{k}]"),
                reason: format!("coupling must be finite, got {v}"),
            });
        }
    }
    Ok(())
}

/// Classical Hamiltonian of independent harmonic oscillators,
/// sum_k (p_k^2/2m_k + m_k omega_k^2 x_k^2 / 2), with analytic gradients.
fn harmonic_cl_field(m: Vec<f64>, omega: Vec<f64>) -> ScalarField {
    let (mv, ov) = (m.clone(), omega.clone());
    let mg = m.clone();
    let (mx, ox) = (m, omega);
    ScalarField::new(
        move |pt| {
            let mut acc = 0.0;
            for k in 0..pt.dim() {
                acc += pt.p[k] * pt.p[k] / (2.0 * mv[k])
                    + 0.5 * mv[k] * ov[k] * ov[k] * pt.x[k] * pt.x[k];
            }
            acc
        },
        move |pt| DVector::from_fn(pt.dim(), |k, _| mx[k] * ox[k] * ox[k] * pt.x[k]),
        move |pt| DVector::from_fn(pt.dim(), |k, _| pt.p[k] / mg[k]),
    )
}

fn check_n_trunc(n_trunc: usize) -> Result<()> {
    if n_trunc < 2 {
        return Err(HybridError::InvalidParameter {
            name: "n_trunc".into(),
            reason: format!("need at least 2 levels, got {n_trunc}"),
        });
    }
    Ok(())
}

/// Classical oscillators coupled bilinearly to one truncated quantum
/// oscillator: I(x) = X_op * sum_k lambda_k x_k.
pub fn make_bilinear_oscillators(
    m: &[f64],
    omega: &[f64],
    lambda: &[f64],
    qm_mass: f64,
    qm_omega: f64,
    n_trunc: usize,
) -> Result<HybridModel> {
    validate_env(m, omega, lambda)?;
    check_n_trunc(n_trunc)?;
    if !(qm_mass > 0.0) || !(qm_omega > 0.0) {
        return Err(HybridError::InvalidParameter {
            name: "qm_mass/qm_omega".into(),
            reason: format!("must be positive, got {qm_mass}, {qm_omega}"),
        });
    }

    let length_scale = 1.0 / (qm_mass * qm_omega).sqrt();
    let (x_op, p_op) = ladder_pair(n_trunc, length_scale);

    // H_qm = P^2/2M + M Omega^2 X^2/2 from the truncated squares.
    let h_qm = p_op
        .square()
        .scale(1.0 / (2.0 * qm_mass))
        .add_scaled(&x_op.square().scale(0.5 * qm_mass * qm_omega * qm_omega), 1.0)
        .expect("squares share the truncation dimension");

    let lam: Vec<f64> = lambda.to_vec();
    let (x_for_value, x_for_grad) = (x_op.clone(), x_op.clone());
    let lam_value = lam.clone();
    let lam_grad = lam.clone();
    let interaction = MatrixField::new(
        n_trunc,
        move |pt| {
            let drive: f64 = (0..pt.dim()).map(|k| lam_value[k] * pt.x[k]).sum();
            x_for_value.scale(drive)
        },
        move |k, _| x_for_grad.scale(lam_grad[k]),
        move |_, _| HermitianMatrix::zeros(n_trunc),
    );

    let params = ModelParams {
        kind: ModelKind::BilinearOscillators,
        cl_masses: m.to_vec(),
        cl_frequencies: omega.to_vec(),
        couplings: lam,
        qm_mass: Some(qm_mass),
        qm_frequency: Some(qm_omega),
        energies: None,
        n_trunc: Some(n_trunc),
        basis_scale: Some(length_scale),
    };

    HybridModel::new(
        m.len(),
        harmonic_cl_field(m.to_vec(), omega.to_vec()),
        h_qm,
        interaction,
        params,
    )?
    .with_quadratures(x_op, p_op)
}

/// Two-level system with energies (E1, E2) coupled to classical oscillators
/// through a fixed Hermitian coupling matrix: I(x) = Sigma * sum_k lambda_k x_k.
pub fn make_qbit_environment(
    e1: f64,
    e2: f64,
    sigma: HermitianMatrix,
    m: &[f64],
    omega: &[f64],
    lambda: &[f64],
) -> Result<HybridModel> {
    validate_env(m, omega, lambda)?;
    if sigma.dim() != 2 {
        return Err(HybridError::InvalidParameter {
            name: "sigma".into(),
            reason: format!("coupling matrix must be 2x2, got {0}x{0}", sigma.dim()),
        });
    }
    if !e1.is_finite() || !e2.is_finite() {
        return Err(HybridError::InvalidParameter {
            name: "energies".into(),
            reason: "E1, E2 must be finite".into(),
        });
    }

    let h_qm = HermitianMatrix::from_diagonal(&[e1, e2]);
    let lam: Vec<f64> = lambda.to_vec();
    let (sigma_value, sigma_grad) = (sigma.clone(), sigma);
    let lam_value = lam.clone();
    let lam_grad = lam.clone();
    let interaction = MatrixField::new(
        2,
        move |pt| {
            let drive: f64 = (0..pt.dim()).map(|k| lam_value[k] * pt.x[k]).sum();
            sigma_value.scale(drive)
        },
        move |k, _| sigma_grad.scale(lam_grad[k]),
        move |_, _| HermitianMatrix::zeros(2),
    );

    let params = ModelParams {
        kind: ModelKind::QbitEnvironment,
        cl_masses: m.to_vec(),
        cl_frequencies: omega.to_vec(),
        couplings: lam,
        qm_mass: None,
        qm_frequency: None,
        energies: Some((e1, e2)),
        n_trunc: None,
        basis_scale: None,
    };

    HybridModel::new(
        m.len(),
        harmonic_cl_field(m.to_vec(), omega.to_vec()),
        h_qm,
        interaction,
        params,
    )
}

/// Free classical particle and free (truncated) quantum particle bound by a
/// translation-invariant harmonic interaction I(x) = lambda (x - X_op)^2,
/// expanded with the truncated matrix square of X_op.
pub fn make_two_body_harmonic(
    m: f64,
    qm_mass: f64,
    lambda: f64,
    n_trunc: usize,
    basis_scale: f64,
) -> Result<HybridModel> {
    if !(m > 0.0) || !(qm_mass > 0.0) {
        return Err(HybridError::InvalidParameter {
            name: "masses".into(),
            reason: format!("must be positive, got m = {m}, M = {qm_mass}"),
        });
    }
    if !lambda.is_finite() {
        return Err(HybridError::InvalidParameter {
            name: "lambda".into(),
            reason: format!("coupling must be finite, got {lambda}"),
        });
    }
    if !(basis_scale > 0.0) {
        return Err(HybridError::InvalidParameter {
            name: "basis_scale".into(),
            reason: format!("must be positive, got {basis_scale}"),
        });
    }
    check_n_trunc(n_trunc)?;

    let (x_op, p_op) = ladder_pair(n_trunc, basis_scale);
    let h_qm = p_op.square().scale(1.0 / (2.0 * qm_mass));

    let x_sq = x_op.square();
    let (xv, xg) = (x_op.clone(), x_op.clone());
    let interaction = MatrixField::new(
        n_trunc,
        move |pt| {
            // lambda (x^2 - 2 x X + X^2)
            let x = pt.x[0];
            HermitianMatrix::identity(n_trunc)
                .scale(lambda * x * x)
                .add_scaled(&xv, -2.0 * lambda * x)
                .and_then(|m| m.add_scaled(&x_sq, lambda))
                .expect("terms share the truncation dimension")
        },
        move |_, pt| {
            let x = pt.x[0];
            HermitianMatrix::identity(n_trunc)
                .scale(2.0 * lambda * x)
                .add_scaled(&xg, -2.0 * lambda)
                .expect("terms share the truncation dimension")
        },
        move |_, _| HermitianMatrix::zeros(n_trunc),
    );

    let m_for_field = m;
    let h_cl = ScalarField::new(
        move |pt| pt.p[0] * pt.p[0] / (2.0 * m_for_field),
        |pt| DVector::zeros(pt.dim()),
        move |pt| DVector::from_fn(pt.dim(), |k, _| pt.p[k] / m_for_field),
    );

    let params = ModelParams {
        kind: ModelKind::TwoBodyHarmonic,
        cl_masses: vec![m],
        cl_frequencies: vec![0.0],
        couplings: vec![lambda],
        qm_mass: Some(qm_mass),
        qm_frequency: None,
        energies: None,
        n_trunc: Some(n_trunc),
        basis_scale: Some(basis_scale),
    };

    HybridModel::new(1, h_cl, h_qm, interaction, params)?.with_quadratures(x_op, p_op)
}

/// Ground state of the truncation basis displaced to mean position `x0` and
/// mean momentum `p0`, built as exp(alpha a^dagger - conj(alpha) a)|0> via
/// the eigendecomposition of the Hermitian generator.
pub fn displaced_ground_state(
    n_trunc: usize,
    length_scale: f64,
    x0: f64,
    p0: f64,
) -> Result<QuantumState> {
    check_n_trunc(n_trunc)?;
    let alpha = Complex64::new(
        x0 / (length_scale * std::f64::consts::SQRT_2),
        p0 * length_scale / std::f64::consts::SQRT_2,
    );
    // D = exp(alpha a^dagger - conj(alpha) a) = exp(iK) with Hermitian
    // K = -i(alpha a^dagger - conj(alpha) a).
    let mut k = nalgebra::DMatrix::zeros(n_trunc, n_trunc);
    for i in 0..n_trunc - 1 {
        let s = ((i + 1) as f64).sqrt();
        let lower = Complex64::new(0.0, -1.0) * alpha * s;
        k[(i + 1, i)] = lower;
        k[(i, i + 1)] = lower.conj();
    }
    let generator = HermitianMatrix::new(k)?;
    let d = generator.evolution_operator(-1.0)?;
    QuantumState::new(d.column(0).into_owned())
}

/// Center-of-mass and relative coordinates of the two-body model from the
/// classical coordinates and quantum mean values:
/// s = (M X_mean + m x)/(M + m), p_s = P_mean + p, r = X_mean - x,
/// p_r = mu (P_mean/M - p/m) with mu = M m/(M + m).
pub fn com_relative_transform(
    x: f64,
    p: f64,
    x_mean: f64,
    p_mean: f64,
    m: f64,
    qm_mass: f64,
) -> (f64, f64, f64, f64) {
    let sigma = qm_mass + m;
    let mu = qm_mass * m / sigma;
    (
        (qm_mass * x_mean + m * x) / sigma,
        p_mean + p,
        x_mean - x,
        mu * (p_mean / qm_mass - p / m),
    )
}
