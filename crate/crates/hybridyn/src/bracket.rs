//! Hybrid observables and the generalized quantum-classical Poisson bracket.
//!
//! A hybrid observable is classical in (x, p) and quadratic in the quantum
//! coordinates:
//!
//! ```text
//! A(x, p; X, P) = a0(x, p) + (1/2) z^dagger A(x, p) z,   z = X + iP,
//! ```
//!
//! with A(x, p) Hermitian. The generalized bracket is the sum of the sector
//! brackets, {A, B}_x = {A, B}_CL + {A, B}_QM, where the classical part uses
//! total (x, p)-derivatives (the coefficient matrices depend on them) and the
//! quantum part contracts the (X, P)-gradients.
//!
//! The classical part of a bracket of two matrix-bearing observables is
//! quartic in z; [`quartic_terms`] extracts its coefficient tensor so the
//! closure of the observable algebra can be tested rather than assumed.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{HybridError, Result};
use crate::hermitian::HermitianMatrix;
use crate::phase::{ClPhasePoint, HybridPoint, QmPhasePoint};

/// Step used by the finite-difference fallback constructors. Central
/// differences at this h keep relative errors near 1e-7 for O(1) fields,
/// adequate for tests; production observables supply analytic derivatives.
pub const FD_STEP: f64 = 1e-5;

type ScalarFn = dyn Fn(&ClPhasePoint) -> f64 + Send + Sync;
type ScalarGradFn = dyn Fn(&ClPhasePoint) -> DVector<f64> + Send + Sync;
type MatrixFn = dyn Fn(&ClPhasePoint) -> HermitianMatrix + Send + Sync;
type MatrixDerivFn = dyn Fn(usize, &ClPhasePoint) -> HermitianMatrix + Send + Sync;

/// Real-valued function of the classical phase point with its gradients.
#[derive(Clone)]
pub struct ScalarField {
    value: Arc<ScalarFn>,
    grad_x: Arc<ScalarGradFn>,
    grad_p: Arc<ScalarGradFn>,
}

impl ScalarField {
    pub fn new(
        value: impl Fn(&ClPhasePoint) -> f64 + Send + Sync + 'static,
        grad_x: impl Fn(&ClPhasePoint) -> DVector<f64> + Send + Sync + 'static,
        grad_p: impl Fn(&ClPhasePoint) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            grad_x: Arc::new(grad_x),
            grad_p: Arc::new(grad_p),
        }
    }

    /// Fallback constructor deriving gradients by central differences.
    /// Intended for tests and one-off diagnostics.
    pub fn numeric(value: impl Fn(&ClPhasePoint) -> f64 + Send + Sync + 'static) -> Self {
        let value = Arc::new(value);
        let vx = value.clone();
        let vp = value.clone();
        Self {
            value: value.clone(),
            grad_x: Arc::new(move |pt| {
                DVector::from_fn(pt.dim(), |k, _| {
                    let mut plus = pt.clone();
                    let mut minus = pt.clone();
                    plus.x[k] += FD_STEP;
                    minus.x[k] -= FD_STEP;
                    (vx(&plus) - vx(&minus)) / (2.0 * FD_STEP)
                })
            }),
            grad_p: Arc::new(move |pt| {
                DVector::from_fn(pt.dim(), |k, _| {
                    let mut plus = pt.clone();
                    let mut minus = pt.clone();
                    plus.p[k] += FD_STEP;
                    minus.p[k] -= FD_STEP;
                    (vp(&plus) - vp(&minus)) / (2.0 * FD_STEP)
                })
            }),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(
            move |_| c,
            |pt| DVector::zeros(pt.dim()),
            |pt| DVector::zeros(pt.dim()),
        )
    }

    /// The coordinate function x_k.
    pub fn coordinate(k: usize) -> Self {
        Self::new(
            move |pt| pt.x[k],
            move |pt| {
                let mut g = DVector::zeros(pt.dim());
                g[k] = 1.0;
                g
            },
            |pt| DVector::zeros(pt.dim()),
        )
    }

    /// The momentum function p_k.
    pub fn momentum(k: usize) -> Self {
        Self::new(
            move |pt| pt.p[k],
            |pt| DVector::zeros(pt.dim()),
            move |pt| {
                let mut g = DVector::zeros(pt.dim());
                g[k] = 1.0;
                g
            },
        )
    }

    pub fn value(&self, pt: &ClPhasePoint) -> f64 {
        (self.value)(pt)
    }

    pub fn grad_x(&self, pt: &ClPhasePoint) -> DVector<f64> {
        (self.grad_x)(pt)
    }

    pub fn grad_p(&self, pt: &ClPhasePoint) -> DVector<f64> {
        (self.grad_p)(pt)
    }
}

/// Hermitian-matrix-valued function of the classical phase point with its
/// entrywise partial-derivative matrices.
#[derive(Clone)]
pub struct MatrixField {
    dim: usize,
    value: Arc<MatrixFn>,
    d_dx: Arc<MatrixDerivFn>,
    d_dp: Arc<MatrixDerivFn>,
}

impl MatrixField {
    pub fn new(
        dim: usize,
        value: impl Fn(&ClPhasePoint) -> HermitianMatrix + Send + Sync + 'static,
        d_dx: impl Fn(usize, &ClPhasePoint) -> HermitianMatrix + Send + Sync + 'static,
        d_dp: impl Fn(usize, &ClPhasePoint) -> HermitianMatrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            d_dx: Arc::new(d_dx),
            d_dp: Arc::new(d_dp),
        }
    }

    /// Fallback constructor deriving the coefficient-matrix derivatives by
    /// central differences. Intended for tests and one-off diagnostics.
    pub fn numeric(
        dim: usize,
        value: impl Fn(&ClPhasePoint) -> HermitianMatrix + Send + Sync + 'static,
    ) -> Self {
        let value = Arc::new(value);
        let vx = value.clone();
        let vp = value.clone();
        Self {
            dim,
            value: value.clone(),
            d_dx: Arc::new(move |k, pt| {
                let mut plus = pt.clone();
                let mut minus = pt.clone();
                plus.x[k] += FD_STEP;
                minus.x[k] -= FD_STEP;
                vx(&plus)
                    .add_scaled(&vx(&minus), -1.0)
                    .expect("field evaluations share a dimension")
                    .scale(1.0 / (2.0 * FD_STEP))
            }),
            d_dp: Arc::new(move |k, pt| {
                let mut plus = pt.clone();
                let mut minus = pt.clone();
                plus.p[k] += FD_STEP;
                minus.p[k] -= FD_STEP;
                vp(&plus)
                    .add_scaled(&vp(&minus), -1.0)
                    .expect("field evaluations share a dimension")
                    .scale(1.0 / (2.0 * FD_STEP))
            }),
        }
    }

    /// Constant coefficient matrix; classical derivatives vanish.
    pub fn constant(matrix: HermitianMatrix) -> Self {
        let dim = matrix.dim();
        let zero = HermitianMatrix::zeros(dim);
        let dzx = zero.clone();
        let dzp = zero;
        Self::new(
            dim,
            move |_| matrix.clone(),
            move |_, _| dzx.clone(),
            move |_, _| dzp.clone(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, pt: &ClPhasePoint) -> HermitianMatrix {
        (self.value)(pt)
    }

    pub fn d_dx(&self, k: usize, pt: &ClPhasePoint) -> HermitianMatrix {
        (self.d_dx)(k, pt)
    }

    pub fn d_dp(&self, k: usize, pt: &ClPhasePoint) -> HermitianMatrix {
        (self.d_dp)(k, pt)
    }
}

/// Sector an observable belongs to: constant with respect to the other
/// sector's canonical coordinates (on the constraint surface).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    Classical,
    Quantum,
    Hybrid,
}

/// Observable of the form a0(x, p) + (1/2) z^dagger A(x, p) z.
#[derive(Clone)]
pub struct HybridObservable {
    n_cl: usize,
    scalar_part: Option<ScalarField>,
    matrix_part: Option<MatrixField>,
    declared_sector: Option<Sector>,
}

impl HybridObservable {
    pub fn new(
        n_cl: usize,
        scalar_part: Option<ScalarField>,
        matrix_part: Option<MatrixField>,
    ) -> Self {
        Self {
            n_cl,
            scalar_part,
            matrix_part,
            declared_sector: None,
        }
    }

    /// Purely classical observable.
    pub fn from_scalar(n_cl: usize, scalar: ScalarField) -> Self {
        Self::new(n_cl, Some(scalar), None)
    }

    /// Quadratic-form observable with (x, p)-dependent coefficients.
    pub fn from_matrix(n_cl: usize, matrix: MatrixField) -> Self {
        Self::new(n_cl, None, Some(matrix))
    }

    /// Quadratic-form observable with a constant coefficient matrix.
    pub fn qm_constant(n_cl: usize, matrix: HermitianMatrix) -> Self {
        Self::from_matrix(n_cl, MatrixField::constant(matrix))
    }

    /// Classification declared at construction, bypassing probing.
    pub fn with_declared_sector(mut self, sector: Sector) -> Self {
        self.declared_sector = Some(sector);
        self
    }

    pub fn n_cl(&self) -> usize {
        self.n_cl
    }

    /// Hilbert dimension of the matrix part, if any.
    pub fn n_qm(&self) -> Option<usize> {
        self.matrix_part.as_ref().map(|m| m.dim())
    }

    pub fn scalar_part(&self) -> Option<&ScalarField> {
        self.scalar_part.as_ref()
    }

    pub fn matrix_part(&self) -> Option<&MatrixField> {
        self.matrix_part.as_ref()
    }

    fn check_point(&self, point: &HybridPoint) -> Result<()> {
        if point.n_cl() != self.n_cl {
            return Err(HybridError::DimensionMismatch {
                expected: self.n_cl,
                actual: point.n_cl(),
            });
        }
        if let Some(m) = &self.matrix_part {
            if m.dim() != point.n_qm() {
                return Err(HybridError::DimensionMismatch {
                    expected: m.dim(),
                    actual: point.n_qm(),
                });
            }
        }
        Ok(())
    }

    /// Total classical derivatives (d/dx_k, d/dp_k) of the value at `point`,
    /// including the quadratic form through its coefficient matrices.
    fn cl_gradients(&self, point: &HybridPoint) -> (DVector<f64>, DVector<f64>) {
        let n = self.n_cl;
        let mut gx = DVector::zeros(n);
        let mut gp = DVector::zeros(n);
        if let Some(s) = &self.scalar_part {
            gx += s.grad_x(&point.cl);
            gp += s.grad_p(&point.cl);
        }
        if let Some(m) = &self.matrix_part {
            let z = point.qm.z();
            for k in 0..n {
                gx[k] += m.d_dx(k, &point.cl).quadratic_form(&z).re;
                gp[k] += m.d_dp(k, &point.cl).quadratic_form(&z).re;
            }
        }
        (gx, gp)
    }
}

/// Value of a hybrid observable at a hybrid phase-space point.
pub fn eval_hybrid(obs: &HybridObservable, point: &HybridPoint) -> Result<f64> {
    obs.check_point(point)?;
    let mut v = 0.0;
    if let Some(s) = &obs.scalar_part {
        v += s.value(&point.cl);
    }
    if let Some(m) = &obs.matrix_part {
        v += m.value(&point.cl).quadratic_form(&point.qm.z()).re;
    }
    Ok(v)
}

/// Generalized bracket {A, B}_x = {A, B}_CL + {A, B}_QM.
///
/// The classical part contracts total (x, p)-gradients; the quantum part is
/// Im(z^dagger A B z), the gradient contraction of the two quadratic forms.
pub fn hybrid_poisson(
    a: &HybridObservable,
    b: &HybridObservable,
    point: &HybridPoint,
) -> Result<f64> {
    a.check_point(point)?;
    b.check_point(point)?;

    let (ax, ap) = a.cl_gradients(point);
    let (bx, bp) = b.cl_gradients(point);
    let cl_part: f64 = (0..point.n_cl())
        .map(|k| ax[k] * bp[k] - ap[k] * bx[k])
        .sum();

    let qm_part = match (&a.matrix_part, &b.matrix_part) {
        (Some(ma), Some(mb)) => {
            let z = point.qm.z();
            let wa = ma.value(&point.cl).apply(&z);
            let wb = mb.value(&point.cl).apply(&z);
            // sum_i (dA/dX_i dB/dP_i - dA/dP_i dB/dX_i) = Im(conj(wa) . wb)
            wa.dotc(&wb).im
        }
        _ => 0.0,
    };

    Ok(cl_part + qm_part)
}

/// Coefficient tensor of the quartic-in-z terms produced by the classical
/// part of a bracket of two matrix-bearing observables:
///
/// ```text
/// M_{i,j,i',j'} = (1/4) sum_k (dA_ij/dx_k dB_i'j'/dp_k - dA_ij/dp_k dB_i'j'/dx_k)
/// ```
///
/// Entries are complex in general; the associated quartic form
/// sum M_{i,j,i',j'} conj(z_i) z_j conj(z_i') z_j' is nevertheless real,
/// because conjugating it permutes the tensor back onto itself
/// (M*_{i,j,i',j'} = M_{j,i,j',i'}, inherited from Hermiticity of the
/// coefficient matrices).
#[derive(Debug, Clone)]
pub struct QuarticTensor {
    dim: usize,
    m: Vec<Complex64>,
}

impl QuarticTensor {
    fn index(&self, i: usize, j: usize, ip: usize, jp: usize) -> usize {
        ((i * self.dim + j) * self.dim + ip) * self.dim + jp
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize, ip: usize, jp: usize) -> Complex64 {
        self.m[self.index(i, j, ip, jp)]
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// The quartic form at a quantum phase point, contracted as
    /// conj(z_i) z_j conj(z_i') z_j'.
    pub fn eval(&self, qm: &QmPhasePoint) -> f64 {
        let z = qm.z();
        let n = self.dim;
        // Factorize: sum_ij conj(z_i) z_j M_{i,j,.,.} is itself a quadratic
        // form per trailing pair; accumulate pairwise.
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let zij = z[i].conj() * z[j];
                if zij.norm_sqr() == 0.0 {
                    continue;
                }
                let mut inner = Complex64::new(0.0, 0.0);
                for ip in 0..n {
                    for jp in 0..n {
                        inner += self.m[self.index(i, j, ip, jp)] * z[ip].conj() * z[jp];
                    }
                }
                total += zij * inner;
            }
        }
        debug_assert!(
            total.im.abs() <= 1e-10 * (1.0 + total.re.abs()),
            "imaginary residue {} in a quartic form",
            total.im
        );
        total.re
    }

    /// Least-squares test of whether the quartic form, restricted to the
    /// constraint sphere, coincides with some quadratic form. Fits sampled
    /// values against the real quadratic basis {|z_i|^2, Re(conj(z_i) z_j),
    /// Im(conj(z_i) z_j)} and accepts when the worst residual is below 1e-6
    /// relative to the sampled scale.
    pub fn is_quadratic(&self, seed: u64) -> bool {
        let n = self.dim;
        let n_basis = n * n;
        let samples = (8 * n_basis).max(64);
        let mut rng = crate::rng::seeded(seed);

        let mut design = DMatrix::zeros(samples, n_basis);
        let mut target = DVector::zeros(samples);
        for s in 0..samples {
            let pt = QmPhasePoint::random_on_sphere(n, &mut rng);
            let z = pt.z();
            let mut col = 0;
            for i in 0..n {
                design[(s, col)] = z[i].norm_sqr();
                col += 1;
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    let w = z[i].conj() * z[j];
                    design[(s, col)] = w.re;
                    design[(s, col + 1)] = w.im;
                    col += 2;
                }
            }
            debug_assert_eq!(col, n_basis);
            target[s] = self.eval(&pt);
        }

        let scale = target.amax().max(1.0);
        let svd = design.clone().svd(true, true);
        let coeffs = match svd.solve(&target, 1e-12) {
            Ok(c) => c,
            Err(_) => return false,
        };
        let residual = (design * coeffs - target).amax();
        residual <= 1e-6 * scale
    }
}

/// Builds the M tensor of the quartic terms for a pair of observables at a
/// classical point. Requires matrix parts on both observables.
pub fn quartic_terms(
    a: &HybridObservable,
    b: &HybridObservable,
    cl: &ClPhasePoint,
) -> Result<QuarticTensor> {
    let (ma, mb) = match (&a.matrix_part, &b.matrix_part) {
        (Some(ma), Some(mb)) => (ma, mb),
        _ => {
            return Err(HybridError::InvalidParameter {
                name: "matrix_part".into(),
                reason: "quartic terms require matrix parts on both observables".into(),
            })
        }
    };
    if ma.dim() != mb.dim() {
        return Err(HybridError::DimensionMismatch {
            expected: ma.dim(),
            actual: mb.dim(),
        });
    }
    if cl.dim() != a.n_cl || cl.dim() != b.n_cl {
        return Err(HybridError::DimensionMismatch {
            expected: a.n_cl,
            actual: cl.dim(),
        });
    }

    let n = ma.dim();
    let n_cl = cl.dim();
    let da_dx: Vec<_> = (0..n_cl).map(|k| ma.d_dx(k, cl)).collect();
    let da_dp: Vec<_> = (0..n_cl).map(|k| ma.d_dp(k, cl)).collect();
    let db_dx: Vec<_> = (0..n_cl).map(|k| mb.d_dx(k, cl)).collect();
    let db_dp: Vec<_> = (0..n_cl).map(|k| mb.d_dp(k, cl)).collect();

    let mut m = vec![Complex64::new(0.0, 0.0); n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for ip in 0..n {
                for jp in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..n_cl {
                        acc += da_dx[k].entry(i, j) * db_dp[k].entry(ip, jp)
                            - da_dp[k].entry(i, j) * db_dx[k].entry(ip, jp);
                    }
                    m[((i * n + j) * n + ip) * n + jp] = 0.25 * acc;
                }
            }
        }
    }
    Ok(QuarticTensor { dim: n, m })
}

/// Classifies an observable by evaluating it at randomized points: constant
/// over the quantum sphere at fixed (x, p) means classical, constant over
/// classical points at a fixed sphere point means quantum, otherwise hybrid.
///
/// The probe set is 16 points per direction, with classical coordinates drawn
/// at two scales (1 and 3) so that dependence away from the origin is not
/// missed. The test is probabilistic; an explicitly declared sector on the
/// observable takes precedence.
pub fn sector_membership(obs: &HybridObservable, seed: u64) -> Sector {
    if let Some(declared) = obs.declared_sector {
        return declared;
    }
    let mut rng = crate::rng::seeded(seed);
    let n_cl = obs.n_cl;
    let n_qm = obs.n_qm().unwrap_or(2);

    let random_cl = |scale: f64, rng: &mut crate::rng::SeededRng| ClPhasePoint {
        x: DVector::from_fn(n_cl, |_, _| scale * crate::rng::standard_normal(rng)),
        p: DVector::from_fn(n_cl, |_, _| scale * crate::rng::standard_normal(rng)),
    };

    let tol = 1e-9;

    // Dependence on the quantum sector: spread over sphere points at fixed
    // classical points, two classical scales.
    let mut qm_dependent = false;
    for scale in [1.0, 3.0] {
        for _ in 0..2 {
            let cl = random_cl(scale, &mut rng);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for _ in 0..4 {
                let qm = QmPhasePoint::random_on_sphere(n_qm, &mut rng);
                let v = eval_hybrid(obs, &HybridPoint::new(cl.clone(), qm))
                    .expect("probe dimensions are consistent by construction");
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > tol * (1.0 + hi.abs().max(lo.abs())) {
                qm_dependent = true;
            }
        }
    }
    if !qm_dependent {
        return Sector::Classical;
    }

    // Dependence on the classical sector: spread over classical points (two
    // scales) at fixed sphere points.
    let mut cl_dependent = false;
    for _ in 0..4 {
        let qm = QmPhasePoint::random_on_sphere(n_qm, &mut rng);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for scale in [1.0, 3.0] {
            for _ in 0..2 {
                let cl = random_cl(scale, &mut rng);
                let v = eval_hybrid(obs, &HybridPoint::new(cl, qm.clone()))
                    .expect("probe dimensions are consistent by construction");
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if hi - lo > tol * (1.0 + hi.abs().max(lo.abs())) {
            cl_dependent = true;
        }
    }
    if !cl_dependent {
        return Sector::Quantum;
    }
    Sector::Hybrid
}

/// Random test observable: quadratic polynomial scalar part and coefficient
/// matrix affine in (x, p), both with analytic derivatives. Used by bracket
/// diagnostics and the closure analysis.
pub fn random_polynomial_observable<R: Rng>(
    n_cl: usize,
    n_qm: usize,
    rng: &mut R,
) -> HybridObservable {
    // Scalar part: c + sum_k (u_k x_k + v_k p_k) + sum_k (q_k x_k^2 + r_k p_k^2).
    let c = crate::rng::standard_normal(rng);
    let u: Vec<f64> = (0..n_cl).map(|_| crate::rng::standard_normal(rng)).collect();
    let v: Vec<f64> = (0..n_cl).map(|_| crate::rng::standard_normal(rng)).collect();
    let q: Vec<f64> = (0..n_cl).map(|_| crate::rng::standard_normal(rng)).collect();
    let r: Vec<f64> = (0..n_cl).map(|_| crate::rng::standard_normal(rng)).collect();
    let (uv, vv, qv, rv) = (u.clone(), v.clone(), q.clone(), r.clone());
    let (qg, rg) = (q.clone(), r.clone());
    let scalar = ScalarField::new(
        move |pt| {
            let mut acc = c;
            for k in 0..pt.dim() {
                acc += uv[k] * pt.x[k] + vv[k] * pt.p[k];
                acc += qv[k] * pt.x[k] * pt.x[k] + rv[k] * pt.p[k] * pt.p[k];
            }
            acc
        },
        move |pt| DVector::from_fn(pt.dim(), |k, _| u[k] + 2.0 * qg[k] * pt.x[k]),
        move |pt| DVector::from_fn(pt.dim(), |k, _| v[k] + 2.0 * rg[k] * pt.p[k]),
    );

    // Matrix part: A0 + sum_k (x_k B_k + p_k C_k), all random Hermitian.
    let a0 = HermitianMatrix::random(n_qm, rng);
    let bs: Vec<HermitianMatrix> = (0..n_cl).map(|_| HermitianMatrix::random(n_qm, rng)).collect();
    let cs: Vec<HermitianMatrix> = (0..n_cl).map(|_| HermitianMatrix::random(n_qm, rng)).collect();
    let (bv, cv) = (bs.clone(), cs.clone());
    let matrix = MatrixField::new(
        n_qm,
        move |pt| {
            let mut acc = a0.clone();
            for k in 0..pt.dim() {
                acc = acc
                    .add_scaled(&bv[k], pt.x[k])
                    .and_then(|m| m.add_scaled(&cv[k], pt.p[k]))
                    .expect("random matrices share a dimension");
            }
            acc
        },
        move |k, _| bs[k].clone(),
        move |k, _| cs[k].clone(),
    );

    HybridObservable::new(n_cl, Some(scalar), Some(matrix))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn random_hybrid_point<R: Rng>(n_cl: usize, n_qm: usize, rng: &mut R) -> HybridPoint {
        HybridPoint::new(
            ClPhasePoint {
                x: DVector::from_fn(n_cl, |_, _| crate::rng::standard_normal(rng)),
                p: DVector::from_fn(n_cl, |_, _| crate::rng::standard_normal(rng)),
            },
            QmPhasePoint::random_on_sphere(n_qm, rng),
        )
    }

    /// Central-difference bracket over all 2(n+N) coordinates; the quadratic
    /// form extends smoothly off the sphere, so displaced points are valid.
    fn finite_difference_bracket(
        a: &HybridObservable,
        b: &HybridObservable,
        point: &HybridPoint,
        h: f64,
    ) -> f64 {
        let y0 = point.flatten();
        let n_cl = point.n_cl();
        let n_qm = point.n_qm();
        let dim = y0.len();
        let eval_at = |y: &DVector<f64>, obs: &HybridObservable| {
            eval_hybrid(obs, &HybridPoint::unflatten(n_cl, n_qm, y).unwrap()).unwrap()
        };
        let grad = |obs: &HybridObservable| {
            DVector::from_fn(dim, |i, _| {
                let mut plus = y0.clone();
                let mut minus = y0.clone();
                plus[i] += h;
                minus[i] -= h;
                (eval_at(&plus, obs) - eval_at(&minus, obs)) / (2.0 * h)
            })
        };
        let ga = grad(a);
        let gb = grad(b);
        // Conjugate pairs in flattened layout: (x_k, p_k) at (k, n_cl + k),
        // (X_i, P_i) at (2 n_cl + i, 2 n_cl + n_qm + i).
        let mut acc = 0.0;
        for k in 0..n_cl {
            acc += ga[k] * gb[n_cl + k] - ga[n_cl + k] * gb[k];
        }
        for i in 0..n_qm {
            let xi = 2 * n_cl + i;
            let pi = 2 * n_cl + n_qm + i;
            acc += ga[xi] * gb[pi] - ga[pi] * gb[xi];
        }
        acc
    }

    #[test]
    fn eval_pure_classical_ignores_quantum_point() {
        let obs = HybridObservable::from_scalar(
            2,
            ScalarField::new(
                |pt| pt.x[0] * pt.x[0],
                |pt| DVector::from_column_slice(&[2.0 * pt.x[0], 0.0][..pt.dim()]),
                |pt| DVector::zeros(pt.dim()),
            ),
        );
        let mut rng = seeded(101);
        let cl = ClPhasePoint::from_slices(&[1.5, -0.3], &[0.2, 0.7]).unwrap();
        for _ in 0..5 {
            let pt = HybridPoint::new(cl.clone(), QmPhasePoint::random_on_sphere(3, &mut rng));
            assert!((eval_hybrid(&obs, &pt).unwrap() - 2.25).abs() < 1e-15);
        }
    }

    #[test]
    fn eval_constant_identity_matrix_is_one_on_sphere() {
        let obs = HybridObservable::qm_constant(1, HermitianMatrix::identity(3));
        let mut rng = seeded(103);
        for _ in 0..5 {
            let pt = HybridPoint::new(
                ClPhasePoint::from_slices(&[0.0], &[0.0]).unwrap(),
                QmPhasePoint::random_on_sphere(3, &mut rng),
            );
            assert!((eval_hybrid(&obs, &pt).unwrap() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn eval_scaled_pauli_example() {
        // matrix part x_1 * sigma_x at x_1 = 2 on (1,1)/sqrt(2): value 2.
        let obs = HybridObservable::from_matrix(
            1,
            MatrixField::new(
                2,
                |pt| HermitianMatrix::pauli_x().scale(pt.x[0]),
                |_, _| HermitianMatrix::pauli_x(),
                |_, _| HermitianMatrix::zeros(2),
            ),
        );
        let pt = HybridPoint::new(
            ClPhasePoint::from_slices(&[2.0], &[0.0]).unwrap(),
            crate::oscillator::state_to_phase(&crate::phase::QuantumState::uniform_superposition(
                2,
            )),
        );
        assert!((eval_hybrid(&obs, &pt).unwrap() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn canonical_pair_brackets() {
        let x1 = HybridObservable::from_scalar(2, ScalarField::coordinate(0));
        let p1 = HybridObservable::from_scalar(2, ScalarField::momentum(0));
        let p2 = HybridObservable::from_scalar(2, ScalarField::momentum(1));
        let mut rng = seeded(105);
        let pt = random_hybrid_point(2, 2, &mut rng);
        assert!((hybrid_poisson(&x1, &p1, &pt).unwrap() - 1.0).abs() < 1e-14);
        assert!(hybrid_poisson(&x1, &p2, &pt).unwrap().abs() < 1e-14);
    }

    #[test]
    fn separability_of_pure_sector_observables() {
        let mut rng = seeded(107);
        for _ in 0..10 {
            let a = HybridObservable::from_scalar(2, ScalarField::coordinate(0));
            let b = HybridObservable::qm_constant(2, HermitianMatrix::random(3, &mut rng));
            let pt = random_hybrid_point(2, 3, &mut rng);
            assert!(hybrid_poisson(&a, &b, &pt).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn pure_quantum_bracket_reduces_to_qm_poisson() {
        let mut rng = seeded(109);
        for _ in 0..10 {
            let f = HermitianMatrix::random(3, &mut rng);
            let g = HermitianMatrix::random(3, &mut rng);
            let pt = random_hybrid_point(1, 3, &mut rng);
            let via_hybrid = hybrid_poisson(
                &HybridObservable::qm_constant(1, f.clone()),
                &HybridObservable::qm_constant(1, g.clone()),
                &pt,
            )
            .unwrap();
            let direct = crate::oscillator::qm_poisson(&f, &g, &pt.qm).unwrap();
            assert!((via_hybrid - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn bracket_matches_finite_differences_on_random_observables() {
        let mut rng = seeded(111);
        for _ in 0..8 {
            let a = random_polynomial_observable(2, 3, &mut rng);
            let b = random_polynomial_observable(2, 3, &mut rng);
            let pt = random_hybrid_point(2, 3, &mut rng);
            let analytic = hybrid_poisson(&a, &b, &pt).unwrap();
            let fd = finite_difference_bracket(&a, &b, &pt, 1e-5);
            let scale = 1.0_f64.max(analytic.abs());
            assert!(
                (analytic - fd).abs() < 1e-6 * scale,
                "analytic {analytic} vs finite difference {fd}"
            );
        }
    }

    #[test]
    fn bracket_is_antisymmetric_and_bilinear() {
        let mut rng = seeded(113);
        let a = random_polynomial_observable(2, 2, &mut rng);
        let b = random_polynomial_observable(2, 2, &mut rng);
        let pt = random_hybrid_point(2, 2, &mut rng);
        let ab = hybrid_poisson(&a, &b, &pt).unwrap();
        let ba = hybrid_poisson(&b, &a, &pt).unwrap();
        assert!((ab + ba).abs() < 1e-12 * (1.0 + ab.abs()));

        // Scaling the matrix and scalar parts of A by 3 scales the bracket by 3.
        let scaled = {
            let s = a.scalar_part.clone().unwrap();
            let m = a.matrix_part.clone().unwrap();
            let (sv, sgx, sgp) = (s.clone(), s.clone(), s);
            let (mv, mdx, mdp) = (m.clone(), m.clone(), m.clone());
            HybridObservable::new(
                2,
                Some(ScalarField::new(
                    move |pt| 3.0 * sv.value(pt),
                    move |pt| 3.0 * sgx.grad_x(pt),
                    move |pt| 3.0 * sgp.grad_p(pt),
                )),
                Some(MatrixField::new(
                    m.dim(),
                    move |pt| mv.value(pt).scale(3.0),
                    move |k, pt| mdx.d_dx(k, pt).scale(3.0),
                    move |k, pt| mdp.d_dp(k, pt).scale(3.0),
                )),
            )
        };
        let scaled_bracket = hybrid_poisson(&scaled, &b, &pt).unwrap();
        assert!((scaled_bracket - 3.0 * ab).abs() < 1e-10 * (1.0 + ab.abs()));
    }

    fn pauli_pair() -> (HybridObservable, HybridObservable) {
        // A: matrix part x_1 sigma_x; B: matrix part p_1 sigma_y.
        let a = HybridObservable::from_matrix(
            1,
            MatrixField::new(
                2,
                |pt| HermitianMatrix::pauli_x().scale(pt.x[0]),
                |_, _| HermitianMatrix::pauli_x(),
                |_, _| HermitianMatrix::zeros(2),
            ),
        );
        let b = HybridObservable::from_matrix(
            1,
            MatrixField::new(
                2,
                |pt| HermitianMatrix::pauli_y().scale(pt.p[0]),
                |_, _| HermitianMatrix::zeros(2),
                |_, _| HermitianMatrix::pauli_y(),
            ),
        );
        (a, b)
    }

    #[test]
    fn quartic_tensor_of_constant_matrices_vanishes() {
        let mut rng = seeded(115);
        let a = HybridObservable::qm_constant(1, HermitianMatrix::random(2, &mut rng));
        let b = HybridObservable::qm_constant(1, HermitianMatrix::random(2, &mut rng));
        let cl = ClPhasePoint::from_slices(&[0.4], &[0.1]).unwrap();
        assert!(quartic_terms(&a, &b, &cl).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn quartic_tensor_pauli_pair_matches_outer_product() {
        let (a, b) = pauli_pair();
        let cl = ClPhasePoint::from_slices(&[0.7], &[-0.2]).unwrap();
        let m = quartic_terms(&a, &b, &cl).unwrap();
        let sx = HermitianMatrix::pauli_x();
        let sy = HermitianMatrix::pauli_y();
        for i in 0..2 {
            for j in 0..2 {
                for ip in 0..2 {
                    for jp in 0..2 {
                        let expected = 0.25 * sx.entry(i, j) * sy.entry(ip, jp);
                        assert!((m.entry(i, j, ip, jp) - expected).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn quartic_form_reproduces_classical_bracket_part() {
        // For the Pauli pair the scalar parts vanish, so the whole classical
        // bracket part is the quartic form; compare against the
        // finite-difference classical bracket.
        let (a, b) = pauli_pair();
        let mut rng = seeded(117);
        for _ in 0..20 {
            let pt = random_hybrid_point(1, 2, &mut rng);
            let m = quartic_terms(&a, &b, &pt.cl).unwrap();
            let quartic = m.eval(&pt.qm);

            // Classical-sector finite difference only.
            let h = 1e-5;
            let eval_cl = |dx: f64, dp: f64, obs: &HybridObservable| {
                let mut cl = pt.cl.clone();
                cl.x[0] += dx;
                cl.p[0] += dp;
                eval_hybrid(obs, &HybridPoint::new(cl, pt.qm.clone())).unwrap()
            };
            let da_dx = (eval_cl(h, 0.0, &a) - eval_cl(-h, 0.0, &a)) / (2.0 * h);
            let da_dp = (eval_cl(0.0, h, &a) - eval_cl(0.0, -h, &a)) / (2.0 * h);
            let db_dx = (eval_cl(h, 0.0, &b) - eval_cl(-h, 0.0, &b)) / (2.0 * h);
            let db_dp = (eval_cl(0.0, h, &b) - eval_cl(0.0, -h, &b)) / (2.0 * h);
            let fd = da_dx * db_dp - da_dp * db_dx;
            assert!(
                (quartic - fd).abs() < 1e-8 * (1.0 + fd.abs()),
                "quartic {quartic} vs finite difference {fd}"
            );
        }
    }

    #[test]
    fn pauli_pair_quartic_form_is_not_quadratic() {
        let (a, b) = pauli_pair();
        let cl = ClPhasePoint::from_slices(&[0.3], &[0.9]).unwrap();
        let m = quartic_terms(&a, &b, &cl).unwrap();
        assert!(!m.is_quadratic(119));
    }

    #[test]
    fn identity_factor_quartic_form_is_quadratic() {
        // A with matrix part x_1 * identity: the quartic form factors through
        // the constraint and reduces to a quadratic form on the sphere.
        let a = HybridObservable::from_matrix(
            1,
            MatrixField::new(
                2,
                |pt| HermitianMatrix::identity(2).scale(pt.x[0]),
                |_, _| HermitianMatrix::identity(2),
                |_, _| HermitianMatrix::zeros(2),
            ),
        );
        let b = HybridObservable::from_matrix(
            1,
            MatrixField::new(
                2,
                |pt| HermitianMatrix::pauli_y().scale(pt.p[0]),
                |_, _| HermitianMatrix::zeros(2),
                |_, _| HermitianMatrix::pauli_y(),
            ),
        );
        let cl = ClPhasePoint::from_slices(&[0.3], &[0.9]).unwrap();
        let m = quartic_terms(&a, &b, &cl).unwrap();
        assert!(m.is_quadratic(121));
    }

    #[test]
    fn sector_classification_examples() {
        let cl_obs = HybridObservable::from_scalar(
            1,
            ScalarField::new(
                |pt| pt.x[0] * pt.x[0] + pt.p[0] * pt.p[0],
                |pt| DVector::from_column_slice(&[2.0 * pt.x[0]][..pt.dim()]),
                |pt| DVector::from_column_slice(&[2.0 * pt.p[0]][..pt.dim()]),
            ),
        );
        assert_eq!(sector_membership(&cl_obs, 1), Sector::Classical);

        let qm_obs = HybridObservable::qm_constant(1, HermitianMatrix::pauli_z());
        assert_eq!(sector_membership(&qm_obs, 2), Sector::Quantum);

        let (hybrid_obs, _) = pauli_pair();
        assert_eq!(sector_membership(&hybrid_obs, 3), Sector::Hybrid);

        // A constant multiple of the identity is constant on the sphere, so
        // it belongs to the classical sector even though it is written as a
        // matrix observable.
        let id_obs = HybridObservable::qm_constant(1, HermitianMatrix::identity(3));
        assert_eq!(sector_membership(&id_obs, 4), Sector::Classical);

        // The zero observable is constant with respect to both sectors; the
        // classical rule fires first.
        let zero = HybridObservable::new(1, None, None);
        assert_eq!(sector_membership(&zero, 5), Sector::Classical);

        // Declared sector overrides probing.
        let declared = HybridObservable::qm_constant(1, HermitianMatrix::identity(3))
            .with_declared_sector(Sector::Quantum);
        assert_eq!(sector_membership(&declared, 6), Sector::Quantum);
    }

    #[test]
    fn numeric_fallback_matches_analytic_derivatives() {
        let mut rng = seeded(123);
        let analytic = random_polynomial_observable(2, 2, &mut rng);
        let s = analytic.scalar_part.clone().unwrap();
        let m = analytic.matrix_part.clone().unwrap();
        let (sv, mv) = (s.clone(), m.clone());
        let numeric = HybridObservable::new(
            2,
            Some(ScalarField::numeric(move |pt| sv.value(pt))),
            Some(MatrixField::numeric(2, move |pt| mv.value(pt))),
        );
        let b = random_polynomial_observable(2, 2, &mut rng);
        let pt = random_hybrid_point(2, 2, &mut rng);
        let exact = hybrid_poisson(&analytic, &b, &pt).unwrap();
        let approx = hybrid_poisson(&numeric, &b, &pt).unwrap();
        assert!((exact - approx).abs() < 1e-6 * (1.0 + exact.abs()));
    }
}
