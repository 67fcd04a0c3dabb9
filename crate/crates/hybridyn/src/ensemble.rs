//! Weighted ensembles of hybrid phase points: sphere sampling, phase-space
//! averages, parallel evolution, and marginal distributions.

use nalgebra::{Complex, DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bracket::HybridObservable;
use crate::error::{HybridError, Result};
use crate::hermitian::HermitianMatrix;
use crate::integrator::{integrate, IntegratorConfig};
use crate::models::HybridModel;
use crate::numeric::CompensatedSum;
use crate::phase::{ClPhasePoint, HybridPoint, QmPhasePoint, CONSTRAINT_TOL};
use crate::rng::{seeded, standard_normal};

const WEIGHT_TOL: f64 = 1e-12;

/// Weighted collection of hybrid phase points. Weights are nonnegative and
/// sum to one; every member satisfies the quantum sphere constraint.
#[derive(Debug, Clone)]
pub struct HybridEnsemble {
    members: Vec<(f64, HybridPoint)>,
    rng_seed: u64,
}

impl HybridEnsemble {
    pub fn new(members: Vec<(f64, HybridPoint)>, rng_seed: u64) -> Result<Self> {
        if members.is_empty() {
            return Err(HybridError::EmptyEnsemble);
        }
        let mut sum = CompensatedSum::new();
        for (w, _) in &members {
            if !w.is_finite() || *w < 0.0 {
                return Err(HybridError::InvalidWeights { sum: *w });
            }
            sum.add(*w);
        }
        if (sum.value() - 1.0).abs() > WEIGHT_TOL {
            return Err(HybridError::InvalidWeights { sum: sum.value() });
        }
        let (n_cl, n_qm) = (members[0].1.n_cl(), members[0].1.n_qm());
        for (i, (_, pt)) in members.iter().enumerate() {
            if pt.n_cl() != n_cl || pt.n_qm() != n_qm {
                return Err(HybridError::DimensionMismatch {
                    expected: n_cl + n_qm,
                    actual: pt.n_cl() + pt.n_qm(),
                });
            }
            let c = pt.qm.constraint();
            if (c - 1.0).abs() > CONSTRAINT_TOL {
                return Err(HybridError::MemberFailure {
                    member: i,
                    source: Box::new(HybridError::ConstraintViolation {
                        deviation: (c - 1.0).abs(),
                        tolerance: CONSTRAINT_TOL,
                    }),
                });
            }
        }
        Ok(Self { members, rng_seed })
    }

    /// Equal-weight ensemble over the given points.
    pub fn uniform_weights(points: Vec<HybridPoint>, rng_seed: u64) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(HybridError::EmptyEnsemble);
        }
        let w = 1.0 / n as f64;
        Self::new(points.into_iter().map(|p| (w, p)).collect(), rng_seed)
    }

    /// Product ensemble: classical coordinates drawn from an isotropic
    /// Gaussian cloud around `cl_center`, quantum points drawn uniformly
    /// from the constraint sphere, the two draws independent.
    pub fn sample_factorized(
        count: usize,
        cl_center: &ClPhasePoint,
        cl_spread: f64,
        n_qm: usize,
        rng_seed: u64,
    ) -> Result<Self> {
        if count == 0 {
            return Err(HybridError::EmptyEnsemble);
        }
        if !(cl_spread >= 0.0) {
            return Err(HybridError::InvalidParameter {
                name: "cl_spread".into(),
                reason: "must be nonnegative".into(),
            });
        }
        let mut rng = seeded(rng_seed);
        let n_cl = cl_center.dim();
        let mut points = Vec::with_capacity(count);
        for _ in 0..count {
            let x = DVector::from_fn(n_cl, |k, _| {
                cl_center.x[k] + cl_spread * standard_normal(&mut rng)
            });
            let p = DVector::from_fn(n_cl, |k, _| {
                cl_center.p[k] + cl_spread * standard_normal(&mut rng)
            });
            let qm = QmPhasePoint::random_on_sphere(n_qm, &mut rng);
            points.push(HybridPoint::new(ClPhasePoint::new(x, p)?, qm));
        }
        Self::uniform_weights(points, rng_seed)
    }

    pub fn members(&self) -> &[(f64, HybridPoint)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn n_cl(&self) -> usize {
        self.members[0].1.n_cl()
    }

    pub fn n_qm(&self) -> usize {
        self.members[0].1.n_qm()
    }

    /// Apply a (generally member-dependent) unitary to each quantum point,
    /// leaving weights and classical coordinates untouched.
    pub fn map_qm_unitary<F>(&self, mut unitary: F) -> Result<Self>
    where
        F: FnMut(usize) -> DMatrix<Complex64>,
    {
        let members = self
            .members
            .iter()
            .enumerate()
            .map(|(i, (w, pt))| {
                let qm = pt.qm.apply_unitary(&unitary(i))?;
                Ok((*w, HybridPoint::new(pt.cl.clone(), qm)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(members, self.rng_seed)
    }
}

/// Draw `count` quantum phase points uniformly from the sphere C = 1.
pub fn sample_sphere(n: usize, count: usize, seed: u64) -> Vec<QmPhasePoint> {
    let mut rng = seeded(seed);
    (0..count)
        .map(|_| QmPhasePoint::random_on_sphere(n, &mut rng))
        .collect()
}

/// Monte Carlo estimate of I_ab = (N/2) E[(X_a + iP_a)(X_b - iP_b)] over the
/// uniform sphere measure, together with per-entry standard errors. The
/// exact value is the identity matrix.
#[derive(Debug, Clone)]
pub struct SphereIdentity {
    pub estimate: DMatrix<Complex64>,
    pub stderr_re: DMatrix<f64>,
    pub stderr_im: DMatrix<f64>,
    pub samples: usize,
}

impl SphereIdentity {
    /// Largest deviation from the identity in units of the entrywise
    /// standard error. Entries with zero variance must match exactly.
    pub fn max_sigma_deviation(&self) -> f64 {
        let n = self.estimate.nrows();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let target = if a == b { 1.0 } else { 0.0 };
                let dev_re = (self.estimate[(a, b)].re - target).abs();
                let dev_im = self.estimate[(a, b)].im.abs();
                worst = worst.max(sigma_ratio(dev_re, self.stderr_re[(a, b)]));
                worst = worst.max(sigma_ratio(dev_im, self.stderr_im[(a, b)]));
            }
        }
        worst
    }
}

fn sigma_ratio(deviation: f64, se: f64) -> f64 {
    if se == 0.0 {
        if deviation < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        deviation / se
    }
}

/// Estimate the sphere identity matrix from `samples` uniform draws.
pub fn sphere_identity_check(n: usize, samples: usize, seed: u64) -> Result<SphereIdentity> {
    if n == 0 || samples < 2 {
        return Err(HybridError::InvalidParameter {
            name: "sphere_identity_check".into(),
            reason: "need n >= 1 and at least 2 samples".into(),
        });
    }
    let mut rng = seeded(seed);
    let scale = n as f64 / 2.0;
    // Running sums for mean and variance of each entry component.
    let mut sum_re = DMatrix::<f64>::zeros(n, n);
    let mut sum_im = DMatrix::<f64>::zeros(n, n);
    let mut sumsq_re = DMatrix::<f64>::zeros(n, n);
    let mut sumsq_im = DMatrix::<f64>::zeros(n, n);
    for _ in 0..samples {
        let z = QmPhasePoint::random_on_sphere(n, &mut rng).z();
        for a in 0..n {
            for b in 0..n {
                let v = scale * z[a] * z[b].conj();
                sum_re[(a, b)] += v.re;
                sum_im[(a, b)] += v.im;
                sumsq_re[(a, b)] += v.re * v.re;
                sumsq_im[(a, b)] += v.im * v.im;
            }
        }
    }
    let m = samples as f64;
    let mut estimate = DMatrix::<Complex64>::zeros(n, n);
    let mut stderr_re = DMatrix::<f64>::zeros(n, n);
    let mut stderr_im = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mean_re = sum_re[(a, b)] / m;
            let mean_im = sum_im[(a, b)] / m;
            estimate[(a, b)] = Complex::new(mean_re, mean_im);
            let var_re = (sumsq_re[(a, b)] / m - mean_re * mean_re).max(0.0);
            let var_im = (sumsq_im[(a, b)] / m - mean_im * mean_im).max(0.0);
            stderr_re[(a, b)] = (var_re / (m - 1.0)).sqrt();
            stderr_im[(a, b)] = (var_im / (m - 1.0)).sqrt();
        }
    }
    Ok(SphereIdentity {
        estimate,
        stderr_re,
        stderr_im,
        samples,
    })
}

/// Normalization factor N! / (2 pi)^N of the sphere ensemble average,
/// computed as an iterative product to avoid overflow.
pub fn gamma_factor(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(HybridError::InvalidParameter {
            name: "n".into(),
            reason: "the normalization factor is defined for n >= 1".into(),
        });
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut acc = 1.0;
    for k in 1..=n {
        acc *= k as f64 / two_pi;
    }
    Ok(acc)
}

/// Ensemble average of a hybrid observable with compensated accumulation.
pub fn expectation(ensemble: &HybridEnsemble, obs: &HybridObservable) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for (w, pt) in ensemble.members() {
        acc.add(w * crate::bracket::eval_hybrid(obs, pt)?);
    }
    Ok(acc.value())
}

/// Evolve every member to `t_final` under the same integrator settings.
/// Weights are carried over bit-for-bit; a failing member reports its index.
pub fn evolve_ensemble(
    model: &HybridModel,
    ensemble: &HybridEnsemble,
    cfg: &IntegratorConfig,
) -> Result<HybridEnsemble> {
    cfg.validate()?;
    let mut final_cfg = cfg.clone();
    final_cfg.record_stride = usize::MAX;
    let members = ensemble
        .members()
        .par_iter()
        .enumerate()
        .map(|(i, (w, pt))| {
            let traj = integrate(model, pt, &final_cfg).map_err(|e| {
                HybridError::MemberFailure {
                    member: i,
                    source: Box::new(e),
                }
            })?;
            let end = traj.points.last().expect("trajectory records endpoint");
            Ok((*w, end.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    // Weights and dimensions are inherited from a validated ensemble, and
    // integration drift of the constraint is the integrator's to report, so
    // the fresh-ensemble gate is not reapplied here.
    Ok(HybridEnsemble {
        members,
        rng_seed: ensemble.seed(),
    })
}

/// Evolve every member, keeping the recorded snapshots. Returns one ensemble
/// per recorded time, in time order; all members share the time grid.
pub fn evolve_ensemble_recorded(
    model: &HybridModel,
    ensemble: &HybridEnsemble,
    cfg: &IntegratorConfig,
) -> Result<Vec<(f64, HybridEnsemble)>> {
    cfg.validate()?;
    let trajectories = ensemble
        .members()
        .par_iter()
        .enumerate()
        .map(|(i, (_, pt))| {
            integrate(model, pt, cfg).map_err(|e| HybridError::MemberFailure {
                member: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let times = trajectories[0].times.clone();
    let mut out = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let members = ensemble
            .members()
            .iter()
            .zip(trajectories.iter())
            .map(|((w, _), traj)| (*w, traj.points[k].clone()))
            .collect();
        // Same reasoning as in evolve_ensemble: snapshots inherit validated
        // weights, and constraint drift is metered by the integrator.
        out.push((
            t,
            HybridEnsemble {
                members,
                rng_seed: ensemble.seed(),
            },
        ));
    }
    Ok(out)
}

/// Classical coordinate selector for marginals and correlations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClAxis {
    Position(usize),
    Momentum(usize),
}

impl ClAxis {
    fn read(&self, pt: &HybridPoint) -> Result<f64> {
        match *self {
            ClAxis::Position(k) => {
                pt.cl.x.get(k).copied().ok_or(HybridError::DimensionMismatch {
                    expected: k + 1,
                    actual: pt.n_cl(),
                })
            }
            ClAxis::Momentum(k) => {
                pt.cl.p.get(k).copied().ok_or(HybridError::DimensionMismatch {
                    expected: k + 1,
                    actual: pt.n_cl(),
                })
            }
        }
    }

    fn label(&self) -> String {
        match *self {
            ClAxis::Position(k) => format!("x{k}"),
            ClAxis::Momentum(k) => format!("p{k}"),
        }
    }
}

/// Weighted histogram of selected classical coordinates on a fixed grid.
/// Bin masses sum to the total ensemble weight.
#[derive(Debug, Clone)]
pub struct MarginalHistogram {
    pub axes: Vec<ClAxis>,
    pub edges: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
}

impl MarginalHistogram {
    pub fn bins_per_axis(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.len() - 1).collect()
    }

    pub fn total_mass(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for m in &self.masses {
            acc.add(*m);
        }
        acc.value()
    }
}

/// Marginal distribution of the classical coordinates listed in `axes`,
/// binned on the provided edges. A member falling outside the grid is an
/// error rather than silently dropped mass.
pub fn marginal_cl(
    ensemble: &HybridEnsemble,
    axes: &[ClAxis],
    edges: &[Vec<f64>],
) -> Result<MarginalHistogram> {
    if axes.is_empty() || axes.len() != edges.len() {
        return Err(HybridError::InvalidParameter {
            name: "axes".into(),
            reason: "need one edge vector per selected axis".into(),
        });
    }
    for (axis, e) in axes.iter().zip(edges.iter()) {
        if e.len() < 2 || e.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(HybridError::InvalidParameter {
                name: axis.label(),
                reason: "edges must be strictly increasing with at least two entries".into(),
            });
        }
    }
    let bins: Vec<usize> = edges.iter().map(|e| e.len() - 1).collect();
    let total: usize = bins.iter().product();
    let mut masses = vec![0.0f64; total];
    for (w, pt) in ensemble.members() {
        let mut flat = 0usize;
        for (d, axis) in axes.iter().enumerate() {
            let v = axis.read(pt)?;
            let e = &edges[d];
            if !(v >= e[0] && v <= *e.last().expect("nonempty edges")) {
                return Err(HybridError::HistogramOutOfRange {
                    axis: axis.label(),
                    value: v,
                });
            }
            // partition_point gives the first edge > v; the last edge is
            // inclusive so the top bin closes the range.
            let idx = e.partition_point(|&edge| edge <= v).min(e.len() - 1) - 1;
            flat = flat * bins[d] + idx;
        }
        masses[flat] += w;
    }
    Ok(MarginalHistogram {
        axes: axes.to_vec(),
        edges: edges.to_vec(),
        masses,
    })
}

/// Quantum marginal sum_j w_j |psi_j><psi_j| as a density matrix.
pub fn marginal_qm_density_matrix(ensemble: &HybridEnsemble) -> Result<HermitianMatrix> {
    let n = ensemble.n_qm();
    let mut acc = DMatrix::<Complex64>::zeros(n, n);
    for (w, pt) in ensemble.members() {
        let c = pt.qm.z() / Complex64::new(std::f64::consts::SQRT_2, 0.0);
        for a in 0..n {
            for b in 0..n {
                acc[(a, b)] += Complex64::new(*w, 0.0) * c[a] * c[b].conj();
            }
        }
    }
    Ok(HermitianMatrix::symmetrized(acc))
}

/// Raw and factorized second moments of two classical coordinates:
/// (⟨v_a v_b⟩, ⟨v_a⟩⟨v_b⟩). Their difference is the connected correlation.
pub fn cl_correlation(
    ensemble: &HybridEnsemble,
    a: ClAxis,
    b: ClAxis,
) -> Result<(f64, f64)> {
    let mut prod = CompensatedSum::new();
    let mut mean_a = CompensatedSum::new();
    let mut mean_b = CompensatedSum::new();
    for (w, pt) in ensemble.members() {
        let va = a.read(pt)?;
        let vb = b.read(pt)?;
        prod.add(w * va * vb);
        mean_a.add(w * va);
        mean_b.add(w * vb);
    }
    Ok((prod.value(), mean_a.value() * mean_b.value()))
}

/// Connected cross-covariance between a classical coordinate and a quantum
/// quadratic form, with a jackknife-free standard error estimate from the
/// weighted sample.
pub fn hybrid_cross_covariance(
    ensemble: &HybridEnsemble,
    axis: ClAxis,
    qm_obs: &HermitianMatrix,
) -> Result<(f64, f64)> {
    let mut mean_a = CompensatedSum::new();
    let mut mean_b = CompensatedSum::new();
    let mut values = Vec::with_capacity(ensemble.len());
    for (w, pt) in ensemble.members() {
        let va = axis.read(pt)?;
        let vb = crate::oscillator::eval_observable(qm_obs, &pt.qm)?;
        mean_a.add(w * va);
        mean_b.add(w * vb);
        values.push((*w, va, vb));
    }
    let (ma, mb) = (mean_a.value(), mean_b.value());
    let mut cov = CompensatedSum::new();
    let mut var_of_prod = CompensatedSum::new();
    for (w, va, vb) in &values {
        let centered = (va - ma) * (vb - mb);
        cov.add(w * centered);
        var_of_prod.add(w * centered * centered);
    }
    let c = cov.value();
    let n_eff = ensemble.len() as f64;
    let se = ((var_of_prod.value() - c * c).max(0.0) / n_eff).sqrt();
    Ok((c, se))
}
