//! Phase-space point types for the classical and quantum sectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{HybridError, Result};
use crate::rng::standard_normal;

/// Default tolerance on the normalization constraint C = 1.
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// Normalized quantum state vector (Hilbert-space side).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: DVector<Complex64>,
}

impl QuantumState {
    /// Validates the norm within `tol` and stores the amplitudes unchanged
    /// (the representative phase is kept, not fixed to a gauge).
    pub fn with_tolerance(amplitudes: DVector<Complex64>, tol: f64) -> Result<Self> {
        let deviation = (amplitudes.norm() - 1.0).abs();
        if deviation > tol {
            return Err(HybridError::NormViolation {
                deviation,
                tolerance: tol,
            });
        }
        Ok(Self { amplitudes })
    }

    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        Self::with_tolerance(amplitudes, CONSTRAINT_TOL)
    }

    pub fn from_components(components: &[Complex64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(components))
    }

    /// Basis vector |i>.
    pub fn basis_state(dim: usize, i: usize) -> Self {
        assert!(i < dim, "basis index out of range");
        let mut c = DVector::zeros(dim);
        c[i] = Complex64::new(1.0, 0.0);
        Self { amplitudes: c }
    }

    /// Equal-amplitude real superposition of all basis states.
    pub fn uniform_superposition(dim: usize) -> Self {
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Self {
            amplitudes: DVector::from_element(dim, a),
        }
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(HybridError::InvalidParameter {
                name: "amplitudes".into(),
                reason: "cannot normalize the zero vector".into(),
            });
        }
        Ok(Self {
            amplitudes: amplitudes / Complex64::new(norm, 0.0),
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }
}

/// Canonical coordinates (X_i, P_i) of the quantum sector.
///
/// The encoding is c_i = (X_i + i P_i) / sqrt(2); physical points satisfy the
/// constraint C = (1/2) sum_i (X_i^2 + P_i^2) = 1, the sphere of radius
/// sqrt(2) in the 2N-dimensional quantum phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct QmPhasePoint {
    pub x: DVector<f64>,
    pub p: DVector<f64>,
}

impl QmPhasePoint {
    pub fn new(x: DVector<f64>, p: DVector<f64>) -> Result<Self> {
        if x.len() != p.len() {
            return Err(HybridError::DimensionMismatch {
                expected: x.len(),
                actual: p.len(),
            });
        }
        Ok(Self { x, p })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// C = (1/2) sum_i (X_i^2 + P_i^2).
    pub fn constraint(&self) -> f64 {
        0.5 * (self.x.norm_squared() + self.p.norm_squared())
    }

    /// Complex coordinates z_i = X_i + i P_i (so z = sqrt(2) c on shell).
    pub fn z(&self) -> DVector<Complex64> {
        DVector::from_fn(self.dim(), |i, _| Complex64::new(self.x[i], self.p[i]))
    }

    pub fn from_z(z: &DVector<Complex64>) -> Self {
        Self {
            x: z.map(|c| c.re),
            p: z.map(|c| c.im),
        }
    }

    /// Canonical map z -> U z induced by a unitary on the Hilbert space.
    pub fn apply_unitary(&self, u: &DMatrix<Complex64>) -> Result<Self> {
        if u.ncols() != self.dim() {
            return Err(HybridError::DimensionMismatch {
                expected: self.dim(),
                actual: u.ncols(),
            });
        }
        Ok(Self::from_z(&(u * self.z())))
    }

    /// Largest coordinate-wise distance to another point.
    pub fn max_component_distance(&self, other: &Self) -> f64 {
        let dx = (&self.x - &other.x).amax();
        let dp = (&self.p - &other.p).amax();
        dx.max(dp)
    }

    /// Uniform point on the constraint sphere: a 2N-dimensional Gaussian
    /// direction scaled to radius sqrt(2).
    pub fn random_on_sphere<R: Rng>(dim: usize, rng: &mut R) -> Self {
        loop {
            let v: Vec<f64> = (0..2 * dim).map(|_| standard_normal(rng)).collect();
            let norm_sq: f64 = v.iter().map(|a| a * a).sum();
            if norm_sq < 1e-24 {
                continue;
            }
            let s = (2.0 / norm_sq).sqrt();
            return Self {
                x: DVector::from_iterator(dim, v[..dim].iter().map(|a| a * s)),
                p: DVector::from_iterator(dim, v[dim..].iter().map(|a| a * s)),
            };
        }
    }
}

/// Classical phase-space point (x_k, p_k).
#[derive(Debug, Clone, PartialEq)]
pub struct ClPhasePoint {
    pub x: DVector<f64>,
    pub p: DVector<f64>,
}

impl ClPhasePoint {
    pub fn new(x: DVector<f64>, p: DVector<f64>) -> Result<Self> {
        if x.len() != p.len() {
            return Err(HybridError::DimensionMismatch {
                expected: x.len(),
                actual: p.len(),
            });
        }
        Ok(Self { x, p })
    }

    pub fn from_slices(x: &[f64], p: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(x), DVector::from_column_slice(p))
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Combined hybrid phase-space point.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridPoint {
    pub cl: ClPhasePoint,
    pub qm: QmPhasePoint,
}

impl HybridPoint {
    pub fn new(cl: ClPhasePoint, qm: QmPhasePoint) -> Self {
        Self { cl, qm }
    }

    pub fn n_cl(&self) -> usize {
        self.cl.dim()
    }

    pub fn n_qm(&self) -> usize {
        self.qm.dim()
    }

    /// Flat layout [x.., p.., X.., P..] used by the integrators.
    pub fn flatten(&self) -> DVector<f64> {
        let n = self.n_cl();
        let m = self.n_qm();
        let mut y = DVector::zeros(2 * n + 2 * m);
        y.rows_mut(0, n).copy_from(&self.cl.x);
        y.rows_mut(n, n).copy_from(&self.cl.p);
        y.rows_mut(2 * n, m).copy_from(&self.qm.x);
        y.rows_mut(2 * n + m, m).copy_from(&self.qm.p);
        y
    }

    pub fn unflatten(n_cl: usize, n_qm: usize, y: &DVector<f64>) -> Result<Self> {
        let expected = 2 * n_cl + 2 * n_qm;
        if y.len() != expected {
            return Err(HybridError::DimensionMismatch {
                expected,
                actual: y.len(),
            });
        }
        Ok(Self {
            cl: ClPhasePoint {
                x: y.rows(0, n_cl).into_owned(),
                p: y.rows(n_cl, n_cl).into_owned(),
            },
            qm: QmPhasePoint {
                x: y.rows(2 * n_cl, n_qm).into_owned(),
                p: y.rows(2 * n_cl + n_qm, n_qm).into_owned(),
            },
        })
    }

    /// Max-norm distance to another point of the same shape.
    pub fn max_distance(&self, other: &Self) -> f64 {
        (self.flatten() - other.flatten())
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_norm_is_validated() {
        let bad = DVector::from_column_slice(&[Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)]);
        assert!(matches!(
            QuantumState::new(bad),
            Err(HybridError::NormViolation { .. })
        ));
    }

    #[test]
    fn sphere_points_satisfy_constraint() {
        let mut rng = crate::rng::seeded(21);
        for dim in [1usize, 2, 5] {
            for _ in 0..50 {
                let pt = QmPhasePoint::random_on_sphere(dim, &mut rng);
                assert!((pt.constraint() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn unitary_preserves_constraint() {
        let mut rng = crate::rng::seeded(23);
        let pt = QmPhasePoint::random_on_sphere(4, &mut rng);
        let u = crate::hermitian::random_unitary(4, &mut rng);
        let moved = pt.apply_unitary(&u).unwrap();
        assert!((moved.constraint() - 1.0).abs() < 1e-13);
        assert!(moved.max_component_distance(&pt) > 1e-3);
    }

    #[test]
    fn flatten_roundtrip() {
        let pt = HybridPoint::new(
            ClPhasePoint::from_slices(&[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            QmPhasePoint::new(
                DVector::from_column_slice(&[0.5, -0.5, 0.25]),
                DVector::from_column_slice(&[0.1, 0.2, 0.3]),
            )
            .unwrap(),
        );
        let back = HybridPoint::unflatten(2, 3, &pt.flatten()).unwrap();
        assert_eq!(pt, back);
    }
}
