//! Hermitian coefficient matrices of quadratic observables.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{HybridError, Result};
use crate::rng::standard_normal;

/// Absolute asymmetry (relative to the largest entry) beyond which a matrix is
/// rejected rather than silently symmetrized.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// A complex matrix with exact conjugate symmetry as stored.
///
/// Entries satisfy `g[(i, j)] == conj(g[(j, i)])` bit for bit: construction
/// mirrors the upper triangle and drops imaginary parts on the diagonal, so
/// quadratic forms and commutators built from it are real/Hermitian up to
/// rounding only.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    data: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Validates that `m` is Hermitian within [`HERMITICITY_TOL`] and stores
    /// the exactly symmetrized part.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(HybridError::DimensionMismatch {
                expected: m.nrows(),
                actual: m.ncols(),
            });
        }
        let scale = m.iter().map(|c| c.norm()).fold(0.0f64, f64::max).max(1.0);
        let mut deviation = 0.0f64;
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                deviation = deviation.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if deviation > HERMITICITY_TOL * scale {
            return Err(HybridError::NotHermitian { deviation });
        }
        Ok(Self::symmetrized(m))
    }

    /// Stores the Hermitian part (m + adjoint(m)) / 2 without validation.
    pub fn symmetrized(m: DMatrix<Complex64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        let n = m.nrows();
        let mut data = DMatrix::zeros(n, n);
        for i in 0..n {
            data[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)].conj());
                data[(i, j)] = v;
                data[(j, i)] = v.conj();
            }
        }
        Self { data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            data: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut data = DMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            data[(i, i)] = Complex64::new(d, 0.0);
        }
        Self { data }
    }

    pub fn pauli_x() -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self {
            data: DMatrix::from_row_slice(2, 2, &[0.0.into(), one, one, 0.0.into()]),
        }
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::new(0.0, 1.0);
        Self {
            data: DMatrix::from_row_slice(2, 2, &[0.0.into(), -i, i, 0.0.into()]),
        }
    }

    pub fn pauli_z() -> Self {
        Self::from_diagonal(&[1.0, -1.0])
    }

    /// Random Hermitian matrix with Gaussian entries (GUE-like scaling is not
    /// needed; this is a test/probe helper).
    pub fn random<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let mut data = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            data[(i, i)] = Complex64::new(standard_normal(rng), 0.0);
            for j in (i + 1)..dim {
                let v = Complex64::new(standard_normal(rng), standard_normal(rng));
                data[(i, j)] = v;
                data[(j, i)] = v.conj();
            }
        }
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    /// Matrix-vector product M z.
    pub fn apply(&self, z: &DVector<Complex64>) -> DVector<Complex64> {
        &self.data * z
    }

    /// Complex bilinear form (1/2) z^dagger M z.
    ///
    /// The imaginary part vanishes for Hermitian M up to rounding; callers take
    /// the real part and may assert on the residue.
    pub fn quadratic_form(&self, z: &DVector<Complex64>) -> Complex64 {
        0.5 * z.dotc(&self.apply(z))
    }

    /// M * M, exactly Hermitian by construction.
    pub fn square(&self) -> Self {
        Self::symmetrized(&self.data * &self.data)
    }

    /// (A B - B A) / i, the Hermitian matrix generating the bracket of two
    /// quadratic observables.
    pub fn commutator_over_i(a: &Self, b: &Self) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(HybridError::DimensionMismatch {
                expected: a.dim(),
                actual: b.dim(),
            });
        }
        let ab = &a.data * &b.data;
        let comm = &ab - ab.adjoint();
        Ok(Self::symmetrized(comm * Complex64::new(0.0, -1.0)))
    }

    /// Linear combination self + factor * other.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(HybridError::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(Self {
            data: &self.data + &other.data * Complex64::new(factor, 0.0),
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            data: &self.data * Complex64::new(factor, 0.0),
        }
    }

    /// Eigenvalues (ascending is not guaranteed) and unitary eigenvector
    /// columns.
    pub fn eigendecomposition(&self) -> Result<(DVector<f64>, DMatrix<Complex64>)> {
        let eig = nalgebra::linalg::SymmetricEigen::try_new(self.data.clone(), 1e-14, 10_000)
            .ok_or(HybridError::EigenFailure)?;
        Ok((eig.eigenvalues, eig.eigenvectors))
    }

    /// The unitary exp(-i M t).
    pub fn evolution_operator(&self, t: f64) -> Result<DMatrix<Complex64>> {
        let (vals, vecs) = self.eigendecomposition()?;
        let phases = DMatrix::from_diagonal(&DVector::from_iterator(
            vals.len(),
            vals.iter().map(|&e| Complex64::from_polar(1.0, -e * t)),
        ));
        Ok(&vecs * phases * vecs.adjoint())
    }
}

/// Haar-like random unitary from the QR factorization of a complex Gaussian
/// matrix, with the phase convention fixed by the R diagonal.
pub fn random_unitary<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(standard_normal(rng), standard_normal(rng))
    });
    let qr = nalgebra::linalg::QR::new(g);
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_rejects_asymmetry() {
        let mut m = DMatrix::<Complex64>::identity(2, 2);
        m[(0, 1)] = Complex64::new(0.5, 0.0);
        m[(1, 0)] = Complex64::new(0.3, 0.0);
        assert!(matches!(
            HermitianMatrix::new(m),
            Err(HybridError::NotHermitian { .. })
        ));
    }

    #[test]
    fn stored_entries_are_exactly_conjugate_symmetric() {
        let mut rng = crate::rng::seeded(3);
        let g = DMatrix::from_fn(4, 4, |_, _| {
            Complex64::new(standard_normal(&mut rng), standard_normal(&mut rng))
        });
        let h = HermitianMatrix::symmetrized(g);
        for i in 0..4 {
            assert_eq!(h.entry(i, i).im, 0.0);
            for j in 0..4 {
                assert_eq!(h.entry(i, j), h.entry(j, i).conj());
            }
        }
    }

    #[test]
    fn quadratic_form_is_real_for_hermitian_input() {
        let mut rng = crate::rng::seeded(5);
        for _ in 0..20 {
            let h = HermitianMatrix::random(5, &mut rng);
            let z = DVector::from_fn(5, |_, _| {
                Complex64::new(standard_normal(&mut rng), standard_normal(&mut rng))
            });
            let v = h.quadratic_form(&z);
            assert!(v.im.abs() <= 1e-12 * (1.0 + v.re.abs() + h.max_abs()));
        }
    }

    #[test]
    fn commutator_over_i_matches_pauli_algebra() {
        // [sigma_x, sigma_y] / i = 2 sigma_z.
        let c = HermitianMatrix::commutator_over_i(
            &HermitianMatrix::pauli_x(),
            &HermitianMatrix::pauli_y(),
        )
        .unwrap();
        let expected = HermitianMatrix::pauli_z().scale(2.0);
        for i in 0..2 {
            for j in 0..2 {
                assert!((c.entry(i, j) - expected.entry(i, j)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn evolution_operator_rotates_pauli_x_eigenstate() {
        // exp(-i sigma_x pi/2) = -i sigma_x.
        let u = HermitianMatrix::pauli_x()
            .evolution_operator(std::f64::consts::FRAC_PI_2)
            .unwrap();
        let minus_i = Complex64::new(0.0, -1.0);
        assert!((u[(0, 0)]).norm() < 1e-12);
        assert!((u[(0, 1)] - minus_i).norm() < 1e-12);
        assert!((u[(1, 0)] - minus_i).norm() < 1e-12);
        assert!((u[(1, 1)]).norm() < 1e-12);
    }

    #[test]
    fn eigendecomposition_reconstructs_matrix() {
        let mut rng = crate::rng::seeded(9);
        let h = HermitianMatrix::random(6, &mut rng);
        let (vals, vecs) = h.eigendecomposition().unwrap();
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            6,
            vals.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        let rebuilt = &vecs * d * vecs.adjoint();
        let err = (rebuilt - h.as_matrix())
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-12 * h.max_abs().max(1.0), "err = {err}");
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = crate::rng::seeded(17);
        let u = random_unitary(5, &mut rng);
        let id = u.adjoint() * &u;
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn square_is_matrix_product() {
        let x = HermitianMatrix::pauli_x();
        let sq = x.square();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((sq.entry(i, j) - Complex64::new(want, 0.0)).norm() < 1e-15);
            }
        }
    }
}
