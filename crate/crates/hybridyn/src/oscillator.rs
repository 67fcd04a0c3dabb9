//! Oscillator representation of quantum states.
//!
//! A normalized state c in an N-dimensional Hilbert space is encoded in
//! canonical coordinates via c_i = (X_i + i P_i) / sqrt(2). Expectation values
//! of Hermitian operators G become quadratic forms
//!
//! ```text
//! G(X, P) = (1/2) sum_ij G_ij (X_i - i P_j)(X_j + i P_j)
//! ```
//!
//! and the Schroedinger equation becomes Hamilton's equations for the
//! Hamiltonian function H(X, P) = <H>. The Poisson bracket of two such
//! quadratic forms equals the expectation of the commutator over i, which is
//! what makes the representation useful: quantum evolution is ordinary
//! Hamiltonian mechanics on the constraint sphere C = 1, and couples to
//! classical sectors through a shared bracket.

use nalgebra::DVector;

use crate::error::{HybridError, Result};
use crate::hermitian::HermitianMatrix;
use crate::phase::{QmPhasePoint, QuantumState, CONSTRAINT_TOL};

/// Canonical coordinates of a state: X = sqrt(2) Re c, P = sqrt(2) Im c.
pub fn state_to_phase(state: &QuantumState) -> QmPhasePoint {
    let s = std::f64::consts::SQRT_2;
    QmPhasePoint {
        x: state.amplitudes().map(|c| s * c.re),
        p: state.amplitudes().map(|c| s * c.im),
    }
}

/// Inverse map; rejects points off the constraint sphere beyond `tol`.
pub fn phase_to_state_with_tol(point: &QmPhasePoint, tol: f64) -> Result<QuantumState> {
    let deviation = (point.constraint() - 1.0).abs();
    if deviation > tol {
        return Err(HybridError::ConstraintViolation {
            deviation,
            tolerance: tol,
        });
    }
    let inv = 1.0 / std::f64::consts::SQRT_2;
    // Norm of the amplitudes is sqrt(C), already within tol of 1.
    QuantumState::with_tolerance(point.z() * num_complex::Complex64::new(inv, 0.0), tol)
}

/// Inverse map with the default constraint tolerance.
pub fn phase_to_state(point: &QmPhasePoint) -> Result<QuantumState> {
    phase_to_state_with_tol(point, CONSTRAINT_TOL)
}

fn check_dims(g: &HermitianMatrix, point: &QmPhasePoint) -> Result<()> {
    if g.dim() != point.dim() {
        return Err(HybridError::DimensionMismatch {
            expected: g.dim(),
            actual: point.dim(),
        });
    }
    Ok(())
}

/// Expectation value <G> as the quadratic form (1/2) z^dagger G z.
///
/// The form is accumulated in complex arithmetic; the imaginary residue is a
/// rounding-level sanity signal and is asserted small in debug builds. The
/// residue invariant only holds for finite states, so a non-finite form is
/// passed through for the caller to diagnose.
pub fn eval_observable(g: &HermitianMatrix, point: &QmPhasePoint) -> Result<f64> {
    check_dims(g, point)?;
    let v = g.quadratic_form(&point.z());
    debug_assert!(
        !v.is_finite() || v.im.abs() <= 1e-10 * (1.0 + g.max_abs() * point.constraint().max(1.0)),
        "imaginary residue {} for a Hermitian quadratic form",
        v.im
    );
    Ok(v.re)
}

/// Gradient of the quadratic form: with w = G z,
/// dG/dX_i = Re w_i and dG/dP_i = Im w_i.
pub fn observable_gradient(
    g: &HermitianMatrix,
    point: &QmPhasePoint,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_dims(g, point)?;
    let w = g.apply(&point.z());
    Ok((w.map(|c| c.re), w.map(|c| c.im)))
}

/// Quantum Poisson bracket of two quadratic observables,
/// {F, G} = sum_i (dF/dX_i dG/dP_i - dF/dP_i dG/dX_i).
///
/// Equals the expectation of [F, G] / i on the constraint sphere.
pub fn qm_poisson(f: &HermitianMatrix, g: &HermitianMatrix, point: &QmPhasePoint) -> Result<f64> {
    check_dims(f, point)?;
    check_dims(g, point)?;
    let z = point.z();
    let a = f.apply(&z);
    let b = g.apply(&z);
    // sum_i (Re a_i Im b_i - Im a_i Re b_i) = Im(conj(a) . b)
    Ok(a.dotc(&b).im)
}

/// Constraint function C(X, P).
pub fn constraint(point: &QmPhasePoint) -> f64 {
    point.constraint()
}

/// Exact unitary evolution exp(-i H t) c0 at each requested time, via one
/// eigendecomposition of H. Serves as the reference for integrated quantum
/// trajectories.
pub fn schrodinger_reference(
    h: &HermitianMatrix,
    initial: &QuantumState,
    times: &[f64],
) -> Result<Vec<QuantumState>> {
    if h.dim() != initial.dim() {
        return Err(HybridError::DimensionMismatch {
            expected: h.dim(),
            actual: initial.dim(),
        });
    }
    let (vals, vecs) = h.eigendecomposition()?;
    // Coefficients in the eigenbasis evolve by pure phases.
    let coeffs = vecs.adjoint() * initial.amplitudes();
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        let evolved = DVector::from_iterator(
            vals.len(),
            coeffs
                .iter()
                .zip(vals.iter())
                .map(|(c, &e)| c * num_complex::Complex64::from_polar(1.0, -e * t)),
        );
        states.push(QuantumState::with_tolerance(&vecs * evolved, 1e-9)?);
    }
    Ok(states)
}
