//! Linear hybrid dynamics in the oscillator representation.
//!
//! A quantum system with a finite Hilbert space is rewritten as a set of
//! classical oscillator pairs (X_i, P_i), one per basis amplitude, so that
//! quantum and classical degrees of freedom share one phase space and one
//! Poisson bracket. On that footing the crate provides:
//!
//! - the oscillator dictionary between state vectors, phase-space points,
//!   expectation values, and brackets ([`oscillator`], [`phase`],
//!   [`hermitian`]);
//! - the hybrid bracket for observables with classical and quantum factors,
//!   including its classification into sectors and the quartic terms that
//!   obstruct closure ([`bracket`]);
//! - ready-made coupled models: bilinearly coupled oscillator chains, a
//!   two-level system in an oscillator environment, and a translation
//!   invariant two-body contact model ([`models`]);
//! - symplectic-friendly integrators with conservation tracking
//!   ([`integrator`]);
//! - weighted ensembles over hybrid phase space, sphere sampling, marginals,
//!   and separability diagnostics ([`ensemble`]);
//! - averaged off-diagonal dynamics of a two-level system in a random
//!   oscillator bath, with closed-form references ([`decoherence`]);
//! - the experiment layer behind the `hybridyn` binary ([`config`],
//!   [`experiments`], [`report`]).
//!
//! Everything runs at unit Planck constant; quantum normalization appears
//! as the constraint sum(X_i^2 + P_i^2) = 2.

pub mod bracket;
pub mod config;
pub mod decoherence;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod hermitian;
pub mod integrator;
pub mod models;
pub mod numeric;
pub mod oscillator;
pub mod phase;
pub mod quadrature;
pub mod report;
pub mod rng;

pub use error::{HybridError, Result};
pub use hermitian::HermitianMatrix;
pub use integrator::{integrate, IntegratorConfig, Method, Trajectory};
pub use models::HybridModel;
pub use phase::{ClPhasePoint, HybridPoint, QmPhasePoint, QuantumState};
