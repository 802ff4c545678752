//! Dynamics as phase-space geometry.
//!
//! Hamiltonian mechanics recovered as the small-`mu` (adiabatic) limit of a
//! purely geometric system: a point of "mass" `mu` moving freely on phase
//! space equipped with a conformal metric `g = gamma / h` (det gamma = 1, so
//! det g = h^(-2n)) and coupled to the symplectic two-form as a universal
//! magnetic field. The crate integrates the extended second-order equations
//! of motion, splits trajectories into fast gyration and slow guiding-center
//! drift, validates against the closed-form solutions of the conformal
//! harmonic oscillator, and cross-checks the quantum effective-Hamiltonian
//! formulas with a finite-difference magnetic-Schrodinger eigensolver.
//!
//! Module map:
//! - [`geometry`]: symplectic structure, scalar fields, conformal metric,
//!   Christoffel symbols, canonical one-form, scalar invariants.
//! - [`dynamics`]: adaptive embedded Runge-Kutta integration of the extended
//!   system and of the reference Hamiltonian flow.
//! - [`guiding_center`]: kinematical momenta, guiding-center coordinates,
//!   adiabatic invariant, deviation metrics and convergence-order fits.
//! - [`oscillator`]: closed-form ground truth for the conformal harmonic
//!   oscillator (integrals of motion, regime classification, quadrature).
//! - [`quantum`]: one-degree-of-freedom effective Hamiltonian terms and the
//!   gauge-invariant lattice magnetic-Schrodinger spectrum.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod guiding_center;
pub mod oscillator;
pub mod quantum;
pub mod sampling;

pub use error::CoreError;
pub use geometry::{
    canonical_one_form_at, scalar_invariants_at, symplectic_norm_at, DerivativeMode, GaugeChoice,
    MetricField, PhaseSpacePoint, ScalarField, SymplecticStructure,
};

/// One-line statement of the sign conventions every module relies on.
///
/// Emitted verbatim into output-file headers so results stay interpretable.
pub const SIGN_CONVENTION: &str = "omega = [[0,-I],[I,0]]; omega_ik omegabar^jk = delta_i^j; \
{xi^i,xi^j} = omegabar^ji; theta_sym_i = -omega_ij xi^j / 2";
