//! Simulation core for a dissipative spin-1/2 chain driven by periodic delta kicks.
//!
//! The dynamics alternate two maps: dissipative evolution under a
//! temperature-dependent (non-Lindblad) master equation, and instantaneous
//! single-qubit rotations applied every kick period. All quantities are
//! dimensionless: times in units of the inverse Larmor frequency of the
//! reference qubit, temperatures as `k_B T / (hbar omega_A)`.
//!
//! Qubit `0` is the leftmost tensor factor and the most significant bit of a
//! basis index, so the register `|ABC>` maps to decimal labels
//! `|000> = 1, ..., |111> = 8`.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dissipator;
pub mod error;
pub mod evolution;
pub mod observables;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod quasi_steady;
pub mod spin_chain;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = Complex64;

/// Dense complex operator on the `2^N`-dimensional chain Hilbert space.
pub type Matrix = DMatrix<C64>;

pub use dissipator::{
    apply_dissipator, rate_operators, thermal_occupation, Dissipator, RateOperators,
};
pub use evolution::{
    apply_kick, integrate, kick_unitary, liouville_rhs, propagate, DensityMatrix, KickSchedule,
    KickSpec, Liouvillian, PeriodMap, Rotation, Stepper, Trajectory,
};
pub use observables::{
    energy, gibbs_state, log_negativity, negativity, partial_transpose, populations, purity,
    ObservableRecord,
};
pub use quasi_steady::{
    detect_qss, dissipated_power, fourier_coefficient, qss_energy, run_to_qss, LinearFit,
    QssConfig, QssReport, QssStatus,
};
pub use spin_chain::{
    basis_bits, basis_index, build_hamiltonian, frequency_operator, pauli_op, Axis, ChainConfig,
};

/// Largest entry modulus, `max_ij |m_ij|`.
pub fn max_norm(m: &Matrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
