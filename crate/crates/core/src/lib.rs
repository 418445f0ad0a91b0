//! Synthesis of qudit gates on a microwave cavity coupled to a transmon.
//!
//! The cavity stores a qudit in its lowest `d` Fock levels; gates on it are
//! compiled three ways and compared on equal footing:
//!
//! - [`snapd`]: blocks of photon-number-selective phase gates interleaved with
//!   displacements,
//! - [`ecd`]: echoed conditional displacements interleaved with qubit rotations,
//! - [`pulse`]: direct numerical pulse shaping with Chebyshev envelopes.
//!
//! [`lgt`] builds the target gates (permutation gates for group multiplication,
//! Givens-rotation ladders, phase gates) for lattice-gauge-theory encodings,
//! [`opt`] holds the quasi-Newton engine and statistics helpers, and
//! [`analysis`] the noise-robustness and hardware-budget studies.
//!
//! Conventions used throughout:
//! - time in microseconds, angular frequencies in rad/us; configuration values
//!   quoted in MHz or GHz are ordinary frequencies and are multiplied by 2*pi
//!   on the way in;
//! - the joint transmon-cavity space orders basis states as |q> (x) |n> with
//!   the qubit as the slow index, q = 0 for |g> and q = 1 for |e>;
//! - sigma_z = diag(-1, +1) in the (g, e) basis, so |e> carries eigenvalue +1.

pub mod analysis;
pub mod ecd;
pub mod error;
pub mod expm;
pub mod fock;
pub mod lgt;
pub mod operators;
pub mod opt;
pub mod pulse;
pub mod snapd;
pub mod timing;
pub mod types;

mod cost;
mod eig;
mod factored;

pub use cost::{
    diff_norm, one_minus_norm, state_prep_infidelity, trace_infidelity, FidelityReport,
};
pub use eig::{hermitian_eigenvalues, spectral_norm};
pub use error::Error;
pub use fock::{FockSpace, JointSpace};
pub use types::{C64, CMat, CVec};

/// Result alias for fallible operations in this crate.
pub type Result<T> = std::result::Result<T, Error>;
