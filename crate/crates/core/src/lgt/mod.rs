//! Gate targets for discrete-group lattice encodings: group multiplication as
//! permutation gates, class-function phase gates, and the Givens-rotation
//! products that carry the group Fourier transform.

pub mod group;
pub mod perm;
pub mod rotations;
pub mod states;

pub use group::{binary_tetrahedral, cyclic, multiplication_gate_matrix, trace_phase_gate, GroupTable};
pub use perm::{
    adjacent_transposition_distance, inverse_permutation, kendall_from_identity,
    multiplication_permutations, permutation_matrix, random_permutation, validate_permutation,
};
pub use rotations::{pauli_x_embed, rx_embed, rz_embed, u2, u3, u6, v1_bt, v9_bt};
pub use states::{fock_state, hadamard_state, pad_state};
