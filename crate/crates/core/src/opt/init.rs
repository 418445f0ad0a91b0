//! Random initial parameter vectors for each ansatz.
//!
//! Draws happen in the same order as the parameter layout, so a vector is
//! reproducible from its seed alone. All samplers use ChaCha8 keyed by
//! `seed_from_u64`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

/// Displacement-plus-phase-block circuit: amplitudes `alpha ~ N(0, 0.5^2)`
/// (real parts first, imaginary parts only in complex mode), then the `B * d`
/// phase angles `theta ~ U(-pi, pi)` blockwise.
pub fn snapd_init(d: usize, blocks: usize, complex_alpha: bool, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 0.5).unwrap();
    let n_alpha = if complex_alpha {
        2 * (blocks + 1)
    } else {
        blocks + 1
    };
    let mut out = Vec::with_capacity(n_alpha + blocks * d);
    for _ in 0..n_alpha {
        out.push(normal.sample(&mut rng));
    }
    for _ in 0..blocks * d {
        out.push(rng.gen_range(-PI..PI));
    }
    out
}

/// Conditional-displacement circuit: amplitude components `~ N(0, 1)` (real
/// block, then imaginary block in complex mode), then rotation angles
/// `theta, phi ~ U(-pi, pi)`, `B + 1` of each.
pub fn ecd_init(blocks: usize, complex_alpha: bool, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let n_alpha = if complex_alpha { 2 * blocks } else { blocks };
    let mut out = Vec::with_capacity(n_alpha + 2 * (blocks + 1));
    for _ in 0..n_alpha {
        out.push(normal.sample(&mut rng));
    }
    for _ in 0..2 * (blocks + 1) {
        out.push(rng.gen_range(-PI..PI));
    }
    out
}

/// Chebyshev pulse coefficients `~ N(0, (1 MHz)^2)`, drawn in layout order:
/// cavity real, cavity imaginary, qubit real, qubit imaginary, each of length
/// `order + 1`.
pub fn pulse_init(order: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    (0..4 * (order + 1)).map(|_| normal.sample(&mut rng)).collect()
}
