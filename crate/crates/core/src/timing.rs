//! Wall-clock dictionaries for circuit-duration estimates.

use serde::{Deserialize, Serialize};

/// Durations of the hardware primitives, in microseconds.
///
/// SNAP gates are slow (one weak selective pulse per Fock level,
/// roughly 1-50 us); displacements, conditional displacements and qubit
/// rotations are fast.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TimingConfig {
    pub t_snap_us: f64,
    pub t_disp_us: f64,
    pub t_ecd_us: f64,
    pub t_rot_us: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            t_snap_us: 1.0,
            t_disp_us: 0.01,
            t_ecd_us: 0.1,
            t_rot_us: 0.01,
        }
    }
}
