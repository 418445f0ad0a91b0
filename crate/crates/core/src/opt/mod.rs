//! Deterministic quasi-Newton optimization with finite-difference gradients,
//! multi-start drivers, curve fitting and the statistics used by the analyses.

pub mod cost;
pub mod fit;
pub mod init;
pub mod lbfgs;
pub mod multistart;
pub mod stats;

pub use cost::{CostFunction, FnCost};
pub use fit::{fit_fidelity_curve, FitResult};
pub use init::{ecd_init, pulse_init, snapd_init};
pub use lbfgs::minimize;
pub use multistart::{
    grow_basis_minimize, multi_start, GrowthSchedule, GrowthStep, MultiStart, MultiStartOutcome,
    StartKind, StartRecord,
};
pub use stats::{pearson, welch_t_test, WelchResult};

use serde::{Deserialize, Serialize};

/// Knobs of the quasi-Newton engine. Defaults match the reference protocol:
/// up to 2000 iterations, relative finite-difference step 1e-7, convergence on
/// a cost change below 1e-14 or a gradient infinity-norm below 1e-10, history
/// of 10 curvature pairs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OptimizationConfig {
    pub max_iterations: usize,
    /// Relative step of the central-difference gradient; coordinate `i` is
    /// probed at `x_i +- step * (1 + |x_i|)`.
    pub gradient_step: f64,
    /// Stop when an accepted step changes the cost by less than this.
    pub cost_tolerance: f64,
    /// Stop when the gradient infinity-norm drops below this.
    pub gradient_tolerance: f64,
    /// Number of curvature pairs retained.
    pub history: usize,
    /// Optional early stop once the cost reaches this value; used by batch
    /// experiments whose pass criterion is a threshold rather than a minimum.
    pub cost_target: Option<f64>,
    /// Record the cost after every accepted iteration.
    pub record_trajectory: bool,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            gradient_step: 1e-7,
            cost_tolerance: 1e-14,
            gradient_tolerance: 1e-10,
            history: 10,
            cost_target: None,
            record_trajectory: false,
        }
    }
}

/// Why a minimization run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    CostDelta,
    GradientNorm,
    CostTarget,
    MaxIterations,
    /// The line search could not make progress; the best point found is
    /// returned (typically at the finite-difference noise floor).
    LineSearchStalled,
}

/// Outcome of a single minimization run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub x: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: StopReason,
    /// Cost after each accepted iteration (starting value included), present
    /// when [`OptimizationConfig::record_trajectory`] is set.
    pub trajectory: Option<Vec<f64>>,
}
