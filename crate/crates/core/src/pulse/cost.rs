//! Cost adapters that expose pulse infidelities over flattened coefficient
//! vectors.
//!
//! Gradients come from the trait's central-difference default: two full
//! evolutions per coordinate. An adjoint pass would be cheaper but the
//! product structure of the Trotter evolution is deliberately kept out of the
//! cost layer; finite differences are the supported path.

use crate::cost::FidelityReport;
use crate::error::Error;
use crate::opt::CostFunction;
use crate::types::{CMat, CVec};
use crate::Result;

use super::{
    max_slope, pulse_gate_report, pulse_state_report, ChebyshevPulse, EvolutionConfig,
    HardwareConfig,
};

/// Soft ramp-rate constraint `weight * max(0, slope - limit)^2`, measured on
/// the `dt_ns` grid. Off by default: hard slope limits slow convergence far
/// more than they improve the result, so the limit is reported rather than
/// enforced unless a cost opts in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopePenalty {
    pub limit_mhz_per_ns: f64,
    pub weight: f64,
    pub dt_ns: f64,
}

impl SlopePenalty {
    fn value(&self, pulse: &ChebyshevPulse) -> f64 {
        let slope = max_slope(pulse, self.dt_ns).unwrap_or(f64::NAN);
        let excess = (slope - self.limit_mhz_per_ns).max(0.0);
        self.weight * excess * excess
    }
}

/// Grows a flattened coefficient vector to a higher order by zero-padding
/// each of the four coefficient blocks, leaving the envelopes unchanged.
pub fn embed_pulse_params(x: &[f64], from_order: usize, to_order: usize) -> Result<Vec<f64>> {
    let from_n = from_order + 1;
    if x.len() != 4 * from_n {
        return Err(Error::WrongParameterCount {
            expected: 4 * from_n,
            got: x.len(),
        });
    }
    if to_order < from_order {
        return Err(Error::Invalid(format!(
            "cannot shrink order {from_order} to {to_order}"
        )));
    }
    let to_n = to_order + 1;
    let mut out = Vec::with_capacity(4 * to_n);
    for block in 0..4 {
        out.extend_from_slice(&x[block * from_n..(block + 1) * from_n]);
        out.extend(std::iter::repeat(0.0).take(to_n - from_n));
    }
    Ok(out)
}

fn check_grid(t_us: f64, cfg: &EvolutionConfig, hw: &HardwareConfig) -> Result<()> {
    hw.validate()?;
    cfg.validate()?;
    cfg.samples(t_us)?;
    Ok(())
}

/// Gate infidelity as a function of the flattened Chebyshev coefficients.
#[derive(Debug, Clone)]
pub struct PulseGateCost {
    target: CMat,
    order: usize,
    t_us: f64,
    hw: HardwareConfig,
    cfg: EvolutionConfig,
    penalty: Option<SlopePenalty>,
}

impl PulseGateCost {
    pub fn new(
        target: &CMat,
        order: usize,
        t_us: f64,
        hw: &HardwareConfig,
        cfg: &EvolutionConfig,
    ) -> Result<Self> {
        let d = cfg.space.d();
        if target.nrows() != target.ncols() {
            return Err(Error::NotSquare {
                rows: target.nrows(),
                cols: target.ncols(),
            });
        }
        if target.nrows() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: target.nrows(),
            });
        }
        check_grid(t_us, cfg, hw)?;
        Ok(Self {
            target: target.clone(),
            order,
            t_us,
            hw: *hw,
            cfg: *cfg,
            penalty: None,
        })
    }

    pub fn with_penalty(mut self, penalty: SlopePenalty) -> Self {
        self.penalty = Some(penalty);
        self
    }

    pub fn pulse(&self, x: &[f64]) -> Result<ChebyshevPulse> {
        ChebyshevPulse::from_flat(self.order, self.t_us, x)
    }

    pub fn report(&self, x: &[f64]) -> Result<FidelityReport> {
        pulse_gate_report(&self.pulse(x)?, &self.target, &self.hw, &self.cfg)
    }
}

impl CostFunction for PulseGateCost {
    fn dim(&self) -> usize {
        ChebyshevPulse::param_count(self.order)
    }

    fn value(&self, x: &[f64]) -> f64 {
        let Ok(pulse) = self.pulse(x) else {
            return f64::NAN;
        };
        let Ok(report) = pulse_gate_report(&pulse, &self.target, &self.hw, &self.cfg) else {
            return f64::NAN;
        };
        report.infidelity + self.penalty.map_or(0.0, |p| p.value(&pulse))
    }
}

/// State-preparation infidelity as a function of the flattened Chebyshev
/// coefficients.
#[derive(Debug, Clone)]
pub struct PulseStateCost {
    target: CVec,
    order: usize,
    t_us: f64,
    hw: HardwareConfig,
    cfg: EvolutionConfig,
    penalty: Option<SlopePenalty>,
}

impl PulseStateCost {
    pub fn new(
        target: &CVec,
        order: usize,
        t_us: f64,
        hw: &HardwareConfig,
        cfg: &EvolutionConfig,
    ) -> Result<Self> {
        let d = cfg.space.d();
        if target.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: target.len(),
            });
        }
        let norm = target.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized { norm });
        }
        check_grid(t_us, cfg, hw)?;
        Ok(Self {
            target: target.clone(),
            order,
            t_us,
            hw: *hw,
            cfg: *cfg,
            penalty: None,
        })
    }

    pub fn with_penalty(mut self, penalty: SlopePenalty) -> Self {
        self.penalty = Some(penalty);
        self
    }

    pub fn pulse(&self, x: &[f64]) -> Result<ChebyshevPulse> {
        ChebyshevPulse::from_flat(self.order, self.t_us, x)
    }

    pub fn report(&self, x: &[f64]) -> Result<FidelityReport> {
        pulse_state_report(&self.pulse(x)?, &self.target, &self.hw, &self.cfg)
    }
}

impl CostFunction for PulseStateCost {
    fn dim(&self) -> usize {
        ChebyshevPulse::param_count(self.order)
    }

    fn value(&self, x: &[f64]) -> f64 {
        let Ok(pulse) = self.pulse(x) else {
            return f64::NAN;
        };
        let Ok(report) = pulse_state_report(&pulse, &self.target, &self.hw, &self.cfg) else {
            return f64::NAN;
        };
        report.infidelity + self.penalty.map_or(0.0, |p| p.value(&pulse))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockSpace;
    use crate::lgt::{fock_state, hadamard_state, pauli_x_embed};
    use crate::opt::{minimize, multi_start, pulse_init, MultiStart, OptimizationConfig};
    use crate::pulse::Frame;
    use crate::types::identity;
    use approx::assert_abs_diff_eq;

    fn gate_setup(order: usize, t_us: f64) -> (HardwareConfig, EvolutionConfig, PulseGateCost) {
        let hw = HardwareConfig::default();
        let space = FockSpace::with_guard(2, 1).unwrap();
        let cfg = EvolutionConfig {
            substeps: 1,
            dt_ns: hw.dt_gate_ns,
            space,
            frame: Frame::Interaction,
        };
        let cost = PulseGateCost::new(&identity(2), order, t_us, &hw, &cfg).unwrap();
        (hw, cfg, cost)
    }

    #[test]
    fn embedding_pads_each_coefficient_block_with_zeros() {
        let x: Vec<f64> = (1..=8).map(f64::from).collect();
        let grown = embed_pulse_params(&x, 1, 3).unwrap();
        assert_eq!(
            grown,
            vec![1.0, 2.0, 0.0, 0.0, 3.0, 4.0, 0.0, 0.0, 5.0, 6.0, 0.0, 0.0, 7.0, 8.0, 0.0, 0.0]
        );
        assert!(embed_pulse_params(&x, 2, 3).is_err());
        assert!(embed_pulse_params(&x, 1, 0).is_err());
    }

    #[test]
    fn embedding_leaves_the_cost_value_unchanged() {
        let (hw, cfg, cost) = gate_setup(2, 0.05);
        let x = pulse_init(2, 11);
        let grown = embed_pulse_params(&x, 2, 5).unwrap();
        let big = PulseGateCost::new(&identity(2), 5, 0.05, &hw, &cfg).unwrap();
        assert_abs_diff_eq!(cost.value(&x), big.value(&grown), epsilon = 1e-15);
    }

    #[test]
    fn cost_values_match_the_underlying_metrics() {
        let (hw, cfg, cost) = gate_setup(2, 0.05);
        let x = pulse_init(2, 3);
        let pulse = cost.pulse(&x).unwrap();
        let direct = super::super::pulse_gate_infidelity(&pulse, &identity(2), &hw, &cfg).unwrap();
        assert_abs_diff_eq!(cost.value(&x), direct, epsilon = 1e-15);

        let target = fock_state(1, 2).unwrap();
        let state = PulseStateCost::new(&target, 2, 0.05, &hw, &cfg).unwrap();
        let direct =
            super::super::pulse_state_infidelity(&pulse, &target, &hw, &cfg).unwrap();
        assert_abs_diff_eq!(state.value(&x), direct, epsilon = 1e-15);
    }

    #[test]
    fn the_slope_penalty_adds_the_squared_excess() {
        let (hw, cfg, plain) = gate_setup(1, 0.05);
        // Linear cavity ramp: slope 2 |c_1| / T = 2 * 40 / 50 ns.
        let x = vec![0.0, 40.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let penalty = SlopePenalty {
            limit_mhz_per_ns: 1.0,
            weight: 0.5,
            dt_ns: 1.0,
        };
        let with = PulseGateCost::new(&identity(2), 1, 0.05, &hw, &cfg)
            .unwrap()
            .with_penalty(penalty);
        let slope = 2.0 * 40.0 / 50.0;
        let want = 0.5 * (slope - 1.0) * (slope - 1.0);
        assert_abs_diff_eq!(with.value(&x) - plain.value(&x), want, epsilon = 1e-10);
    }

    #[test]
    fn misaligned_durations_are_rejected_at_construction() {
        let hw = HardwareConfig::default();
        let space = FockSpace::with_guard(2, 1).unwrap();
        let cfg = EvolutionConfig::gate(&hw, space);
        let err = PulseGateCost::new(&identity(2), 2, 0.0149, &hw, &cfg).unwrap_err();
        assert!(matches!(err, Error::UnalignedDuration { .. }));
    }

    #[test]
    fn gradients_are_stable_under_step_halving() {
        let (_, _, cost) = gate_setup(2, 0.05);
        let x = pulse_init(2, 29);
        let n = x.len();
        let mut g1 = vec![0.0; n];
        let mut g2 = vec![0.0; n];
        cost.fd_gradient(&x, 1e-6, &mut g1);
        cost.fd_gradient(&x, 5e-7, &mut g2);
        let scale = g1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(scale > 0.0);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() <= 1e-4 * scale, "{a} vs {b} at scale {scale}");
        }
    }

    // The three tests below rerun reference synthesis rows end to end. Each
    // optimizes on a single-substep Trotter grid for speed, then re-scores
    // the winner on the four-substep grid so the asserted number is not an
    // artifact of the coarse discretization, warm-polishing on the fine grid
    // if the re-score drifted.

    #[test]
    #[ignore = "multi-minute optimization; the acceptance suite runs the matching gate protocol"]
    fn an_order_eighteen_pulse_synthesizes_the_ququart_top_level_swap() {
        // The level-swap family fixes the pair (2,3) at d=4: it is the only
        // in-range form of the gate shared by the larger qudits.
        let hw = HardwareConfig::default();
        let space = FockSpace::new(4).unwrap();
        let coarse = EvolutionConfig {
            substeps: 1,
            ..EvolutionConfig::gate(&hw, space)
        };
        let order = 18;
        let t_us = 0.5;
        let target = pauli_x_embed(2, 3, 4).unwrap();
        let cost = PulseGateCost::new(&target, order, t_us, &hw, &coarse).unwrap();
        let ms = MultiStart {
            n_starts: 10,
            base_seed: 4001,
            stop_when: Some(4e-5),
            extra_inits: Vec::new(),
        };
        let opt = OptimizationConfig {
            max_iterations: 600,
            cost_target: Some(4e-5),
            ..OptimizationConfig::default()
        };
        let outcome = multi_start(&cost, &|s| pulse_init(order, s), &ms, &opt).unwrap();
        let fine_cost =
            PulseGateCost::new(&target, order, t_us, &hw, &EvolutionConfig::gate(&hw, space))
                .unwrap();
        let mut verified = fine_cost.value(&outcome.best.x);
        if verified > 4e-4 {
            let polish = minimize(
                &fine_cost,
                &outcome.best.x,
                &OptimizationConfig {
                    max_iterations: 150,
                    cost_target: Some(4e-5),
                    ..OptimizationConfig::default()
                },
            )
            .unwrap();
            verified = polish.cost;
        }
        assert!(verified <= 4e-4, "verified infidelity {verified}");
    }

    #[test]
    #[ignore = "multi-minute optimization; run with --ignored to reproduce the state-prep rows"]
    fn a_tenth_of_a_microsecond_prepares_fock_three_on_a_ququart() {
        let hw = HardwareConfig::default();
        let space = FockSpace::new(4).unwrap();
        let coarse = EvolutionConfig {
            substeps: 1,
            ..EvolutionConfig::state_prep(&hw, space)
        };
        let order = 18;
        let t_us = 0.1;
        let target = fock_state(3, 4).unwrap();
        let cost = PulseStateCost::new(&target, order, t_us, &hw, &coarse).unwrap();
        let ms = MultiStart {
            n_starts: 10,
            base_seed: 713,
            stop_when: Some(2e-9),
            extra_inits: Vec::new(),
        };
        let opt = OptimizationConfig {
            max_iterations: 600,
            cost_target: Some(2e-9),
            ..OptimizationConfig::default()
        };
        let outcome = multi_start(&cost, &|s| pulse_init(order, s), &ms, &opt).unwrap();
        let fine_cost = PulseStateCost::new(
            &target,
            order,
            t_us,
            &hw,
            &EvolutionConfig::state_prep(&hw, space),
        )
        .unwrap();
        let mut verified = fine_cost.value(&outcome.best.x);
        if verified > 2e-8 {
            let polish = minimize(
                &fine_cost,
                &outcome.best.x,
                &OptimizationConfig {
                    max_iterations: 150,
                    cost_target: Some(2e-9),
                    ..OptimizationConfig::default()
                },
            )
            .unwrap();
            verified = polish.cost;
        }
        assert!(verified <= 2e-8, "verified infidelity {verified}");
    }

    #[test]
    #[ignore = "multi-minute optimization; run with --ignored to reproduce the state-prep rows"]
    fn a_fifth_of_a_microsecond_prepares_the_quhexit_hadamard_state() {
        let hw = HardwareConfig::default();
        let space = FockSpace::new(6).unwrap();
        let coarse = EvolutionConfig {
            substeps: 1,
            ..EvolutionConfig::state_prep(&hw, space)
        };
        let order = 20;
        let t_us = 0.2;
        let target = hadamard_state(6).unwrap();
        let cost = PulseStateCost::new(&target, order, t_us, &hw, &coarse).unwrap();
        let ms = MultiStart {
            n_starts: 10,
            base_seed: 977,
            stop_when: Some(2e-5),
            extra_inits: Vec::new(),
        };
        let opt = OptimizationConfig {
            max_iterations: 400,
            cost_target: Some(2e-5),
            ..OptimizationConfig::default()
        };
        let outcome = multi_start(&cost, &|s| pulse_init(order, s), &ms, &opt).unwrap();
        let fine_cost = PulseStateCost::new(
            &target,
            order,
            t_us,
            &hw,
            &EvolutionConfig::state_prep(&hw, space),
        )
        .unwrap();
        let mut verified = fine_cost.value(&outcome.best.x);
        if verified > 2e-4 {
            let polish = minimize(
                &fine_cost,
                &outcome.best.x,
                &OptimizationConfig {
                    max_iterations: 100,
                    cost_target: Some(2e-5),
                    ..OptimizationConfig::default()
                },
            )
            .unwrap();
            verified = polish.cost;
        }
        assert!(verified <= 2e-4, "verified infidelity {verified}");
    }

    #[test]
    fn a_boosted_dispersive_shift_lets_a_short_pulse_prepare_fock_one() {
        // chi raised 10x so the nonlinearity acts within 0.2 us; this keeps
        // the full optimize-through-evolution path inside test budget.
        let hw = HardwareConfig {
            chi_mhz: 3.0,
            ..HardwareConfig::default()
        };
        let space = FockSpace::with_guard(2, 2).unwrap();
        let cfg = EvolutionConfig {
            substeps: 1,
            dt_ns: hw.dt_gate_ns,
            space,
            frame: Frame::Interaction,
        };
        let order = 4;
        let target = fock_state(1, 2).unwrap();
        let cost = PulseStateCost::new(&target, order, 0.2, &hw, &cfg).unwrap();
        let ms = MultiStart {
            n_starts: 3,
            base_seed: 91,
            stop_when: Some(1e-8),
            extra_inits: Vec::new(),
        };
        let outcome = multi_start(
            &cost,
            &|seed| pulse_init(order, seed),
            &ms,
            &OptimizationConfig::default(),
        )
        .unwrap();
        assert!(
            outcome.best.cost < 1e-5,
            "best infidelity {}",
            outcome.best.cost
        );
        let report = cost.report(&outcome.best.x).unwrap();
        assert!(report.leakage < 0.05, "leakage {}", report.leakage);
    }
}
