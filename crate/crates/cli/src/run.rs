//! One optimization run per cell: build the cost for the chosen ansatz,
//! minimize from the seeded start, and re-score the winner into a CSV row.
//!
//! Conventions: circuit synthesis (the displacement-block and echoed
//! ansaetze) runs on the bare computational space, where guard leakage is
//! structurally zero; pulse shaping runs on the guarded space because
//! truncation is physical there.  Pulse runs optimize on a single-substep
//! grid, re-score on the four-substep grid, and optionally polish there, so
//! reported numbers never rest on discretization error.

use std::time::Instant;

use anyhow::Result;
use serde_json::json;

use quditforge_core::ecd::{
    ecd_gate_report, ecd_state_report, ECDParams, EcdGateCost, EcdStateCost,
};
use quditforge_core::opt::{
    ecd_init, minimize, pulse_init, snapd_init, OptimizationConfig, OptimizationResult,
};
use quditforge_core::pulse::{
    EvolutionConfig, HardwareConfig, PulseGateCost, PulseStateCost,
};
use quditforge_core::snapd::{
    snapd_gate_report, snapd_state_report, SnapDParams, SnapdGateCost, SnapdStateCost,
};
use quditforge_core::{FidelityReport, FockSpace};

use crate::expr::Target;
use crate::io::fmt_e;

#[derive(Debug, Clone, Copy)]
pub enum AnsatzSpec {
    Snapd { complex_alpha: bool },
    Ecd { complex_alpha: bool },
    Pulse { t_us: f64, polish_iterations: usize },
}

impl AnsatzSpec {
    pub fn label(&self) -> &'static str {
        match self {
            AnsatzSpec::Snapd { .. } => "snapd",
            AnsatzSpec::Ecd { .. } => "ecd",
            AnsatzSpec::Pulse { .. } => "pulse",
        }
    }
}

/// One (target, ansatz, size, start) optimization job.
#[derive(Debug, Clone)]
pub struct CellSpec {
    pub d: usize,
    pub ansatz: AnsatzSpec,
    pub b_or_order: usize,
    pub start: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub cost_target: Option<f64>,
}

/// A finished run: the aggregate-CSV fields plus the winning parameter
/// vector and a JSON detail block for the per-run artifact.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub d: usize,
    pub target: String,
    pub ansatz: String,
    pub b_or_order: usize,
    pub start: usize,
    pub seed: u64,
    pub infidelity: f64,
    pub leakage: f64,
    pub wall_time: f64,
    pub x: Vec<f64>,
    pub detail: serde_json::Value,
}

impl RunRow {
    pub fn csv(&self) -> Vec<String> {
        vec![
            self.d.to_string(),
            self.target.clone(),
            self.ansatz.clone(),
            self.b_or_order.to_string(),
            self.start.to_string(),
            self.seed.to_string(),
            fmt_e(self.infidelity),
            fmt_e(self.leakage),
            fmt_e(self.wall_time),
        ]
    }
}

fn opt_config(cell: &CellSpec) -> OptimizationConfig {
    OptimizationConfig {
        max_iterations: cell.max_iterations,
        cost_target: cell.cost_target,
        ..OptimizationConfig::default()
    }
}

fn run_detail(r: &OptimizationResult, params: serde_json::Value) -> serde_json::Value {
    json!({
        "params": params,
        "cost": r.cost,
        "iterations": r.iterations,
        "evaluations": r.evaluations,
        "stop": serde_json::to_value(r.stop).expect("stop reason serializes"),
    })
}

fn finish(
    cell: &CellSpec,
    target: &Target,
    report: FidelityReport,
    x: Vec<f64>,
    detail: serde_json::Value,
    t0: Instant,
) -> RunRow {
    RunRow {
        d: cell.d,
        target: target.label().to_string(),
        ansatz: cell.ansatz.label().to_string(),
        b_or_order: cell.b_or_order,
        start: cell.start,
        seed: cell.seed,
        infidelity: report.infidelity,
        leakage: report.leakage,
        wall_time: t0.elapsed().as_secs_f64(),
        x,
        detail,
    }
}

/// Execute one cell.  Errors are the caller's to record; they never panic.
pub fn run_cell(cell: &CellSpec, target: &Target) -> Result<RunRow> {
    let t0 = Instant::now();
    let b = cell.b_or_order;
    match cell.ansatz {
        AnsatzSpec::Snapd { complex_alpha } => {
            let space = FockSpace::with_guard(cell.d, 0)?;
            let init = snapd_init(cell.d, b, complex_alpha, cell.seed);
            let r = match target {
                Target::Gate { matrix, .. } => {
                    let cost = SnapdGateCost::new(matrix, space, b, complex_alpha)?;
                    minimize(&cost, &init, &opt_config(cell))?
                }
                Target::State { vector, .. } => {
                    let cost = SnapdStateCost::new(vector, space, b, complex_alpha)?;
                    minimize(&cost, &init, &opt_config(cell))?
                }
            };
            let p = SnapDParams::from_flat(cell.d, b, complex_alpha, &r.x)?;
            let report = match target {
                Target::Gate { matrix, .. } => snapd_gate_report(&p, matrix, space)?,
                Target::State { vector, .. } => snapd_state_report(&p, vector, space)?,
            };
            let detail = run_detail(&r, serde_json::from_str(&p.to_json())?);
            Ok(finish(cell, target, report, r.x, detail, t0))
        }
        AnsatzSpec::Ecd { complex_alpha } => {
            let space = FockSpace::with_guard(cell.d, 0)?;
            let init = ecd_init(b, complex_alpha, cell.seed);
            let r = match target {
                Target::Gate { matrix, .. } => {
                    let cost = EcdGateCost::new(matrix, space, b, complex_alpha)?;
                    minimize(&cost, &init, &opt_config(cell))?
                }
                Target::State { vector, .. } => {
                    let cost = EcdStateCost::new(vector, space, b, complex_alpha)?;
                    minimize(&cost, &init, &opt_config(cell))?
                }
            };
            let p = ECDParams::from_flat(cell.d, b, complex_alpha, &r.x)?;
            let report = match target {
                Target::Gate { matrix, .. } => ecd_gate_report(&p, matrix, space)?,
                Target::State { vector, .. } => ecd_state_report(&p, vector, space)?,
            };
            let detail = run_detail(&r, serde_json::from_str(&p.to_json())?);
            Ok(finish(cell, target, report, r.x, detail, t0))
        }
        AnsatzSpec::Pulse {
            t_us,
            polish_iterations,
        } => run_pulse_cell(cell, target, t_us, polish_iterations, t0),
    }
}

/// Coarse-optimize / fine-verify / optionally polish.  The reported
/// infidelity always comes from the four-substep grid.
fn run_pulse_cell(
    cell: &CellSpec,
    target: &Target,
    t_us: f64,
    polish_iterations: usize,
    t0: Instant,
) -> Result<RunRow> {
    let space = FockSpace::new(cell.d)?;
    let hw = HardwareConfig::default();
    let fine = match target {
        Target::Gate { .. } => EvolutionConfig::gate(&hw, space),
        Target::State { .. } => EvolutionConfig::state_prep(&hw, space),
    };
    let coarse = EvolutionConfig { substeps: 1, ..fine };
    let order = cell.b_or_order;
    let init = pulse_init(order, cell.seed);

    enum Cost {
        Gate(PulseGateCost, PulseGateCost),
        State(PulseStateCost, PulseStateCost),
    }
    let cost = match target {
        Target::Gate { matrix, .. } => Cost::Gate(
            PulseGateCost::new(matrix, order, t_us, &hw, &coarse)?,
            PulseGateCost::new(matrix, order, t_us, &hw, &fine)?,
        ),
        Target::State { vector, .. } => Cost::State(
            PulseStateCost::new(vector, order, t_us, &hw, &coarse)?,
            PulseStateCost::new(vector, order, t_us, &hw, &fine)?,
        ),
    };

    let ocfg = opt_config(cell);
    let r = match &cost {
        Cost::Gate(c, _) => minimize(c, &init, &ocfg)?,
        Cost::State(c, _) => minimize(c, &init, &ocfg)?,
    };
    let coarse_infidelity = r.cost;

    let verify = |x: &[f64]| -> Result<FidelityReport> {
        Ok(match &cost {
            Cost::Gate(_, f) => f.report(x)?,
            Cost::State(_, f) => f.report(x)?,
        })
    };
    let mut best = r;
    let mut report = verify(&best.x)?;
    let mut polished = false;
    let worth_polishing = match cell.cost_target {
        Some(t) => report.infidelity > t,
        None => report.infidelity > 2.0 * coarse_infidelity.max(1e-14),
    };
    if polish_iterations > 0 && worth_polishing {
        let pcfg = OptimizationConfig {
            max_iterations: polish_iterations,
            ..ocfg
        };
        let warm = match &cost {
            Cost::Gate(_, f) => minimize(f, &best.x, &pcfg)?,
            Cost::State(_, f) => minimize(f, &best.x, &pcfg)?,
        };
        let warm_report = verify(&warm.x)?;
        if warm_report.infidelity < report.infidelity {
            best = warm;
            report = warm_report;
            polished = true;
        }
    }

    let pulse = match &cost {
        Cost::Gate(c, _) => c.pulse(&best.x)?,
        Cost::State(c, _) => c.pulse(&best.x)?,
    };
    let mut detail = run_detail(&best, serde_json::from_str(&pulse.to_json())?);
    detail["coarse_infidelity"] = json!(coarse_infidelity);
    detail["polished"] = json!(polished);
    detail["t_us"] = json!(t_us);
    Ok(finish(cell, target, report, best.x, detail, t0))
}
