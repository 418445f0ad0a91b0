//! Best-of-N restarts and basis-growth scheduling on top of the quasi-Newton
//! engine.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::opt::cost::CostFunction;
use crate::opt::lbfgs::minimize;
use crate::opt::{OptimizationConfig, OptimizationResult, StopReason};
use crate::Result;

/// How an individual start was seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartKind {
    /// Drawn from the ansatz sampler with this seed.
    Sampled(u64),
    /// Supplied by the caller (warm start).
    Warm,
}

/// Per-start bookkeeping; failed starts carry the error text instead of
/// killing the whole batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartRecord {
    pub kind: StartKind,
    pub cost: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: Option<StopReason>,
    pub error: Option<String>,
}

/// Restart policy. Sampled starts use seeds `base_seed`, `base_seed + 1`, ...;
/// warm starts run first (they are the continuation path for nested ansätze).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MultiStart {
    pub n_starts: usize,
    pub base_seed: u64,
    /// Stop launching further starts once one reaches this cost. Forces
    /// sequential execution; without it starts run through the thread pool.
    pub stop_when: Option<f64>,
    /// Caller-provided initial vectors, run before any sampled start.
    pub extra_inits: Vec<Vec<f64>>,
}

impl MultiStart {
    pub fn sampled(n_starts: usize, base_seed: u64) -> Self {
        Self {
            n_starts,
            base_seed,
            stop_when: None,
            extra_inits: Vec::new(),
        }
    }
}

/// Batch outcome: the winning run plus one record per start actually launched.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiStartOutcome {
    pub best: OptimizationResult,
    /// Index into `starts` of the winner.
    pub best_start: usize,
    pub starts: Vec<StartRecord>,
}

fn run_one(
    cost: &dyn CostFunction,
    init: &[f64],
    kind: StartKind,
    config: &OptimizationConfig,
) -> (StartRecord, Option<OptimizationResult>) {
    match minimize(cost, init, config) {
        Ok(r) => (
            StartRecord {
                kind,
                cost: r.cost,
                iterations: r.iterations,
                evaluations: r.evaluations,
                stop: Some(r.stop),
                error: None,
            },
            Some(r),
        ),
        Err(e) => (
            StartRecord {
                kind,
                cost: f64::INFINITY,
                iterations: 0,
                evaluations: 0,
                stop: None,
                error: Some(e.to_string()),
            },
            None,
        ),
    }
}

/// Run `ms.extra_inits` then `ms.n_starts` sampled starts and keep the best.
/// The result is deterministic for a fixed `(cost, sampler, ms, config)`:
/// ties break toward the earliest start.
pub fn multi_start(
    cost: &dyn CostFunction,
    sampler: &(dyn Fn(u64) -> Vec<f64> + Sync),
    ms: &MultiStart,
    config: &OptimizationConfig,
) -> Result<MultiStartOutcome> {
    let mut inits: Vec<(StartKind, Vec<f64>)> = Vec::new();
    for w in &ms.extra_inits {
        inits.push((StartKind::Warm, w.clone()));
    }
    for i in 0..ms.n_starts {
        let seed = ms.base_seed.wrapping_add(i as u64);
        inits.push((StartKind::Sampled(seed), sampler(seed)));
    }
    if inits.is_empty() {
        return Err(Error::Invalid("multi-start with zero starts".into()));
    }

    let outcomes: Vec<(StartRecord, Option<OptimizationResult>)> =
        if let Some(threshold) = ms.stop_when {
            let mut out = Vec::new();
            for (kind, init) in &inits {
                let pair = run_one(cost, init, *kind, config);
                let reached = pair.0.error.is_none() && pair.0.cost <= threshold;
                out.push(pair);
                if reached {
                    break;
                }
            }
            out
        } else {
            inits
                .par_iter()
                .map(|(kind, init)| run_one(cost, init, *kind, config))
                .collect()
        };

    let mut best: Option<(usize, OptimizationResult)> = None;
    let mut starts = Vec::with_capacity(outcomes.len());
    for (i, (record, result)) in outcomes.into_iter().enumerate() {
        if let Some(r) = result {
            let better = best.as_ref().is_none_or(|(_, b)| r.cost < b.cost);
            if better {
                best = Some((i, r));
            }
        }
        starts.push(record);
    }
    let Some((best_start, best)) = best else {
        let msg = starts
            .iter()
            .find_map(|s| s.error.clone())
            .unwrap_or_else(|| "all starts failed".into());
        return Err(Error::Invalid(msg));
    };
    Ok(MultiStartOutcome {
        best,
        best_start,
        starts,
    })
}

/// One growth batch: run `after_iterations` more iterations, then widen the
/// basis by `add` terms.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrowthStep {
    pub add: usize,
    pub after_iterations: usize,
}

/// Staged basis sizes for progressive pulse optimization, e.g. start at order
/// 32 and add 8, 5, 5 terms every 500 iterations to finish at order 50.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthSchedule {
    pub initial_order: usize,
    pub steps: Vec<GrowthStep>,
}

impl GrowthSchedule {
    pub fn final_order(&self) -> usize {
        self.initial_order + self.steps.iter().map(|s| s.add).sum::<usize>()
    }
}

/// Sequentially minimize a family of nested costs, warm-starting each wider
/// basis from the previous optimum. `make_cost(order)` builds the stage cost;
/// `embed(x, from, to)` lifts a parameter vector between basis sizes (new
/// coefficients zero, so the lifted cost matches the narrow one exactly).
/// Stage budgets come from the schedule; the final stage uses whatever remains
/// of `config.max_iterations`.
pub fn grow_basis_minimize(
    make_cost: &dyn Fn(usize) -> Box<dyn CostFunction>,
    embed: &dyn Fn(&[f64], usize, usize) -> Vec<f64>,
    x0: &[f64],
    schedule: &GrowthSchedule,
    config: &OptimizationConfig,
) -> Result<OptimizationResult> {
    let mut order = schedule.initial_order;
    let mut x = x0.to_vec();
    let mut used = 0usize;
    let mut evaluations = 0usize;
    let mut last: Option<OptimizationResult> = None;

    for (k, step) in schedule.steps.iter().chain(std::iter::once(&GrowthStep {
        add: 0,
        after_iterations: usize::MAX,
    })).enumerate()
    {
        let budget = step
            .after_iterations
            .min(config.max_iterations.saturating_sub(used));
        let stage_config = OptimizationConfig {
            max_iterations: budget,
            ..*config
        };
        let cost = make_cost(order);
        let r = minimize(cost.as_ref(), &x, &stage_config)?;
        used += r.iterations;
        evaluations += r.evaluations;
        x = r.x.clone();
        let reached_target = r.stop == StopReason::CostTarget;
        last = Some(r);
        if reached_target || k == schedule.steps.len() {
            break;
        }
        let wider = order + step.add;
        x = embed(&x, order, wider);
        order = wider;
    }

    let mut r = last.expect("at least one stage runs");
    r.iterations = used;
    r.evaluations = evaluations;
    Ok(r)
}
