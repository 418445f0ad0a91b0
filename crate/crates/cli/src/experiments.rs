//! The named experiment batches: each expands a configuration into
//! independent optimization jobs, runs them across the worker pool, and
//! writes per-run JSON, an aggregate CSV, and a manifest that reproduces
//! the batch bit-exactly when fed back through `--config`.
//!
//! All job randomness is counter-split from the manifest seed, so thread
//! count and scheduling order cannot change any number.  Per-job failures
//! are recorded in the manifest and never abort the batch.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use quditforge_core::analysis::{
    break_even_dimension, gate_budget, median, noise_sweep, split_seed, NoiseMode, NoiseSpec,
};
use quditforge_core::lgt::{
    adjacent_transposition_distance, kendall_from_identity, random_permutation,
};
use quditforge_core::opt::stats::pearson_correlation_matrix;
use quditforge_core::opt::{fit_fidelity_curve, welch_t_test, FnCost, OptimizationConfig};
use quditforge_core::opt::{minimize, snapd_init};
use quditforge_core::snapd::{build_circuit, snapd_gate_infidelity, snapd_gate_report, SnapDParams};
use quditforge_core::ecd::{ecd_gate_infidelity, ECDParams};
use quditforge_core::pulse::{EvolutionConfig, HardwareConfig, PulseGateCost};
use quditforge_core::{one_minus_norm, trace_infidelity, FockSpace};

use crate::expr::{canonical_label, parse_target, Target};
use crate::io::{
    config_hash, fmt_e, write_csv, write_json, Manifest, RunFailure, AGGREGATE_HEADER,
    BREAK_EVEN_HEADER, BUDGET_HEADER, NOISE_HEADER,
};
use crate::run::{run_cell, AnsatzSpec, CellSpec, RunRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ExperimentName {
    CompareCost,
    StateprepScan,
    GateScan,
    PermStudy,
    ParamStats,
    NoiseSweep,
    BudgetTable,
}

impl ExperimentName {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentName::CompareCost => "compare-cost",
            ExperimentName::StateprepScan => "stateprep-scan",
            ExperimentName::GateScan => "gate-scan",
            ExperimentName::PermStudy => "perm-study",
            ExperimentName::ParamStats => "param-stats",
            ExperimentName::NoiseSweep => "noise-sweep",
            ExperimentName::BudgetTable => "budget-table",
        }
    }
}

pub struct ExperimentOutcome {
    pub n_rows: usize,
    pub n_failures: usize,
}

/// One schedulable optimization job.
struct Job {
    label: String,
    run: Box<dyn Fn() -> Result<RunRow> + Sync + Send>,
}

fn execute(jobs: &[Job]) -> (Vec<(usize, RunRow)>, Vec<RunFailure>) {
    let results: Vec<(usize, Result<RunRow>)> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, job)| (i, (job.run)()))
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, outcome) in results {
        match outcome {
            Ok(row) => rows.push((i, row)),
            Err(e) => failures.push(RunFailure {
                index: i,
                label: jobs[i].label.clone(),
                error: format!("{e:#}"),
            }),
        }
    }
    (rows, failures)
}

fn standard_job(cell: CellSpec, target: Target) -> Job {
    let label = format!(
        "d={} {} {} B_or_order={} start={}",
        cell.d,
        target.label(),
        cell.ansatz.label(),
        cell.b_or_order,
        cell.start
    );
    Job {
        label,
        run: Box::new(move || run_cell(&cell, &target)),
    }
}

pub(crate) fn run_json(index: usize, row: &RunRow) -> serde_json::Value {
    let mut v = row.detail.clone();
    let obj = v.as_object_mut().expect("detail is an object");
    obj.insert("index".into(), json!(index));
    obj.insert("d".into(), json!(row.d));
    obj.insert("target".into(), json!(row.target));
    obj.insert("ansatz".into(), json!(row.ansatz));
    obj.insert("B_or_order".into(), json!(row.b_or_order));
    obj.insert("start".into(), json!(row.start));
    obj.insert("seed".into(), json!(row.seed));
    obj.insert("infidelity".into(), json!(row.infidelity));
    obj.insert("leakage".into(), json!(row.leakage));
    obj.insert("wall_time_s".into(), json!(row.wall_time));
    v
}

#[allow(clippy::too_many_arguments)]
fn finalize(
    out: &Path,
    name: &str,
    seed: u64,
    threads: usize,
    config: serde_json::Value,
    rows: &[(usize, RunRow)],
    failures: Vec<RunFailure>,
    t0: Instant,
) -> Result<ExperimentOutcome> {
    let runs_dir = out.join("runs");
    fs::create_dir_all(&runs_dir)?;
    let csv_rows: Vec<Vec<String>> = rows.iter().map(|(_, r)| r.csv()).collect();
    write_csv(&out.join("aggregate.csv"), &AGGREGATE_HEADER, &csv_rows)?;
    for (i, row) in rows {
        write_json(&runs_dir.join(format!("run_{i:05}.json")), &run_json(*i, row))?;
    }
    let manifest = Manifest {
        experiment: name.to_string(),
        seed,
        threads,
        config_sha256: config_hash(name, seed, &config),
        config,
        n_rows: rows.len(),
        failures,
        wall_time_s: t0.elapsed().as_secs_f64(),
    };
    let n_failures = manifest.failures.len();
    write_json(&out.join("manifest.json"), &serde_json::to_value(&manifest)?)?;
    Ok(ExperimentOutcome {
        n_rows: rows.len(),
        n_failures,
    })
}

/// Read a config: absent -> defaults; TOML or plain JSON -> the fields; a
/// manifest JSON -> its embedded config and seed (the rerun path).
fn load_config<T: DeserializeOwned + Default>(
    path: Option<&Path>,
    name: &str,
) -> Result<(T, Option<u64>)> {
    let Some(p) = path else {
        return Ok((T::default(), None));
    };
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(&text).context("parsing JSON config")?;
        if let Some(exp) = v.get("experiment").and_then(|e| e.as_str()) {
            if exp != name {
                bail!("manifest describes experiment '{exp}', but '{name}' was requested");
            }
            let seed = v.get("seed").and_then(serde_json::Value::as_u64);
            let cfg = serde_json::from_value(
                v.get("config").cloned().unwrap_or(serde_json::Value::Null),
            )
            .context("manifest 'config' block")?;
            return Ok((cfg, seed));
        }
        return Ok((serde_json::from_value(v).context("JSON config")?, None));
    }
    Ok((toml::from_str(&text).context("TOML config")?, None))
}

pub fn run_experiment(
    name: ExperimentName,
    config_path: Option<&Path>,
    seed_flag: Option<u64>,
    out: &Path,
    threads: usize,
) -> Result<ExperimentOutcome> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    match name {
        ExperimentName::CompareCost => compare_cost(config_path, seed_flag, out, threads),
        ExperimentName::StateprepScan => stateprep_scan(config_path, seed_flag, out, threads),
        ExperimentName::GateScan => gate_scan(config_path, seed_flag, out, threads),
        ExperimentName::PermStudy => perm_study(config_path, seed_flag, out, threads),
        ExperimentName::ParamStats => param_stats(config_path, seed_flag, out, threads),
        ExperimentName::NoiseSweep => noise_sweep_experiment(config_path, seed_flag, out, threads),
        ExperimentName::BudgetTable => budget_table(config_path, seed_flag, out, threads),
    }
}

fn resolve_seed(flag: Option<u64>, manifest: Option<u64>) -> u64 {
    flag.or(manifest).unwrap_or(1)
}

// ---------------------------------------------------------------- gate-scan

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct GateScanConfig {
    pub d: usize,
    pub target: String,
    pub snapd_blocks: Vec<usize>,
    pub ecd_blocks: Vec<usize>,
    pub pulse_orders: Vec<usize>,
    pub pulse_t_us: f64,
    pub pulse_polish_iterations: usize,
    pub starts: usize,
    pub max_iterations: usize,
    pub snapd_complex_alpha: bool,
    pub ecd_complex_alpha: bool,
    pub cost_target: Option<f64>,
}

impl Default for GateScanConfig {
    fn default() -> Self {
        Self {
            d: 6,
            target: "x(3,4)".into(),
            snapd_blocks: (1..=6).collect(),
            ecd_blocks: Vec::new(),
            pulse_orders: Vec::new(),
            pulse_t_us: 0.5,
            pulse_polish_iterations: 100,
            starts: 30,
            max_iterations: 2000,
            snapd_complex_alpha: false,
            ecd_complex_alpha: true,
            cost_target: None,
        }
    }
}

/// Echoed-displacement scans above 70 blocks are out of the desk-scale
/// contract; reject them up front.
const ECD_BLOCK_CAP: usize = 70;

fn gate_scan(
    config_path: Option<&Path>,
    seed_flag: Option<u64>,
    out: &Path,
    threads: usize,
) -> Result<ExperimentOutcome> {
    let t0 = Instant::now();
    let (cfg, mseed) = load_config::<GateScanConfig>(config_path, "gate-scan")?;
    let seed = resolve_seed(seed_flag, mseed);
    if let Some(&b) = cfg.ecd_blocks.iter().find(|&&b| b > ECD_BLOCK_CAP) {
        bail!("ecd-blocks entry {b} exceeds the scan cap of {ECD_BLOCK_CAP}");
    }
    let target = parse_target(&cfg.target, Some(cfg.d))?;
    target.gate().context("gate-scan needs a gate target")?;

    let mut jobs = Vec::new();
    let mut push = |ansatz: AnsatzSpec, b: usize, start: usize, index: u64| {
        jobs.push(standard_job(
            CellSpec {
                d: cfg.d,
                ansatz,
                b_or_order: b,
                start,
                seed: split_seed(seed, index),
                max_iterations: cfg.max_iterations,
                cost_target: cfg.cost_target,
            },
            target.clone(),
        ));
    };
    let mut index = 0u64;
    for &b in &cfg.snapd_blocks {
        for start in 0..cfg.starts {
            push(
                AnsatzSpec::Snapd {
                    complex_alpha: cfg.snapd_complex_alpha,
                },
                b,
                start,
                index,
            );
            index += 1;
        }
    }
    for &b in &cfg.ecd_blocks {
        for start in 0..cfg.starts {
            push(
                AnsatzSpec::Ecd {
                    complex_alpha: cfg.ecd_complex_alpha,
                },
                b,
                start,
                index,
            );
            index += 1;
        }
    }
    for &order in &cfg.pulse_orders {
        for start in 0..cfg.starts {
            push(
                AnsatzSpec::Pulse {
                    t_us: cfg.pulse_t_us,
                    polish_iterations: cfg.pulse_polish_iterations,
                },
                order,
                start,
                index,
            );
            index += 1;
        }
    }

    let (rows, failures) = execute(&jobs);
    finalize(
        out,
        "gate-scan",
        seed,
        threads,
        serde_json::to_value(&cfg)?,
        &rows,
        failures,
        t0,
    )
}

// ----------------------------------------------------------- stateprep-scan

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct StateprepScanConfig {
    pub dims: Vec<usize>,
    pub targets: Vec<String>,
    pub snapd_blocks: Vec<usize>,
    pub ecd_blocks: Vec<usize>,
    pub starts: usize,
    pub max_iterations: usize,
    pub snapd_complex_alpha: bool,
    pub ecd_complex_alpha: bool,
    pub cost_target: Option<f64>,
}

impl Default for StateprepScanConfig {
    fn default() -> Self {
        Self {
            dims: vec![4, 6, 8],
            targets: vec!["fock(3)".into(), "hadamard".into()],
            snapd_blocks: vec![1, 2, 3],
            ecd_blocks: (1..=6).collect(),
            starts: 20,
            max_iterations: 2000,
            snapd_complex_alpha: false,
            ecd_complex_alpha: true,
            cost_target: Some(1e-10),
        }
    }
}

fn stateprep_scan(
    config_path: Option<&Path>,
    seed_flag: Option<u64>,
    out: &Path,
    threads: usize,
) -> Result<ExperimentOutcome> {
    let t0 = Instant::now();
    let (cfg, mseed) = load_config::<StateprepScanConfig>(config_path, "stateprep-scan")?;
    let seed = resolve_seed(seed_flag, mseed);

    let mut jobs = Vec::new();
    let mut index = 0u64;
    for &d in &cfg.dims {
        for expr in &cfg.targets {
            let target = parse_target(expr, Some(d))?;
            target
                .state()
                .context("stateprep-scan needs state targets")?;
            for (ansatz_blocks, complex, is_snapd) in [
                (&cfg.snapd_blocks, cfg.snapd_complex_alpha, true),
                (&cfg.ecd_blocks, cfg.ecd_complex_alpha, false),
            ] {
                for &b in ansatz_blocks.iter() {
                    for start in 0..cfg.starts {
                        let ansatz = if is_snapd {
                            AnsatzSpec::Snapd {
                                complex_alpha: complex,
                            }
                        } else {
                            AnsatzSpec::Ecd {
                                complex_alpha: complex,
                            }
                        };
                        jobs.push(standard_job(
                            CellSpec {
                                d,
                                ansatz,
                                b_or_order: b,
                                start,
                                seed: split_seed(seed, index),
                                max_iterations: cfg.max_iterations,
                                cost_target: cfg.cost_target,
                            },
                            target.clone(),
                        ));
                        index += 1;
                    }
                }
            }
        }
    }

    let (rows, failures) = execute(&jobs);
    finalize(
        out,
        "stateprep-scan",
        seed,
        threads,
        serde_json::to_value(&cfg)?,
        &rows,
        failures,
        t0,
    )
}

// ------------------------------------------------------------ compare-cost

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CompareCell {
    pub target: String,
    pub blocks: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct CompareCostConfig {
    pub d: usize,
    pub cells: Vec<CompareCell>,
    pub starts: usize,
    pub max_iterations: usize,
}

impl Default for CompareCostConfig {
    fn default() -> Self {
        Self {
            d: 6,
            cells: vec![
                CompareCell {
                    target: "x(2,3)*x(4,5)".into(),
                    blocks: vec![3, 5],
                },
                CompareCell {
                    target: "rx(2,3,pi/10)".into(),
                    blocks: vec![5],
                },
            ],
            starts: 30,
            max_iterations: 2000,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum CostKind {
    Trace,
    OneMinusNorm,
}

impl CostKind {
    fn label(self) -> &'static str {
        match self {
            CostKind::Trace => "snapd:trace",
            CostKind::OneMinusNorm => "snapd:one-minus-norm",
        }
    }
}

/// Optimize the same circuits under two cost metrics and compare the final
/// circuits on the common trace yardstick; the reported infidelity is always
/// the trace one regardless of which metric drove the optimizer.
fn compare_cost_job(
    d: usize,
    matrix: quditforge_core::CMat,
    label: String,
    blocks: usize,
    kind: CostKind,
    start: usize,
    seed: u64,
    max_iterations: usize,
) -> Job {
    let job_label = format!("d={d} {label} {} B_or_order={blocks} start={start}", kind.label());
    let run = Box::new(move || -> Result<RunRow> {
        let t0 = Instant::now();
        let space = FockSpace::with_guard(d, 0)?;
        let init = snapd_init(d, blocks, false, seed);
        let n_params = SnapDParams::param_count(d, blocks, false);
        let objective_target = matrix.clone();
        let objective = move |x: &[f64]| -> f64 {
            let Ok(p) = SnapDParams::from_flat(d, blocks, false, x) else {
                return f64::NAN;
            };
            let Ok(u) = build_circuit(&p, space) else {
                return f64::NAN;
            };
            let value = match kind {
                CostKind::Trace => trace_infidelity(&objective_target, &u, d as f64),
                CostKind::OneMinusNorm => one_minus_norm(&objective_target, &u),
            };
            value.unwrap_or(f64::NAN)
        };
        let cost = FnCost::new(n_params, objective);
        let ocfg = OptimizationConfig {
            max_iterations,
            ..OptimizationConfig::default()
        };
        let r = minimize(&cost, &init, &ocfg)?;
        let p = SnapDParams::from_flat(d, blocks, false, &r.x)?;
        let report = snapd_gate_report(&p, &matrix, space)?;
        let detail = json!({
            "params": serde_json::from_str::<serde_json::Value>(&p.to_json())?,
            "metric": kind.label(),
            "optimized_cost": r.cost,
            "iterations": r.iterations,
            "evaluations": r.evaluations,
            "stop": serde_json::to_value(r.stop)?,
        });
        Ok(RunRow {
            d,
            target: label.clone(),
            ansatz: kind.label().to_string(),
            b_or_order: blocks,
            start,
            seed,
            infidelity: report.infidelity,
            leakage: report.leakage,
            wall_time: t0.elapsed().as_secs_f64(),
            x: r.x,
            detail,
        })
    });
    Job {
        label: job_label,
        run,
    }
}

fn compare_cost(
    config_path: Option<&Path>,
    seed_flag: Option<u64>,
    out: &Path,
    threads: usize,
) -> Result<ExperimentOutcome> {
    let t0 = Instant::now();
    let (cfg, mseed) = load_config::<CompareCostConfig>(config_path, "compare-cost")?;
    let seed = resolve_seed(seed_flag, mseed);

    let mut jobs = Vec::new();
    let mut index = 0u64;
    for cell in &cfg.cells {
        let target = parse_target(&cell.target, Some(cfg.d))?;
        let matrix = target.gate().context("compare-cost needs gate targets")?;
        for &b in &cell.blocks {
            for kind in [CostKind::Trace, CostKind::OneMinusNorm] {
                for start in 0..cfg.starts {
                    jobs.push(compare_cost_job(
                        cfg.d,
                        matrix.clone(),
                        target.label().to_string(),
                        b,
                        kind,
                        start,
                        split_seed(seed, index),
                        cfg.max_iterations,
                    ));
                    index += 1;
                }
            }
        }
    }

    let (rows, failures) = execute(&jobs);

    // Welch's unequal-variance test between the two metric groups, per
    // (target, blocks) cell, on the common trace infidelities.
    let mut comparisons = Vec::new();
    for cell in &cfg.cells {
        let label = canonical_label(&cell.target);
        for &b in &cell.blocks {
            let group = |metric: &str| -> Vec<f64> {
                rows.iter()
                    .filter(|(_, r)| r.target == label && r.b_or_order == b && r.ansatz == metric)
                    .map(|(_, r)| r.infidelity)
                    .collect()
            };
            let a = group("snapd:trace");
            let c = group("snapd:one-minus-norm");
            let entry = match welch_t_test(&a, &c) {
                Ok(w) => json!({
                    "target": label, "blocks": b,
                    "median_trace": median(&a).ok(),
                    "median_one_minus_norm": median(&c).ok(),
                    "welch": serde_json::to_value(w)?,
                }),
                Err(e) => json!({
                    "target": label, "blocks": b, "error": e.to_string(),
                }),
            };
            comparisons.push(entry);
        }
    }
    write_json(&out.join("stats.json"), &json!({ "comparisons": comparisons }))?;

    finalize(
        out,
        "compare-cost",
        seed,
        threads,
        serde_json::to_value(&cfg)?,
        &rows,
        failures,
        t0,
    )
}

// -------------------------------------------------------------- perm-study

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct PermStudyConfig {
    pub d: usize,
    pub blocks: Vec<usize>,
    pub starts: usize,
    /// Cap on the number of permutations; absent means all of them for
    /// d <= 4 and 100 sampled ones above.
    pub max_perms: Option<usize>,
    pub max_iterations: usize,
    pub cost_target: Option<f64>,
}

impl Default for PermStudyConfig {
    fn default() -> Self {
        Self {
            d: 3,
            blocks: (1..=6).collect(),
            starts: 10,
            max_perms: None,
            max_iterations: 2000,
            cost_target: None,
        }
    }
}

fn all_permutations(d: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, remaining: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..remaining.len() {
            let v = remaining.remove(i);
            prefix.push(v);
            rec(prefix, remaining, out);
            prefix.pop();
            remaining.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..d).collect(), &mut out);
    out
}

fn perm_label(p: &[usize]) -> String {
    let body: Vec<String> = p.iter().map(usize::to_string).collect();
    format!("perm({})", body.join(","))
}

fn choose_permutations(cfg: &PermStudyConfig, seed: u64) -> Vec<Vec<usize>> {
    let factorial: usize = (1..=cfg.d).product();
    let want = cfg
        .max_perms
        .unwrap_or(if cfg.d <= 4 { factorial } else { 100 });
    if want >= factorial {
        return all_permutations(cfg.d);
    }
    // Sampled without replacement; the sampler seed lives outside the
    // per-run counter range.
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, u64::MAX));
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    while out.len() < want {
        let p = random_permutation(cfg.d, &mut rng);
        if seen.insert(p.clone()) {
            out.push(p);
        }
    }
    out
}

fn perm_study(
    config_path: Option<&Path>,
    seed_flag: Option<u64>,
    out: &Path,
    threads: usize,
) -> Result<ExperimentOutcome> {
    let t0 = Instant::now();
    let (cfg, mseed) = load_config::<PermStudyConfig>(config_path, "perm-study")?;
    let seed = resolve_seed(seed_flag, mseed);
    let perms = choose_permutations(&cfg, seed);

    let mut jobs = Vec::new();
    let mut index = 0u64;
    for p in &perms {
        let target = parse_target(&perm_label(p), Some(cfg.d))?;
        for &b in &cfg.blocks {
            for start in 0..cfg.starts {
                jobs.push(standard_job(
                    CellSpec {
                        d: cfg.d,
                        ansatz: AnsatzSpec::Snapd {
                            complex_alpha: false,
                        },
                        b_or_order: b,
                        start,
                        seed: split_seed(seed, index),
                        max_iterations: cfg.max_iterations,
                        cost_target: cfg.cost_target,
                    },
                    target.clone(),
                ));
                index += 1;
            }
        }
    }
    let (rows, failures) = execute(&jobs);

    // Permutation metadata for the structure analysis.
    let perm_rows: Vec<Vec<String>> = perms
        .iter()
        .map(|p| -> Result<Vec<String>> {
            Ok(vec![
                perm_label(p),
                adjacent_transposition_distance(p)?.to_string(),
                fmt_e(kendall_from_identity(p)?),
            ])
        })
        .collect::<Result<_>>()?;
    write_csv(
        &out.join("perms.csv"),
        &["perm", "inversions", "kendall"],
        &perm_rows,
    )?;

    // Scaling-law fit over the best fidelity per (permutation, B).
    let mut best: BTreeMap<(String, usize), f64> = BTreeMap::new();
    for (_, r) in &rows {
        let key = (r.target.clone(), r.b_or_order);
        let slot = best.entry(key).or_insert(f64::INFINITY);
        *slot = slot.min(r.infidelity);
    }
    let points: Vec<(usize, usize, f64)> = best
        .iter()
        .map(|((_, b), &inf)| (*b, cfg.d, (1.0 - inf).clamp(0.0, 1.0)))
        .collect();
    let fit_value = match fit_fidelity_curve(&points) {
        Ok(fit) => json!({
            "c": fit.c,
            "gamma": fit.gamma,
            "c_sigma": fit.c_sigma(),
            "gamma_sigma": fit.gamma_sigma(),
            "ssr": fit.ssr,
            "n_points": fit.n_points,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    write_json(&out.join("fit.json"), &fit_value)?;

    finalize(
        out,
        "perm-study",
        seed,
        threads,
        serde_json::to_value(&cfg)?,
        &rows,
        failures,
        t0,
    )
}

// -------------------------------------------------------------- param-stats

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct ParamStatsConfig {
    pub d: usize,
    pub target: String,
    pub blocks: usize,
    pub runs: usize,
    /// Partition boundary on the final infidelity.
    pub threshold: f64,
    /// Optional second target optimized from the same initial vectors
    /// (seed reuse), for the shared-start comparison.
    pub shared_target: Option<String>,
    pub max_iterations: usize,
    pub cost_target: Option<f64>,
}

impl Default for ParamStatsConfig {
    fn default() -> Self {
        Self {
            d: 6,
            target: "x(3,4)".into(),
            blocks: 5,
            runs: 200,
            threshold: 1e-5,
            shared_target: None,
            max_iterations: 2000,
            cost_target: None,
        }
    }
}

fn correlation_csv(out: &Path, name: &str, xs: &[&Vec<f64>]) -> Result<Option<usize>> {
    if xs.len() < 2 {
        return Ok(None);
    }
    let n_params = xs[0].len();
    let flat: Vec<f64> = xs.iter().flat_map(|x| x.iter().copied()).collect();
    let samples = ndarray::Array2::from_shape_vec((xs.len(), n_params), flat)?;
    let rho = pearson_correlation_matrix(&samples)?;
    let header: Vec<String> = (0..n_params).map(|j| format!("p{j}")).collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = rho
        .rows()
        .into_iter()
        .map(|row| row.iter().map(|&v| fmt_e(v)).collect())
        .collect();
    write_csv(&out.join(name), &header_refs, &rows)?;
    Ok(Some(xs.len()))
}

fn param_stats(
    config_path: Option<&Path>,
    seed_flag: Option<u64>,
    out: &Path,
    threads: usize,
) -> Result<ExperimentOutcome> {
    let t0 = Instant::now();
    let (cfg, mseed) = load_config::<ParamStatsConfig>(config_path, "param-stats")?;
    let seed = resolve_seed(seed_flag, mseed);
    let target = parse_target(&cfg.target, Some(cfg.d))?;
    target.gate().context("param-stats needs a gate target")?;
    let shared = cfg
        .shared_target
        .as_deref()
        .map(|expr| parse_target(expr, Some(cfg.d)))
        .transpose()?;
    if let Some(s) = &shared {
        s.gate().context("shared target must be a gate")?;
    }

    let mut jobs = Vec::new();
    for run in 0..cfg.runs {
        // The shared comparison reuses the exact seed, hence the exact
        // initial vector, for both targets.
        let run_seed = split_seed(seed, run as u64);
        let cell = CellSpec {
            d: cfg.d,
            ansatz: AnsatzSpec::Snapd {
                complex_alpha: false,
            },
            b_or_order: cfg.blocks,
            start: run,
            seed: run_seed,
            max_iterations: cfg.max_iterations,
            cost_target: cfg.cost_target,
        };
        jobs.push(standard_job(cell.clone(), target.clone()));
        if let Some(s) = &shared {
            jobs.push(standard_job(cell, s.clone()));
        }
    }
    let (rows, failures) = execute(&jobs);

    let main_label = target.label();
    let good: Vec<&Vec<f64>> = rows
        .iter()
        .filter(|(_, r)| r.target == main_label && r.infidelity <= cfg.threshold)
        .map(|(_, r)| &r.x)
        .collect();
    let bad: Vec<&Vec<f64>> = rows
        .iter()
        .filter(|(_, r)| r.target == main_label && r.infidelity > cfg.threshold)
        .map(|(_, r)| &r.x)
        .collect();
    let n_good = correlation_csv(out, "correlation_low_infidelity.csv", &good)?;
    let n_bad = correlation_csv(out, "correlation_high_infidelity.csv", &bad)?;
    write_json(
        &out.join("stats.json"),
        &json!({
            "threshold": cfg.threshold,
            "n_low_infidelity": good.len(),
            "n_high_infidelity": bad.len(),
            "correlation_low_written": n_good.is_some(),
            "correlation_high_written": n_bad.is_some(),
        }),
    )?;

    finalize(
        out,
        "param-stats",
        seed,
        threads,
        serde_json::to_value(&cfg)?,
        &rows,
        failures,
        t0,
    )
}

// -------------------------------------------------------------- noise-sweep

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct NoiseSweepConfig {
    pub d: usize,
    pub target: String,
    pub snapd_blocks: usize,
    pub snapd_starts: usize,
    pub ecd_blocks: usize,
    pub ecd_starts: usize,
    pub ecd_complex_alpha: bool,
    /// Pulse references cost hours of optimization; off by default.
    pub include_pulse: bool,
    pub pulse_order: usize,
    pub pulse_t_us: f64,
    pub pulse_starts: usize,
    pub pulse_polish_iterations: usize,
    pub betas: Vec<f64>,
    pub samples: usize,
    pub mode: NoiseMode,
    pub max_iterations: usize,
    pub cost_target: Option<f64>,
}

impl Default for NoiseSweepConfig {
    fn default() -> Self {
        Self {
            d: 6,
            target: "x(3,4)".into(),
            snapd_blocks: 5,
            snapd_starts: 50,
            ecd_blocks: 36,
            ecd_starts: 20,
            ecd_complex_alpha: true,
            include_pulse: false,
            pulse_order: 30,
            pulse_t_us: 0.5,
            pulse_starts: 10,
            pulse_polish_iterations: 150,
            betas: NoiseSpec::default().betas,
            samples: 50,
            mode: NoiseMode::RelativeGaussian,
            max_iterations: 2000,
            cost_target: Some(1e-5),
        }
    }
}

fn noise_sweep_experiment(
    config_path: Option<&Path>,
    seed_flag: Option<u64>,
    out: &Path,
    threads: usize,
) -> Result<ExperimentOutcome> {
    let t0 = Instant::now();
    let (cfg, mseed) = load_config::<NoiseSweepConfig>(config_path, "noise-sweep")?;
    let seed = resolve_seed(seed_flag, mseed);
    let target = parse_target(&cfg.target, Some(cfg.d))?;
    let matrix = target
        .gate()
        .context("noise-sweep needs a gate target")?
        .clone();

    let mut jobs = Vec::new();
    let mut index = 0u64;
    let mut schedule = |jobs: &mut Vec<Job>, ansatz: AnsatzSpec, b: usize, starts: usize| {
        for start in 0..starts {
            jobs.push(standard_job(
                CellSpec {
                    d: cfg.d,
                    ansatz,
                    b_or_order: b,
                    start,
                    seed: split_seed(seed, index),
                    max_iterations: cfg.max_iterations,
                    cost_target: cfg.cost_target,
                },
                target.clone(),
            ));
            index += 1;
        }
    };
    schedule(
        &mut jobs,
        AnsatzSpec::Snapd {
            complex_alpha: false,
        },
        cfg.snapd_blocks,
        cfg.snapd_starts,
    );
    schedule(
        &mut jobs,
        AnsatzSpec::Ecd {
            complex_alpha: cfg.ecd_complex_alpha,
        },
        cfg.ecd_blocks,
        cfg.ecd_starts,
    );
    if cfg.include_pulse {
        schedule(
            &mut jobs,
            AnsatzSpec::Pulse {
                t_us: cfg.pulse_t_us,
                polish_iterations: cfg.pulse_polish_iterations,
            },
            cfg.pulse_order,
            cfg.pulse_starts,
        );
    }
    let (rows, failures) = execute(&jobs);

    // Sweep the best reference circuit of each ansatz.
    let spec = NoiseSpec {
        betas: cfg.betas.clone(),
        samples: cfg.samples,
        mode: cfg.mode,
    };
    let mut noise_rows: Vec<Vec<String>> = Vec::new();
    let mut summaries = Vec::new();
    for (k, ansatz) in ["snapd", "ecd", "pulse"].into_iter().enumerate() {
        let Some((_, best)) = rows
            .iter()
            .filter(|(_, r)| r.ansatz == ansatz)
            .min_by(|(_, a), (_, b)| a.infidelity.total_cmp(&b.infidelity))
        else {
            continue;
        };
        let score: Box<dyn Fn(&[f64]) -> quditforge_core::Result<f64>> = match ansatz {
            "snapd" => {
                let space = FockSpace::with_guard(cfg.d, 0)?;
                let m = matrix.clone();
                let b = cfg.snapd_blocks;
                let d = cfg.d;
                Box::new(move |x| {
                    snapd_gate_infidelity(&SnapDParams::from_flat(d, b, false, x)?, &m, space)
                })
            }
            "ecd" => {
                let space = FockSpace::with_guard(cfg.d, 0)?;
                let m = matrix.clone();
                let b = cfg.ecd_blocks;
                let d = cfg.d;
                let complex = cfg.ecd_complex_alpha;
                Box::new(move |x| {
                    ecd_gate_infidelity(&ECDParams::from_flat(d, b, complex, x)?, &m, space)
                })
            }
            _ => {
                let space = FockSpace::new(cfg.d)?;
                let hw = HardwareConfig::default();
                let fine = EvolutionConfig::gate(&hw, space);
                let cost = PulseGateCost::new(&matrix, cfg.pulse_order, cfg.pulse_t_us, &hw, &fine)?;
                Box::new(move |x| Ok(cost.report(x)?.infidelity))
            }
        };
        let sweep_seed = split_seed(seed, u64::MAX - 1 - k as u64);
        let swept = noise_sweep(&best.x, score.as_ref(), &spec, sweep_seed)?;
        let mut medians = Vec::new();
        for (bi, &beta) in spec.betas.iter().enumerate() {
            let chunk: Vec<f64> = swept[bi * spec.samples..(bi + 1) * spec.samples]
                .iter()
                .map(|r| r.infidelity)
                .collect();
            medians.push(json!({ "beta": beta, "median": median(&chunk)? }));
        }
        summaries.push(json!({
            "ansatz": ansatz,
            "noiseless_infidelity": best.infidelity,
            "medians": medians,
        }));
        for r in &swept {
            noise_rows.push(vec![
                ansatz.to_string(),
                fmt_e(r.beta),
                r.sample.to_string(),
                fmt_e(r.infidelity),
            ]);
        }
    }
    write_csv(&out.join("noise.csv"), &NOISE_HEADER, &noise_rows)?;
    write_json(&out.join("stats.json"), &json!({ "sweeps": summaries }))?;

    finalize(
        out,
        "noise-sweep",
        seed,
        threads,
        serde_json::to_value(&cfg)?,
        &rows,
        failures,
        t0,
    )
}

// -------------------------------------------------------------- budget-table

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct BudgetTableConfig {
    pub t1_budget_ms: f64,
    pub snapd_block_time_us: f64,
    pub ecd_block_time_us: f64,
    pub snapd_blocks: Vec<usize>,
    pub ecd_blocks: Vec<usize>,
    /// Corner values for the break-even table.
    pub snap_times_us: Vec<f64>,
    pub ecd_times_us: Vec<f64>,
}

impl Default for BudgetTableConfig {
    fn default() -> Self {
        Self {
            t1_budget_ms: 10.0,
            snapd_block_time_us: 1.0,
            ecd_block_time_us: 0.2,
            snapd_blocks: vec![1, 2, 4, 8, 16],
            ecd_blocks: vec![4, 8, 16, 32, 64],
            snap_times_us: vec![1.0, 50.0],
            ecd_times_us: vec![0.1, 0.2],
        }
    }
}

fn budget_table(
    config_path: Option<&Path>,
    seed_flag: Option<u64>,
    out: &Path,
    threads: usize,
) -> Result<ExperimentOutcome> {
    let t0 = Instant::now();
    let (cfg, mseed) = load_config::<BudgetTableConfig>(config_path, "budget-table")?;
    let seed = resolve_seed(seed_flag, mseed);
    let t1_us = cfg.t1_budget_ms * 1000.0;

    let mut budget_rows = Vec::new();
    for (ansatz, block_time, blocks) in [
        ("snapd", cfg.snapd_block_time_us, &cfg.snapd_blocks),
        ("ecd", cfg.ecd_block_time_us, &cfg.ecd_blocks),
    ] {
        for &b in blocks {
            budget_rows.push(vec![
                ansatz.to_string(),
                fmt_e(block_time),
                b.to_string(),
                fmt_e(t1_us),
                gate_budget(t1_us, block_time, b)?.to_string(),
            ]);
        }
    }
    write_csv(&out.join("budget.csv"), &BUDGET_HEADER, &budget_rows)?;

    let mut break_rows = Vec::new();
    for &ts in &cfg.snap_times_us {
        for &te in &cfg.ecd_times_us {
            break_rows.push(vec![
                fmt_e(ts),
                fmt_e(te),
                fmt_e(break_even_dimension(ts, te)?),
            ]);
        }
    }
    write_csv(&out.join("break_even.csv"), &BREAK_EVEN_HEADER, &break_rows)?;

    finalize(
        out,
        "budget-table",
        seed,
        threads,
        serde_json::to_value(&cfg)?,
        &[],
        Vec::new(),
        t0,
    )
}
