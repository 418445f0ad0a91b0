//! Command-line front end for the cavity-qudit synthesis toolkit.
//!
//! Exit codes: 0 on success, 1 for usage or runtime errors, 2 when an
//! experiment finished but recorded per-run failures in its manifest.

mod experiments;
mod expr;
mod io;
mod run;

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use quditforge_core::analysis::{noise_sweep, split_seed, NoiseMode, NoiseSpec};
use quditforge_core::ecd::{ecd_gate_infidelity, ecd_state_infidelity, ECDParams};
use quditforge_core::opt::{fit_fidelity_curve, welch_t_test};
use quditforge_core::pulse::{
    lab_frame_export, write_waveform_csv, ChebyshevPulse, EvolutionConfig, HardwareConfig,
    PulseGateCost, PulseStateCost,
};
use quditforge_core::snapd::{snapd_gate_infidelity, snapd_state_infidelity, SnapDParams};
use quditforge_core::FockSpace;

use experiments::{run_experiment, run_json, ExperimentName};
use expr::{parse_target, Target};
use io::{
    column_index, csv_string, fmt_e, matrix_json, read_csv, state_json, write_csv, write_json,
    NOISE_HEADER, SUMMARY_HEADER,
};
use run::{run_cell, AnsatzSpec, CellSpec, RunRow};

#[derive(Parser)]
#[command(name = "quditforge", version, about = "Qudit gate and state synthesis on a cavity register")]
struct Cli {
    /// Worker threads; the QUDITFORGE_THREADS variable overrides this flag.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CircuitAnsatz {
    Snapd,
    Ecd,
}

#[derive(Subcommand)]
enum Command {
    /// Print a target matrix or state as JSON.
    Target {
        /// Target expression, e.g. "x(3,4)" or "fock(3)".
        expr: String,
        /// Register dimension for level-embedded terms.
        #[arg(long)]
        dim: Option<usize>,
        /// Write the JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize a circuit for one target, best of several starts.
    Decompose {
        #[arg(long, value_enum)]
        ansatz: CircuitAnsatz,
        /// Register dimension.
        #[arg(long)]
        d: usize,
        /// Target expression.
        #[arg(long)]
        target: String,
        /// Circuit blocks.
        #[arg(long)]
        blocks: usize,
        #[arg(long, default_value_t = 20)]
        starts: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Allow complex displacement amplitudes.
        #[arg(long)]
        complex_alpha: bool,
        #[arg(long, default_value_t = 2000)]
        max_iter: usize,
        /// Stop early once a start reaches this infidelity.
        #[arg(long)]
        stop_when: Option<f64>,
        /// Directory for params.json and result.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Shape a control pulse for one target, best of several starts.
    Pulse {
        /// Register dimension.
        #[arg(long)]
        d: usize,
        /// Polynomial order of each envelope.
        #[arg(long)]
        order: usize,
        /// Pulse duration in microseconds.
        #[arg(long, default_value_t = 0.5)]
        t_us: f64,
        /// Target expression.
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 10)]
        starts: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 600)]
        max_iter: usize,
        /// Stop early once a start reaches this infidelity.
        #[arg(long)]
        stop_when: Option<f64>,
        /// Fine-grid polish budget after the coarse optimization.
        #[arg(long, default_value_t = 100)]
        polish_iters: usize,
        /// Directory for params.json and result.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write waveform.csv sampled this many times per ns.
        #[arg(long)]
        export_lab: Option<usize>,
    },
    /// Run a named experiment batch.
    Experiment {
        #[arg(value_enum)]
        name: ExperimentName,
        /// TOML or JSON configuration; a prior manifest.json reruns its batch.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Base seed (overrides a manifest seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default "<name>-out").
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-score a saved circuit or pulse under parameter noise.
    Noise {
        /// params.json written by decompose or pulse.
        #[arg(long)]
        params: PathBuf,
        /// Register dimension.
        #[arg(long)]
        d: usize,
        /// Target expression the parameters were optimized for.
        #[arg(long)]
        target: String,
        /// Comma-separated noise strengths (default: six decades).
        #[arg(long)]
        betas: Option<String>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Noise model: relative-gaussian or pdf-literal.
        #[arg(long, default_value = "relative-gaussian")]
        mode: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write noise.csv here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the fidelity scaling law to an aggregate CSV.
    Fit {
        /// aggregate.csv from an experiment.
        #[arg(long)]
        input: PathBuf,
        /// Only fit rows with this ansatz label.
        #[arg(long)]
        ansatz: Option<String>,
        /// Write the fit JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize an aggregate CSV per (d, target, ansatz, size) cell.
    Stats {
        /// aggregate.csv from an experiment.
        #[arg(long)]
        input: PathBuf,
        /// Compare two ansatz labels with Welch's t-test, e.g. "snapd,ecd".
        #[arg(long)]
        welch: Option<String>,
        /// Write summary.csv here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    std::process::exit(dispatch());
}

fn dispatch() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let threads = resolve_threads(cli.threads);
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let recorded = threads.unwrap_or_else(rayon::current_num_threads);
    match run_command(cli.command, recorded) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

/// Environment beats flag beats default: QUDITFORGE_THREADS, then --threads,
/// then rayon's own choice.  An unparseable variable is ignored.
fn resolve_threads(flag: Option<usize>) -> Option<usize> {
    std::env::var("QUDITFORGE_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
        .or(flag)
}

fn run_command(cmd: Command, threads: usize) -> Result<i32> {
    match cmd {
        Command::Target { expr, dim, out } => {
            let t = parse_target(&expr, dim)?;
            let value = match &t {
                Target::Gate { matrix, .. } => matrix_json(matrix),
                Target::State { vector, .. } => state_json(vector),
            };
            match out {
                Some(p) => write_json(&p, &value)?,
                None => println!("{value:#}"),
            }
            Ok(0)
        }
        Command::Decompose {
            ansatz,
            d,
            target,
            blocks,
            starts,
            seed,
            complex_alpha,
            max_iter,
            stop_when,
            out,
        } => {
            let ansatz = match ansatz {
                CircuitAnsatz::Snapd => AnsatzSpec::Snapd { complex_alpha },
                CircuitAnsatz::Ecd => AnsatzSpec::Ecd { complex_alpha },
            };
            let target = parse_target(&target, Some(d))?;
            let best = best_of(starts, stop_when, |start| {
                run_cell(
                    &CellSpec {
                        d,
                        ansatz,
                        b_or_order: blocks,
                        start,
                        seed: split_seed(seed, start as u64),
                        max_iterations: max_iter,
                        cost_target: stop_when,
                    },
                    &target,
                )
            })?;
            report_best(&best, out.as_deref())?;
            Ok(0)
        }
        Command::Pulse {
            d,
            order,
            t_us,
            target,
            starts,
            seed,
            max_iter,
            stop_when,
            polish_iters,
            out,
            export_lab,
        } => {
            if export_lab.is_some() && out.is_none() {
                bail!("--export-lab needs --out for the waveform file");
            }
            let target = parse_target(&target, Some(d))?;
            let best = best_of(starts, stop_when, |start| {
                run_cell(
                    &CellSpec {
                        d,
                        ansatz: AnsatzSpec::Pulse {
                            t_us,
                            polish_iterations: polish_iters,
                        },
                        b_or_order: order,
                        start,
                        seed: split_seed(seed, start as u64),
                        max_iterations: max_iter,
                        cost_target: stop_when,
                    },
                    &target,
                )
            })?;
            report_best(&best, out.as_deref())?;
            if let (Some(rate), Some(dir)) = (export_lab, out.as_deref()) {
                let pulse = ChebyshevPulse::from_flat(order, t_us, &best.x)?;
                let rows = lab_frame_export(&pulse, &HardwareConfig::default(), rate)?;
                let path = dir.join("waveform.csv");
                let mut f = fs::File::create(&path)
                    .with_context(|| format!("creating {}", path.display()))?;
                write_waveform_csv(&rows, &mut f)?;
                println!("waveform: {}", path.display());
            }
            Ok(0)
        }
        Command::Experiment {
            name,
            config,
            seed,
            out,
        } => {
            let out = out.unwrap_or_else(|| PathBuf::from(format!("{}-out", name.name())));
            let outcome = run_experiment(name, config.as_deref(), seed, &out, threads)?;
            println!(
                "{}: {} rows, {} failures -> {}",
                name.name(),
                outcome.n_rows,
                outcome.n_failures,
                out.display()
            );
            Ok(if outcome.n_failures > 0 { 2 } else { 0 })
        }
        Command::Noise {
            params,
            d,
            target,
            betas,
            samples,
            mode,
            seed,
            out,
        } => noise_command(&params, d, &target, betas.as_deref(), samples, &mode, seed, out),
        Command::Fit { input, ansatz, out } => fit_command(&input, ansatz.as_deref(), out),
        Command::Stats { input, welch, out } => stats_command(&input, welch.as_deref(), out),
    }
}

/// Run `starts` seeded attempts, keep the lowest infidelity, and stop early
/// once `stop_when` is met.
fn best_of(
    starts: usize,
    stop_when: Option<f64>,
    run: impl Fn(usize) -> Result<RunRow>,
) -> Result<RunRow> {
    ensure!(starts >= 1, "--starts must be at least 1");
    let mut best: Option<RunRow> = None;
    for start in 0..starts {
        let row = run(start)?;
        let better = best
            .as_ref()
            .is_none_or(|b| row.infidelity < b.infidelity);
        if better {
            best = Some(row);
        }
        if let Some(t) = stop_when {
            if best.as_ref().is_some_and(|b| b.infidelity <= t) {
                break;
            }
        }
    }
    Ok(best.expect("at least one start ran"))
}

fn report_best(best: &RunRow, out: Option<&std::path::Path>) -> Result<()> {
    println!(
        "{} {} d={} size={}: infidelity {} leakage {} (start {})",
        best.ansatz,
        best.target,
        best.d,
        best.b_or_order,
        fmt_e(best.infidelity),
        fmt_e(best.leakage),
        best.start
    );
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_json(&dir.join("params.json"), &best.detail["params"])?;
        write_json(&dir.join("result.json"), &run_json(best.start, best))?;
        println!("artifacts: {}", dir.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn noise_command(
    params: &std::path::Path,
    d: usize,
    target_expr: &str,
    betas: Option<&str>,
    samples: usize,
    mode: &str,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<i32> {
    let text = fs::read_to_string(params)
        .with_context(|| format!("reading {}", params.display()))?;
    let wire: serde_json::Value = serde_json::from_str(&text).context("params file is not JSON")?;
    let ansatz = wire
        .get("ansatz")
        .and_then(|a| a.as_str())
        .context("params file lacks an 'ansatz' field")?
        .to_string();
    let target = parse_target(target_expr, Some(d))?;
    let spec = NoiseSpec {
        betas: match betas {
            Some(list) => parse_betas(list)?,
            None => NoiseSpec::default().betas,
        },
        samples,
        mode: parse_mode(mode)?,
    };

    let (x, score): (Vec<f64>, Box<dyn Fn(&[f64]) -> quditforge_core::Result<f64> + Sync>) =
        match ansatz.as_str() {
            "snapd" => {
                let p = SnapDParams::from_json(&text)?;
                ensure!(p.d() == d, "params are for d={}, --d says {d}", p.d());
                let space = FockSpace::with_guard(d, 0)?;
                let (blocks, complex) = (p.blocks(), p.complex_alpha());
                let x = p.flatten();
                let f: Box<dyn Fn(&[f64]) -> quditforge_core::Result<f64> + Sync> = match &target {
                    Target::Gate { matrix, .. } => {
                        let m = matrix.clone();
                        Box::new(move |y| {
                            snapd_gate_infidelity(
                                &SnapDParams::from_flat(d, blocks, complex, y)?,
                                &m,
                                space,
                            )
                        })
                    }
                    Target::State { vector, .. } => {
                        let v = vector.clone();
                        Box::new(move |y| {
                            snapd_state_infidelity(
                                &SnapDParams::from_flat(d, blocks, complex, y)?,
                                &v,
                                space,
                            )
                        })
                    }
                };
                (x, f)
            }
            "ecd" => {
                let p = ECDParams::from_json(&text)?;
                ensure!(p.d() == d, "params are for d={}, --d says {d}", p.d());
                let space = FockSpace::with_guard(d, 0)?;
                let (blocks, complex) = (p.blocks(), p.complex_alpha());
                let x = p.flatten();
                let f: Box<dyn Fn(&[f64]) -> quditforge_core::Result<f64> + Sync> = match &target {
                    Target::Gate { matrix, .. } => {
                        let m = matrix.clone();
                        Box::new(move |y| {
                            ecd_gate_infidelity(
                                &ECDParams::from_flat(d, blocks, complex, y)?,
                                &m,
                                space,
                            )
                        })
                    }
                    Target::State { vector, .. } => {
                        let v = vector.clone();
                        Box::new(move |y| {
                            ecd_state_infidelity(
                                &ECDParams::from_flat(d, blocks, complex, y)?,
                                &v,
                                space,
                            )
                        })
                    }
                };
                (x, f)
            }
            "pulse" => {
                let p = ChebyshevPulse::from_json(&text)?;
                let (order, t_us) = (p.order(), p.duration_us());
                let hw = HardwareConfig::default();
                let space = FockSpace::new(d)?;
                let x = p.flatten();
                let f: Box<dyn Fn(&[f64]) -> quditforge_core::Result<f64> + Sync> = match &target {
                    Target::Gate { matrix, .. } => {
                        let cfg = EvolutionConfig::gate(&hw, space);
                        let cost = PulseGateCost::new(matrix, order, t_us, &hw, &cfg)?;
                        Box::new(move |y| Ok(cost.report(y)?.infidelity))
                    }
                    Target::State { vector, .. } => {
                        let cfg = EvolutionConfig::state_prep(&hw, space);
                        let cost = PulseStateCost::new(vector, order, t_us, &hw, &cfg)?;
                        Box::new(move |y| Ok(cost.report(y)?.infidelity))
                    }
                };
                (x, f)
            }
            other => bail!("unknown ansatz '{other}' in params file"),
        };

    let rows = noise_sweep(&x, score.as_ref(), &spec, seed)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                ansatz.clone(),
                fmt_e(r.beta),
                r.sample.to_string(),
                fmt_e(r.infidelity),
            ]
        })
        .collect();
    match out {
        Some(path) => write_csv(&path, &NOISE_HEADER, &csv_rows)?,
        None => print!("{}", csv_string(&NOISE_HEADER, &csv_rows)?),
    }
    Ok(0)
}

fn parse_betas(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("'{s}' is not a noise strength"))
        })
        .collect()
}

fn parse_mode(mode: &str) -> Result<NoiseMode> {
    serde_json::from_value(json!(mode))
        .with_context(|| format!("unknown noise mode '{mode}' (relative-gaussian or pdf-literal)"))
}

fn fit_command(input: &std::path::Path, ansatz: Option<&str>, out: Option<PathBuf>) -> Result<i32> {
    let (header, rows) = read_csv(input)?;
    let di = column_index(&header, "d")?;
    let ai = column_index(&header, "ansatz")?;
    let bi = column_index(&header, "B_or_order")?;
    let ii = column_index(&header, "infidelity")?;
    let mut best: std::collections::BTreeMap<(usize, usize), f64> = std::collections::BTreeMap::new();
    for row in &rows {
        if let Some(a) = ansatz {
            if row[ai] != a {
                continue;
            }
        }
        let d: usize = row[di].parse().context("bad 'd' cell")?;
        let b: usize = row[bi].parse().context("bad 'B_or_order' cell")?;
        let inf: f64 = row[ii].parse().context("bad 'infidelity' cell")?;
        let slot = best.entry((b, d)).or_insert(f64::INFINITY);
        *slot = slot.min(inf);
    }
    ensure!(!best.is_empty(), "no rows matched the fit filter");
    let points: Vec<(usize, usize, f64)> = best
        .iter()
        .map(|(&(b, d), &inf)| (b, d, (1.0 - inf).clamp(0.0, 1.0)))
        .collect();
    let fit = fit_fidelity_curve(&points)?;
    let value = json!({
        "c": fit.c,
        "gamma": fit.gamma,
        "c_sigma": fit.c_sigma(),
        "gamma_sigma": fit.gamma_sigma(),
        "ssr": fit.ssr,
        "n_points": fit.n_points,
    });
    match out {
        Some(path) => write_json(&path, &value)?,
        None => println!("{value:#}"),
    }
    Ok(0)
}

fn stats_command(input: &std::path::Path, welch: Option<&str>, out: Option<PathBuf>) -> Result<i32> {
    let (header, rows) = read_csv(input)?;
    let di = column_index(&header, "d")?;
    let ti = column_index(&header, "target")?;
    let ai = column_index(&header, "ansatz")?;
    let bi = column_index(&header, "B_or_order")?;
    let ii = column_index(&header, "infidelity")?;

    let mut groups: std::collections::BTreeMap<(usize, String, String, usize), Vec<f64>> =
        std::collections::BTreeMap::new();
    for row in &rows {
        let d: usize = row[di].parse().context("bad 'd' cell")?;
        let b: usize = row[bi].parse().context("bad 'B_or_order' cell")?;
        let inf: f64 = row[ii].parse().context("bad 'infidelity' cell")?;
        groups
            .entry((d, row[ti].clone(), row[ai].clone(), b))
            .or_default()
            .push(inf);
    }
    ensure!(!groups.is_empty(), "input has no data rows");
    let mut summary = Vec::new();
    for ((d, target, ansatz, b), mut infs) in groups {
        infs.sort_by(f64::total_cmp);
        let med = quditforge_core::analysis::median(&infs)?;
        summary.push(vec![
            d.to_string(),
            target,
            ansatz,
            b.to_string(),
            infs.len().to_string(),
            fmt_e(infs[0]),
            fmt_e(med),
            fmt_e(infs[infs.len() - 1]),
        ]);
    }
    match out {
        Some(path) => write_csv(&path, &SUMMARY_HEADER, &summary)?,
        None => print!("{}", csv_string(&SUMMARY_HEADER, &summary)?),
    }

    if let Some(pair) = welch {
        let (a, b) = pair
            .split_once(',')
            .context("--welch takes two ansatz labels, e.g. 'snapd,ecd'")?;
        let collect = |label: &str| -> Result<Vec<f64>> {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|row| row[ai] == label)
                .map(|row| row[ii].parse().context("bad 'infidelity' cell"))
                .collect::<Result<_>>()?;
            ensure!(!vals.is_empty(), "no rows with ansatz '{label}'");
            Ok(vals)
        };
        let xs = collect(a)?;
        let ys = collect(b)?;
        let w = welch_t_test(&xs, &ys)?;
        println!(
            "{}",
            json!({ "a": a, "b": b, "t": w.t, "p": w.p, "dof": w.dof })
        );
    }
    Ok(0)
}
