//! End-to-end checks of the binary: exit codes, file artifacts, golden CSV
//! headers, and bit-exact reruns from a manifest.

use std::fs;
use std::path::Path;

use assert_cmd::Command;
use predicates::str::contains;

fn bin() -> Command {
    let mut c = Command::cargo_bin("quditforge").unwrap();
    c.env_remove("QUDITFORGE_THREADS");
    c
}

const AGGREGATE_HEADER: &str = "d,target,ansatz,B_or_order,start,seed,infidelity,leakage,wall_time";

/// Every CSV line minus its trailing wall-time column; wall time is the one
/// column allowed to differ between identical reruns.
fn strip_wall_time(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| l[..l.rfind(',').expect("comma-separated line")].to_string())
        .collect()
}

#[test]
fn help_lists_the_subcommands() {
    bin()
        .arg("--help")
        .assert()
        .success()
        .stdout(contains("decompose"))
        .stdout(contains("experiment"))
        .stdout(contains("noise"))
        .stdout(contains("stats"));
}

#[test]
fn usage_errors_exit_with_one() {
    bin().arg("frobnicate").assert().code(1);
    bin().args(["decompose", "--ansatz", "snapd"]).assert().code(1);
    bin()
        .args(["target", "frob(1)", "--dim", "4"])
        .assert()
        .code(1);
}

#[test]
fn target_prints_matrix_json() {
    let out = bin()
        .args(["target", "x(3,4)", "--dim", "6"])
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["dim"], 6);
    assert_eq!(v["re"][3][4], 1.0);
    assert_eq!(v["re"][3][3], 0.0);
    assert_eq!(v["re"][0][0], 1.0);
    assert_eq!(v["im"][3][4], 0.0);
}

#[test]
fn self_dimensioned_targets_need_no_dim_flag() {
    let out = bin()
        .args(["target", "perm(2,0,1)"])
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["dim"], 3);
    assert_eq!(v["re"][0][2], 1.0);
}

#[test]
fn decompose_writes_params_and_result() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    bin()
        .args([
            "decompose",
            "--ansatz",
            "snapd",
            "--d",
            "3",
            "--target",
            "fock(1)",
            "--blocks",
            "1",
            "--starts",
            "2",
            "--max-iter",
            "200",
            "--seed",
            "5",
            "--out",
        ])
        .arg(&out)
        .assert()
        .success()
        .stdout(contains("infidelity"));
    let params = fs::read_to_string(out.join("params.json")).unwrap();
    assert!(params.contains("\"ansatz\": \"snapd\""), "{params}");
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert!(result["infidelity"].as_f64().unwrap() < 1.0);
    assert_eq!(result["d"], 3);
}

#[test]
fn pulse_writes_waveform_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    bin()
        .args([
            "pulse",
            "--d",
            "3",
            "--order",
            "2",
            "--t-us",
            "0.1",
            "--target",
            "fock(1)",
            "--starts",
            "1",
            "--max-iter",
            "30",
            "--polish-iters",
            "0",
            "--seed",
            "3",
            "--export-lab",
            "10",
            "--out",
        ])
        .arg(&out)
        .assert()
        .success();
    let params = fs::read_to_string(out.join("params.json")).unwrap();
    assert!(params.contains("\"ansatz\": \"pulse\""), "{params}");
    let wave = fs::read_to_string(out.join("waveform.csv")).unwrap();
    let mut lines = wave.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t_ns,eps_re,eps_im,omega_re,omega_im"
    );
    assert_eq!(lines.count(), 1000);
}

fn write_gate_scan_config(path: &Path) {
    fs::write(
        path,
        "d = 3\n\
         target = \"x(1,2)\"\n\
         snapd-blocks = [1, 2]\n\
         starts = 2\n\
         max-iterations = 60\n",
    )
    .unwrap();
}

#[test]
fn gate_scan_reruns_bit_exactly_from_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.toml");
    write_gate_scan_config(&cfg);
    let out1 = dir.path().join("one");
    let out2 = dir.path().join("two");
    let out3 = dir.path().join("three");

    bin()
        .args(["experiment", "gate-scan", "--seed", "11", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out1)
        .assert()
        .success();

    let agg1 = fs::read_to_string(out1.join("aggregate.csv")).unwrap();
    assert_eq!(agg1.lines().next().unwrap(), AGGREGATE_HEADER);
    assert_eq!(agg1.lines().count(), 5, "header plus four runs: {agg1}");
    assert!(agg1.contains("\"x(1,2)\""), "label must be quoted: {agg1}");
    assert!(out1.join("runs").join("run_00000.json").exists());
    assert!(out1.join("runs").join("run_00003.json").exists());

    // Rerun from the manifest alone; everything but wall time is identical.
    bin()
        .args(["experiment", "gate-scan", "--config"])
        .arg(out1.join("manifest.json"))
        .arg("--out")
        .arg(&out2)
        .assert()
        .success();
    let agg2 = fs::read_to_string(out2.join("aggregate.csv")).unwrap();
    assert_eq!(strip_wall_time(&agg1), strip_wall_time(&agg2));

    // The thread count changes scheduling only, never numbers, and the
    // environment variable beats the flag.
    bin()
        .env("QUDITFORGE_THREADS", "2")
        .args(["experiment", "gate-scan", "--threads", "1", "--config"])
        .arg(out1.join("manifest.json"))
        .arg("--out")
        .arg(&out3)
        .assert()
        .success();
    let agg3 = fs::read_to_string(out3.join("aggregate.csv")).unwrap();
    assert_eq!(strip_wall_time(&agg1), strip_wall_time(&agg3));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out3.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], 2);
    assert_eq!(manifest["seed"], 11);
}

#[test]
fn manifests_refuse_to_drive_the_wrong_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.toml");
    write_gate_scan_config(&cfg);
    let out = dir.path().join("out");
    bin()
        .args(["experiment", "gate-scan", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .assert()
        .success();
    bin()
        .args(["experiment", "perm-study", "--config"])
        .arg(out.join("manifest.json"))
        .arg("--out")
        .arg(dir.path().join("wrong"))
        .assert()
        .code(1)
        .stderr(contains("gate-scan"));
}

#[test]
fn per_run_failures_are_recorded_and_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    // 123.4 ns does not align with the 10 ns gate step; both pulse runs fail
    // while the circuit runs still land in the aggregate.
    fs::write(
        &cfg,
        "d = 3\n\
         target = \"x(1,2)\"\n\
         snapd-blocks = [1]\n\
         pulse-orders = [2]\n\
         pulse-t-us = 0.1234\n\
         starts = 1\n\
         max-iterations = 40\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    bin()
        .args(["experiment", "gate-scan", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .assert()
        .code(2);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let failures = manifest["failures"].as_array().unwrap();
    assert_eq!(failures.len(), 1, "{manifest}");
    assert!(failures[0]["label"].as_str().unwrap().contains("pulse"));
    let agg = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 2, "snapd row survives: {agg}");
}

#[test]
fn budget_table_reproduces_the_reference_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    bin()
        .args(["experiment", "budget-table", "--out"])
        .arg(&out)
        .assert()
        .success();
    let budget = fs::read_to_string(out.join("budget.csv")).unwrap();
    assert_eq!(
        budget.lines().next().unwrap(),
        "ansatz,block_time_us,blocks,t1_budget_us,max_gates"
    );
    assert!(budget.contains(",2500"), "{budget}");
    assert!(budget.contains(",781"), "{budget}");
    let break_even = fs::read_to_string(out.join("break_even.csv")).unwrap();
    assert_eq!(
        break_even.lines().next().unwrap(),
        "t_snap_us,t_ecd_us,break_even_dimension"
    );
    assert!(break_even.contains("2.23606797750e1"), "{break_even}");
}

#[test]
fn noise_rescores_saved_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    bin()
        .args([
            "decompose",
            "--ansatz",
            "snapd",
            "--d",
            "3",
            "--target",
            "fock(1)",
            "--blocks",
            "2",
            "--starts",
            "1",
            "--max-iter",
            "150",
            "--seed",
            "7",
            "--out",
        ])
        .arg(&run)
        .assert()
        .success();
    let out = bin()
        .args([
            "noise",
            "--d",
            "3",
            "--target",
            "fock(1)",
            "--betas",
            "0,1e-3",
            "--samples",
            "3",
            "--seed",
            "9",
            "--params",
        ])
        .arg(run.join("params.json"))
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "ansatz,beta,sample,infidelity");
    assert_eq!(lines.len(), 7, "two strengths times three samples: {text}");
    // Zero strength scores the circuit as saved, identically per sample.
    assert_eq!(lines[1], lines[2].replace(",1,", ",0,"));
    assert_eq!(lines[1], lines[3].replace(",2,", ",0,"));
    assert!(lines[4] != lines[1], "jitter must move the score");
}

/// Synthetic aggregate following log(1 - F) = -c (B/d)^gamma exactly.
fn write_power_law_fixture(path: &Path) {
    let (c, gamma, d) = (2.0, 0.8, 4.0);
    let mut text = String::from(AGGREGATE_HEADER);
    text.push('\n');
    for b in 1..=6 {
        let inf = (-c * (b as f64 / d).powf(gamma)).exp();
        for (start, factor) in [(0, 1.0), (1, 1.7)] {
            text.push_str(&format!(
                "4,swap,snapd,{b},{start},11,{:e},0e0,1e-2\n",
                inf * factor
            ));
            text.push_str(&format!(
                "4,swap,ecd,{b},{start},12,{:e},0e0,1e-2\n",
                (inf * 50.0 * factor).min(0.9)
            ));
        }
    }
    fs::write(path, text).unwrap();
}

#[test]
fn fit_recovers_a_planted_power_law() {
    let dir = tempfile::tempdir().unwrap();
    let agg = dir.path().join("aggregate.csv");
    write_power_law_fixture(&agg);
    let out = bin()
        .args(["fit", "--ansatz", "snapd", "--input"])
        .arg(&agg)
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    let c = v["c"].as_f64().unwrap();
    let gamma = v["gamma"].as_f64().unwrap();
    assert!((c - 2.0).abs() < 1e-6, "c = {c}");
    assert!((gamma - 0.8).abs() < 1e-6, "gamma = {gamma}");
    assert_eq!(v["n_points"], 6);
}

#[test]
fn stats_summarizes_cells_and_compares_groups() {
    let dir = tempfile::tempdir().unwrap();
    let agg = dir.path().join("aggregate.csv");
    write_power_law_fixture(&agg);
    let out = bin()
        .args(["stats", "--welch", "snapd,ecd", "--input"])
        .arg(&agg)
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with(
        "d,target,ansatz,B_or_order,count,min_infidelity,median_infidelity,max_infidelity"
    ));
    // 6 block counts times 2 ansaetze, 2 samples each.
    assert_eq!(text.lines().filter(|l| l.contains(",2,")).count(), 12);
    let welch_line = text.lines().last().unwrap();
    let w: serde_json::Value = serde_json::from_str(welch_line).unwrap();
    assert!(w["p"].as_f64().unwrap() <= 1.0);
    assert!(w["t"].as_f64().unwrap().abs() > 0.0);
}
