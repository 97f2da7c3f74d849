use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn repro_bound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repro-bound"))
        .args(args)
        .env_remove("REPRO_BOUND_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn device(dir: &Path, qubits: &str, l: usize, shots: usize) -> PathBuf {
    let path = dir.join("device.json");
    fs::write(
        &path,
        format!(
            r#"{{"schema":"repro-bound/device/v1","name":"t","qubits":[{qubits}],
               "plan":{{"L":{l},"S":{shots},"seed":7}}}}"#
        ),
    )
    .unwrap();
    path
}

const PERFECT: &str = r#"{"index":0,"f0":1,"f1":1,"theta_rad":0}"#;

fn simulate_perfect(dir: &Path, l: usize, shots: usize) -> PathBuf {
    let config = device(dir, PERFECT, l, shots);
    let run = dir.join("run");
    let out = repro_bound(&["simulate", s(&config), s(&run)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    run
}

#[test]
fn simulate_writes_blocks_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let run = simulate_perfect(dir.path(), 2, 4);
    assert_eq!(fs::read_dir(run.join("blocks")).unwrap().count(), 6);
    let manifest = fs::read_to_string(run.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"complete\": true"));
    assert!(run.join("counts.csv").is_file());
}

#[test]
fn simulate_accepts_out_flag_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = device(dir.path(), r#"{"index":0,"f0":0.9,"f1":0.8,"theta_rad":0.1}"#, 2, 256);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&repro_bound(&["simulate", s(&config), "--out", s(&a)])), 0);
    assert_eq!(code(&repro_bound(&["--seed", "8", "simulate", s(&config), s(&b)])), 0);
    let counts = |p: &Path| fs::read_to_string(p.join("counts.csv")).unwrap();
    assert_ne!(counts(&a), counts(&b));
}

#[test]
fn malformed_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let dup = device(dir.path(), &format!("{PERFECT},{PERFECT}"), 2, 4);
    let out = repro_bound(&["simulate", s(&dup), s(&dir.path().join("r"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("duplicate"), "{}", stderr(&out));

    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{\n  \"schema\": \"repro-bound/device/v1\",\n  \"name\": \n}").unwrap();
    let out = repro_bound(&["simulate", s(&broken), s(&dir.path().join("r"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));
}

#[test]
fn unreadable_config_and_unwritable_run_dir_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = repro_bound(&["simulate", s(&dir.path().join("absent.json")), s(&dir.path().join("r"))]);
    assert_eq!(code(&out), 3);

    let config = device(dir.path(), PERFECT, 2, 4);
    let file = dir.path().join("occupied");
    fs::write(&file, "").unwrap();
    let out = repro_bound(&["simulate", s(&config), s(&file)]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn perfect_device_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let run = simulate_perfect(dir.path(), 4, 4096);
    assert_eq!(code(&repro_bound(&["characterize", s(&run)])), 0);
    let chars = fs::read_to_string(run.join("characterization.csv")).unwrap();
    let row: Vec<&str> = chars.lines().nth(1).unwrap().split(',').collect();
    let num = |i: usize| row[i].parse::<f64>().unwrap();
    assert_eq!(num(3), 0.0, "eps");
    // γ̂ still carries shot noise from the fair-coin circuit
    // 1/√(L·S) = 0.0078
    assert!(num(7).abs() < 0.04, "theta {}", num(7));

    let out = repro_bound(&["verdict", s(&run.join("characterization.csv")), "--delta", "0.1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let verdicts = fs::read_to_string(run.join("verdicts.csv")).unwrap();
    assert!(verdicts.lines().nth(1).unwrap().ends_with(",true"));

    assert_eq!(code(&repro_bound(&["report", s(&run)])), 0);
    let table = fs::read_to_string(run.join("report/table1.csv")).unwrap();
    let gamma_d: f64 = table.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(gamma_d < 0.04, "{gamma_d}");
    let scatter = fs::read_to_string(run.join("report/fig_scatter.csv")).unwrap();
    assert_eq!(scatter.lines().count(), 1 + 4);
}

#[test]
fn truncated_block_exits_4_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let run = simulate_perfect(dir.path(), 2, 64);
    let block = run.join("blocks/c_0_1.bin");
    let bytes = fs::read(&block).unwrap();
    fs::write(&block, &bytes[..bytes.len() - 3]).unwrap();
    let out = repro_bound(&["characterize", s(&run)]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("c_0_1"), "{}", stderr(&out));
}

#[test]
fn tolerance_above_ceiling_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let run = simulate_perfect(dir.path(), 2, 16);
    assert_eq!(code(&repro_bound(&["characterize", s(&run)])), 0);
    let out = repro_bound(&["verdict", s(&run.join("characterization.csv")), "--delta", "0.9", "--n", "1"]);
    assert_eq!(code(&out), 5);
    assert!(stderr(&out).contains("ceiling 0.541"), "{}", stderr(&out));
}

#[test]
fn verdict_needs_a_tolerance_and_an_input() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&repro_bound(&["verdict", "x.csv"])), 2);
    let missing = dir.path().join("characterization.csv");
    assert_eq!(code(&repro_bound(&["verdict", s(&missing), "--delta", "0.1"])), 2);
}

#[test]
fn report_without_upstream_outputs_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let run = simulate_perfect(dir.path(), 2, 4);
    let out = repro_bound(&["report", s(&run)]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("characterization.csv"));
}

#[test]
fn import_calibration_examples() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("snap.json");
    fs::write(
        &snap,
        r#"{"schema":"repro-bound/snapshot/v1","source":"t","captured_at":"2021-04-08T09:00:00Z",
            "qubits":[{"index":0,"f0":0.99,"f1":0.95,"theta_rad":0.0213}]}"#,
    )
    .unwrap();
    assert_eq!(code(&repro_bound(&["import-calibration", s(&snap)])), 0);
    let normalized = dir.path().join("calibration.normalized.json");
    assert!(fs::read_to_string(&normalized).unwrap().contains("repro-bound/calibration/v1"));

    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"schema":"repro-bound/snapshot/v1","source":"t","captured_at":"2021-04-08T09:00:00Z",
            "qubits":[{"index":0,"f0":0.99,"f1":1.05,"theta_rad":0.0}]}"#,
    )
    .unwrap();
    let out = repro_bound(&["import-calibration", s(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("f1"));
}

#[test]
fn large_snapshot_verdicts_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(115);
    let mut errors = Vec::new();
    let qubits: Vec<String> = (0..27)
        .map(|i| {
            let e0: f64 = rng.gen_range(0.03..0.12);
            let e1: f64 = rng.gen_range(0.11..0.2);
            errors.push((e0 + e1) / 2.0);
            let gate = if i % 3 == 0 {
                format!(r#""gate_error":{{"value":{},"unit":"probability"}}"#, rng.gen_range(1e-4..1e-3))
            } else {
                format!(r#""gate_error":{{"value":{},"unit":"deg"}}"#, rng.gen_range(-2.0..2.0))
            };
            format!(r#"{{"index":{i},"f0":{},"f1":{},{gate}}}"#, 1.0 - e0, 1.0 - e1)
        })
        .collect();
    let mean_error = errors.iter().sum::<f64>() / errors.len() as f64;
    assert!((0.1..0.13).contains(&mean_error), "{mean_error}");
    let snap = dir.path().join("snap.json");
    fs::write(
        &snap,
        format!(
            r#"{{"schema":"repro-bound/snapshot/v1","source":"t","captured_at":"2021-04-08T09:00:00Z","qubits":[{}]}}"#,
            qubits.join(",")
        ),
    )
    .unwrap();
    let normalized = dir.path().join("cal.json");
    assert_eq!(code(&repro_bound(&["import-calibration", s(&snap), "--out", s(&normalized)])), 0);
    let out = repro_bound(&["verdict", s(&normalized), "--delta", "0.1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let verdicts = fs::read_to_string(dir.path().join("verdicts.csv")).unwrap();
    assert_eq!(verdicts.lines().count(), 28);
}

#[test]
fn plan_samples_prints_shots_and_quantile() {
    let out = repro_bound(&["plan-samples", "--p", "0.5", "--precision", "0.02", "--confidence", "0.95"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("T = 9604"), "{text}");
    assert!(text.contains("z = 1.9599"), "{text}");
    let out = repro_bound(&["plan-samples", "--p", "0.5", "--precision", "0.01", "--confidence", "0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn lemma_check_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lemma_report.json");
    assert_eq!(code(&repro_bound(&["lemma-check", "--out", s(&path)])), 0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["pairs_checked"], 10_000);
    assert_eq!(report["counterexamples"].as_array().unwrap().len(), 0);
}

#[test]
fn bad_thread_count_exits_2() {
    let out = Command::new(env!("CARGO_BIN_EXE_repro-bound"))
        .args(["plan-samples", "--p", "0.5", "--precision", "0.1"])
        .env("REPRO_BOUND_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_subcommand_exits_2() {
    assert_eq!(code(&repro_bound(&["frobnicate"])), 2);
    assert_eq!(code(&repro_bound(&["--help"])), 0);
}
