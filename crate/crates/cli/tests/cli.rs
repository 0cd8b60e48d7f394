//! Command-line behaviour: exit codes, file shapes, determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lfi"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lfi-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_small_config(dir: &Path, model: &str, extra: &str) -> PathBuf {
    let truth = match model {
        "ma2" => "[0.6, 0.6]",
        "toy" => "[0.5]",
        _ => panic!("unexpected model"),
    };
    let cfg = format!(
        r#"{{
  "model": "{model}",
  "truth": {truth},
  "data_len": 60,
  "seed": 11,
  "out_dir": "{}",
  "replicates": 2,
  "j_steps": 4,
  "pilot_burn_in": 800,
  "calibration": {{"rounds": 2, "n_outer": 80, "n_inner": 40}},
  "smc": {{"particles": 80, "move_cap": 10}},
  "exact": {{"iters": 600, "burn_in": 200, "j_steps": 4}},
  "samplers": [{extra}]
}}"#,
        dir.display()
    );
    let path = dir.join("config.json");
    fs::write(&path, cfg).unwrap();
    path
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn unknown_sampler_exits_2_without_outputs() {
    let dir = tmp_dir("unknown-sampler");
    let cfg = write_small_config(&dir, "toy", r#"{"name":"aabc-u","iters":300,"burn_in":100,"j_steps":4,"n0":50}"#);
    let out = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--sampler", "nonsense"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.join("nonsense_chain.csv").exists());
    assert!(!dir.join("nonsense_manifest.json").exists());
}

#[test]
fn invalid_config_is_rejected_before_compute() {
    let dir = tmp_dir("invalid-config");
    let path = dir.join("bad.json");
    fs::write(&path, r#"{"model":"ma2","truth":[1.9,0.5]}"#).unwrap();
    let t = Instant::now();
    let out = bin()
        .args(["run", "--config", path.to_str().unwrap(), "--sampler", "aabc-u"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(t.elapsed().as_secs() < 5, "validation should not simulate");
    // unknown fields are schema violations too
    fs::write(&path, r#"{"model":"ma2","truth":[0.6,0.6],"bogus":1}"#).unwrap();
    let out = bin()
        .args(["run", "--config", path.to_str().unwrap(), "--sampler", "aabc-u"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn calibrate_writes_expected_shapes_and_is_byte_deterministic() {
    let dir = tmp_dir("calibrate");
    let cfg = write_small_config(&dir, "ma2", "");
    ok(&bin().args(["calibrate", "--config", cfg.to_str().unwrap()]).output().unwrap());
    let metric: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("metric.json")).unwrap()).unwrap();
    assert_eq!(metric["p"], 3);
    assert_eq!(metric["a"].as_array().unwrap().len(), 9);
    assert_eq!(metric["s0"].as_array().unwrap().len(), 3);
    let schedule: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("schedule.json")).unwrap()).unwrap();
    let eps: Vec<f64> = schedule["eps"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(eps.len(), 5); // j_steps 4 => 5 levels
    assert!(eps.windows(2).all(|w| w[0] > w[1]), "schedule must decrease");

    let first = (
        fs::read(dir.join("metric.json")).unwrap(),
        fs::read(dir.join("schedule.json")).unwrap(),
        fs::read(dir.join("dataset.csv")).unwrap(),
    );
    ok(&bin().args(["calibrate", "--config", cfg.to_str().unwrap()]).output().unwrap());
    assert_eq!(first.0, fs::read(dir.join("metric.json")).unwrap());
    assert_eq!(first.1, fs::read(dir.join("schedule.json")).unwrap());
    assert_eq!(first.2, fs::read(dir.join("dataset.csv")).unwrap());
}

#[test]
fn default_schedule_uses_fifteen_log_steps() {
    // paper-scale defaults: 3x3 metric and a 16-entry ladder for MA2
    let dir = tmp_dir("calibrate-defaults");
    // default config, only seed/out overridden; uses model defaults (n = 200)
    ok(&bin()
        .args(["calibrate", "--model", "ma2", "--seed", "5", "--out", dir.to_str().unwrap()])
        .output()
        .unwrap());
    let schedule: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("schedule.json")).unwrap()).unwrap();
    assert_eq!(schedule["eps"].as_array().unwrap().len(), 16);
}

#[test]
fn run_is_deterministic_and_fast_at_smoke_scale() {
    let dir = tmp_dir("run-smoke");
    let cfg = write_small_config(
        &dir,
        "ma2",
        r#"{"name":"aabc-u","iters":200,"burn_in":50,"j_steps":4,"n0":40}"#,
    );
    ok(&bin().args(["calibrate", "--config", cfg.to_str().unwrap()]).output().unwrap());
    let t = Instant::now();
    let out1 = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--sampler", "aabc-u"])
        .output()
        .unwrap();
    ok(&out1);
    assert!(t.elapsed().as_secs() < 10, "smoke run must finish under 10 s");
    let chain1 = fs::read(dir.join("aabc-u_chain.csv")).unwrap();
    let manifest1 = fs::read(dir.join("aabc-u_manifest.json")).unwrap();
    let out2 = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--sampler", "aabc-u"])
        .output()
        .unwrap();
    ok(&out2);
    assert_eq!(chain1, fs::read(dir.join("aabc-u_chain.csv")).unwrap());
    assert_eq!(manifest1, fs::read(dir.join("aabc-u_manifest.json")).unwrap());
    // stdout summary is deterministic too (simulation-count CPU proxy)
    assert_eq!(out1.stdout, out2.stdout);

    // chain rows: t, theta_0, theta_1, accepted, eps, value
    let text = String::from_utf8(chain1).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,theta_0,theta_1,accepted,eps,value");
    assert_eq!(lines.count(), 200);
}

#[test]
fn run_kde_export_and_history_roundtrip() {
    let dir = tmp_dir("run-extras");
    let cfg = write_small_config(
        &dir,
        "ma2",
        r#"{"name":"aabc-u","iters":300,"burn_in":100,"j_steps":4,"n0":40}"#,
    );
    ok(&bin().args(["calibrate", "--config", cfg.to_str().unwrap()]).output().unwrap());
    ok(&bin()
        .args([
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--sampler",
            "aabc-u",
            "--save-history",
            "--kde",
        ])
        .output()
        .unwrap());
    let hist = dir.join("aabc-u_history.csv");
    assert!(hist.exists());
    let lines = fs::read_to_string(&hist).unwrap().lines().count();
    assert_eq!(lines, 1 + 40 + 300); // header + n0 + one entry per iteration
    assert!(dir.join("aabc-u_kde_theta_0.csv").exists());
    assert!(dir.join("aabc-u_kde_theta_1.csv").exists());
    // warm-start from the snapshot
    ok(&bin()
        .args([
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--sampler",
            "aabc-u",
            "--history",
            hist.to_str().unwrap(),
        ])
        .output()
        .unwrap());
}

#[test]
fn replicate_emits_exact_table_and_is_deterministic() {
    let dir = tmp_dir("replicate");
    let cfg = write_small_config(
        &dir,
        "ma2",
        r#"{"name":"aabc-u","iters":400,"burn_in":150,"j_steps":4,"n0":40},
           {"name":"bsl-rw","iters":300,"burn_in":100,"j_steps":4,"m":10}"#,
    );
    ok(&bin().args(["replicate", "--config", cfg.to_str().unwrap()]).output().unwrap());
    let path = dir.join("study_ma2.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sampler,DIM,DIC,TV,sqrt_bias2,sqrt_var,sqrt_mse,ESS,ESS_per_CPU"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("aabc-u,"));
    assert!(rows[1].starts_with("bsl-rw,"));

    let bytes = fs::read(&path).unwrap();
    ok(&bin().args(["replicate", "--config", cfg.to_str().unwrap()]).output().unwrap());
    assert_eq!(bytes, fs::read(&path).unwrap(), "same master seed, same table");

    // threads must not change the table either
    ok(&bin()
        .args(["replicate", "--config", cfg.to_str().unwrap(), "--threads", "2"])
        .output()
        .unwrap());
    assert_eq!(bytes, fs::read(&path).unwrap(), "worker count must not matter");
}

#[test]
fn ingest_returns_cli_round_trip() {
    let dir = tmp_dir("ingest");
    let prices = dir.join("prices.csv");
    let mut text = String::from("date,close\n");
    let mut p = 250.0;
    for i in 0..40 {
        text.push_str(&format!("2019-01-{:02},{p}\n", i + 1));
        p *= 1.0 + 0.002 * ((i as f64).sin());
    }
    fs::write(&prices, text).unwrap();
    let out_csv = dir.join("returns.csv");
    ok(&bin()
        .args([
            "ingest-returns",
            "--prices",
            prices.to_str().unwrap(),
            "--out",
            out_csv.to_str().unwrap(),
        ])
        .output()
        .unwrap());
    let text = fs::read_to_string(&out_csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "date,y");
    assert_eq!(text.lines().count(), 40); // header + 39 returns
    // the returns file is loadable as a dataset
    let y: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let mean: f64 = y.iter().sum::<f64>() / y.len() as f64;
    assert!(mean.abs() < 1e-9);
}

#[test]
fn abc_sampler_without_calibration_artifacts_exits_2() {
    let dir = tmp_dir("no-calibration");
    let cfg = write_small_config(
        &dir,
        "ma2",
        r#"{"name":"abc-rw","iters":300,"burn_in":100,"j_steps":4}"#,
    );
    let out = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--sampler", "abc-rw"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("calibrate"));
}

#[test]
fn runtime_failure_exits_1() {
    // an impossible hand-written tolerance ladder degenerates the SMC run
    let dir = tmp_dir("runtime-failure");
    let cfg = write_small_config(&dir, "ma2", "");
    ok(&bin().args(["calibrate", "--config", cfg.to_str().unwrap()]).output().unwrap());
    fs::write(dir.join("schedule.json"), r#"{"eps":[1e-developer]}"#).unwrap();
    // malformed schedule: usage error
    let out = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--sampler", "smc"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    fs::write(dir.join("schedule.json"), r#"{"eps":[5.0, 1e-18]}"#).unwrap();
    let out = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--sampler", "smc"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
}

#[test]
fn defaults_prints_valid_config_json() {
    let out = bin().args(["defaults"]).output().unwrap();
    ok(&out);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["model"], "ma2");
    assert_eq!(v["j_steps"], 15);
    assert_eq!(v["smc"]["particles"], 500);
    assert_eq!(v["pmcmc_particles"], 100);
    assert_eq!(v["samplers"].as_array().unwrap().len(), 9);
}

#[test]
fn exact_and_pmcmc_subcommands_run() {
    let dir = tmp_dir("exact");
    let cfg = write_small_config(&dir, "ma2", "");
    ok(&bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--sampler", "exact"])
        .output()
        .unwrap());
    assert!(dir.join("exact_chain.csv").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("exact_manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["sampler"], "exact");
    assert_eq!(manifest["model"], "ma2");
}
