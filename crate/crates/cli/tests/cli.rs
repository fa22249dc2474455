use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SHORT: &str = r#"
preset = "paper"

[scenario]
duration = 0.6
snr_db = 47.1

[analysis]
harmonics = [1, 3]
grid_points = 40

[sweep]
snr_db = [47.1]
grid_points = 5
seeds = 2
"#;

fn cglp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cglp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn setup(config: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("exp.toml"), config).unwrap();
    dir
}

fn header(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .take(4)
        .map(String::from)
        .collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn hosidf_writes_one_file_per_controller() {
    let dir = setup(SHORT);
    let out = cglp(dir.path(), &["hosidf", "--config", "exp.toml", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in [
        "linear",
        "cglp-wx-wr",
        "cglp-wx-wf",
        "cglp-wx-360",
        "filtered-cglp-wx-360",
    ] {
        let h = header(&dir.path().join(format!("o/hosidf_{name}.csv")));
        assert_eq!(h[0], format!("# tool: cglp {}", env!("CARGO_PKG_VERSION")));
        assert!(h[1].starts_with("# config_hash: ") && h[1].len() == "# config_hash: ".len() + 64);
        assert_eq!(h[2], "# seed: 1");
        assert_eq!(h[3], "f_hz,l1_mag,l1_phase_deg,l3_mag,l3_phase_deg");
    }
    let rows = fs::read_to_string(dir.path().join("o/hosidf_linear.csv")).unwrap();
    assert_eq!(rows.lines().count(), 4 + 40);
}

#[test]
fn sensitivity_columns_and_linear_loop_has_no_harmonics() {
    let dir = setup(SHORT);
    let out = cglp(dir.path(), &["sensitivity", "--config", "exp.toml", "--out", "o"]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("o/sensitivity_linear.csv")).unwrap();
    let mut lines = text.lines().skip(3);
    assert_eq!(
        lines.next().unwrap(),
        "f_hz,s1_mag,s1_phase_deg,s3_mag,s3_phase_deg,sbl_3w_mag,l3_mag"
    );
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[3] < 1e-15 && v[6] < 1e-15);
    }
}

#[test]
fn simulate_then_replay_snapshot_is_bit_identical() {
    let dir = setup(SHORT);
    let first = cglp(
        dir.path(),
        &["simulate", "--config", "exp.toml", "--out", "a", "--seed", "3"],
    );
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let replay = cglp(dir.path(), &["simulate", "--config", "a/config.toml", "--out", "b"]);
    assert!(replay.status.success());
    let mut count = 0;
    for entry in fs::read_dir(dir.path().join("a")).unwrap() {
        let p = entry.unwrap().path();
        let other = dir.path().join("b").join(p.file_name().unwrap());
        assert_eq!(fs::read(&p).unwrap(), fs::read(&other).unwrap(), "{}", p.display());
        count += 1;
    }
    assert!(count >= 5 * 4 + 2);

    let summary = json(&dir.path().join("a/simulate_summary.json"));
    assert_eq!(summary["metadata"]["seed"], 3);
    let runs = summary["data"]["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 5);
    assert_eq!(runs[0]["resets"], 0);
    assert!(runs[1]["resets"].as_u64().unwrap() > 0);
    assert_eq!(summary["data"]["ordering"][0], "linear");
}

#[test]
fn different_seed_changes_output() {
    let dir = setup(SHORT);
    for (seed, out) in [("1", "a"), ("2", "b")] {
        let o = cglp(
            dir.path(),
            &["simulate", "--config", "exp.toml", "--out", out, "--seed", seed],
        );
        assert!(o.status.success());
    }
    let a = fs::read(dir.path().join("a/trace_cglp-wx-wr.csv")).unwrap();
    let b = fs::read(dir.path().join("b/trace_cglp-wx-wr.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn sweep_writes_grid_with_exact_endpoints() {
    let dir = setup(SHORT);
    let out = cglp(dir.path(), &["sweep", "--config", "exp.toml", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("o/sweep_linear.json").exists());
    let text = fs::read_to_string(dir.path().join("o/sweep_cglp-wx-wr_snr47.1.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(4)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][0], 150.0);
    assert_eq!(rows[4][0], 3000.0);
    assert!(rows.iter().all(|r| r[1] > 0.0 && r[3] == 0.0));
    let summary = json(&dir.path().join("o/sweep_cglp-wx-wr.json"));
    let snr = summary["data"]["results"][0]["snr_achieved_db"].as_f64().unwrap();
    assert!((snr - 47.1).abs() < 0.5);
}

#[test]
fn sweep_rejects_linear_only_config() {
    let dir = TempDir::new().unwrap();
    let out = cglp(dir.path(), &["sweep", "--preset", "paper-CL", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_passes_on_paper_loops() {
    let dir = setup(SHORT);
    let out = cglp(dir.path(), &["validate", "--config", "exp.toml", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report = json(&dir.path().join("o/validate.json"));
    let all: Vec<&Value> = report["data"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|r| r["checks"].as_array().unwrap())
        .collect();
    assert_eq!(all.len(), 5 * 7);
    assert!(all.iter().all(|c| c["passed"] == true));
}

#[test]
fn validate_flag_runs_after_command() {
    let dir = setup(SHORT);
    let out = cglp(
        dir.path(),
        &["hosidf", "--config", "exp.toml", "--out", "o", "--validate"],
    );
    assert!(out.status.success());
    assert!(dir.path().join("o/validate.json").exists());
    assert!(dir.path().join("o/hosidf_linear.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = setup("[scenario]\nduration = -1.0\n");
    let bad_arg = cglp(dir.path(), &["frobnicate"]);
    assert_eq!(bad_arg.status.code(), Some(1));
    let help = cglp(dir.path(), &["--help"]);
    assert_eq!(help.status.code(), Some(0));
    let missing = cglp(dir.path(), &["hosidf", "--config", "nope.toml"]);
    assert_eq!(missing.status.code(), Some(1));
    let invalid = cglp(dir.path(), &["hosidf", "--config", "exp.toml"]);
    assert_eq!(invalid.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("validation error"));
    let preset = cglp(dir.path(), &["hosidf", "--preset", "nonsense"]);
    assert_eq!(preset.status.code(), Some(1));
}

#[test]
fn unstable_loop_is_numerical_failure() {
    let cfg = r#"
[plant]
numerator = [-9836.0]
denominator = [7376.0, 8.737, 1.0]

[[controller]]
preset = "paper-CL"

[scenario]
duration = 0.5
disturbance = { kind = "sine", amplitude = 0.25, frequency_hz = 40.0 }
"#;
    let dir = setup(cfg);
    let out = cglp(dir.path(), &["simulate", "--config", "exp.toml", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn grid_and_harmonics_overrides() {
    let dir = setup(SHORT);
    let out = cglp(
        dir.path(),
        &[
            "hosidf",
            "--config",
            "exp.toml",
            "--out",
            "o",
            "--grid-points",
            "7",
            "--harmonics",
            "1,5",
        ],
    );
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("o/hosidf_cglp-wx-wr.csv")).unwrap();
    assert_eq!(
        text.lines().nth(3).unwrap(),
        "f_hz,l1_mag,l1_phase_deg,l5_mag,l5_phase_deg"
    );
    assert_eq!(text.lines().count(), 4 + 7);
}
