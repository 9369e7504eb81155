use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lowregret(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lowregret"))
        .args(args)
        .env("NO_COLOR", "1")
        .output()
        .expect("binary runs")
}

fn smoke_config() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs/smoke.json")
        .display()
        .to_string()
}

fn files_with(dir: &Path, prefix: &str, ext: &str) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            name.starts_with(prefix) && name.ends_with(ext)
        })
        .collect();
    v.sort();
    v
}

#[test]
fn run_writes_traces_summary_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = lowregret(&["run", &smoke_config(), "--output-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let traces = files_with(dir.path(), "trace_", ".csv");
    assert_eq!(traces.len(), 2);
    let csv = fs::read_to_string(&traces[0]).unwrap();
    assert_eq!(csv.lines().next(), Some("round,instant_regret,cum_regret,width_diag"));
    assert_eq!(csv.lines().count(), 51);

    let summary = files_with(dir.path(), "summary_", ".json");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary[0]).unwrap()).unwrap();
    for key in ["mean_cum_regret", "max_cum_regret", "slope_vs_logT", "config_hash"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    let svg = fs::read_to_string(&files_with(dir.path(), "regret_", ".svg")[0]).unwrap();
    assert!(svg.starts_with("<svg") && svg.matches("<polyline").count() == 2);
}

#[test]
fn rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = lowregret(&["run", &smoke_config(), "--output-dir", d.path().to_str().unwrap()]);
        assert!(out.status.success());
    }
    let ta = files_with(a.path(), "trace_", ".csv");
    let tb = files_with(b.path(), "trace_", ".csv");
    assert_eq!(ta.len(), tb.len());
    for (x, y) in ta.iter().zip(&tb) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
}

#[test]
fn seed_flag_changes_traces() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    lowregret(&["run", &smoke_config(), "--output-dir", a.path().to_str().unwrap()]);
    lowregret(&["--seed", "99", "run", &smoke_config(), "--output-dir", b.path().to_str().unwrap()]);
    let ta = fs::read(&files_with(a.path(), "trace_", ".csv")[0]).unwrap();
    let tb = fs::read(&files_with(b.path(), "trace_", ".csv")[0]).unwrap();
    assert_ne!(ta, tb);
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{"game": "cutting_plane", "dim": 2, "horizon": "many", "learner": {"kind": "john_center"},
            "oracle": {"kind": "strong_max_regret"}}"#,
    )
    .unwrap();
    let out = lowregret(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon"));
}

#[test]
fn invalid_value_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{"game": "cutting_plane", "dim": 1, "horizon": 10, "learner": {"kind": "john_center"},
            "oracle": {"kind": "strong_max_regret"}}"#,
    )
    .unwrap();
    let out = lowregret(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dim"));
}

#[test]
fn missing_config_and_unknown_command_exit_one() {
    assert_eq!(lowregret(&["run", "/nonexistent/config.json"]).status.code(), Some(1));
    assert_eq!(lowregret(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(lowregret(&["verify", "--budget", "huge"]).status.code(), Some(1));
}

#[test]
fn plot_reads_trace_csvs() {
    let dir = tempfile::tempdir().unwrap();
    lowregret(&["run", &smoke_config(), "--output-dir", dir.path().to_str().unwrap()]);
    let traces = files_with(dir.path(), "trace_", ".csv");
    let svg = dir.path().join("both.svg");
    let mut args = vec!["plot"];
    let names: Vec<String> = traces.iter().map(|p| p.display().to_string()).collect();
    args.extend(names.iter().map(String::as_str));
    args.extend(["--out", svg.to_str().unwrap()]);
    let out = lowregret(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(&svg).unwrap().matches("class=\"legend\"").count(), 2);
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = lowregret(&[
        "sweep",
        &smoke_config(),
        "--param",
        "T",
        "--values",
        "10,20",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("sweep.json").exists());
    assert!(dir.path().join("T=10").is_dir() && dir.path().join("T=20").is_dir());
}

#[test]
fn lowerbound_prints_a_line_per_learner() {
    let out = lowregret(&["lowerbound", "--dim", "4", "--rounds", "1", "--draws", "4", "--mc-budget", "32"]);
    let text = String::from_utf8_lossy(&out.stdout);
    let lines = text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count();
    assert_eq!(lines, 5, "{text}");
}

#[test]
fn verify_small_budget_passes() {
    let out = lowregret(&["verify", "--dim", "2", "--budget", "small"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5, "{text}");
}
