use std::fs;
use std::process::{Command, Output};

fn kerrlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kerrlab"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

#[test]
fn unknown_preset_is_a_config_error() {
    let out = kerrlab(&["sweep", "--preset", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("preset"));
}

#[test]
fn bad_field_is_named() {
    let out = kerrlab(&["sweep", "--preset", "fig3", "--symbols", "1026", "--print-config"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`symbols`"));
}

#[test]
fn printed_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = kerrlab(&["sweep", "--preset", "fig6", "--seed", "9", "--launch-dbm", "-5", "--print-config"]);
    assert!(first.status.success());
    let path = dir.path().join("c.toml");
    fs::write(&path, &first.stdout).unwrap();
    let second = kerrlab(&["sweep", "--config", path.to_str().unwrap(), "--print-config"]);
    assert!(second.status.success());
    assert_eq!(first.stdout, second.stdout);
    let text = String::from_utf8(first.stdout).unwrap();
    assert!(text.contains("seed = 9") && text.contains("launch_dbm = -5.0"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, "m_max = 4\noutput = \"r.csv\"\ncolour = 1\n").unwrap();
    let out = kerrlab(&["rate-curve", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rate_curve_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rate.csv");
    let out = kerrlab(&["rate-curve", "--m-max", "8", "--output", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("m,cc_rate,iud_rate,gap"));
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn small_sweep_writes_rows_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let out = kerrlab(&[
        "sweep",
        "--preset",
        "fig3",
        "--symbols",
        "171",
        "--trials",
        "1",
        "--lengths",
        "100",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 5);
    let manifest = fs::read_to_string(dir.path().join("s.csv.manifest.toml")).unwrap();
    assert!(manifest.contains("launch_dbm_per_channel = -12.0"));
}

#[test]
fn failed_cells_exit_3_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("f.csv");
    let cfg = kerrlab(&["sweep", "--preset", "fig3", "--print-config"]);
    let text = String::from_utf8(cfg.stdout)
        .unwrap()
        .replace("min_step_km = 0.0001", "min_step_km = 0.4");
    let path = dir.path().join("c.toml");
    fs::write(&path, text).unwrap();
    let out = kerrlab(&[
        "sweep",
        "--config",
        path.to_str().unwrap(),
        "--symbols",
        "171",
        "--trials",
        "1",
        "--lengths",
        "100",
        "--launch-dbm",
        "15",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let diag = fs::read_to_string(dir.path().join("f.csv.diagnostics.txt")).unwrap();
    assert!(diag.contains("failed"));
}
