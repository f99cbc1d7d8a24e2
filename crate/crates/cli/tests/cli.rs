use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ionsync(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ionsync"))
        .args(args)
        .env_remove("IONSYNC_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn meta(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("meta.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_key_is_a_usage_error() {
    let o = ionsync(&["pair", "--omega1", "0", "--gamma", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("accepted keys for pair"), "{}", stderr(&o));
}

#[test]
fn bad_values_are_usage_errors() {
    assert_eq!(ionsync(&["single", "--omega1", "strong"]).status.code(), Some(1));
    assert_eq!(ionsync(&[]).status.code(), Some(1));
    assert_eq!(ionsync(&["single", "--damping", "-1"]).status.code(), Some(1));
    assert_eq!(ionsync(&["single", "--damping", "0.3", "--gamma-ratio", "3"]).status.code(), Some(1));
}

#[test]
fn fig3d_table_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig3");
    let o = ionsync(&["fig3", "--panel", "d", "--cutoff", "3", "--gate", "false", "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("S_vs_delta.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 18);
    assert_eq!(lines[0], "Delta,S,peaks,residual,min_eig,converged");
    assert!(!text.contains('\r'));
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 6);
        for c in &cells[..5] {
            c.parse::<f64>().unwrap();
        }
    }
    let m = meta(&out);
    assert_eq!(m["conventions"]["vectorization"], "column-stacking");
    assert_eq!(m["software"]["version"], env!("CARGO_PKG_VERSION"));
    assert!(m["flatness_floor"].as_f64().is_some());
}

#[test]
fn uncoupled_pair_has_flat_phase() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = ionsync(&["pair", "--j", "0", "--cutoff", "4", "--gate", "false", "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let floor = meta(out)["flatness_floor"].as_f64().unwrap();
    assert!(floor <= 1e-8, "{floor}");
    let phase = fs::read_to_string(out.join("phase.csv")).unwrap();
    assert!(phase.starts_with("phi,P\n"));
    assert_eq!(phase.lines().count(), 1025);
}

#[test]
fn meta_config_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let o = ionsync(&[
        "pair", "--omega1", "1.25", "--delta", "0.5", "--cutoff", "4", "--gate", "false", "--format", "both", "--output",
        a.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first: Vec<(String, Vec<u8>)> = ["pair.csv", "pair.json", "phase.csv", "meta.json"]
        .iter()
        .map(|f| (f.to_string(), fs::read(a.join(f)).unwrap()))
        .collect();
    let o = ionsync(&["--config", a.join("meta.json").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for (name, bytes) in first {
        assert_eq!(fs::read(a.join(&name)).unwrap(), bytes, "{name} changed between runs");
    }
}

#[test]
fn toml_config_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "subcommand = \"single\"\noutput = \"{}\"\n[parameters]\ngamma_ratio = 3\ncutoff = 6\ngate = false\n",
            out.display()
        ),
    )
    .unwrap();
    let o = ionsync(&["single", "--config", cfg.to_str().unwrap(), "--cutoff", "8"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = meta(&out);
    assert_eq!(m["config"]["parameters"]["cutoff"], 8);
    assert_eq!(m["config"]["parameters"]["gamma-ratio"], 3);
    assert_eq!(fs::read_to_string(out.join("pn.csv")).unwrap().lines().count(), 9);
}

#[test]
fn unconverged_point_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = ionsync(&["single", "--cutoff", "2", "--output", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("single.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",false"));
    assert_eq!(meta(dir.path())["all_converged"], false);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ionsync"))
        .args(["lab"])
        .env("IONSYNC_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let lab: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("lab/lab.json")).unwrap()).unwrap();
    let ratio = lab["cooling_discrepancy"].as_f64().unwrap();
    assert!((ratio - 1.98).abs() < 0.01, "{ratio}");
    assert!(!lab["notes"].as_array().unwrap().is_empty());
}

#[test]
fn lab_accepts_cyclic_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let o = ionsync(&["lab", "--omega-trap", "2π×8.4MHz", "--j", "1.68 kHz", "--output", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lab: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("lab.json")).unwrap()).unwrap();
    assert!((lab["coupling_over_gamma"].as_f64().unwrap() - 0.1).abs() < 2e-3);
    assert_eq!(ionsync(&["lab", "--omega-trap", "fast"]).status.code(), Some(1));
}

#[test]
fn wigner_projection_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = ionsync(&[
        "wigner", "--cutoff", "8", "--grid-points", "16", "--extent", "4", "--project", "z-", "--output",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("wigner.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 16 * 16);
    assert!(text.starts_with("x,p,W\n"));
    assert_eq!(ionsync(&["wigner", "--project", "q+"]).status.code(), Some(1));
}
