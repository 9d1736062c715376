use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsl")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.json");
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#""nx":11,"ny":11,"nt_per_unit":16,"L":0.125"#;

fn run_in(dir: &Path, sub: &str, body: &str) -> Output {
    let cfg = write_config(dir, body);
    let out = dir.join("out");
    tsl(&[sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_dynamic_succeeds_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "solve-dynamic", &format!(r#"{{{SMALL},"T":2,"y_d":{{"constant":0.1}}}}"#));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    for f in ["static/a_bar.pgm", "dynamic/y/index.json", "turnpike.json", "curves.csv", "summary.json", "log.csv"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let summary = json(out.join("summary.json"));
    assert_eq!(summary["certified"], true);
    assert_eq!(summary["classification"]["case"], "lagrange_beta");
}

#[test]
fn unmet_gap_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        "solve-dynamic",
        &format!(r#"{{{SMALL},"T":2,"y_d":{{"constant":0.1}},"solver":{{"tol_gap":1e-14,"max_iter":2}}}}"#),
    );
    assert_eq!(o.status.code(), Some(2));
    let summary = json(dir.path().join("out/summary.json"));
    assert_eq!(summary["certified"], false);
}

#[test]
fn unknown_keys_are_rejected_with_their_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        "solve-dynamic",
        &format!(r#"{{{SMALL},"T":2,"y_d":{{"constant":0.1}},"solver":{{"tol_gapp":1e-6}}}}"#),
    );
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("solver") && err.contains("tol_gapp"), "{err}");
    let o = run_in(dir.path(), "solve-dynamic", &format!(r#"{{{SMALL},"T":2,"L":1.5,"y_d":{{"constant":0.1}}}}"#));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_writes_one_directory_per_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!(r#"{{{SMALL},"T_list":[1,2],"y_d":{{"constant":0.1}}}}"#));
    let out = dir.path().join("out");
    let o = tsl(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(out.join("summary.json"));
    assert_eq!(summary["rows"].as_array().unwrap().len(), 2);
    assert!(out.join("T_1/curves.csv").is_file() && out.join("T_2/curves.csv").is_file());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.contains("certified")).count(), 2);
}

#[test]
fn sweep_without_horizon_list_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "sweep", &format!(r#"{{{SMALL},"T":1,"y_d":{{"constant":0.1}}}}"#));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn classify_flags_the_relaxation_target() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        "classify",
        &format!(r#"{{{SMALL},"T":1,"y_d":{{"quadratic":{{"a":-0.05,"b":0.1}}}}}}"#),
    );
    assert_eq!(o.status.code(), Some(0));
    let printed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(printed["case"], "relaxation_risk");
    assert_eq!(json(dir.path().join("out/classification.json")), printed);
}

#[test]
fn solve_static_refuses_terminal_cost() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(r#"{{{SMALL},"T":1,"gamma1":0,"gamma2":1,"y_d":{{"constant":0.1}}}}"#);
    let o = run_in(dir.path(), "solve-static", &body);
    assert_eq!(o.status.code(), Some(1));
    let body = format!(r#"{{{SMALL},"T":1,"y_d":{{"constant":0.1}}}}"#);
    let o = run_in(dir.path(), "solve-static", &body);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("out/static/summary.json").is_file());
}

#[test]
fn report_and_spectral_reuse_saved_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(r#"{{{SMALL},"T":2,"y_d":{{"constant":0.1}}}}"#);
    assert_eq!(run_in(dir.path(), "solve-dynamic", &body).status.code(), Some(0));

    let o = run_in(dir.path(), "report", &body);
    assert_eq!(o.status.code(), Some(0));
    let report = json(dir.path().join("out/report.json"));
    let turnpike = json(dir.path().join("out/turnpike.json"));
    assert_eq!(report["integral_turnpike"], turnpike["integral_turnpike"]);
    assert_eq!(report["measure_turnpike"], turnpike["measure_turnpike"]);
    assert_eq!(report["fits"], turnpike["fits"]);

    let o = run_in(dir.path(), "spectral", &body);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("using saved terminal state"));
    let saved = json(dir.path().join("out/spectral.json"));
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("out");
    let o = tsl(&["spectral", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--resolve"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(out.join("spectral.json")), saved);
}

#[test]
fn report_without_curves_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "report", &format!(r#"{{{SMALL},"T":2,"y_d":{{"constant":0.1}}}}"#));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bundled_presets_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets");
    let mut n = 0;
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        shape_turnpike::config::parse_config(&path).unwrap();
        n += 1;
    }
    assert_eq!(n, 4);
}
