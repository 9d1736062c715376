use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use shape_turnpike::config::RunConfig;
use shape_turnpike::scenario::{horizon_dir, run_scenario, sweep_t};
use shape_turnpike::turnpike::ErrorCurves;

fn small(extra: &str, out: &Path) -> RunConfig {
    let text = format!(
        r#"{{"nx":11,"ny":11,"nt_per_unit":16,"L":0.125,"y_d":{{"constant":0.1}},"snapshot_stride":4{extra}}}"#
    );
    let mut cfg = RunConfig::from_json_str(&text).unwrap();
    cfg.output = out.to_path_buf();
    cfg
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, acc: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, acc);
            } else {
                acc.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut acc = BTreeMap::new();
    walk(root, root, &mut acc);
    acc
}

#[test]
fn run_writes_the_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(r#","T":2"#, dir.path());
    let o = run_scenario(&cfg).unwrap();
    assert!(o.summary.certified);
    for f in [
        "static/y_bar.pgm",
        "static/y_bar.csv",
        "static/p_bar.csv",
        "static/a_bar.pgm",
        "static/a_bar.csv",
        "static/omega_bar.pgm",
        "static/relaxation.json",
        "static/log.csv",
        "dynamic/index.json",
        "dynamic/y/index.json",
        "dynamic/p/index.json",
        "dynamic/a/index.json",
        "dynamic/vertices/index.json",
        "dynamic/y/step_00032.csv",
        "dynamic/y/step_00004.pgm",
        "classification.json",
        "turnpike.json",
        "curves.csv",
        "summary.json",
        "log.csv",
    ] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let curves = fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert_eq!(curves.lines().next(), Some("t,dy,dp,da_l2,da_l1,dh,total"));
    assert_eq!(curves.lines().count(), 1 + 33);
    let log = fs::read_to_string(dir.path().join("log.csv")).unwrap();
    assert_eq!(log.lines().next(), Some("iter,cost,gap,step"));
    assert_eq!(log.lines().count(), 1 + o.triple.history.len());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_scenario(&small(r#","T":1.5"#, a.path())).unwrap();
    run_scenario(&small(r#","T":1.5"#, b.path())).unwrap();
    let fa = files(a.path());
    assert!(fa.len() > 20);
    assert_eq!(fa, files(b.path()));
}

#[test]
fn single_entry_sweep_reproduces_the_single_run() {
    let single = tempfile::tempdir().unwrap();
    let swept = tempfile::tempdir().unwrap();
    run_scenario(&small(r#","T":2"#, single.path())).unwrap();
    let (summary, _) = sweep_t(&small(r#","T_list":[2]"#, swept.path())).unwrap();
    assert_eq!(summary.rows.len(), 1);
    assert!(swept.path().join("summary.json").is_file());
    assert_eq!(files(single.path()), files(&horizon_dir(swept.path(), 2.0)));
}

#[test]
fn sweep_records_one_row_per_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let (summary, outcomes) = sweep_t(&small(r#","T_list":[0.5,1,2]"#, dir.path())).unwrap();
    let ts: Vec<f64> = summary.rows.iter().map(|r| r.t_final).collect();
    assert_eq!(ts, vec![0.5, 1.0, 2.0]);
    assert!(summary.certified);
    assert_eq!(outcomes.iter().filter(|o| o.is_some()).count(), 3);
    for dir_name in ["T_0.5", "T_1", "T_2"] {
        assert!(dir.path().join(dir_name).join("summary.json").is_file());
    }
    for v in summary.common_measure_turnpike.values() {
        assert_eq!(v.len(), 3);
    }
}

#[test]
fn zero_target_gives_zero_cost_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(r#","T":2"#, dir.path());
    cfg.y_d = serde_json::from_str(r#"{"constant":0}"#).unwrap();
    let o = run_scenario(&cfg).unwrap();
    assert_eq!(o.summary.cost, 0.0);
    let c = o.curves.unwrap();
    for v in [&c.dy, &c.dp, &c.da_l2, &c.da_l1, &c.total] {
        assert!(v.iter().all(|&x| x == 0.0));
    }
}

#[test]
fn curves_csv_reads_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_scenario(&small(r#","T":1"#, dir.path())).unwrap();
    let back = ErrorCurves::from_csv(&fs::read_to_string(dir.path().join("curves.csv")).unwrap()).unwrap();
    let c = o.curves.unwrap();
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-15 * x.abs().max(y.abs()));
    assert!(close(&c.times, &back.times));
    assert!(close(&c.dy, &back.dy));
    assert!(close(&c.dp, &back.dp));
    assert!(close(&c.da_l2, &back.da_l2));
    assert!(close(&c.total, &back.total));
    assert_eq!(c.dh, back.dh);
}

#[test]
fn terminal_cost_run_writes_spectral_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_scenario(&small(r#","T":1,"gamma1":0,"gamma2":1"#, dir.path())).unwrap();
    assert!(o.stat.is_none() && o.curves.is_none());
    for f in ["spectral.json", "omega0.pgm", "hausdorff.csv", "turnpike.json", "summary.json"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    assert!(!dir.path().join("static").exists());
    let pred = o.spectral.unwrap();
    assert_eq!(pred.j0, 0);
    assert_eq!(o.hausdorff.unwrap().len(), 17);
}

#[test]
fn relative_input_files_resolve_against_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let grid_file = dir.path().join("target.csv");
    let g = shape_turnpike::Grid::square(11).unwrap();
    let f = shape_turnpike::ScalarField::from_fn(g, |x, y| 0.05 + 0.01 * x * y);
    fs::write(&grid_file, shape_turnpike::io::field_to_csv(&f)).unwrap();
    let cfg_path = dir.path().join("run.json");
    fs::write(
        &cfg_path,
        r#"{"nx":11,"ny":11,"nt_per_unit":8,"T":1,"L":0.2,"y_d":{"file":"target.csv"}}"#,
    )
    .unwrap();
    let mut cfg = shape_turnpike::config::parse_config(&cfg_path).unwrap();
    cfg.output = dir.path().join("out");
    let o = run_scenario(&cfg).unwrap();
    assert!(o.summary.cost > 0.0);
}
