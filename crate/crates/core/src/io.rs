//! Plain-text serialization of fields, masks and trajectories.
//!
//! Fields are written as PGM (P2, maxval 255, the `[vmin, vmax]` range in a
//! comment line) and as CSV rows `x,y,value` with 17 significant digits, which
//! round-trips `f64` exactly. Trajectories are directories of per-step files
//! plus an `index.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::grid::{Grid, ScalarField, ShapeMask};
use crate::pde::{TimeGrid, Trajectory};
use crate::{Error, Result};

/// `v` with 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn field_to_pgm(f: &ScalarField) -> String {
    let g = f.grid();
    let (vmin, vmax) = (f.min(), f.max());
    let mut s = String::new();
    writeln!(s, "P2").unwrap();
    writeln!(s, "# vmin={} vmax={}", fmt_f64(vmin), fmt_f64(vmax)).unwrap();
    writeln!(s, "{} {}", g.nx, g.ny).unwrap();
    writeln!(s, "255").unwrap();
    let span = vmax - vmin;
    // top row of the image is the largest y
    for j in (0..g.ny).rev() {
        let row: Vec<String> = (0..g.nx)
            .map(|i| {
                let v = f.at(i, j);
                let q = if span > 0.0 { ((v - vmin) / span * 255.0).round() } else { 0.0 };
                (q as u8).to_string()
            })
            .collect();
        writeln!(s, "{}", row.join(" ")).unwrap();
    }
    s
}

pub fn mask_to_pgm(m: &ShapeMask) -> String {
    field_to_pgm(&m.indicator())
}

pub fn field_to_csv(f: &ScalarField) -> String {
    let g = f.grid();
    let mut s = String::from("x,y,value\n");
    for (k, &v) in f.values().iter().enumerate() {
        let (x, y) = g.coords(k);
        writeln!(s, "{},{},{}", fmt_f64(x), fmt_f64(y), fmt_f64(v)).unwrap();
    }
    s
}

/// Reads values written by [`field_to_csv`] back onto `grid`; rows must be in
/// node order.
pub fn field_from_csv(grid: Grid, text: &str) -> Result<ScalarField> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "x,y,value" => {}
        other => return Err(Error::Parse(format!("unexpected CSV header {other:?}"))),
    }
    let mut values = Vec::with_capacity(grid.len());
    for (n, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::Parse(format!("line {}: expected 3 columns", n + 2)));
        }
        let v: f64 = cols[2]
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", n + 2)))?;
        values.push(v);
    }
    ScalarField::new(grid, values)
}

pub fn write_field(dir: &Path, name: &str, f: &ScalarField) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{name}.pgm")), field_to_pgm(f))?;
    fs::write(dir.join(format!("{name}.csv")), field_to_csv(f))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryIndex {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub nt: usize,
    pub grid: Grid,
    pub stride: usize,
    pub steps: Vec<IndexEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub k: usize,
    pub t: f64,
    pub csv: String,
    pub pgm: String,
}

/// Writes steps `0, stride, 2 stride, ...` and always the last step.
pub fn write_trajectory(dir: &Path, traj: &Trajectory, stride: usize) -> Result<TrajectoryIndex> {
    let stride = stride.max(1);
    fs::create_dir_all(dir)?;
    let tg = *traj.timegrid();
    let mut ks: Vec<usize> = (0..=tg.nt).step_by(stride).collect();
    if *ks.last().unwrap() != tg.nt {
        ks.push(tg.nt);
    }
    let mut steps = Vec::with_capacity(ks.len());
    for k in ks {
        let name = format!("step_{k:05}");
        write_field(dir, &name, traj.get(k))?;
        steps.push(IndexEntry {
            k,
            t: tg.time(k),
            csv: format!("{name}.csv"),
            pgm: format!("{name}.pgm"),
        });
    }
    let index = TrajectoryIndex {
        t_final: tg.t_final,
        nt: tg.nt,
        grid: *traj.grid(),
        stride,
        steps,
    };
    write_json(&dir.join("index.json"), &index)?;
    Ok(index)
}

/// Reads a trajectory directory. Requires that every step was written
/// (stride 1).
pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let index: TrajectoryIndex = serde_json::from_str(&fs::read_to_string(dir.join("index.json"))?)?;
    if index.steps.len() != index.nt + 1 {
        return Err(Error::Parse(format!(
            "trajectory at {} holds {} of {} steps",
            dir.display(),
            index.steps.len(),
            index.nt + 1
        )));
    }
    let tg = TimeGrid::new(index.t_final, index.nt)?;
    let snaps = index
        .steps
        .iter()
        .map(|e| field_from_csv(index.grid, &fs::read_to_string(dir.join(&e.csv))?))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(tg, snaps)
}

/// Reads the last saved snapshot of a trajectory directory; the last step is
/// always written regardless of the stride.
pub fn read_last_snapshot(dir: &Path) -> Result<(IndexEntry, ScalarField)> {
    let index: TrajectoryIndex = serde_json::from_str(&fs::read_to_string(dir.join("index.json"))?)?;
    let entry = index
        .steps
        .last()
        .cloned()
        .ok_or_else(|| Error::Parse(format!("trajectory at {} is empty", dir.display())))?;
    let field = field_from_csv(index.grid, &fs::read_to_string(dir.join(&entry.csv))?)?;
    Ok((entry, field))
}
