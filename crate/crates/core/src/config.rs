//! Experiment configuration: JSON with strict key checking, defaults and
//! named presets.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::admissible::RELAXATION_BAND;
use crate::grid::{Grid, ScalarField};
use crate::io::field_from_csv;
use crate::solver::{Method, SolverOptions};
use crate::turnpike::DEFAULT_FLOOR;
use crate::{Error, Result};

/// A scalar field on the domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant(f64),
    /// `a (x^2 + y^2) + b`
    Quadratic { a: f64, b: f64 },
    /// CSV `x,y,value` in node order, relative to the config file.
    File(PathBuf),
}

impl FieldSpec {
    pub fn sample(&self, grid: Grid, base: &Path) -> Result<ScalarField> {
        match self {
            FieldSpec::Constant(c) => Ok(ScalarField::constant(grid, *c)),
            FieldSpec::Quadratic { a, b } => Ok(ScalarField::from_fn(grid, |x, y| a * (x * x + y * y) + b)),
            FieldSpec::File(p) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                field_from_csv(grid, &fs::read_to_string(&path)?)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol_gap: f64,
    pub max_iter: usize,
    pub method: Method,
    /// Gap tolerance of the static solve used by the diagnostics.
    pub static_tol_gap: f64,
    pub static_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverConfig {
            tol_gap: d.tol_gap,
            max_iter: d.max_iter,
            method: d.method,
            static_tol_gap: 1e-10,
            static_max_iter: 20000,
        }
    }
}

impl SolverConfig {
    pub fn dynamic(&self) -> SolverOptions {
        SolverOptions {
            tol_gap: self.tol_gap,
            max_iter: self.max_iter,
            method: self.method,
        }
    }

    pub fn stationary(&self) -> SolverOptions {
        SolverOptions {
            tol_gap: self.static_tol_gap,
            max_iter: self.static_max_iter,
            method: self.method,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TurnpikeConfig {
    /// Thresholds as fractions of `max(total curve)`.
    pub eps_list: Vec<f64>,
    /// Fit window as fractions of `T`.
    pub fit_window: (f64, f64),
    pub floor: f64,
    pub relaxation_band: (f64, f64),
    /// Highest mode index per axis for the spectral expansion.
    pub kmax: usize,
}

impl Default for TurnpikeConfig {
    fn default() -> Self {
        TurnpikeConfig {
            eps_list: vec![0.1, 0.05, 0.01],
            fit_window: (0.2, 0.9),
            floor: DEFAULT_FLOOR,
            relaxation_band: RELAXATION_BAND,
            kmax: 15,
        }
    }
}

fn default_domain() -> [f64; 4] {
    [-1.0, 1.0, -1.0, 1.0]
}

fn default_n() -> usize {
    63
}

fn default_nt_per_unit() -> usize {
    32
}

fn default_gamma1() -> f64 {
    1.0
}

fn default_y0() -> FieldSpec {
    FieldSpec::Constant(0.0)
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_stride() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_domain")]
    pub domain: [f64; 4],
    #[serde(default = "default_n")]
    pub nx: usize,
    #[serde(default = "default_n")]
    pub ny: usize,
    #[serde(default = "default_nt_per_unit")]
    pub nt_per_unit: usize,
    #[serde(rename = "T", default)]
    pub t_final: Option<f64>,
    #[serde(rename = "T_list", default)]
    pub t_list: Option<Vec<f64>>,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(default = "default_gamma1")]
    pub gamma1: f64,
    #[serde(default)]
    pub gamma2: f64,
    pub y_d: FieldSpec,
    #[serde(default = "default_y0")]
    pub y0: FieldSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub turnpike: TurnpikeConfig,
    #[serde(default = "default_out")]
    pub output: PathBuf,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    /// Directory that relative file paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn invalid(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let [x0, x1, y0, y1] = self.domain;
        if !(x1 > x0) || !(y1 > y0) {
            return Err(invalid("domain", "bounds must satisfy xmax > xmin and ymax > ymin"));
        }
        if self.nx < 3 {
            return Err(invalid("nx", format!("must be at least 3, got {}", self.nx)));
        }
        if self.ny < 3 {
            return Err(invalid("ny", format!("must be at least 3, got {}", self.ny)));
        }
        if self.nt_per_unit == 0 {
            return Err(invalid("nt_per_unit", "must be positive"));
        }
        if !(self.l > 0.0 && self.l < 1.0) {
            return Err(invalid("L", format!("must lie in (0,1), got {}", self.l)));
        }
        if !(self.gamma1 >= 0.0) {
            return Err(invalid("gamma1", "must be nonnegative"));
        }
        if !(self.gamma2 >= 0.0) {
            return Err(invalid("gamma2", "must be nonnegative"));
        }
        if self.gamma1 == 0.0 && self.gamma2 == 0.0 {
            return Err(invalid("gamma1", "gamma1 and gamma2 are both zero"));
        }
        if let Some(t) = self.t_final {
            if !(t > 0.0) || !t.is_finite() {
                return Err(invalid("T", format!("must be positive, got {t}")));
            }
        }
        if let Some(ts) = &self.t_list {
            if ts.is_empty() {
                return Err(invalid("T_list", "must not be empty"));
            }
            if ts.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
                return Err(invalid("T_list", "entries must be positive"));
            }
            if ts.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("T_list", "must be strictly ascending"));
            }
        }
        if self.t_final.is_none() && self.t_list.is_none() {
            return Err(invalid("T", "one of T or T_list is required"));
        }
        if !(self.solver.tol_gap >= 0.0) {
            return Err(invalid("solver.tol_gap", "must be nonnegative"));
        }
        if !(self.solver.static_tol_gap >= 0.0) {
            return Err(invalid("solver.static_tol_gap", "must be nonnegative"));
        }
        let tp = &self.turnpike;
        if tp.eps_list.iter().any(|e| !(*e > 0.0)) {
            return Err(invalid("turnpike.eps_list", "entries must be positive"));
        }
        let (lo, hi) = tp.fit_window;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(invalid("turnpike.fit_window", "must satisfy 0 <= lo < hi <= 1"));
        }
        if !(tp.floor > 0.0) {
            return Err(invalid("turnpike.floor", "must be positive"));
        }
        let (b0, b1) = tp.relaxation_band;
        if !(0.0 <= b0 && b0 < b1 && b1 <= 1.0) {
            return Err(invalid("turnpike.relaxation_band", "must satisfy 0 <= lo < hi <= 1"));
        }
        if tp.kmax == 0 {
            return Err(invalid("turnpike.kmax", "must be positive"));
        }
        if self.snapshot_stride == 0 {
            return Err(invalid("snapshot_stride", "must be positive"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.domain, self.nx, self.ny)
    }

    /// `T` for single runs; falls back to the last entry of `T_list`.
    pub fn horizon(&self) -> f64 {
        self.t_final
            .or_else(|| self.t_list.as_ref().and_then(|v| v.last().copied()))
            .unwrap()
    }

    /// Horizons of a sweep; a single `T` counts as a one-entry list.
    pub fn horizons(&self) -> Vec<f64> {
        self.t_list.clone().unwrap_or_else(|| vec![self.horizon()])
    }

    pub fn steps_for(&self, t: f64) -> usize {
        ((self.nt_per_unit as f64 * t).round() as usize).max(1)
    }

    pub fn with_horizon(&self, t: f64) -> RunConfig {
        RunConfig {
            t_final: Some(t),
            t_list: None,
            ..self.clone()
        }
    }
}

/// Reads and validates a config file; relative paths inside it resolve
/// against its directory.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    let mut cfg = RunConfig::from_json_str(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

pub const PRESETS: [&str; 4] = ["paper-demo", "relaxation-demo", "trivial", "mayer-demo"];

/// Named experiment cards on `[-1,1]^2` with `L = 1/8` and `y0 = 0`.
pub fn preset(name: &str) -> Result<RunConfig> {
    let text = match name {
        "paper-demo" => include_str!("../../../presets/paper-demo.json"),
        "relaxation-demo" => include_str!("../../../presets/relaxation-demo.json"),
        "trivial" => include_str!("../../../presets/trivial.json"),
        "mayer-demo" => include_str!("../../../presets/mayer-demo.json"),
        other => return Err(invalid("name", format!("unknown preset {other:?}"))),
    };
    RunConfig::from_json_str(text)
}
