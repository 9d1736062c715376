//! Scenario driver: static and dynamic solves, diagnostics and artifacts.
//!
//! A run writes into its output directory:
//! `static/` (y_bar, p_bar, a_bar as PGM and CSV, the mask, the relaxation
//! report and the static iteration log), `dynamic/` (trajectory directories
//! with JSON indices), `classification.json`, `turnpike.json`, `curves.csv`,
//! `log.csv` and `summary.json`. Terminal-cost runs also write
//! `spectral.json`, `omega0.pgm` and `hausdorff.csv`. A sweep writes one such
//! directory per horizon under `T_<value>/` plus a top-level `summary.json`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::admissible::{threshold_with, RelaxationReport};
use crate::config::{RunConfig, TurnpikeConfig};
use crate::grid::{Grid, ScalarField, ShapeMask};
use crate::io::{fmt_f64, mask_to_pgm, write_field, write_json, write_trajectory};
use crate::pde::{analytic_modes, check_energy_inequality, check_gronwall, EllipticOperator, TimeGrid};
use crate::solver::{
    classify_target, compute_comparison_bounds, solve_dynamic, solve_static, CostSpec, DiagnosisSummary, IterLog,
    OptimalTriple, StaticTriple,
};
use crate::turnpike::{
    check_dissipativity, error_curves, exp_fit, hausdorff_curve, integral_turnpike, measure_turnpike,
    spectral_mayer_predict, ErrorCurves, FitEntry, SpectralPrediction, SpectralSummary, TurnpikeReport,
};
use crate::{Error, Result};

/// Discretized problem data of a config.
#[derive(Debug)]
pub struct Problem {
    pub grid: Grid,
    pub op: EllipticOperator,
    pub cost: CostSpec,
    pub y0: ScalarField,
    pub l: f64,
}

pub fn build_problem(cfg: &RunConfig) -> Result<Problem> {
    let grid = cfg.grid()?;
    let op = EllipticOperator::laplacian(grid)?;
    let y_d = cfg.y_d.sample(grid, &cfg.base_dir)?;
    let y0 = cfg.y0.sample(grid, &cfg.base_dir)?;
    Ok(Problem {
        grid,
        op,
        cost: CostSpec::new(cfg.gamma1, cfg.gamma2, y_d)?,
        y0,
        l: cfg.l,
    })
}

impl Problem {
    pub fn timegrid(&self, cfg: &RunConfig, t: f64) -> Result<TimeGrid> {
        TimeGrid::new(t, cfg.steps_for(t))
    }

    /// The static triple, or `None` for a pure terminal cost.
    pub fn solve_static(&self, cfg: &RunConfig) -> Result<Option<StaticTriple>> {
        if self.cost.gamma1 == 0.0 {
            return Ok(None);
        }
        solve_static(&self.op, &self.cost, self.l, &cfg.solver.stationary()).map(Some)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StaticSummary {
    pub cost: f64,
    pub gap: f64,
    pub iterations: usize,
    pub certified: bool,
    pub level: f64,
    pub relaxation: RelaxationReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalitySummary {
    pub energy_max_ratio: f64,
    pub energy_violated: bool,
    pub gronwall_max_ratio: f64,
    pub gronwall_violated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub name: Option<String>,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub nt: usize,
    pub cost: f64,
    pub gap: f64,
    pub iterations: usize,
    pub certified: bool,
    #[serde(rename = "static")]
    pub stat: Option<StaticSummary>,
    pub classification: DiagnosisSummary,
    pub turnpike: TurnpikeReport,
    /// Largest symmetric-difference area between thresholded controls at two
    /// times in the middle window, over `|Ω|`.
    pub middle_shape_variation: Option<f64>,
    /// Minimum of the total error curve over the middle window over its value
    /// at `t = 0`.
    pub middle_min_ratio: Option<f64>,
    pub middle_relaxation: RelaxationReport,
    pub inequalities: InequalitySummary,
    pub spectral: Option<SpectralSummary>,
    /// Wall-clock seconds; kept out of data files.
    #[serde(skip)]
    pub seconds: f64,
}

/// Everything computed by a single-horizon run, kept in memory.
#[derive(Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub triple: OptimalTriple,
    pub stat: Option<StaticTriple>,
    pub curves: Option<ErrorCurves>,
    pub spectral: Option<SpectralPrediction>,
    pub hausdorff: Option<Vec<Option<f64>>>,
}

pub fn log_csv(history: &[IterLog]) -> String {
    let mut s = String::from("iter,cost,gap,step\n");
    for h in history {
        writeln!(s, "{},{},{},{}", h.iter, fmt_f64(h.cost), fmt_f64(h.gap), fmt_f64(h.step)).unwrap();
    }
    s
}

/// Writes `static/` and returns the relaxation report of `a_bar`.
pub fn write_static(dir: &Path, stat: &StaticTriple, band: (f64, f64)) -> Result<RelaxationReport> {
    let dir = dir.join("static");
    write_field(&dir, "y_bar", &stat.y_bar)?;
    write_field(&dir, "p_bar", &stat.p_bar)?;
    write_field(&dir, "a_bar", stat.a_bar.field())?;
    let (mask, report) = threshold_with(&stat.a_bar, crate::admissible::MASK_THRESHOLD, band);
    fs::write(dir.join("omega_bar.pgm"), mask_to_pgm(&mask))?;
    write_json(&dir.join("relaxation.json"), &report)?;
    fs::write(dir.join("log.csv"), log_csv(&stat.history))?;
    Ok(report)
}

pub fn static_summary(stat: &StaticTriple, relaxation: RelaxationReport) -> StaticSummary {
    StaticSummary {
        cost: stat.cost,
        gap: stat.gap,
        iterations: stat.iterations,
        certified: stat.certified,
        level: stat.level,
        relaxation,
    }
}

fn thresholded(f: &ScalarField) -> ShapeMask {
    ShapeMask::new(*f.grid(), f.values().iter().map(|&v| v >= crate::admissible::MASK_THRESHOLD).collect()).unwrap()
}

/// Largest pairwise symmetric-difference area of thresholded controls with
/// `t in [lo T, hi T]`, relative to `|Ω|`.
pub fn shape_variation(triple: &OptimalTriple, lo: f64, hi: f64) -> Result<f64> {
    let tg = triple.a.timegrid();
    let tol = 1e-9 * tg.t_final;
    let masks: Vec<ShapeMask> = (0..=tg.nt)
        .filter(|&k| tg.time(k) >= lo * tg.t_final - tol && tg.time(k) <= hi * tg.t_final + tol)
        .map(|k| thresholded(triple.a.get(k)))
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..masks.len() {
        for j in i + 1..masks.len() {
            worst = worst.max(masks[i].symmetric_difference_area(&masks[j])?);
        }
    }
    Ok(worst / triple.a.grid().measure())
}

/// `min total(t)` over `t in [lo T, hi T]` divided by `total(0)`.
pub fn middle_min_ratio(curves: &ErrorCurves, lo: f64, hi: f64) -> Option<f64> {
    let t_final = *curves.times.last()?;
    let tol = 1e-9 * t_final;
    let m = curves
        .times
        .iter()
        .zip(&curves.total)
        .filter(|(t, _)| **t >= lo * t_final - tol && **t <= hi * t_final + tol)
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    (curves.total[0] > 0.0).then(|| m / curves.total[0])
}

fn eps_key(e: f64) -> String {
    format!("{e}")
}

/// Metrics computed from an error curve alone.
#[derive(Clone, Debug, Serialize)]
pub struct CurveMetrics {
    pub integral_turnpike: f64,
    /// Keyed by the relative threshold; the absolute one is that fraction of
    /// the largest total error.
    pub measure_turnpike: BTreeMap<String, f64>,
    pub fits: BTreeMap<String, FitEntry>,
}

/// Integral and measure turnpike values, and log-linear fits of the total
/// error: `total_right` on `[T/2, hi T]` in the time to the final time, and
/// `total_left` on the mirrored window in the time from the start.
pub fn curve_metrics(c: &ErrorCurves, opts: &TurnpikeConfig) -> CurveMetrics {
    let t = *c.times.last().unwrap();
    let hi = opts.fit_window.1;
    let scale = c.total.iter().copied().fold(0.0, f64::max);
    let measure = opts
        .eps_list
        .iter()
        .map(|&e| (eps_key(e), measure_turnpike(c, e * scale)))
        .collect();
    let total: Vec<Option<f64>> = c.total.iter().map(|&v| Some(v)).collect();
    let mut fits = BTreeMap::new();
    fits.insert(
        "total_right".to_string(),
        exp_fit(&c.times, &total, t, 0.5 * t, hi * t, opts.floor).into(),
    );
    // mirror time so the fitted variable is the time from the start
    let (mt, mc): (Vec<f64>, Vec<Option<f64>>) = c.times.iter().map(|&s| t - s).zip(total).rev().unzip();
    fits.insert(
        "total_left".to_string(),
        exp_fit(&mt, &mc, t, 0.5 * t, hi * t, opts.floor).into(),
    );
    CurveMetrics {
        integral_turnpike: integral_turnpike(c),
        measure_turnpike: measure,
        fits,
    }
}

/// Solves one horizon and writes its artifacts into `dir`.
pub fn run_horizon(cfg: &RunConfig, problem: &Problem, stat: Option<&StaticTriple>, t: f64, dir: &Path) -> Result<RunOutcome> {
    let start = Instant::now();
    fs::create_dir_all(dir)?;
    let tg = problem.timegrid(cfg, t)?;
    let band = cfg.turnpike.relaxation_band;

    let stat_summary = match stat {
        Some(s) => Some(static_summary(s, write_static(dir, s, band)?)),
        None => None,
    };

    let triple = solve_dynamic(&problem.op, &problem.cost, &problem.y0, tg, problem.l, &cfg.solver.dynamic())?;
    let dyn_dir = dir.join("dynamic");
    let stride = cfg.snapshot_stride;
    let mut index = BTreeMap::new();
    for (name, traj) in [("y", &triple.y), ("p", &triple.p), ("a", &triple.a), ("vertices", &triple.vertices)] {
        write_trajectory(&dyn_dir.join(name), traj, stride)?;
        index.insert(name, name);
    }
    write_json(&dyn_dir.join("index.json"), &index)?;
    fs::write(dir.join("log.csv"), log_csv(&triple.history))?;

    let bounds = compute_comparison_bounds(&problem.op, &problem.y0, tg)?;
    let diagnosis = classify_target(&problem.op, &problem.cost, bounds, stat)?;
    let classification = diagnosis.summary(&problem.cost.y_d);
    write_json(&dir.join("classification.json"), &classification)?;

    let (lo, hi) = cfg.turnpike.fit_window;
    let mut fits = BTreeMap::new();
    let mut measure = BTreeMap::new();
    let mut integral = None;
    let mut dissip = None;
    let mut curves = None;
    let mut variation = None;
    let mut min_ratio = None;
    if let Some(s) = stat {
        let c = error_curves(&triple, s)?;
        fs::write(dir.join("curves.csv"), c.to_csv())?;
        let m = curve_metrics(&c, &cfg.turnpike);
        integral = Some(m.integral_turnpike);
        measure = m.measure_turnpike;
        fits = m.fits;
        let d = check_dissipativity(&triple.y, &triple.a, s, &problem.cost)?;
        dissip = Some((d.min_residual, d.scale));
        variation = Some(shape_variation(&triple, lo, 1.0 - lo)?);
        min_ratio = middle_min_ratio(&c, lo, 1.0 - lo);
        curves = Some(c);
    }

    let mut spectral = None;
    let mut hausdorff = None;
    if problem.cost.gamma1 == 0.0 {
        let residual = problem.cost.y_d.sub(triple.y.last())?;
        let modes = analytic_modes(&problem.grid, cfg.turnpike.kmax);
        let pred = spectral_mayer_predict(&residual, &modes, problem.l)?;
        let dh = hausdorff_curve(&triple.vertices, &pred.omega0)?;
        let mut csv = String::from("t,dh\n");
        for (k, v) in dh.iter().enumerate() {
            writeln!(csv, "{},{}", fmt_f64(tg.time(k)), v.map(fmt_f64).unwrap_or_default()).unwrap();
        }
        fs::write(dir.join("hausdorff.csv"), csv)?;
        fs::write(dir.join("omega0.pgm"), mask_to_pgm(&pred.omega0))?;
        write_json(&dir.join("spectral.json"), &pred.summary())?;
        fits.insert(
            "dh_omega0".to_string(),
            exp_fit(&tg.times(), &dh, t, lo * t, hi * t, cfg.turnpike.floor).into(),
        );
        spectral = Some(pred);
        hausdorff = Some(dh);
    }

    let report = TurnpikeReport {
        integral_turnpike: integral,
        measure_turnpike: measure,
        dissipativity_min_residual: dissip.map(|d| d.0),
        dissipativity_scale: dissip.map(|d| d.1),
        fits,
    };
    write_json(&dir.join("turnpike.json"), &report)?;

    let energy = check_energy_inequality(&triple.y, &triple.a, &problem.op)?;
    let gronwall = check_gronwall(&triple.y, &triple.a, &problem.op)?;
    let (_, middle_relaxation) = threshold_with(&triple.control(tg.nt / 2), crate::admissible::MASK_THRESHOLD, band);

    let summary = RunSummary {
        name: cfg.name.clone(),
        t_final: t,
        nt: tg.nt,
        cost: triple.cost,
        gap: triple.gap,
        iterations: triple.iterations,
        certified: triple.certified && stat.is_none_or(|s| s.certified),
        stat: stat_summary,
        classification,
        turnpike: report,
        middle_shape_variation: variation,
        middle_min_ratio: min_ratio,
        middle_relaxation,
        inequalities: InequalitySummary {
            energy_max_ratio: energy.max_ratio,
            energy_violated: energy.violated,
            gronwall_max_ratio: gronwall.max_ratio,
            gronwall_violated: gronwall.violated,
        },
        spectral: spectral.as_ref().map(SpectralPrediction::summary),
        seconds: 0.0,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    let mut summary = summary;
    summary.seconds = start.elapsed().as_secs_f64();
    Ok(RunOutcome {
        summary,
        triple,
        stat: stat.cloned(),
        curves,
        spectral,
        hausdorff,
    })
}

/// Single-horizon run into `cfg.output`.
pub fn run_scenario(cfg: &RunConfig) -> Result<RunOutcome> {
    let problem = build_problem(cfg)?;
    let stat = problem.solve_static(cfg)?;
    run_horizon(cfg, &problem, stat.as_ref(), cfg.horizon(), &cfg.output)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dir: String,
    pub cost: Option<f64>,
    pub gap: Option<f64>,
    pub certified: bool,
    pub integral_turnpike: Option<f64>,
    pub measure_turnpike: BTreeMap<String, f64>,
    pub error: Option<String>,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub name: Option<String>,
    pub rows: Vec<SweepRow>,
    /// Measure-turnpike values with thresholds relative to the total curve
    /// of the longest horizon, so rows are comparable.
    pub common_measure_turnpike: BTreeMap<String, Vec<f64>>,
    pub certified: bool,
}

pub fn horizon_dir(out: &Path, t: f64) -> PathBuf {
    out.join(format!("T_{t}"))
}

/// Runs every horizon of `T_list`, concurrently, each into `T_<value>/`.
/// Failures are recorded per horizon.
pub fn sweep_t(cfg: &RunConfig) -> Result<(SweepSummary, Vec<Option<RunOutcome>>)> {
    let ts = cfg
        .t_list
        .clone()
        .ok_or_else(|| Error::Config {
            path: "T_list".into(),
            message: "a sweep needs T_list".into(),
        })?;
    let problem = build_problem(cfg)?;
    let stat = problem.solve_static(cfg)?;
    let results: Vec<Result<RunOutcome>> = ts
        .par_iter()
        .map(|&t| {
            let sub = cfg.with_horizon(t);
            run_horizon(&sub, &problem, stat.as_ref(), t, &horizon_dir(&cfg.output, t))
        })
        .collect();

    let curves_max = results
        .iter()
        .rev()
        .find_map(|r| r.as_ref().ok().and_then(|o| o.curves.as_ref()))
        .map(|c| c.total.iter().copied().fold(0.0, f64::max));
    let mut common: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    for (&t, r) in ts.iter().zip(results) {
        let dir = format!("T_{t}");
        match r {
            Ok(o) => {
                if let (Some(c), Some(m)) = (&o.curves, curves_max) {
                    for &e in &cfg.turnpike.eps_list {
                        common.entry(eps_key(e)).or_default().push(measure_turnpike(c, e * m));
                    }
                }
                rows.push(SweepRow {
                    t_final: t,
                    dir,
                    cost: Some(o.summary.cost),
                    gap: Some(o.summary.gap),
                    certified: o.summary.certified,
                    integral_turnpike: o.summary.turnpike.integral_turnpike,
                    measure_turnpike: o.summary.turnpike.measure_turnpike.clone(),
                    error: None,
                    seconds: o.summary.seconds,
                });
                outcomes.push(Some(o));
            }
            Err(e) => {
                rows.push(SweepRow {
                    t_final: t,
                    dir,
                    cost: None,
                    gap: None,
                    certified: false,
                    integral_turnpike: None,
                    measure_turnpike: BTreeMap::new(),
                    error: Some(e.to_string()),
                    seconds: 0.0,
                });
                outcomes.push(None);
            }
        }
    }
    let summary = SweepSummary {
        name: cfg.name.clone(),
        certified: rows.iter().all(|r| r.certified),
        rows,
        common_measure_turnpike: common,
    };
    write_json(&cfg.output.join("summary.json"), &summary)?;
    Ok((summary, outcomes))
}

/// Static solve alone: writes `static/` and `static/summary.json` into
/// `cfg.output`.
pub fn run_static(cfg: &RunConfig) -> Result<StaticSummary> {
    let problem = build_problem(cfg)?;
    let stat = problem.solve_static(cfg)?.ok_or(Error::StaticMayer)?;
    let relaxation = write_static(&cfg.output, &stat, cfg.turnpike.relaxation_band)?;
    let summary = static_summary(&stat, relaxation);
    write_json(&cfg.output.join("static").join("summary.json"), &summary)?;
    Ok(summary)
}

/// Existence diagnosis for the horizon of `cfg`; writes
/// `classification.json`.
pub fn run_classify(cfg: &RunConfig) -> Result<DiagnosisSummary> {
    let problem = build_problem(cfg)?;
    let stat = problem.solve_static(cfg)?;
    let tg = problem.timegrid(cfg, cfg.horizon())?;
    let bounds = compute_comparison_bounds(&problem.op, &problem.y0, tg)?;
    let summary = classify_target(&problem.op, &problem.cost, bounds, stat.as_ref())?.summary(&problem.cost.y_d);
    write_json(&cfg.output.join("classification.json"), &summary)?;
    Ok(summary)
}

/// Spectral prediction from the terminal state `y(T)`; solves the dynamic
/// problem when no state is given. Writes `spectral.json` and `omega0.pgm`.
pub fn run_spectral(cfg: &RunConfig, terminal: Option<ScalarField>) -> Result<SpectralPrediction> {
    let problem = build_problem(cfg)?;
    let y_t = match terminal {
        Some(y) => {
            if !y.grid().same_as(&problem.grid) {
                return Err(Error::GridMismatch);
            }
            y
        }
        None => {
            let tg = problem.timegrid(cfg, cfg.horizon())?;
            let triple = solve_dynamic(&problem.op, &problem.cost, &problem.y0, tg, problem.l, &cfg.solver.dynamic())?;
            triple.y.last().clone()
        }
    };
    let residual = problem.cost.y_d.sub(&y_t)?;
    let modes = analytic_modes(&problem.grid, cfg.turnpike.kmax);
    let pred = spectral_mayer_predict(&residual, &modes, problem.l)?;
    fs::create_dir_all(&cfg.output)?;
    fs::write(cfg.output.join("omega0.pgm"), mask_to_pgm(&pred.omega0))?;
    write_json(&cfg.output.join("spectral.json"), &pred.summary())?;
    Ok(pred)
}

/// Recomputes curve metrics from a saved `curves.csv`; writes `report.json`
/// next to it.
pub fn run_report(cfg: &RunConfig, curves_path: &Path) -> Result<CurveMetrics> {
    let curves = ErrorCurves::from_csv(&fs::read_to_string(curves_path)?)?;
    if curves.times.is_empty() {
        return Err(Error::Parse(format!("{} holds no rows", curves_path.display())));
    }
    let metrics = curve_metrics(&curves, &cfg.turnpike);
    let dir = curves_path.parent().unwrap_or(Path::new("."));
    write_json(&dir.join("report.json"), &metrics)?;
    Ok(metrics)
}
