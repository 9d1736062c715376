//! Turnpike diagnostics: distances between the time-dependent and static
//! optima, integral and measure statistics, the dissipation inequality,
//! exponential fits, Hausdorff curves and the spectral predictor of the
//! terminal-cost shape.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::admissible::{bathtub_maximize, threshold_field, MASK_THRESHOLD};
use crate::grid::{hausdorff, ScalarField, ShapeMask};
use crate::io::fmt_f64;
use crate::pde::{EigenPair, Trajectory};
use crate::solver::{CostSpec, OptimalTriple, StaticTriple};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorCurves {
    pub times: Vec<f64>,
    pub dy: Vec<f64>,
    pub dp: Vec<f64>,
    pub da_l2: Vec<f64>,
    pub da_l1: Vec<f64>,
    /// `None` where a thresholded mask is empty.
    pub dh: Vec<Option<f64>>,
    pub total: Vec<f64>,
}

pub const CURVES_HEADER: &str = "t,dy,dp,da_l2,da_l1,dh,total";

impl ErrorCurves {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with an empty `dh` cell for missing values.
    pub fn to_csv(&self) -> String {
        let mut s = format!("{CURVES_HEADER}\n");
        for k in 0..self.len() {
            let dh = self.dh[k].map(fmt_f64).unwrap_or_default();
            writeln!(
                s,
                "{},{},{},{},{},{},{}",
                fmt_f64(self.times[k]),
                fmt_f64(self.dy[k]),
                fmt_f64(self.dp[k]),
                fmt_f64(self.da_l2[k]),
                fmt_f64(self.da_l1[k]),
                dh,
                fmt_f64(self.total[k])
            )
            .unwrap();
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(CURVES_HEADER) {
            return Err(Error::Parse("unexpected curves header".into()));
        }
        let mut c = ErrorCurves {
            times: vec![],
            dy: vec![],
            dp: vec![],
            da_l2: vec![],
            da_l1: vec![],
            dh: vec![],
            total: vec![],
        };
        for (n, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 {
                return Err(Error::Parse(format!("line {}: expected 7 columns", n + 2)));
            }
            let num = |s: &str| -> Result<f64> { s.trim().parse().map_err(|e| Error::Parse(format!("line {}: {e}", n + 2))) };
            c.times.push(num(cols[0])?);
            c.dy.push(num(cols[1])?);
            c.dp.push(num(cols[2])?);
            c.da_l2.push(num(cols[3])?);
            c.da_l1.push(num(cols[4])?);
            c.dh.push(if cols[5].trim().is_empty() { None } else { Some(num(cols[5])?) });
            c.total.push(num(cols[6])?);
        }
        Ok(c)
    }
}

fn mask_or_none(f: &ScalarField) -> Option<ShapeMask> {
    let m = threshold_field(f, MASK_THRESHOLD);
    (!m.is_empty()).then_some(m)
}

/// Distances between the dynamic triple at each time step and the static
/// triple. The dynamic adjoint carries the `1/T` weight of the running cost,
/// so `dp` compares `T p_T(t)` with `p_bar`.
pub fn error_curves(triple: &OptimalTriple, stat: &StaticTriple) -> Result<ErrorCurves> {
    let g = triple.y.grid();
    if !g.same_as(stat.y_bar.grid()) {
        return Err(Error::GridMismatch);
    }
    let tg = *triple.y.timegrid();
    let a_bar = stat.a_bar.field();
    let static_mask = mask_or_none(a_bar);
    let mut c = ErrorCurves {
        times: tg.times(),
        dy: vec![],
        dp: vec![],
        da_l2: vec![],
        da_l1: vec![],
        dh: vec![],
        total: vec![],
    };
    for k in 0..=tg.nt {
        let dy = triple.y.get(k).sub(&stat.y_bar)?.norm_l2();
        let dp = triple.p.get(k).scale(tg.t_final).sub(&stat.p_bar)?.norm_l2();
        let da = triple.a.get(k).sub(a_bar)?;
        let dh = match (&static_mask, mask_or_none(triple.a.get(k))) {
            (Some(s), Some(m)) => Some(hausdorff(&m, s)?),
            _ => None,
        };
        c.dy.push(dy);
        c.dp.push(dp);
        c.da_l2.push(da.norm_l2());
        c.da_l1.push(da.norm_l1());
        c.dh.push(dh);
        c.total.push(dy + dp + da.norm_l2());
    }
    Ok(c)
}

/// Trapezoidal `int_0^T (dy^2 + dp^2) dt`.
pub fn integral_turnpike(curves: &ErrorCurves) -> f64 {
    let f: Vec<f64> = curves.dy.iter().zip(&curves.dp).map(|(a, b)| a * a + b * b).collect();
    curves
        .times
        .windows(2)
        .zip(f.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Discrete `|P_{eps,T}| = dt #{k : dy + dp > eps}`.
pub fn measure_turnpike(curves: &ErrorCurves, eps: f64) -> f64 {
    let dt = if curves.times.len() > 1 { curves.times[1] - curves.times[0] } else { 0.0 };
    let n = curves.dy.iter().zip(&curves.dp).filter(|(a, b)| *a + *b > eps).count();
    dt * n as f64
}

#[derive(Clone, Debug, Serialize)]
pub struct DissipativityReport {
    pub times: Vec<f64>,
    pub residual: Vec<f64>,
    pub min_residual: f64,
    /// Largest sum of magnitudes of the terms of the inequality.
    pub scale: f64,
}

/// Residual of the dissipation inequality with storage `S(y) = (y, p_bar)`,
/// supply `w = (|y - y_d|^2 - |y_bar - y_d|^2) / 2` and rate
/// `|y - y_bar|^2 / 2`:
/// `[S(y(0)) + int w] - [S(y(tau)) + int |y - y_bar|^2 / 2]`.
///
/// Time integrals use the right endpoint of each step, matching the implicit
/// scheme, so the residual equals `sum dt (a_bar - a^k, p_bar)` up to
/// rounding and is bounded below by `-tau` times the static gap. `p_bar` is
/// divided by `gamma1` so any positive running weight is accepted.
pub fn check_dissipativity(
    y_path: &Trajectory,
    a_path: &Trajectory,
    stat: &StaticTriple,
    cost: &CostSpec,
) -> Result<DissipativityReport> {
    if cost.gamma1 <= 0.0 {
        return Err(Error::InvalidCost("dissipativity needs gamma1 > 0".into()));
    }
    if a_path.timegrid() != y_path.timegrid() {
        return Err(Error::InvalidTimeGrid("state and control paths differ".into()));
    }
    let tg = *y_path.timegrid();
    let p_bar = stat.p_bar.scale(1.0 / cost.gamma1);
    let storage = |y: &ScalarField| y.dot(&p_bar);
    let w_bar = 0.5 * stat.y_bar.sub(&cost.y_d)?.norm_l2().powi(2);
    let s0 = storage(y_path.get(0))?;
    let mut supply = 0.0;
    let mut rate = 0.0;
    let mut supply_abs = 0.0;
    let mut residual = vec![0.0];
    let mut scale: f64 = s0.abs();
    for k in 1..=tg.nt {
        let y = y_path.get(k);
        let w = 0.5 * y.sub(&cost.y_d)?.norm_l2().powi(2) - w_bar;
        let r = 0.5 * y.sub(&stat.y_bar)?.norm_l2().powi(2);
        supply += tg.dt * w;
        supply_abs += tg.dt * w.abs();
        rate += tg.dt * r;
        let sk = storage(y)?;
        residual.push((s0 + supply) - (sk + rate));
        scale = scale.max(s0.abs() + supply_abs + sk.abs() + rate);
    }
    let min_residual = residual.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DissipativityReport {
        times: tg.times(),
        residual,
        min_residual,
        scale,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpFit {
    #[serde(rename = "M")]
    pub m: f64,
    pub mu: f64,
    pub window: (f64, f64),
    pub residual: f64,
    pub points: usize,
}

pub const DEFAULT_FLOOR: f64 = 1e-12;

/// Least-squares line through `(T - t, log max(c, floor))` over
/// `t in [t_lo, t_hi]`, so that `c ~ M exp(-mu (T - t))`.
pub fn exp_fit(
    times: &[f64],
    curve: &[Option<f64>],
    t_final: f64,
    t_lo: f64,
    t_hi: f64,
    floor: f64,
) -> Result<ExpFit> {
    if !(t_lo < t_hi) || !(floor > 0.0) {
        return Err(Error::DegenerateFit(format!("bad window [{t_lo}, {t_hi}] or floor {floor}")));
    }
    let tol = 1e-9 * t_final.abs().max(1.0);
    let pts: Vec<(f64, f64, bool)> = times
        .iter()
        .zip(curve)
        .filter(|(t, _)| **t >= t_lo - tol && **t <= t_hi + tol)
        .filter_map(|(t, c)| c.filter(|v| v.is_finite()).map(|v| (t_final - t, v.max(floor).ln(), v <= floor)))
        .collect();
    if pts.len() < 4 {
        return Err(Error::DegenerateFit(format!("{} usable points in the window", pts.len())));
    }
    if pts.iter().all(|p| p.2) {
        return Err(Error::DegenerateFit("all points at the floor".into()));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let mx = sx / n;
    let my = sy / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("window holds a single time".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(ExpFit {
        m: intercept.exp(),
        mu: -slope,
        window: (t_lo, t_hi),
        residual,
        points: pts.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeCoefficient {
    pub m: usize,
    pub n: usize,
    pub lambda: f64,
    pub zeta: f64,
}

#[derive(Clone, Debug)]
pub struct SpectralPrediction {
    pub lambda: f64,
    pub mu: f64,
    pub j0: usize,
    pub phi0: ScalarField,
    pub s0: f64,
    pub omega0: ShapeMask,
    pub coefficients: Vec<ModeCoefficient>,
    /// `min |grad Phi0|` over the cells adjacent to the boundary of `omega0`.
    pub slope_min: f64,
    /// `2 / slope_min`, the level-set stability constant.
    pub c_f: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralSummary {
    pub lambda: f64,
    pub mu: f64,
    pub predicted_rate: f64,
    pub j0: usize,
    pub s0: f64,
    pub omega0_area: f64,
    pub slope_min: f64,
    pub c_f: f64,
    pub coefficients: Vec<ModeCoefficient>,
}

impl SpectralPrediction {
    pub fn summary(&self) -> SpectralSummary {
        SpectralSummary {
            lambda: self.lambda,
            mu: self.mu,
            predicted_rate: self.mu - self.lambda,
            j0: self.j0,
            s0: self.s0,
            omega0_area: self.omega0.area(),
            slope_min: self.slope_min,
            c_f: self.c_f,
            coefficients: self.coefficients.clone(),
        }
    }
}

pub const TOL_COEF: f64 = 1e-10;

/// Expands `residual = y_d - y_T(T)` in `modes` and builds the leading
/// eigenspace component `Phi0`, its bathtub shape `omega0` and the next rate.
pub fn spectral_mayer_predict(residual: &ScalarField, modes: &[EigenPair], l: f64) -> Result<SpectralPrediction> {
    let coefficients = modes
        .iter()
        .map(|m| {
            let (mi, ni) = m.label.unwrap_or((0, 0));
            Ok(ModeCoefficient {
                m: mi,
                n: ni,
                lambda: m.lambda,
                zeta: residual.dot(&m.phi)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let j0 = coefficients
        .iter()
        .position(|c| c.zeta.abs() > TOL_COEF)
        .ok_or_else(|| Error::DegenerateFit("all spectral coefficients vanish".into()))?;
    let lambda = modes[j0].lambda;
    let same = |x: f64| (x - lambda).abs() <= 1e-12 * lambda;
    let mut phi0 = ScalarField::zeros(*residual.grid());
    for (m, c) in modes.iter().zip(&coefficients) {
        if same(m.lambda) {
            phi0.axpy(c.zeta, &m.phi)?;
        }
    }
    let mu = modes
        .iter()
        .map(|m| m.lambda)
        .find(|&x| x > lambda && !same(x))
        .ok_or_else(|| Error::DegenerateFit("no eigenvalue above the leading one".into()))?;
    let bt = bathtub_maximize(&phi0, l)?;
    let omega0 = threshold_field(bt.density.field(), MASK_THRESHOLD);
    let slope_min = boundary_slope(&phi0, &omega0);
    Ok(SpectralPrediction {
        lambda,
        mu,
        j0,
        phi0,
        s0: bt.level,
        omega0,
        coefficients,
        slope_min,
        c_f: 2.0 / slope_min,
    })
}

/// Minimum central-difference gradient norm over cells with a 4-neighbour on
/// the other side of the mask boundary.
fn boundary_slope(f: &ScalarField, m: &ShapeMask) -> f64 {
    let g = f.grid();
    let inside = m.inside();
    let val = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= g.nx as isize || j >= g.ny as isize {
            0.0
        } else {
            f.at(i as usize, j as usize)
        }
    };
    let ins = |i: isize, j: isize| -> Option<bool> {
        if i < 0 || j < 0 || i >= g.nx as isize || j >= g.ny as isize {
            None
        } else {
            Some(inside[g.index(i as usize, j as usize)])
        }
    };
    let mut best = f64::INFINITY;
    for j in 0..g.ny as isize {
        for i in 0..g.nx as isize {
            let here = ins(i, j).unwrap();
            let band = [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .any(|(di, dj)| ins(i + di, j + dj).is_some_and(|o| o != here));
            if band {
                let gx = (val(i + 1, j) - val(i - 1, j)) / (2.0 * g.hx);
                let gy = (val(i, j + 1) - val(i, j - 1)) / (2.0 * g.hy);
                best = best.min(gx.hypot(gy));
            }
        }
    }
    best
}

/// Hausdorff distance from the thresholded control to `reference` at each
/// time step; `None` where the thresholded control is empty.
pub fn hausdorff_curve(a_path: &Trajectory, reference: &ShapeMask) -> Result<Vec<Option<f64>>> {
    if reference.is_empty() {
        return Err(Error::EmptyShape);
    }
    a_path
        .snapshots()
        .iter()
        .map(|a| match mask_or_none(a) {
            Some(m) => hausdorff(&m, reference).map(Some),
            None => Ok(None),
        })
        .collect()
}

/// Running median of width 3; endpoints and missing entries are kept.
pub fn median3(c: &[Option<f64>]) -> Vec<Option<f64>> {
    (0..c.len())
        .map(|k| {
            if k == 0 || k + 1 == c.len() {
                return c[k];
            }
            match (c[k - 1], c[k], c[k + 1]) {
                (Some(a), Some(b), Some(d)) => {
                    let mut v = [a, b, d];
                    v.sort_by(f64::total_cmp);
                    Some(v[1])
                }
                _ => c[k],
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TurnpikeReport {
    pub integral_turnpike: Option<f64>,
    pub measure_turnpike: BTreeMap<String, f64>,
    pub dissipativity_min_residual: Option<f64>,
    pub dissipativity_scale: Option<f64>,
    pub fits: BTreeMap<String, FitEntry>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum FitEntry {
    Fit(ExpFit),
    Degenerate { degenerate: String },
}

impl From<Result<ExpFit>> for FitEntry {
    fn from(r: Result<ExpFit>) -> Self {
        match r {
            Ok(f) => FitEntry::Fit(f),
            Err(e) => FitEntry::Degenerate { degenerate: e.to_string() },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::pde::{analytic_modes, TimeGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn synthetic(times: &[f64], f: impl Fn(f64) -> f64) -> ErrorCurves {
        let v: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        ErrorCurves {
            times: times.to_vec(),
            dy: v.clone(),
            dp: v.clone(),
            da_l2: v.clone(),
            da_l1: v.clone(),
            dh: v.iter().map(|&x| Some(x)).collect(),
            total: v.iter().map(|x| 3.0 * x).collect(),
        }
    }

    fn grid_times(t: f64, nt: usize) -> Vec<f64> {
        TimeGrid::new(t, nt).unwrap().times()
    }

    #[test]
    fn integral_examples() {
        let times = grid_times(5.0, 100);
        assert_eq!(integral_turnpike(&synthetic(&times, |_| 0.0)), 0.0);
        let long = grid_times(40.0, 40000);
        let v = integral_turnpike(&synthetic(&long, |t| (-t).exp()));
        assert!((v - 1.0).abs() < 1e-5, "{v}");
    }

    #[test]
    fn integral_trapezoid_vs_rectangle() {
        let times = grid_times(3.0, 60);
        let c = synthetic(&times, |t| (3.0 * t).sin().abs() + 0.1);
        let dt = 0.05;
        let rect: f64 = (0..60).map(|k| dt * (c.dy[k].powi(2) + c.dp[k].powi(2))).sum();
        let maxsq = c.dy.iter().map(|v| 2.0 * v * v).fold(0.0, f64::max);
        assert!((integral_turnpike(&c) - rect).abs() <= 2.0 * dt * maxsq);
    }

    #[test]
    fn measure_examples() {
        let times = grid_times(5.0, 160);
        let eps = 0.2;
        assert_eq!(measure_turnpike(&synthetic(&times, |_| eps / 4.0), eps), 0.0);
        let c = synthetic(&times, |t| if t <= 1.0 { eps } else { 0.0 });
        assert!((measure_turnpike(&c, eps) - 1.0).abs() <= 1.0 / 32.0 + 1e-12);
        let mut last = f64::INFINITY;
        let c = synthetic(&times, |t| (t - 2.5).powi(2));
        for e in [0.01, 0.1, 0.5, 1.0, 3.0] {
            let m = measure_turnpike(&c, e);
            assert!(m <= last);
            last = m;
        }
    }

    #[test]
    fn csv_round_trip() {
        let times = grid_times(2.0, 10);
        let mut c = synthetic(&times, |t| (t * 1.37).exp() / 3.0);
        c.dh[3] = None;
        let back = ErrorCurves::from_csv(&c.to_csv()).unwrap();
        assert_eq!(back, c);
        assert!(c.to_csv().starts_with("t,dy,dp,da_l2,da_l1,dh,total\n"));
    }

    #[test]
    fn exp_fit_exact_and_noisy() {
        let t_final = 3.0;
        let times = grid_times(t_final, 96);
        let c: Vec<Option<f64>> = times.iter().map(|t| Some(3.0 * (-2.0 * (t_final - t)).exp())).collect();
        let f = exp_fit(&times, &c, t_final, 0.0, t_final, DEFAULT_FLOOR).unwrap();
        assert!((f.m - 3.0).abs() < 1e-8 && (f.mu - 2.0).abs() < 1e-8);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noisy: Vec<Option<f64>> = c
            .iter()
            .map(|v| v.map(|x| x * (1.0 + 0.01 * rng.gen_range(-1.0..1.0))))
            .collect();
        let f = exp_fit(&times, &noisy, t_final, 0.0, t_final, DEFAULT_FLOOR).unwrap();
        assert!((f.mu - 2.0).abs() < 0.1);

        let zero = vec![Some(0.0); times.len()];
        assert!(matches!(
            exp_fit(&times, &zero, t_final, 0.0, t_final, DEFAULT_FLOOR),
            Err(Error::DegenerateFit(_))
        ));
        assert!(exp_fit(&times, &c, t_final, 1.0, 1.02, DEFAULT_FLOOR).is_err());
    }

    #[test]
    fn two_sided_protocol_recovers_rate() {
        let (t_final, m, mu) = (40.0, 1.0, 1.2);
        let times = grid_times(t_final, 8000);
        let c: Vec<Option<f64>> = times
            .iter()
            .map(|&t| Some(m * (-mu * (t_final - t)).exp() + m * (-mu * t).exp()))
            .collect();
        let nu = 0.1 * t_final;
        let f = exp_fit(&times, &c, t_final, t_final / 2.0, t_final - nu, DEFAULT_FLOOR).unwrap();
        assert!((f.mu - mu).abs() < 0.01 * mu, "{}", f.mu);
    }

    #[test]
    fn spectral_single_mode() {
        let g = Grid::square(31).unwrap();
        let modes = analytic_modes(&g, 5);
        let r = modes[0].phi.scale(0.3);
        let pred = spectral_mayer_predict(&r, &modes, 0.125).unwrap();
        assert!((pred.lambda - PI * PI / 2.0).abs() < 1e-12);
        assert!((pred.mu - 5.0 * PI * PI / 4.0).abs() < 1e-12);
        assert_eq!(pred.j0, 0);
        assert!(pred.phi0.sub(&r).unwrap().max_abs() < 1e-12);
        // centered and symmetric
        let c = g.index(15, 15);
        assert!(pred.omega0.inside()[c]);
        let flipped: Vec<bool> = (0..g.len())
            .map(|k| {
                let (i, j) = (k % g.nx, k / g.nx);
                pred.omega0.inside()[g.index(g.nx - 1 - i, j)]
            })
            .collect();
        assert_eq!(flipped, pred.omega0.inside());
        // volume: budget plus at most part of one symmetric tie class
        assert!(pred.omega0.area() <= 0.125 * g.measure() + 8.0 * g.cell_area());
        assert!(pred.slope_min > 0.0 && pred.c_f.is_finite());

        let zero = ScalarField::zeros(g);
        assert!(spectral_mayer_predict(&zero, &modes, 0.125).is_err());
    }

    #[test]
    fn hausdorff_curve_examples() {
        let g = Grid::square(16).unwrap();
        let tg = TimeGrid::new(1.0, 4).unwrap();
        let reference = ShapeMask::from_fn(g, |x, y| x.abs() < 0.4 && y.abs() < 0.3);
        let chi = reference.indicator();
        let path = Trajectory::constant(tg, &chi);
        assert!(hausdorff_curve(&path, &reference).unwrap().iter().all(|v| *v == Some(0.0)));

        let shifted = ShapeMask::from_fn(g, |x, y| (x - g.hx).abs() < 0.4 && y.abs() < 0.3);
        let mut snaps = vec![chi.clone(); 5];
        snaps[2] = shifted.indicator();
        snaps[3] = ScalarField::zeros(g);
        let path = Trajectory::new(tg, snaps).unwrap();
        let c = hausdorff_curve(&path, &reference).unwrap();
        assert!((c[2].unwrap() - g.hx).abs() < 1e-12);
        assert_eq!(c[3], None);
        assert_eq!(median3(&[Some(1.0), Some(5.0), Some(2.0), Some(3.0)])[1], Some(2.0));
    }
}
