//! Conditional-gradient solvers for the relaxed dynamic and static shape
//! problems, the duality-gap certificate and the existence classifier.
//!
//! Controls are blocks of nodal values: `nt` blocks for the dynamic problem
//! (block `k` drives the step `t_k -> t_{k+1}`), one block for the static
//! problem. Inner products carry the quadrature weights `w_k * hx * hy` with
//! `w_k = dt` or `1`. In that inner product the gradient of the cost is `-p`.

use serde::{Deserialize, Serialize};

use crate::admissible::{bathtub_weights, check_fraction, project, Density};
use crate::grid::{dot, Grid, ScalarField};
use crate::pde::linalg::BandedLu;
use crate::pde::{to_trajectory, EllipticOperator, Propagator, TimeGrid, Trajectory};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct CostSpec {
    pub gamma1: f64,
    pub gamma2: f64,
    pub y_d: ScalarField,
}

impl CostSpec {
    pub fn new(gamma1: f64, gamma2: f64, y_d: ScalarField) -> Result<Self> {
        if !(gamma1 >= 0.0 && gamma2 >= 0.0) || !gamma1.is_finite() || !gamma2.is_finite() {
            return Err(Error::InvalidCost(format!(
                "weights must be finite and nonnegative, got ({gamma1}, {gamma2})"
            )));
        }
        if gamma1 == 0.0 && gamma2 == 0.0 {
            return Err(Error::InvalidCost("gamma1 and gamma2 are both zero".into()));
        }
        Ok(CostSpec { gamma1, gamma2, y_d })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Frank-Wolfe with exact line search.
    FrankWolfe,
    /// Accelerated projected gradient with adaptive restart; the certificate
    /// is still the Frank-Wolfe duality gap.
    ProjectedGradient,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol_gap: f64,
    pub max_iter: usize,
    pub method: Method,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_gap: 1e-6,
            max_iter: 500,
            method: Method::FrankWolfe,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IterLog {
    pub iter: usize,
    pub cost: f64,
    pub gap: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct OptimalTriple {
    pub y: Trajectory,
    pub p: Trajectory,
    /// Relaxed control; snapshot `nt` repeats snapshot `nt - 1`.
    pub a: Trajectory,
    /// Bathtub maximizers of the final adjoint, one per step (same padding).
    pub vertices: Trajectory,
    /// Bathtub levels `s_T(t_k)` of the final adjoint.
    pub levels: Vec<f64>,
    pub l: f64,
    pub cost: f64,
    pub gap: f64,
    pub iterations: usize,
    pub certified: bool,
    pub history: Vec<IterLog>,
}

impl OptimalTriple {
    pub fn control(&self, k: usize) -> Density {
        Density::new_unchecked(self.a.get(k).clone(), self.l)
    }
}

#[derive(Clone, Debug)]
pub struct StaticTriple {
    pub y_bar: ScalarField,
    pub p_bar: ScalarField,
    pub a_bar: Density,
    pub level: f64,
    pub cost: f64,
    pub gap: f64,
    pub iterations: usize,
    pub certified: bool,
    pub history: Vec<IterLog>,
}

/// A convex quadratic cost of block controls.
trait Model {
    fn blocks(&self) -> usize;
    fn weight(&self) -> f64;
    fn state(&self, a: &[Vec<f64>]) -> Vec<Vec<f64>>;
    fn cost(&self, y: &[Vec<f64>]) -> f64;
    /// `-gradient` blocks at the state `y`.
    fn adjoint(&self, y: &[Vec<f64>]) -> Vec<Vec<f64>>;
    /// `<d, H d>` from the state increment `dy` of direction `d`.
    fn curvature(&self, dy: &[Vec<f64>]) -> f64;
}

struct DynamicModel<'a> {
    prop: Propagator<'a>,
    cost: &'a CostSpec,
    y0: &'a [f64],
    h2: f64,
}

impl Model for DynamicModel<'_> {
    fn blocks(&self) -> usize {
        self.prop.timegrid().nt
    }

    fn weight(&self) -> f64 {
        self.prop.timegrid().dt
    }

    fn state(&self, a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.prop.forward_raw(a, self.y0)
    }

    fn cost(&self, y: &[Vec<f64>]) -> f64 {
        raw_dynamic_cost(self.cost, self.prop.timegrid(), self.h2, y)
    }

    fn adjoint(&self, y: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut p = self
            .prop
            .adjoint_raw(y, self.cost.y_d.values(), self.cost.gamma1, self.cost.gamma2);
        p.truncate(self.blocks());
        p
    }

    fn curvature(&self, dy: &[Vec<f64>]) -> f64 {
        let tg = self.prop.timegrid();
        let run: f64 = dy[1..].iter().map(|v| dot(v, v)).sum::<f64>() * tg.dt;
        let last = dy.last().unwrap();
        self.h2 * (self.cost.gamma1 / tg.t_final * run + self.cost.gamma2 * dot(last, last))
    }
}

fn raw_dynamic_cost(cost: &CostSpec, tg: &TimeGrid, h2: f64, y: &[Vec<f64>]) -> f64 {
    let yd = cost.y_d.values();
    let sq = |v: &Vec<f64>| v.iter().zip(yd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let run: f64 = y[1..].iter().map(sq).sum::<f64>() * tg.dt;
    0.5 * h2 * (cost.gamma1 / tg.t_final * run + cost.gamma2 * sq(y.last().unwrap()))
}

struct StaticModel<'a> {
    lu: &'a BandedLu,
    cost: &'a CostSpec,
    h2: f64,
}

impl Model for StaticModel<'_> {
    fn blocks(&self) -> usize {
        1
    }

    fn weight(&self) -> f64 {
        1.0
    }

    fn state(&self, a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        vec![self.lu.solve(&a[0])]
    }

    fn cost(&self, y: &[Vec<f64>]) -> f64 {
        let r: f64 = y[0]
            .iter()
            .zip(self.cost.y_d.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        0.5 * self.cost.gamma1 * self.h2 * r
    }

    fn adjoint(&self, y: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let g1 = self.cost.gamma1;
        let rhs: Vec<f64> = self.cost.y_d.values().iter().zip(&y[0]).map(|(d, v)| g1 * (d - v)).collect();
        vec![self.lu.solve_transpose(&rhs)]
    }

    fn curvature(&self, dy: &[Vec<f64>]) -> f64 {
        self.cost.gamma1 * self.h2 * dot(&dy[0], &dy[0])
    }
}

struct EngineOutput {
    a: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
    s: Vec<Vec<f64>>,
    levels: Vec<f64>,
    cost: f64,
    gap: f64,
    iterations: usize,
    certified: bool,
    history: Vec<IterLog>,
}

/// Linear oracle over all blocks; returns vertices, levels and the gap.
fn oracle(p: &[Vec<f64>], a: &[Vec<f64>], budget_cells: f64, wh2: f64) -> (Vec<Vec<f64>>, Vec<f64>, f64) {
    let mut gap = 0.0;
    let mut vertices = Vec::with_capacity(p.len());
    let mut levels = Vec::with_capacity(p.len());
    for (pk, ak) in p.iter().zip(a) {
        let (s, level) = bathtub_weights(pk, budget_cells);
        gap += pk.iter().zip(s.iter().zip(ak)).map(|(p, (s, a))| p * (s - a)).sum::<f64>();
        vertices.push(s);
        levels.push(level);
    }
    (vertices, levels, wh2 * gap)
}

fn sub(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(u, v)| u.iter().zip(v).map(|(x, y)| x - y).collect())
        .collect()
}

fn frank_wolfe<M: Model>(m: &M, mut a: Vec<Vec<f64>>, budget_cells: f64, h2: f64, opts: &SolverOptions) -> EngineOutput {
    let wh2 = m.weight() * h2;
    let mut y = m.state(&a);
    let mut history = Vec::new();
    let mut iter = 0;
    loop {
        let p = m.adjoint(&y);
        let (s, levels, gap) = oracle(&p, &a, budget_cells, wh2);
        let cost = m.cost(&y);
        let certified = gap <= opts.tol_gap * (1.0 + cost.abs());
        if certified || iter >= opts.max_iter {
            history.push(IterLog {
                iter,
                cost,
                gap,
                step: 0.0,
            });
            return EngineOutput {
                a,
                y,
                p,
                s,
                levels,
                cost,
                gap,
                iterations: iter,
                certified,
                history,
            };
        }
        let ys = m.state(&s);
        let dy = sub(&ys, &y);
        let curv = m.curvature(&dy);
        let mut step = if curv > 0.0 { (gap / curv).clamp(0.0, 1.0) } else { 1.0 };
        history.push(IterLog { iter, cost, gap, step });
        if step >= 1.0 - 1e-12 {
            // a full step lands on the vertex; avoid leaving rounding residue
            step = 1.0;
            a = s;
            y = ys;
        } else {
            for (ak, sk) in a.iter_mut().zip(&s) {
                for (x, v) in ak.iter_mut().zip(sk) {
                    *x = (*x + step * (v - *x)).clamp(0.0, 1.0);
                }
            }
            for (yk, dk) in y.iter_mut().zip(&dy) {
                for (x, d) in yk.iter_mut().zip(dk) {
                    *x += step * d;
                }
            }
        }
        iter += 1;
    }
}

/// Largest eigenvalue of the cost Hessian in the weighted inner product.
fn hessian_norm<M: Model>(m: &M, g: &Grid, h2: f64) -> f64 {
    let n = m.blocks();
    let zero = vec![vec![0.0; g.len()]; n];
    let y_zero = m.state(&zero);
    let p_zero = m.adjoint(&y_zero);
    // deterministic, non-symmetric start vector
    let mut d: Vec<Vec<f64>> = (0..n)
        .map(|k| (0..g.len()).map(|i| 1.0 + ((i * 7 + k * 3) % 11) as f64 / 11.0).collect())
        .collect();
    let wh2 = m.weight() * h2;
    let norm = |v: &[Vec<f64>]| (wh2 * v.iter().map(|b| dot(b, b)).sum::<f64>()).sqrt();
    let mut lambda = 0.0;
    for _ in 0..30 {
        let nd = norm(&d);
        for b in d.iter_mut() {
            b.iter_mut().for_each(|x| *x /= nd);
        }
        let yd = m.state(&d);
        let dy = sub(&yd, &y_zero);
        let pd = m.adjoint(&yd);
        lambda = m.curvature(&dy);
        // H d = p(0) - p(d)
        d = sub(&p_zero, &pd);
    }
    lambda
}

fn projected_gradient<M: Model>(
    m: &M,
    g: &Grid,
    l: f64,
    a0: Vec<Vec<f64>>,
    budget_cells: f64,
    h2: f64,
    opts: &SolverOptions,
) -> Result<EngineOutput> {
    const CHECK_EVERY: usize = 5;
    let wh2 = m.weight() * h2;
    let lip = 1.05 * hessian_norm(m, g, h2);
    let step = if lip > 0.0 { 1.0 / lip } else { 1.0 };
    let proj = |v: Vec<f64>| -> Result<Vec<f64>> {
        Ok(project(&ScalarField::from_vec_unchecked(*g, v), l)?.into_field().into_values())
    };
    let mut a = a0;
    let mut y = m.state(&a);
    let mut cost = m.cost(&y);
    let mut z = a.clone();
    let mut yz = y.clone();
    let mut t = 1.0_f64;
    let mut history = Vec::new();
    let mut iter = 0;
    loop {
        if iter % CHECK_EVERY == 0 || iter >= opts.max_iter {
            let p = m.adjoint(&y);
            let (s, levels, gap) = oracle(&p, &a, budget_cells, wh2);
            let certified = gap <= opts.tol_gap * (1.0 + cost.abs());
            history.push(IterLog {
                iter,
                cost,
                gap,
                step,
            });
            if certified || iter >= opts.max_iter {
                return Ok(EngineOutput {
                    a,
                    y,
                    p,
                    s,
                    levels,
                    cost,
                    gap,
                    iterations: iter,
                    certified,
                    history,
                });
            }
        }
        let pz = m.adjoint(&yz);
        let a_new = z
            .iter()
            .zip(&pz)
            .map(|(zk, pk)| proj(zk.iter().zip(pk).map(|(x, p)| x + step * p).collect()))
            .collect::<Result<Vec<_>>>()?;
        let y_new = m.state(&a_new);
        let cost_new = m.cost(&y_new);
        if cost_new > cost && t > 1.0 {
            // adaptive restart: drop momentum and retry from the current point
            t = 1.0;
            z = a.clone();
            yz = y.clone();
            iter += 1;
            continue;
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        z = a_new
            .iter()
            .zip(&a)
            .map(|(u, v)| u.iter().zip(v).map(|(x, y)| x + beta * (x - y)).collect())
            .collect();
        yz = y_new
            .iter()
            .zip(&y)
            .map(|(u, v)| u.iter().zip(v).map(|(x, y)| x + beta * (x - y)).collect())
            .collect();
        a = a_new;
        y = y_new;
        cost = cost_new;
        t = t_new;
        iter += 1;
    }
}

fn run_engine<M: Model>(m: &M, g: &Grid, l: f64, opts: &SolverOptions) -> Result<EngineOutput> {
    let budget_cells = l * g.len() as f64;
    let h2 = g.cell_area();
    let a0 = vec![vec![l; g.len()]; m.blocks()];
    match opts.method {
        Method::FrankWolfe => Ok(frank_wolfe(m, a0, budget_cells, h2, opts)),
        Method::ProjectedGradient => projected_gradient(m, g, l, a0, budget_cells, h2, opts),
    }
}

fn check_inputs(op: &EllipticOperator, cost: &CostSpec, l: f64, opts: &SolverOptions) -> Result<()> {
    check_fraction(l)?;
    if !cost.y_d.grid().same_as(op.grid()) {
        return Err(Error::GridMismatch);
    }
    if !(opts.tol_gap >= 0.0) {
        return Err(Error::InvalidCost(format!("tol_gap must be nonnegative, got {}", opts.tol_gap)));
    }
    Ok(())
}

fn pad(tg: TimeGrid, g: Grid, mut blocks: Vec<Vec<f64>>) -> Result<Trajectory> {
    let last = blocks.last().unwrap().clone();
    blocks.push(last);
    to_trajectory(tg, g, blocks)
}

/// Solves the relaxed time-dependent problem from `a = L`.
pub fn solve_dynamic(
    op: &EllipticOperator,
    cost: &CostSpec,
    y0: &ScalarField,
    tg: TimeGrid,
    l: f64,
    opts: &SolverOptions,
) -> Result<OptimalTriple> {
    check_inputs(op, cost, l, opts)?;
    if !y0.grid().same_as(op.grid()) {
        return Err(Error::GridMismatch);
    }
    let g = *op.grid();
    let model = DynamicModel {
        prop: Propagator::new(op, tg)?,
        cost,
        y0: y0.values(),
        h2: g.cell_area(),
    };
    let out = run_engine(&model, &g, l, opts)?;
    // full adjoint path including the terminal snapshot
    let p_full = model
        .prop
        .adjoint_raw(&out.y, cost.y_d.values(), cost.gamma1, cost.gamma2);
    let mut levels = out.levels;
    levels.push(*levels.last().unwrap());
    Ok(OptimalTriple {
        y: to_trajectory(tg, g, out.y)?,
        p: to_trajectory(tg, g, p_full)?,
        a: pad(tg, g, out.a)?,
        vertices: pad(tg, g, out.s)?,
        levels,
        l,
        cost: out.cost,
        gap: out.gap,
        iterations: out.iterations,
        certified: out.certified,
        history: out.history,
    })
}

/// Solves the relaxed static problem from `a = L`.
pub fn solve_static(op: &EllipticOperator, cost: &CostSpec, l: f64, opts: &SolverOptions) -> Result<StaticTriple> {
    check_inputs(op, cost, l, opts)?;
    if cost.gamma1 == 0.0 {
        return Err(Error::StaticMayer);
    }
    let g = *op.grid();
    let model = StaticModel {
        lu: op.factor()?,
        cost,
        h2: g.cell_area(),
    };
    let mut out = run_engine(&model, &g, l, opts)?;
    let a_bar = ScalarField::from_vec_unchecked(g, out.a.remove(0));
    Ok(StaticTriple {
        y_bar: ScalarField::new(g, out.y.remove(0))?,
        p_bar: ScalarField::new(g, out.p.remove(0))?,
        a_bar: Density::new_unchecked(a_bar, l),
        level: out.levels[0],
        cost: out.cost,
        gap: out.gap,
        iterations: out.iterations,
        certified: out.certified,
        history: out.history,
    })
}

/// Discrete cost `g1/(2T) sum_{k>=1} dt |y^k - y_d|^2 + g2/2 |y^nt - y_d|^2`.
pub fn dynamic_cost(cost: &CostSpec, y: &Trajectory) -> f64 {
    let raw: Vec<Vec<f64>> = y.snapshots().iter().map(|s| s.values().to_vec()).collect();
    raw_dynamic_cost(cost, y.timegrid(), y.grid().cell_area(), &raw)
}

pub fn static_cost(cost: &CostSpec, y: &ScalarField) -> f64 {
    0.5 * cost.gamma1 * y.sub(&cost.y_d).map(|v| v.norm_l2().powi(2)).unwrap_or(f64::NAN)
}

/// Derivative of the discrete cost along the control direction `d`, from the
/// adjoint path `p`: `-sum_{k<nt} dt (p^k, d^k)`.
pub fn directional_derivative(p: &Trajectory, d: &Trajectory) -> Result<f64> {
    let tg = p.timegrid();
    let mut s = 0.0;
    for k in 0..tg.nt {
        s += p.get(k).dot(d.get(k))?;
    }
    Ok(-tg.dt * s)
}

/// Frank-Wolfe gap `sum_{k<nt} dt (p^k, s^k - a^k)` with `s^k` the bathtub
/// maximizer of `p^k`. Nonnegative for feasible `a` and an upper bound on the
/// suboptimality of `a`.
pub fn duality_gap(p_path: &Trajectory, a_path: &Trajectory, l: f64) -> Result<f64> {
    check_fraction(l)?;
    let tg = p_path.timegrid();
    if a_path.timegrid().nt != tg.nt || !a_path.grid().same_as(p_path.grid()) {
        return Err(Error::GridMismatch);
    }
    let g = p_path.grid();
    let p: Vec<Vec<f64>> = (0..tg.nt).map(|k| p_path.get(k).values().to_vec()).collect();
    let a: Vec<Vec<f64>> = (0..tg.nt).map(|k| a_path.get(k).values().to_vec()).collect();
    let (_, _, gap) = oracle(&p, &a, l * g.len() as f64, tg.dt * g.cell_area());
    Ok(gap)
}

/// `y^0 = min` and `y^1 = max` over the static and time-dependent states with
/// controls `a = 0` and `a = 1`, over all time steps.
pub fn compute_comparison_bounds(
    op: &EllipticOperator,
    y0: &ScalarField,
    tg: TimeGrid,
) -> Result<(ScalarField, ScalarField)> {
    let g = *op.grid();
    let lu = op.factor()?;
    let prop = Propagator::new(op, tg)?;
    let zero = vec![0.0; g.len()];
    let one = vec![1.0; g.len()];
    let ys0 = zero.clone();
    let ys1 = lu.solve(&one);
    let yt0 = prop.forward_raw(&vec![zero; tg.nt], y0.values());
    let yt1 = prop.forward_raw(&vec![one; tg.nt], y0.values());
    let mut lo = ys0;
    let mut hi = ys1;
    for snap in &yt0 {
        lo.iter_mut().zip(snap).for_each(|(m, v)| *m = m.min(*v));
    }
    for snap in &yt1 {
        hi.iter_mut().zip(snap).for_each(|(m, v)| *m = m.max(*v));
    }
    Ok((ScalarField::new(g, lo)?, ScalarField::new(g, hi)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExistenceCase {
    MayerUnique,
    LagrangeComparison,
    LagrangeBeta,
    RelaxationRisk,
}

#[derive(Clone, Debug)]
pub struct ExistenceDiagnosis {
    pub case: ExistenceCase,
    pub y0_bound: ScalarField,
    pub y1_bound: ScalarField,
    /// `min (beta - A y_d)`; `NaN` when the test was not reached.
    pub beta_margin: f64,
    /// `beta = s_bar A c* / gamma1` on the grid, when evaluated.
    pub beta: Option<ScalarField>,
    pub a_yd: Option<ScalarField>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosisSummary {
    pub case: ExistenceCase,
    pub beta_margin: Option<f64>,
    pub max_a_yd: Option<f64>,
    pub min_a_yd: Option<f64>,
    pub below_y0: bool,
    pub above_y1: bool,
}

impl ExistenceDiagnosis {
    pub fn summary(&self, y_d: &ScalarField) -> DiagnosisSummary {
        DiagnosisSummary {
            case: self.case,
            beta_margin: self.beta_margin.is_finite().then_some(self.beta_margin),
            max_a_yd: self.a_yd.as_ref().map(|f| f.max()),
            min_a_yd: self.a_yd.as_ref().map(|f| f.min()),
            below_y0: strictly_below(y_d, &self.y0_bound),
            above_y1: strictly_below(&self.y1_bound, y_d),
        }
    }
}

fn strictly_below(u: &ScalarField, v: &ScalarField) -> bool {
    u.values().iter().zip(v.values()).all(|(a, b)| a < b)
}

/// Relative tolerance of the pointwise `A y_d <= beta` test.
const BETA_TOL: f64 = 1e-9;

/// Sufficient conditions for classical (non-relaxed) optimal shapes.
///
/// Checked in order: pure terminal cost; `y_d` strictly below `y^0` or above
/// `y^1`; `A y_d <= s_bar A c* / gamma1` pointwise, where `s_bar` is the level
/// of the static solution and `c* = c - div b`. `A y_d` is evaluated
/// pointwise, so `y_d` is not forced to vanish on the boundary.
pub fn classify_target(
    op: &EllipticOperator,
    cost: &CostSpec,
    bounds: (ScalarField, ScalarField),
    stat: Option<&StaticTriple>,
) -> Result<ExistenceDiagnosis> {
    let (y0_bound, y1_bound) = bounds;
    let mut diag = ExistenceDiagnosis {
        case: ExistenceCase::MayerUnique,
        y0_bound,
        y1_bound,
        beta_margin: f64::NAN,
        beta: None,
        a_yd: None,
    };
    if cost.gamma1 == 0.0 {
        return Ok(diag);
    }
    if strictly_below(&cost.y_d, &diag.y0_bound) || strictly_below(&diag.y1_bound, &cost.y_d) {
        diag.case = ExistenceCase::LagrangeComparison;
        return Ok(diag);
    }
    let stat = stat.ok_or_else(|| Error::InvalidCost("the beta test needs a static solution".into()))?;
    let a_yd = op.apply_pointwise(&cost.y_d)?;
    let ac = op.apply_pointwise(&op.adjoint_reaction())?;
    let beta = ac.scale(stat.level / cost.gamma1);
    let margin = beta.sub(&a_yd)?.min();
    let scale = 1.0 + a_yd.max_abs() + beta.max_abs();
    diag.case = if margin >= -BETA_TOL * scale {
        ExistenceCase::LagrangeBeta
    } else {
        ExistenceCase::RelaxationRisk
    };
    diag.beta_margin = margin;
    diag.beta = Some(beta);
    diag.a_yd = Some(a_yd);
    Ok(diag)
}
