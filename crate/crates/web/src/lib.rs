//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations: the static optimal density, a coarse time-dependent
//! solve browsed with a time slider, and the bathtub maximizer of a mix of
//! the first Dirichlet modes. Fields are returned row-major with node
//! `(i, j)` at `j n + i`, `j = 0` being the bottom row.

use shape_turnpike::admissible::{bathtub_maximize, threshold_with, MASK_THRESHOLD, RELAXATION_BAND};
use shape_turnpike::pde::{analytic_modes, EllipticOperator, TimeGrid};
use shape_turnpike::solver::{solve_dynamic, solve_static, CostSpec, SolverOptions};
use shape_turnpike::turnpike::error_curves;
use shape_turnpike::{Error, Grid, ScalarField};
use wasm_bindgen::prelude::*;

const STATIC_TOL: f64 = 1e-9;
const DYNAMIC_TOL: f64 = 1e-7;

/// `0`: constant `0.1`; `1`: `-(x^2 + y^2 - 2) / 20`.
fn target(grid: Grid, kind: u32) -> Result<ScalarField, Error> {
    match kind {
        0 => Ok(ScalarField::constant(grid, 0.1)),
        1 => Ok(ScalarField::from_fn(grid, |x, y| -(x * x + y * y - 2.0) / 20.0)),
        k => Err(Error::InvalidCost(format!("unknown target kind {k}"))),
    }
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct StaticShape {
    n: usize,
    density: Vec<f64>,
    state: Vec<f64>,
    cost: f64,
    gap: f64,
    iterations: usize,
    relaxed_area: f64,
}

#[wasm_bindgen]
impl StaticShape {
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn density(&self) -> Vec<f64> {
        self.density.clone()
    }
    pub fn state(&self) -> Vec<f64> {
        self.state.clone()
    }
    pub fn cost(&self) -> f64 {
        self.cost
    }
    pub fn gap(&self) -> f64 {
        self.gap
    }
    pub fn iterations(&self) -> usize {
        self.iterations
    }
    #[wasm_bindgen(js_name = relaxedArea)]
    pub fn relaxed_area(&self) -> f64 {
        self.relaxed_area
    }
}

pub fn static_shape(n: usize, l: f64, kind: u32) -> Result<StaticShape, Error> {
    let grid = Grid::square(n)?;
    let op = EllipticOperator::laplacian(grid)?;
    let cost = CostSpec::new(1.0, 0.0, target(grid, kind)?)?;
    let opts = SolverOptions {
        tol_gap: STATIC_TOL,
        max_iter: 20_000,
        ..SolverOptions::default()
    };
    let s = solve_static(&op, &cost, l, &opts)?;
    let (_, report) = threshold_with(&s.a_bar, MASK_THRESHOLD, RELAXATION_BAND);
    Ok(StaticShape {
        n,
        density: s.a_bar.field().values().to_vec(),
        state: s.y_bar.values().to_vec(),
        cost: s.cost,
        gap: s.gap,
        iterations: s.iterations,
        relaxed_area: report.relaxed_area,
    })
}

#[wasm_bindgen(js_name = solveStatic)]
pub fn solve_static_js(n: usize, l: f64, kind: u32) -> Result<StaticShape, JsError> {
    static_shape(n, l, kind).map_err(js)
}

#[wasm_bindgen]
pub struct DynamicRun {
    n: usize,
    t_final: f64,
    density: Vec<Vec<f64>>,
    state: Vec<Vec<f64>>,
    static_density: Vec<f64>,
    total: Vec<f64>,
    cost: f64,
    gap: f64,
}

#[wasm_bindgen]
impl DynamicRun {
    pub fn n(&self) -> usize {
        self.n
    }
    /// Number of time steps; snapshots are indexed `0..=steps`.
    pub fn steps(&self) -> usize {
        self.density.len() - 1
    }
    #[wasm_bindgen(js_name = finalTime)]
    pub fn final_time(&self) -> f64 {
        self.t_final
    }
    /// Control at step `k`, clamped to the last step.
    pub fn density(&self, k: usize) -> Vec<f64> {
        self.density[k.min(self.steps())].clone()
    }
    pub fn state(&self, k: usize) -> Vec<f64> {
        self.state[k.min(self.steps())].clone()
    }
    #[wasm_bindgen(js_name = staticDensity)]
    pub fn static_density(&self) -> Vec<f64> {
        self.static_density.clone()
    }
    /// Total distance to the static triple at every step.
    #[wasm_bindgen(js_name = totalError)]
    pub fn total_error(&self) -> Vec<f64> {
        self.total.clone()
    }
    pub fn cost(&self) -> f64 {
        self.cost
    }
    pub fn gap(&self) -> f64 {
        self.gap
    }
}

pub fn dynamic_run(n: usize, l: f64, t_final: f64, steps_per_unit: usize, kind: u32) -> Result<DynamicRun, Error> {
    let grid = Grid::square(n)?;
    let op = EllipticOperator::laplacian(grid)?;
    let cost = CostSpec::new(1.0, 0.0, target(grid, kind)?)?;
    let stat = solve_static(
        &op,
        &cost,
        l,
        &SolverOptions {
            tol_gap: STATIC_TOL,
            max_iter: 20_000,
            ..SolverOptions::default()
        },
    )?;
    let nt = ((t_final * steps_per_unit as f64).round() as usize).max(1);
    let tg = TimeGrid::new(t_final, nt)?;
    let opts = SolverOptions {
        tol_gap: DYNAMIC_TOL,
        max_iter: 2_000,
        ..SolverOptions::default()
    };
    let triple = solve_dynamic(&op, &cost, &ScalarField::zeros(grid), tg, l, &opts)?;
    let curves = error_curves(&triple, &stat)?;
    let values = |t: &shape_turnpike::pde::Trajectory| t.snapshots().iter().map(|s| s.values().to_vec()).collect();
    Ok(DynamicRun {
        n,
        t_final,
        density: values(&triple.a),
        state: values(&triple.y),
        static_density: stat.a_bar.field().values().to_vec(),
        total: curves.total,
        cost: triple.cost,
        gap: triple.gap,
    })
}

#[wasm_bindgen(js_name = solveDynamic)]
pub fn dynamic_run_js(n: usize, l: f64, t_final: f64, steps_per_unit: usize, kind: u32) -> Result<DynamicRun, JsError> {
    dynamic_run(n, l, t_final, steps_per_unit, kind).map_err(js)
}

/// Bathtub maximizer of `sum_j w_j phi_j` over densities with volume
/// fraction `l`, the modes taken in increasing eigenvalue order.
pub fn mode_mix(n: usize, l: f64, weights: &[f64]) -> Result<Vec<f64>, Error> {
    let grid = Grid::square(n)?;
    let modes = analytic_modes(&grid, 4);
    let mut phi = ScalarField::zeros(grid);
    for (w, m) in weights.iter().zip(&modes) {
        phi.axpy(*w, &m.phi)?;
    }
    Ok(bathtub_maximize(&phi, l)?.density.into_field().into_values())
}

#[wasm_bindgen(js_name = bathtubModes)]
pub fn mode_mix_js(n: usize, l: f64, weights: Vec<f64>) -> Result<Vec<f64>, JsError> {
    mode_mix(n, l, &weights).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_shape_fills_the_budget_and_certifies() {
        let s = static_shape(15, 0.125, 0).unwrap();
        assert_eq!(s.density.len(), 225);
        let volume: f64 = s.density.iter().sum();
        assert!(volume <= 0.125 * 225.0 + 1e-9);
        assert!(s.gap <= STATIC_TOL * (1.0 + s.cost));
        assert!(s.density.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn dynamic_run_exposes_every_step() {
        let r = dynamic_run(11, 0.125, 1.0, 8, 1).unwrap();
        assert_eq!(r.steps(), 8);
        assert_eq!(r.total_error().len(), 9);
        assert_eq!(r.density(100), r.density(8));
        assert_eq!(r.state(0), vec![0.0; 121]);
        assert!(r.total_error()[0] > r.total_error()[4]);
    }

    #[test]
    fn single_mode_gives_a_centered_superlevel_set() {
        let n = 21;
        let a = mode_mix(n, 0.2, &[1.0]).unwrap();
        let center = (n / 2) * n + n / 2;
        assert_eq!(a[center], 1.0);
        assert_eq!(a[0], 0.0);
        let volume: f64 = a.iter().sum();
        assert!((volume - 0.2 * (n * n) as f64).abs() < 1e-9);
    }

    #[test]
    fn unknown_target_is_an_error() {
        assert!(static_shape(9, 0.1, 7).is_err());
    }
}
