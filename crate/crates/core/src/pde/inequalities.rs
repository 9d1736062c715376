//! Energy and Gronwall-type a priori bounds evaluated along discrete paths.

use serde::Serialize;

use super::evolution::Trajectory;
use super::operator::{discrete_laplacian_lambda1, smallest_eigenvalue, EllipticOperator};
use crate::grid::ScalarField;
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    /// `max_t lhs(t) / rhs(t)`; `0/0` counts as 0.
    pub max_ratio: f64,
    pub violated: bool,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Constants used: `(C)` for the energy bound, `(C1, C2)` for Gronwall.
    pub constants: Vec<f64>,
    /// Set when the bound is not guaranteed by the derivation (drift present).
    pub report_only: bool,
}

const VIOLATION_TOL: f64 = 1e-8;

/// Squared discrete `H^1_0` seminorm, forward differences over all faces
/// including those touching the boundary.
pub fn h1_seminorm_sq(f: &ScalarField) -> f64 {
    let g = f.grid();
    let v = f.values();
    let mut sx = 0.0;
    let mut sy = 0.0;
    for j in 0..g.ny {
        for i in 0..=g.nx {
            let left = if i == 0 { 0.0 } else { v[g.index(i - 1, j)] };
            let right = if i == g.nx { 0.0 } else { v[g.index(i, j)] };
            sx += (right - left).powi(2);
        }
    }
    for i in 0..g.nx {
        for j in 0..=g.ny {
            let lo = if j == 0 { 0.0 } else { v[g.index(i, j - 1)] };
            let hi = if j == g.ny { 0.0 } else { v[g.index(i, j)] };
            sy += (hi - lo).powi(2);
        }
    }
    g.cell_area() * (sx / (g.hx * g.hx) + sy / (g.hy * g.hy))
}

fn check_paths(y: &Trajectory, a: &Trajectory, op: &EllipticOperator) -> Result<()> {
    if y.timegrid() != a.timegrid() {
        return Err(Error::InvalidTimeGrid("state and control paths differ".into()));
    }
    if !y.grid().same_as(op.grid()) || !a.grid().same_as(op.grid()) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

/// `|y(t)|^2 + int_0^t |y|_{H^1_0}^2 <= C (|y_0|^2 + int_0^t |a|^2)`.
///
/// From `(A u, u) >= beta |u|_{H^1_0}^2 - gamma |u|^2` and the discrete
/// Poincare constant `C_p`, the implicit Euler scheme satisfies the bound with
/// `beta_e = beta - gamma C_p` and `C = max(1, C_p / beta_e) / min(1, beta_e)`.
/// Without drift `beta = theta`, `gamma = 0`; with drift, Young's inequality
/// gives `beta = theta / 2`, `gamma = |b|^2 / (2 theta)` and the check is
/// report-only.
pub fn check_energy_inequality(
    y_path: &Trajectory,
    a_path: &Trajectory,
    op: &EllipticOperator,
) -> Result<InequalityReport> {
    check_paths(y_path, a_path, op)?;
    let cp = 1.0 / discrete_laplacian_lambda1(op.grid());
    let drift = op.has_drift();
    let (beta, gamma) = if drift {
        let b = op.drift().0.max_abs().max(op.drift().1.max_abs());
        let c_min = op.reaction().min();
        (op.theta() / 2.0, (b * b / (2.0 * op.theta()) - c_min).max(0.0))
    } else {
        (op.theta(), 0.0)
    };
    let beta_e = beta - gamma * cp;
    let c = if beta_e > 0.0 {
        (1.0f64).max(cp / beta_e) / beta_e.min(1.0)
    } else {
        f64::INFINITY
    };
    let tg = y_path.timegrid();
    let y0 = y_path.get(0).norm_l2().powi(2);
    let mut grad_int = 0.0;
    let mut a_int = 0.0;
    let mut lhs = vec![y0];
    let mut rhs = vec![c * y0];
    for k in 0..tg.nt {
        grad_int += tg.dt * h1_seminorm_sq(y_path.get(k + 1));
        a_int += tg.dt * a_path.get(k).norm_l2().powi(2);
        lhs.push(y_path.get(k + 1).norm_l2().powi(2) + grad_int);
        rhs.push(c * (y0 + a_int));
    }
    let max_ratio = lhs.iter().zip(&rhs).map(|(&l, &r)| ratio(l, r)).fold(0.0, f64::max);
    Ok(InequalityReport {
        max_ratio,
        violated: max_ratio > 1.0 + VIOLATION_TOL,
        lhs,
        rhs,
        constants: vec![c],
        report_only: drift,
    })
}

/// `|y(t)|^2 <= |y_0|^2 e^{-C1 t} + C2 int_0^t e^{-C1 (t-s)} |a(s)|^2 ds`
/// with `C1 = lambda_1`, `C2 = 1 / lambda_1`. The integral is exact for the
/// piecewise constant control.
pub fn check_gronwall(y_path: &Trajectory, a_path: &Trajectory, op: &EllipticOperator) -> Result<InequalityReport> {
    check_paths(y_path, a_path, op)?;
    let (pair, _) = smallest_eigenvalue(op)?;
    let c1 = pair.lambda;
    let c2 = 1.0 / c1;
    let tg = y_path.timegrid();
    let a_sq: Vec<f64> = (0..tg.nt).map(|k| a_path.get(k).norm_l2().powi(2)).collect();
    let y0 = y_path.get(0).norm_l2().powi(2);
    let mut lhs = Vec::with_capacity(tg.nt + 1);
    let mut rhs = Vec::with_capacity(tg.nt + 1);
    // running value of int_0^{t_n} e^{-C1 (t_n - s)} |a|^2 ds
    let mut conv = 0.0;
    let decay = (-c1 * tg.dt).exp();
    let slab = (1.0 - decay) / c1;
    for n in 0..=tg.nt {
        if n > 0 {
            conv = conv * decay + a_sq[n - 1] * slab;
        }
        lhs.push(y_path.get(n).norm_l2().powi(2));
        rhs.push(y0 * (-c1 * tg.time(n)).exp() + c2 * conv);
    }
    let max_ratio = lhs.iter().zip(&rhs).map(|(&l, &r)| ratio(l, r)).fold(0.0, f64::max);
    Ok(InequalityReport {
        max_ratio,
        violated: max_ratio > 1.0 + VIOLATION_TOL,
        lhs,
        rhs,
        constants: vec![c1, c2],
        report_only: op.has_drift(),
    })
}
