use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

use super::linalg::{BandedLu, CsrMatrix};
use crate::grid::{Grid, ScalarField};
use crate::{Error, Result};

/// Result of checking the ellipticity margin `theta > theta_1`.
#[derive(Clone, Debug, Serialize)]
pub struct EllipticityDiagnostic {
    pub theta: f64,
    /// Largest root of `X^2 / (4 min(1, C_p)) - |c|_inf X - sum_i |b_i|_inf / 2`.
    pub theta1: f64,
    pub poincare: f64,
    pub passes: bool,
    pub max_cell_peclet: f64,
    pub warnings: Vec<String>,
}

/// Discrete `A y = -div(alpha grad y) + b . grad y + c y` with homogeneous
/// Dirichlet conditions, and its exact matrix transpose `A*`.
#[derive(Clone, Debug)]
pub struct EllipticOperator {
    grid: Grid,
    alpha: ScalarField,
    bx: ScalarField,
    by: ScalarField,
    c: ScalarField,
    theta: f64,
    a: CsrMatrix,
    a_star: CsrMatrix,
    symmetric: bool,
    diagnostic: EllipticityDiagnostic,
    factor: OnceLock<BandedLu>,
}

/// Smallest eigenvalue of the five-point Dirichlet Laplacian on the box.
pub fn discrete_laplacian_lambda1(grid: &Grid) -> f64 {
    let sx = (PI / (2.0 * (grid.nx + 1) as f64)).sin();
    let sy = (PI / (2.0 * (grid.ny + 1) as f64)).sin();
    4.0 * sx * sx / (grid.hx * grid.hx) + 4.0 * sy * sy / (grid.hy * grid.hy)
}

fn largest_root_theta1(poincare: f64, c_inf: f64, b_sum: f64) -> f64 {
    // k X^2 - c X - b/2 = 0 with k = 1 / (4 min(1, C_p))
    let k = 1.0 / (4.0 * poincare.min(1.0));
    (c_inf + (c_inf * c_inf + 2.0 * k * b_sum).sqrt()) / (2.0 * k)
}

impl EllipticOperator {
    pub fn assemble(
        grid: Grid,
        alpha: &ScalarField,
        b: (&ScalarField, &ScalarField),
        c: &ScalarField,
    ) -> Result<Self> {
        for f in [alpha, b.0, b.1, c] {
            if !f.grid().same_as(&grid) {
                return Err(Error::GridMismatch);
            }
        }
        if let Some(k) = alpha.values().iter().position(|&v| v <= 0.0) {
            return Err(Error::InvalidCoefficient(format!(
                "alpha must be positive, got {} at node {k}",
                alpha.values()[k]
            )));
        }
        if let Some(k) = c.values().iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidCoefficient(format!(
                "c must be nonnegative, got {} at node {k}",
                c.values()[k]
            )));
        }
        let (nx, ny) = (grid.nx, grid.ny);
        let (hx2, hy2) = (grid.hx * grid.hx, grid.hy * grid.hy);
        let al = alpha.values();
        let mut rows = Vec::with_capacity(grid.len());
        let mut max_peclet: f64 = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                let k = grid.index(i, j);
                let mut row = Vec::with_capacity(5);
                let mut diag = c.values()[k];
                let face = |nb: Option<usize>| nb.map_or(al[k], |m| 0.5 * (al[k] + al[m]));
                let east = (i + 1 < nx).then(|| grid.index(i + 1, j));
                let west = (i > 0).then(|| grid.index(i - 1, j));
                let north = (j + 1 < ny).then(|| grid.index(i, j + 1));
                let south = (j > 0).then(|| grid.index(i, j - 1));
                let (bxk, byk) = (b.0.values()[k], b.1.values()[k]);
                max_peclet = max_peclet
                    .max(bxk.abs() * grid.hx / (2.0 * al[k]))
                    .max(byk.abs() * grid.hy / (2.0 * al[k]));
                for (nb, h2, h, bc, sign) in [
                    (east, hx2, grid.hx, bxk, 1.0),
                    (west, hx2, grid.hx, bxk, -1.0),
                    (north, hy2, grid.hy, byk, 1.0),
                    (south, hy2, grid.hy, byk, -1.0),
                ] {
                    let af = face(nb);
                    diag += af / h2;
                    if let Some(m) = nb {
                        row.push((m, -af / h2 + sign * bc / (2.0 * h)));
                    }
                }
                row.push((k, diag));
                rows.push(row);
            }
        }
        let a = CsrMatrix::from_rows(rows);
        let a_star = a.transpose();
        let symmetric = a.is_symmetric();
        let theta = alpha.min();

        let poincare = 1.0 / discrete_laplacian_lambda1(&grid);
        let c_inf = c.max_abs();
        let b_sum = b.0.max_abs() + b.1.max_abs();
        let theta1 = largest_root_theta1(poincare, c_inf, b_sum);
        let mut warnings = Vec::new();
        if max_peclet > 1.0 {
            warnings.push(format!(
                "cell Peclet number {max_peclet:.3} exceeds 1; centered drift may oscillate"
            ));
        }
        if theta <= theta1 {
            warnings.push(format!("ellipticity margin violated: theta={theta} <= theta1={theta1}"));
        }
        Ok(EllipticOperator {
            grid,
            alpha: alpha.clone(),
            bx: b.0.clone(),
            by: b.1.clone(),
            c: c.clone(),
            theta,
            a,
            a_star,
            symmetric,
            diagnostic: EllipticityDiagnostic {
                theta,
                theta1,
                poincare,
                passes: theta > theta1,
                max_cell_peclet: max_peclet,
                warnings,
            },
            factor: OnceLock::new(),
        })
    }

    /// Dirichlet Laplacian `-Δ`.
    pub fn laplacian(grid: Grid) -> Result<Self> {
        let z = ScalarField::zeros(grid);
        Self::assemble(grid, &ScalarField::constant(grid, 1.0), (&z, &z), &z)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn alpha(&self) -> &ScalarField {
        &self.alpha
    }

    pub fn drift(&self) -> (&ScalarField, &ScalarField) {
        (&self.bx, &self.by)
    }

    pub fn reaction(&self) -> &ScalarField {
        &self.c
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    pub fn adjoint_matrix(&self) -> &CsrMatrix {
        &self.a_star
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn has_drift(&self) -> bool {
        self.bx.max_abs() > 0.0 || self.by.max_abs() > 0.0
    }

    pub fn diagnostic(&self) -> &EllipticityDiagnostic {
        &self.diagnostic
    }

    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check(f)?;
        Ok(ScalarField::from_vec_unchecked(self.grid, self.a.mul(f.values())))
    }

    pub fn apply_adjoint(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check(f)?;
        Ok(ScalarField::from_vec_unchecked(self.grid, self.a_star.mul(f.values())))
    }

    fn check(&self, f: &ScalarField) -> Result<()> {
        if f.grid().same_as(&self.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub(crate) fn factor(&self) -> Result<&BandedLu> {
        if let Some(lu) = self.factor.get() {
            return Ok(lu);
        }
        let lu = BandedLu::factor(&self.a)?;
        Ok(self.factor.get_or_init(|| lu))
    }

    /// Applies the differential expression to a function that does not
    /// vanish on the boundary. Boundary values are extrapolated quadratically
    /// from the three nearest interior nodes, which is exact for quadratics.
    pub fn apply_pointwise(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check(f)?;
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let v = f.values();
        let al = self.alpha.values();
        let at = |i: isize, j: isize| -> f64 {
            let ii = i.clamp(0, nx as isize - 1) as usize;
            let jj = j.clamp(0, ny as isize - 1) as usize;
            if i == -1 {
                3.0 * v[g.index(0, jj)] - 3.0 * v[g.index(1, jj)] + v[g.index(2, jj)]
            } else if i == nx as isize {
                3.0 * v[g.index(nx - 1, jj)] - 3.0 * v[g.index(nx - 2, jj)] + v[g.index(nx - 3, jj)]
            } else if j == -1 {
                3.0 * v[g.index(ii, 0)] - 3.0 * v[g.index(ii, 1)] + v[g.index(ii, 2)]
            } else if j == ny as isize {
                3.0 * v[g.index(ii, ny - 1)] - 3.0 * v[g.index(ii, ny - 2)] + v[g.index(ii, ny - 3)]
            } else {
                v[g.index(ii, jj)]
            }
        };
        let mut out = vec![0.0; g.len()];
        for j in 0..ny {
            for i in 0..nx {
                let k = g.index(i, j);
                let (ii, jj) = (i as isize, j as isize);
                let face = |di: isize, dj: isize| {
                    let (pi, pj) = (ii + di, jj + dj);
                    if pi < 0 || pj < 0 || pi >= nx as isize || pj >= ny as isize {
                        al[k]
                    } else {
                        0.5 * (al[k] + al[g.index(pi as usize, pj as usize)])
                    }
                };
                let c0 = v[k];
                let diff = (face(1, 0) * (c0 - at(ii + 1, jj)) + face(-1, 0) * (c0 - at(ii - 1, jj)))
                    / (g.hx * g.hx)
                    + (face(0, 1) * (c0 - at(ii, jj + 1)) + face(0, -1) * (c0 - at(ii, jj - 1)))
                        / (g.hy * g.hy);
                let drift = self.bx.values()[k] * (at(ii + 1, jj) - at(ii - 1, jj)) / (2.0 * g.hx)
                    + self.by.values()[k] * (at(ii, jj + 1) - at(ii, jj - 1)) / (2.0 * g.hy);
                out[k] = diff + drift + self.c.values()[k] * c0;
            }
        }
        Ok(ScalarField::from_vec_unchecked(g, out))
    }

    /// `c* = c - div b`, with centered differences inside and one-sided at
    /// the edges of the interior lattice.
    pub fn adjoint_reaction(&self) -> ScalarField {
        let g = self.grid;
        let d = |f: &ScalarField, i: usize, j: usize, along_x: bool| -> f64 {
            let (n, h) = if along_x { (g.nx, g.hx) } else { (g.ny, g.hy) };
            let pos = if along_x { i } else { j };
            let get = |p: usize| if along_x { f.at(p, j) } else { f.at(i, p) };
            if pos == 0 {
                (get(1) - get(0)) / h
            } else if pos + 1 == n {
                (get(n - 1) - get(n - 2)) / h
            } else {
                (get(pos + 1) - get(pos - 1)) / (2.0 * h)
            }
        };
        let vals = (0..g.len())
            .map(|k| {
                let (i, j) = (k % g.nx, k / g.nx);
                self.c.values()[k] - d(&self.bx, i, j, true) - d(&self.by, i, j, false)
            })
            .collect();
        ScalarField::from_vec_unchecked(g, vals)
    }
}

/// Eigenvalue with an L2-normalized eigenvector.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda: f64,
    pub phi: ScalarField,
    /// Mode numbers `(m, n)` for analytic box modes.
    pub label: Option<(usize, usize)>,
}

/// Solves `A y = a` to relative residual `rtol`.
pub fn solve_static_pde(op: &EllipticOperator, a: &ScalarField) -> Result<ScalarField> {
    solve_static_pde_with(op, a, 1e-10)
}

pub fn solve_static_pde_with(op: &EllipticOperator, a: &ScalarField, rtol: f64) -> Result<ScalarField> {
    op.check(a)?;
    let b = a.values();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        return Ok(ScalarField::zeros(*a.grid()));
    }
    let lu = op.factor()?;
    let mut x = lu.solve(b);
    for _ in 0..4 {
        let r: Vec<f64> = b.iter().zip(op.matrix().mul(&x)).map(|(bi, ai)| bi - ai).collect();
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= rtol * bnorm {
            return ScalarField::new(*a.grid(), x);
        }
        let dx = lu.solve(&r);
        x.iter_mut().zip(dx).for_each(|(xi, d)| *xi += d);
    }
    Err(Error::NoConvergence(format!(
        "static solve did not reach relative residual {rtol}"
    )))
}

/// Solves `A* p = f`.
pub fn solve_static_adjoint(op: &EllipticOperator, f: &ScalarField) -> Result<ScalarField> {
    op.check(f)?;
    let lu = op.factor()?;
    ScalarField::new(*f.grid(), lu.solve_transpose(f.values()))
}

/// Sampled Dirichlet modes `sin(m pi (x-xmin)/Lx) sin(n pi (y-ymin)/Ly)` with
/// `1 <= m, n <= kmax`, sorted by eigenvalue then `(m, n)`.
pub fn analytic_modes(grid: &Grid, kmax: usize) -> Vec<EigenPair> {
    let mut labels: Vec<(f64, usize, usize)> = Vec::new();
    for m in 1..=kmax.min(grid.nx) {
        for n in 1..=kmax.min(grid.ny) {
            let lam = PI * PI * ((m * m) as f64 / grid.lx().powi(2) + (n * n) as f64 / grid.ly().powi(2));
            labels.push((lam, m, n));
        }
    }
    labels.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    labels
        .into_iter()
        .map(|(lambda, m, n)| {
            let phi = ScalarField::from_fn(*grid, |x, y| {
                (m as f64 * PI * (x - grid.xmin) / grid.lx()).sin()
                    * (n as f64 * PI * (y - grid.ymin) / grid.ly()).sin()
            });
            let nrm = phi.norm_l2();
            EigenPair {
                lambda,
                phi: phi.scale(1.0 / nrm),
                label: Some((m, n)),
            }
        })
        .collect()
}

/// Smallest eigenvalue by inverse power iteration on `A` (its symmetric part
/// when `A` is not symmetric). Returns the pair and the Poincare-type
/// constant `1 / lambda_1`.
pub fn smallest_eigenvalue(op: &EllipticOperator) -> Result<(EigenPair, f64)> {
    let sym;
    let lu_owned;
    let (mat, lu): (&CsrMatrix, &BandedLu) = if op.is_symmetric() {
        (op.matrix(), op.factor()?)
    } else {
        sym = op.matrix().symmetric_part();
        lu_owned = BandedLu::factor(&sym)?;
        (&sym, &lu_owned)
    };
    let n = mat.dim();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda_prev = f64::INFINITY;
    for _ in 0..2000 {
        let mut y = lu.solve(&x);
        let ny = norm(&y);
        y.iter_mut().for_each(|v| *v /= ny);
        let ay = mat.mul(&y);
        let lambda = crate::grid::dot(&ay, &y);
        x = y;
        if (lambda - lambda_prev).abs() <= 1e-14 * lambda.abs() {
            let grid = *op.grid();
            let mut phi = ScalarField::new(grid, x)?;
            if phi.values().iter().sum::<f64>() < 0.0 {
                phi = phi.scale(-1.0);
            }
            let phi = phi.scale(1.0 / phi.norm_l2());
            return Ok((
                EigenPair {
                    lambda,
                    phi,
                    label: None,
                },
                1.0 / lambda,
            ));
        }
        lambda_prev = lambda;
    }
    Err(Error::NoConvergence("inverse power iteration stagnated".into()))
}
