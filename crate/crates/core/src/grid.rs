//! Uniform box discretization with homogeneous Dirichlet boundary.
//!
//! Unknowns live on interior nodes only; boundary nodes are implicitly zero.
//! Node `(i, j)` sits at `x = xmin + (i+1) hx`, `y = ymin + (j+1) hy` and is
//! stored at linear index `j * nx + i`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl Grid {
    /// `bounds` is `[xmin, xmax, ymin, ymax]`.
    pub fn new(bounds: [f64; 4], nx: usize, ny: usize) -> Result<Self> {
        let [xmin, xmax, ymin, ymax] = bounds;
        if bounds.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite bounds".into()));
        }
        if xmax <= xmin || ymax <= ymin {
            return Err(Error::InvalidGrid("non-positive extent".into()));
        }
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 interior nodes per axis, got {nx}x{ny}"
            )));
        }
        Ok(Grid {
            xmin,
            xmax,
            ymin,
            ymax,
            nx,
            ny,
            hx: (xmax - xmin) / (nx + 1) as f64,
            hy: (ymax - ymin) / (ny + 1) as f64,
        })
    }

    /// The unit-free square `[-1,1]^2` with `n` interior nodes per axis.
    pub fn square(n: usize) -> Result<Self> {
        Self::new([-1.0, 1.0, -1.0, 1.0], n, n)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let (i, j) = (idx % self.nx, idx / self.nx);
        (self.x(i), self.y(j))
    }

    pub fn x(&self, i: usize) -> f64 {
        self.xmin + (i + 1) as f64 * self.hx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.ymin + (j + 1) as f64 * self.hy
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn lx(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn ly(&self) -> f64 {
        self.ymax - self.ymin
    }

    /// Measure of the domain as seen by the quadrature: `nx ny hx hy`.
    pub fn measure(&self) -> f64 {
        self.len() as f64 * self.cell_area()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }
}

/// Nodal values of a function on the grid interior.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(ScalarField { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.coords(k);
                f(x, y)
            })
            .collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn check(&self, other: &ScalarField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        self.check(other)?;
        Ok(ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        self.map(|v| c * v)
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &ScalarField) -> Result<()> {
        self.check(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    /// L2 inner product with the rectangle rule.
    pub fn dot(&self, other: &ScalarField) -> Result<f64> {
        self.check(other)?;
        Ok(self.grid.cell_area() * dot(&self.values, &other.values))
    }

    pub fn integrate(&self) -> f64 {
        self.grid.cell_area() * self.values.iter().sum::<f64>()
    }

    pub fn norm_l2(&self) -> f64 {
        (self.grid.cell_area() * dot(&self.values, &self.values)).sqrt()
    }

    pub fn norm_l1(&self) -> f64 {
        self.grid.cell_area() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn integrate(f: &ScalarField) -> f64 {
    f.integrate()
}

pub fn norm_l2(f: &ScalarField) -> f64 {
    f.norm_l2()
}

/// A shape as a set of grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeMask {
    grid: Grid,
    inside: Vec<bool>,
}

impl ShapeMask {
    pub fn new(grid: Grid, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: inside.len(),
            });
        }
        Ok(ShapeMask { grid, inside })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> bool) -> Self {
        let inside = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.coords(k);
                f(x, y)
            })
            .collect();
        ShapeMask { grid, inside }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// `|omega| = hx hy #nodes`.
    pub fn area(&self) -> f64 {
        self.count() as f64 * self.grid.cell_area()
    }

    pub fn indicator(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.inside.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn symmetric_difference_area(&self, other: &ShapeMask) -> Result<f64> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let n = self
            .inside
            .iter()
            .zip(&other.inside)
            .filter(|(a, b)| a != b)
            .count();
        Ok(n as f64 * self.grid.cell_area())
    }
}

/// Squared distances of the 1-D lower envelope `min_p f[p] + h^2 (q-p)^2`.
fn edt_1d(f: &[f64], h: f64, out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    z.clear();
    let h2 = h * h;
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        let fq = f[q] + h2 * (q * q) as f64;
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let fp = f[p] + h2 * (p * p) as f64;
                    let s = (fq - fp) / (2.0 * h2 * (q - p) as f64);
                    if s <= *z.last().unwrap() {
                        v.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        z.push(s);
                        break;
                    }
                }
            }
        }
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = h2 * d * d + f[v[k]];
    }
}

/// Exact Euclidean distance from every node to the nearest node of `m`,
/// in physical units (separable lower-envelope transform).
pub fn distance_transform(m: &ShapeMask) -> Result<ScalarField> {
    if m.is_empty() {
        return Err(Error::EmptyShape);
    }
    let g = m.grid;
    let (nx, ny) = (g.nx, g.ny);
    let mut sq: Vec<f64> = m
        .inside
        .iter()
        .map(|&b| if b { 0.0 } else { f64::INFINITY })
        .collect();
    let (mut v, mut z) = (Vec::new(), Vec::new());
    let mut buf = vec![0.0; nx.max(ny)];
    for j in 0..ny {
        let row = &mut sq[j * nx..(j + 1) * nx];
        edt_1d(row, g.hx, &mut buf[..nx], &mut v, &mut z);
        row.copy_from_slice(&buf[..nx]);
    }
    let mut col = vec![0.0; ny];
    for i in 0..nx {
        for j in 0..ny {
            col[j] = sq[j * nx + i];
        }
        edt_1d(&col, g.hy, &mut buf[..ny], &mut v, &mut z);
        for j in 0..ny {
            sq[j * nx + i] = buf[j];
        }
    }
    Ok(ScalarField::from_vec_unchecked(
        g,
        sq.into_iter().map(f64::sqrt).collect(),
    ))
}

/// Hausdorff distance between two node sets.
pub fn hausdorff(m1: &ShapeMask, m2: &ShapeMask) -> Result<f64> {
    if !m1.grid.same_as(&m2.grid) {
        return Err(Error::GridMismatch);
    }
    let d1 = distance_transform(m1)?;
    let d2 = distance_transform(m2)?;
    let one_sided = |mask: &ShapeMask, dist: &ScalarField| {
        mask.inside
            .iter()
            .zip(&dist.values)
            .filter(|(&b, _)| b)
            .fold(0.0_f64, |m, (_, &d)| m.max(d))
    };
    Ok(one_sided(m1, &d2).max(one_sided(m2, &d1)))
}
