//! The relaxed admissible set `{0 <= a <= 1, int a <= L |Ω|}`: bathtub
//! linear maximization, Euclidean projection and thresholding to shapes.
//!
//! `|Ω|` is the quadrature measure `nx ny hx hy`, so the budget is
//! `L nx ny` cells.

use serde::Serialize;

use crate::grid::{Grid, ScalarField, ShapeMask};
use crate::{Error, Result};

pub fn check_fraction(l: f64) -> Result<()> {
    if l > 0.0 && l < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidVolumeFraction(l))
    }
}

/// A relaxed control.
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    field: ScalarField,
    l: f64,
}

impl Density {
    pub fn new(field: ScalarField, l: f64) -> Result<Self> {
        check_fraction(l)?;
        if let Some(k) = field.values().iter().position(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidCoefficient(format!(
                "density value {} at node {k} outside [0,1]",
                field.values()[k]
            )));
        }
        let budget = l * field.grid().measure();
        if field.integrate() > budget * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::InvalidCoefficient(format!(
                "density volume {} exceeds budget {budget}",
                field.integrate()
            )));
        }
        Ok(Density { field, l })
    }

    pub(crate) fn new_unchecked(field: ScalarField, l: f64) -> Self {
        Density { field, l }
    }

    pub fn uniform(grid: Grid, l: f64) -> Result<Self> {
        Density::new(ScalarField::constant(grid, l), l)
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn into_field(self) -> ScalarField {
        self.field
    }

    pub fn fraction(&self) -> f64 {
        self.l
    }

    pub fn budget(&self) -> f64 {
        self.l * self.field.grid().measure()
    }
}

pub fn volume(d: &Density) -> f64 {
    d.field.integrate()
}

#[derive(Clone, Debug)]
pub struct BathtubResult {
    pub density: Density,
    /// `inf { s : |{phi > s}| <= L |Ω| }`
    pub level: f64,
    /// Cells with value strictly inside `(0, 1)`.
    pub fractional_cells: usize,
}

/// Weights of the bathtub maximizer on raw values with a budget in cells.
///
/// Cells are taken by decreasing value while the value is positive and
/// budget remains. A tie class at the threshold shares the remainder
/// uniformly. Values within `1e-12 max|phi|` of each other are tied.
/// Returns the weights and the level.
pub fn bathtub_weights(phi: &[f64], budget_cells: f64) -> (Vec<f64>, f64) {
    let n = phi.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| phi[b].total_cmp(&phi[a]).then(a.cmp(&b)));
    let scale = phi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tie = 1e-12 * scale;

    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    while start < n {
        let head = phi[order[start]];
        let mut end = start + 1;
        while end < n && head - phi[order[end]] <= tie {
            end += 1;
        }
        groups.push((start, end));
        start = end;
    }

    let mut level = f64::NEG_INFINITY;
    let mut cum = 0usize;
    for &(s, e) in &groups {
        cum += e - s;
        if cum as f64 > budget_cells {
            level = phi[order[s]];
            break;
        }
    }

    let mut w = vec![0.0; n];
    let mut remaining = budget_cells;
    for &(s, e) in &groups {
        let head = phi[order[s]];
        if head <= 0.0 || remaining <= 0.0 {
            break;
        }
        let size = (e - s) as f64;
        if size <= remaining {
            for &k in &order[s..e] {
                w[k] = 1.0;
            }
            remaining -= size;
        } else {
            let frac = remaining / size;
            for &k in &order[s..e] {
                w[k] = frac;
            }
            break;
        }
    }
    (w, level)
}

/// Maximizer of `<phi, a>` over the relaxed admissible set.
pub fn bathtub_maximize(phi: &ScalarField, l: f64) -> Result<BathtubResult> {
    check_fraction(l)?;
    let g = *phi.grid();
    let (w, level) = bathtub_weights(phi.values(), l * g.len() as f64);
    let fractional_cells = w.iter().filter(|&&v| v > 0.0 && v < 1.0).count();
    Ok(BathtubResult {
        density: Density::new_unchecked(ScalarField::from_vec_unchecked(g, w), l),
        level,
        fractional_cells,
    })
}

/// Euclidean projection onto the relaxed admissible set.
pub fn project(f: &ScalarField, l: f64) -> Result<Density> {
    check_fraction(l)?;
    let g = *f.grid();
    let budget = l * g.len() as f64;
    let clamped = |mu: f64| -> (Vec<f64>, f64) {
        let v: Vec<f64> = f.values().iter().map(|&x| (x - mu).clamp(0.0, 1.0)).collect();
        let s = v.iter().sum();
        (v, s)
    };
    let (v0, s0) = clamped(0.0);
    if s0 <= budget {
        return Ok(Density::new_unchecked(ScalarField::from_vec_unchecked(g, v0), l));
    }
    let (mut lo, mut hi) = (0.0, f.max());
    // volume tolerance 1e-12 in area units
    let tol_cells = 1e-12 / g.cell_area();
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        let (_, s) = clamped(mid);
        if s > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        let (_, s_hi) = clamped(hi);
        if budget - s_hi <= tol_cells || hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            let (v, _) = clamped(hi);
            return Ok(Density::new_unchecked(ScalarField::from_vec_unchecked(g, v), l));
        }
    }
    Err(Error::NoConvergence("projection bisection".into()))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RelaxationReport {
    /// Measure of cells with value in the relaxation band.
    pub relaxed_area: f64,
    pub mask_volume: f64,
    pub budget: f64,
    pub volume_deviation: f64,
    pub relaxed: bool,
    pub threshold: f64,
    pub band: (f64, f64),
}

pub const MASK_THRESHOLD: f64 = 0.5;
pub const RELAXATION_BAND: (f64, f64) = (0.05, 0.95);

/// Mask `{a >= 0.5}` and the relaxation indicator over `(0.05, 0.95)`.
pub fn threshold_to_shape(d: &Density) -> (ShapeMask, RelaxationReport) {
    threshold_with(d, MASK_THRESHOLD, RELAXATION_BAND)
}

pub fn threshold_with(d: &Density, threshold: f64, band: (f64, f64)) -> (ShapeMask, RelaxationReport) {
    let g = *d.field.grid();
    let mask = threshold_field(&d.field, threshold);
    let relaxed = d.field.values().iter().filter(|&&v| v > band.0 && v < band.1).count();
    let relaxed_area = relaxed as f64 * g.cell_area();
    let mask_volume = mask.area();
    let budget = d.budget();
    (
        mask,
        RelaxationReport {
            relaxed_area,
            mask_volume,
            budget,
            volume_deviation: mask_volume - budget,
            relaxed: relaxed > 0,
            threshold,
            band,
        },
    )
}

pub(crate) fn threshold_field(f: &ScalarField, threshold: f64) -> ShapeMask {
    ShapeMask::new(*f.grid(), f.values().iter().map(|&v| v >= threshold).collect()).unwrap()
}
