//! Implicit Euler in time for `y' + A y = a` and its exact discrete adjoint.
//!
//! Control snapshot `k` drives the step from `t_k` to `t_{k+1}`:
//! `(I + dt A) y^{k+1} = y^k + dt a^k`. The last control snapshot is carried
//! for display only and never enters the dynamics.

use serde::{Deserialize, Serialize};

use super::linalg::BandedLu;
use super::operator::EllipticOperator;
use crate::grid::ScalarField;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_final: f64,
    pub nt: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t_final: f64, nt: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidTimeGrid(format!("T must be positive, got {t_final}")));
        }
        if nt == 0 {
            return Err(Error::InvalidTimeGrid("nt must be at least 1".into()));
        }
        Ok(TimeGrid {
            t_final,
            nt,
            dt: t_final / nt as f64,
        })
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.nt).map(|k| self.time(k)).collect()
    }
}

/// `nt + 1` snapshots on a common grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    timegrid: TimeGrid,
    snapshots: Vec<ScalarField>,
}

impl Trajectory {
    pub fn new(timegrid: TimeGrid, snapshots: Vec<ScalarField>) -> Result<Self> {
        if snapshots.len() != timegrid.nt + 1 {
            return Err(Error::InvalidTimeGrid(format!(
                "expected {} snapshots, got {}",
                timegrid.nt + 1,
                snapshots.len()
            )));
        }
        let g = *snapshots[0].grid();
        if snapshots.iter().any(|s| !s.grid().same_as(&g)) {
            return Err(Error::GridMismatch);
        }
        Ok(Trajectory { timegrid, snapshots })
    }

    pub fn constant(timegrid: TimeGrid, f: &ScalarField) -> Self {
        Trajectory {
            timegrid,
            snapshots: vec![f.clone(); timegrid.nt + 1],
        }
    }

    pub fn timegrid(&self) -> &TimeGrid {
        &self.timegrid
    }

    pub fn snapshots(&self) -> &[ScalarField] {
        &self.snapshots
    }

    pub fn get(&self, k: usize) -> &ScalarField {
        &self.snapshots[k]
    }

    pub fn last(&self) -> &ScalarField {
        self.snapshots.last().unwrap()
    }

    pub fn grid(&self) -> &crate::Grid {
        self.snapshots[0].grid()
    }
}

/// Factorization of `I + dt A` shared by forward and adjoint sweeps.
#[derive(Debug)]
pub struct Propagator<'a> {
    op: &'a EllipticOperator,
    tg: TimeGrid,
    lu: BandedLu,
}

impl<'a> Propagator<'a> {
    pub fn new(op: &'a EllipticOperator, tg: TimeGrid) -> Result<Self> {
        let m = op.matrix().scaled_plus_identity(tg.dt, 1.0);
        Ok(Propagator {
            op,
            tg,
            lu: BandedLu::factor(&m)?,
        })
    }

    pub fn timegrid(&self) -> &TimeGrid {
        &self.tg
    }

    pub fn operator(&self) -> &EllipticOperator {
        self.op
    }

    /// Raw forward sweep; `controls` holds at least `nt` vectors.
    pub(crate) fn forward_raw(&self, controls: &[Vec<f64>], y0: &[f64]) -> Vec<Vec<f64>> {
        let dt = self.tg.dt;
        let mut out = Vec::with_capacity(self.tg.nt + 1);
        out.push(y0.to_vec());
        for a in controls.iter().take(self.tg.nt) {
            let mut next: Vec<f64> = out.last().unwrap().iter().zip(a).map(|(y, a)| y + dt * a).collect();
            self.lu.solve_in_place(&mut next);
            out.push(next);
        }
        out
    }

    /// Raw adjoint sweep. `p^{nt} = g2 (y_d - y^{nt})`, then
    /// `(I + dt A*) p^k = p^{k+1} + dt (g1/T) (y_d - y^{k+1})`.
    ///
    /// With `J = g1/(2T) sum_{k>=1} dt |y^k - y_d|^2 + g2/2 |y^{nt} - y_d|^2`
    /// this gives `dJ/da^k = -dt p^k` for `k < nt`.
    pub(crate) fn adjoint_raw(&self, ys: &[Vec<f64>], y_d: &[f64], g1: f64, g2: f64) -> Vec<Vec<f64>> {
        let nt = self.tg.nt;
        let w = self.tg.dt * g1 / self.tg.t_final;
        let mut ps = vec![Vec::new(); nt + 1];
        ps[nt] = y_d.iter().zip(&ys[nt]).map(|(d, y)| g2 * (d - y)).collect();
        for k in (0..nt).rev() {
            let mut rhs: Vec<f64> = ps[k + 1]
                .iter()
                .zip(y_d.iter().zip(&ys[k + 1]))
                .map(|(p, (d, y))| p + w * (d - y))
                .collect();
            self.lu.solve_transpose_in_place(&mut rhs);
            ps[k] = rhs;
        }
        ps
    }

    pub fn forward(&self, a_path: &Trajectory, y0: &ScalarField) -> Result<Trajectory> {
        let g = *self.op.grid();
        if !y0.grid().same_as(&g) || !a_path.grid().same_as(&g) {
            return Err(Error::GridMismatch);
        }
        if a_path.timegrid().nt != self.tg.nt {
            return Err(Error::InvalidTimeGrid("control path does not match time grid".into()));
        }
        let controls: Vec<Vec<f64>> = a_path.snapshots().iter().map(|s| s.values().to_vec()).collect();
        let ys = self.forward_raw(&controls, y0.values());
        to_trajectory(self.tg, g, ys)
    }

    pub fn adjoint(&self, y_path: &Trajectory, y_d: &ScalarField, gamma1: f64, gamma2: f64) -> Result<Trajectory> {
        let g = *self.op.grid();
        if !y_d.grid().same_as(&g) || !y_path.grid().same_as(&g) {
            return Err(Error::GridMismatch);
        }
        if y_path.timegrid().nt != self.tg.nt {
            return Err(Error::InvalidTimeGrid("state path does not match time grid".into()));
        }
        let ys: Vec<Vec<f64>> = y_path.snapshots().iter().map(|s| s.values().to_vec()).collect();
        let ps = self.adjoint_raw(&ys, y_d.values(), gamma1, gamma2);
        to_trajectory(self.tg, g, ps)
    }
}

pub(crate) fn to_trajectory(tg: TimeGrid, g: crate::Grid, raw: Vec<Vec<f64>>) -> Result<Trajectory> {
    let snaps = raw
        .into_iter()
        .map(|v| ScalarField::new(g, v))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(tg, snaps)
}

pub fn solve_forward(
    op: &EllipticOperator,
    a_path: &Trajectory,
    y0: &ScalarField,
    tg: TimeGrid,
) -> Result<Trajectory> {
    Propagator::new(op, tg)?.forward(a_path, y0)
}

pub fn solve_adjoint(
    op: &EllipticOperator,
    y_path: &Trajectory,
    y_d: &ScalarField,
    tg: TimeGrid,
    gamma1: f64,
    gamma2: f64,
) -> Result<Trajectory> {
    Propagator::new(op, tg)?.adjoint(y_path, y_d, gamma1, gamma2)
}
