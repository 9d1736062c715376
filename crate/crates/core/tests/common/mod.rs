//! Dense reference implementations that share no code with the library:
//! a directly assembled five-point Laplacian, the control-to-cost quadratic
//! forms built from dense inverses, and a primal active-set QP solver.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Five-point Dirichlet Laplacian on the `n x n` interior nodes of
/// `[-1,1]^2`, node `(i, j)` at index `j n + i`.
pub fn dense_laplacian(n: usize) -> DMatrix<f64> {
    let h = 2.0 / (n as f64 + 1.0);
    let m = n * n;
    let mut a = DMatrix::zeros(m, m);
    for j in 0..n {
        for i in 0..n {
            let r = j * n + i;
            a[(r, r)] = 4.0 / (h * h);
            if i > 0 {
                a[(r, r - 1)] = -1.0 / (h * h);
            }
            if i + 1 < n {
                a[(r, r + 1)] = -1.0 / (h * h);
            }
            if j > 0 {
                a[(r, r - n)] = -1.0 / (h * h);
            }
            if j + 1 < n {
                a[(r, r + n)] = -1.0 / (h * h);
            }
        }
    }
    a
}

pub fn cell_area(n: usize) -> f64 {
    let h = 2.0 / (n as f64 + 1.0);
    h * h
}

/// `1/2 x^T H x + g^T x + c` over `x in [0,1]^(blocks * m)` with
/// `sum(block) <= budget` for every block.
pub struct Qp {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub c: f64,
    pub blocks: usize,
    pub m: usize,
    pub budget: f64,
}

impl Qp {
    pub fn cost(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.g.dot(x) + self.c
    }
}

/// Adds `w/2 |E x + f|^2` to the quadratic form.
fn add_square(h: &mut DMatrix<f64>, g: &mut DVector<f64>, c: &mut f64, w: f64, e: &DMatrix<f64>, f: &DVector<f64>) {
    *h += w * e.transpose() * e;
    *g += w * e.transpose() * f;
    *c += 0.5 * w * f.dot(f);
}

/// Static problem `A y = a`, cost `gamma1/2 |y - y_d|^2`.
pub fn static_qp(n: usize, gamma1: f64, y_d: &[f64], l: f64) -> Qp {
    let m = n * n;
    let inv = dense_laplacian(n).try_inverse().unwrap();
    let f = -DVector::from_column_slice(y_d);
    let mut h = DMatrix::zeros(m, m);
    let mut g = DVector::zeros(m);
    let mut c = 0.0;
    add_square(&mut h, &mut g, &mut c, gamma1 * cell_area(n), &inv, &f);
    Qp { h, g, c, blocks: 1, m, budget: l * m as f64 }
}

/// Implicit Euler `(I + dt A) y^{k+1} = y^k + dt a^k`, cost
/// `gamma1/(2T) sum_{k>=1} dt |y^k - y_d|^2 + gamma2/2 |y^nt - y_d|^2`,
/// variables `a^0 .. a^{nt-1}` stacked.
pub fn dynamic_qp(n: usize, t_final: f64, nt: usize, gamma1: f64, gamma2: f64, y0: &[f64], y_d: &[f64], l: f64) -> Qp {
    let m = n * n;
    let dt = t_final / nt as f64;
    let step = (DMatrix::identity(m, m) + dt * dense_laplacian(n)).try_inverse().unwrap();
    let yd = DVector::from_column_slice(y_d);
    let mut e = DMatrix::zeros(m, m * nt);
    let mut f = DVector::from_column_slice(y0);
    let mut h = DMatrix::zeros(m * nt, m * nt);
    let mut g = DVector::zeros(m * nt);
    let mut c = 0.0;
    let w = cell_area(n);
    for k in 0..nt {
        // y^{k+1} = M (y^k + dt a^k)
        e.view_mut((0, k * m), (m, m)).copy_from(&DMatrix::identity(m, m).scale(dt));
        e = &step * e;
        f = &step * f;
        let r = &f - &yd;
        add_square(&mut h, &mut g, &mut c, gamma1 / t_final * dt * w, &e, &r);
        if k + 1 == nt {
            add_square(&mut h, &mut g, &mut c, gamma2 * w, &e, &r);
        }
    }
    Qp { h, g, c, blocks: nt, m, budget: l * m as f64 }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Con {
    Lower(usize),
    Upper(usize),
    Volume(usize),
}

/// Primal active-set method; returns the minimizer. A ridge of `1e-12 |H|`
/// keeps terminal-only costs (singular `H`) solvable; it moves the optimal
/// value by at most `1e-12 |H| nv / 2`.
pub fn active_set(qp: &Qp) -> DVector<f64> {
    let nv = qp.blocks * qp.m;
    let hreg = &qp.h + DMatrix::identity(nv, nv) * (1e-12 * qp.h.amax());
    // constraints written as n^T x >= b
    let normal = |c: Con| -> DVector<f64> {
        let mut v = DVector::zeros(nv);
        match c {
            Con::Lower(i) => v[i] = 1.0,
            Con::Upper(i) => v[i] = -1.0,
            Con::Volume(b) => {
                for i in 0..qp.m {
                    v[b * qp.m + i] = -1.0;
                }
            }
        }
        v
    };
    let rhs = |c: Con| -> f64 {
        match c {
            Con::Lower(_) => 0.0,
            Con::Upper(_) => -1.0,
            Con::Volume(_) => -qp.budget,
        }
    };
    let all: Vec<Con> = (0..nv)
        .map(Con::Lower)
        .chain((0..nv).map(Con::Upper))
        .chain((0..qp.blocks).map(Con::Volume))
        .collect();

    let mut x = DVector::zeros(nv);
    let mut work: Vec<Con> = (0..nv).map(Con::Lower).collect();
    let scale = qp.h.amax().max(qp.g.amax()).max(1e-300);
    for _ in 0..100_000 {
        let k = work.len();
        let mut kkt = DMatrix::zeros(nv + k, nv + k);
        kkt.view_mut((0, 0), (nv, nv)).copy_from(&hreg);
        for (r, &c) in work.iter().enumerate() {
            let nrm = normal(c);
            for i in 0..nv {
                kkt[(nv + r, i)] = nrm[i];
                kkt[(i, nv + r)] = -nrm[i];
            }
        }
        let mut b = DVector::zeros(nv + k);
        let grad = &hreg * &x + &qp.g;
        b.rows_mut(0, nv).copy_from(&(-&grad));
        let sol = kkt.lu().solve(&b).expect("singular KKT system");
        let p = sol.rows(0, nv).into_owned();
        if p.amax() <= 1e-13 * (1.0 + x.amax()) {
            let lam = sol.rows(nv, k);
            let (worst, val) = lam.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
            if k == 0 || val >= -1e-12 * scale {
                return x;
            }
            work.remove(worst);
            continue;
        }
        let mut alpha = 1.0;
        let mut block = None;
        for &c in &all {
            if work.contains(&c) {
                continue;
            }
            let nrm = normal(c);
            let np = nrm.dot(&p);
            if np < 0.0 {
                let a = (rhs(c) - nrm.dot(&x)) / np;
                if a < alpha {
                    alpha = a.max(0.0);
                    block = Some(c);
                }
            }
        }
        x += alpha * &p;
        if let Some(c) = block {
            work.push(c);
        }
    }
    panic!("active-set method did not terminate");
}

/// Minimum static cost over all binary shapes with exactly `k` cells.
pub fn binary_static_minimum(n: usize, gamma1: f64, y_d: &[f64], k: usize) -> f64 {
    let qp = static_qp(n, gamma1, y_d, 0.5);
    let m = n * n;
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let mut x = DVector::zeros(m);
        for &i in &idx {
            x[i] = 1.0;
        }
        best = best.min(qp.cost(&x));
        // next k-combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < m - k + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
