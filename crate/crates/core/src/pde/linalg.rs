//! Small sparse and banded kernels for five-point operators.

use crate::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(col, val)` lists; duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply(x, &mut out);
        out
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut rows = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                rows[c].push((i, v));
            }
        }
        CsrMatrix::from_rows(rows)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(c, v)| self.get(c, i) == v))
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(c, _)| i.abs_diff(c)))
            .max()
            .unwrap_or(0)
    }

    /// `s * self + d * I`
    pub fn scaled_plus_identity(&self, s: f64, d: f64) -> CsrMatrix {
        let rows = (0..self.n)
            .map(|i| {
                let mut r: Vec<(usize, f64)> = self.row(i).map(|(c, v)| (c, s * v)).collect();
                r.push((i, d));
                r
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    /// `(self + self^T) / 2`
    pub fn symmetric_part(&self) -> CsrMatrix {
        let t = self.transpose();
        let rows = (0..self.n)
            .map(|i| {
                self.row(i)
                    .map(|(c, v)| (c, 0.5 * v))
                    .chain(t.row(i).map(|(c, v)| (c, 0.5 * v)))
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }
}

/// LU factorization without pivoting of a banded matrix.
///
/// Valid for the diagonally dominant or symmetric positive definite matrices
/// produced by the elliptic assembly. One factorization serves both `A x = b`
/// and `A^T x = b`.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    w: usize,
    // row-major band, entry (i, j) at i * (2w+1) + (j + w - i)
    band: Vec<f64>,
}

impl BandedLu {
    pub fn factor(m: &CsrMatrix) -> Result<Self> {
        let n = m.dim();
        let w = m.bandwidth();
        let stride = 2 * w + 1;
        let mut band = vec![0.0; n * stride];
        for i in 0..n {
            for (c, v) in m.row(i) {
                band[i * stride + (c + w - i)] = v;
            }
        }
        for k in 0..n {
            let pivot = band[k * stride + w];
            if !(pivot.abs() > 1e-300) || !pivot.is_finite() {
                return Err(Error::LinearSolve(format!("zero pivot at row {k}")));
            }
            let iend = (k + w + 1).min(n);
            for i in k + 1..iend {
                let lik_pos = i * stride + (k + w - i);
                let l = band[lik_pos] / pivot;
                if l == 0.0 {
                    continue;
                }
                band[lik_pos] = l;
                for j in k + 1..iend {
                    let ukj = band[k * stride + (j + w - k)];
                    band[i * stride + (j + w - i)] -= l * ukj;
                }
            }
        }
        Ok(BandedLu { n, w, band })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, w) = (self.n, self.w);
        let stride = 2 * w + 1;
        for i in 0..n {
            let row = &self.band[i * stride..(i + 1) * stride];
            let j0 = i.saturating_sub(w);
            let mut s = x[i];
            for j in j0..i {
                s -= row[j + w - i] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = &self.band[i * stride..(i + 1) * stride];
            let j1 = (i + w + 1).min(n);
            let mut s = x[i];
            for j in i + 1..j1 {
                s -= row[j + w - i] * x[j];
            }
            x[i] = s / row[w];
        }
    }

    /// Solves `A^T x = b` in place.
    pub fn solve_transpose_in_place(&self, x: &mut [f64]) {
        let (n, w) = (self.n, self.w);
        let stride = 2 * w + 1;
        // U^T z = b, column-oriented over U's rows
        for i in 0..n {
            let row = &self.band[i * stride..(i + 1) * stride];
            x[i] /= row[w];
            let xi = x[i];
            let j1 = (i + w + 1).min(n);
            for j in i + 1..j1 {
                x[j] -= row[j + w - i] * xi;
            }
        }
        // L^T x = z
        for i in (0..n).rev() {
            let row = &self.band[i * stride..(i + 1) * stride];
            let xi = x[i];
            let j0 = i.saturating_sub(w);
            for j in j0..i {
                x[j] -= row[j + w - i] * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_transpose_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(n: usize, w: usize, rng: &mut ChaCha8Rng) -> CsrMatrix {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 4.0 * w as f64 + 1.0)];
                for j in i.saturating_sub(w)..(i + w + 1).min(n) {
                    if j != i && rng.gen_bool(0.6) {
                        r.push((j, rng.gen_range(-1.0..1.0)));
                    }
                }
                r
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    #[test]
    fn lu_solves_and_transpose_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(n, w) in &[(1, 0), (7, 2), (40, 6), (25, 24)] {
            let m = random_banded(n, w, &mut rng);
            let lu = BandedLu::factor(&m).unwrap();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = lu.solve(&b);
            let r = m.mul(&x);
            for (ri, bi) in r.iter().zip(&b) {
                assert!((ri - bi).abs() < 1e-12);
            }
            let xt = lu.solve_transpose(&b);
            let rt = m.transpose().mul(&xt);
            for (ri, bi) in rt.iter().zip(&b) {
                assert!((ri - bi).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn csr_sums_duplicates_and_transposes() {
        let m = CsrMatrix::from_rows(vec![vec![(1, 2.0), (0, 1.0), (1, 3.0)], vec![(0, -1.0)]]);
        assert_eq!(m.get(0, 1), 5.0);
        assert_eq!(m.transpose().get(1, 0), 5.0);
        assert_eq!(m.bandwidth(), 1);
        assert!(!m.is_symmetric());
        assert!(m.symmetric_part().is_symmetric());
    }

    #[test]
    fn zero_pivot_is_reported() {
        let m = CsrMatrix::from_rows(vec![vec![(0, 0.0)], vec![(1, 1.0)]]);
        assert!(BandedLu::factor(&m).is_err());
    }
}
