//! Small sparse kernels: CSR storage, banded Cholesky and preconditioned CG.
//!
//! All reductions run in a fixed sequential order so repeated solves are
//! bitwise reproducible.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a square matrix, summing duplicate entries.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol * v.abs().max(1.0)))
    }

    /// `D A D` for a diagonal `D`.
    pub fn scale_symmetric(&self, d: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.vals[k] *= d[i] * d[self.cols[k]];
            }
        }
        out
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cholesky factor of a symmetric positive definite band matrix, stored by
/// rows as `L[i][i - bw ..= i]`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n;
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        // slot (i, j) with i - bw <= j <= i lives at i * w + (j + bw - i)
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    l[i * w + (j + bw - i)] = v;
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut sum = l[i * w + (j + bw - i)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    sum -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                if j == i {
                    if sum <= 0.0 {
                        return Err(Error::InvalidParameter(format!(
                            "matrix not positive definite at row {i} (pivot {sum:.3e})"
                        )));
                    }
                    l[i * w + bw] = sum.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = sum / l[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut sum = x[i];
            for k in i.saturating_sub(bw)..i {
                sum -= self.l[i * w + (k + bw - i)] * x[k];
            }
            x[i] = sum / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut sum = x[i];
            for k in i + 1..(i + bw + 1).min(n) {
                sum -= self.l[k * w + (i + bw - k)] * x[k];
            }
            x[i] = sum / self.l[i * w + bw];
        }
    }
}

/// Solves a symmetric tridiagonal system in place (Thomas algorithm).
/// `off[k]` couples unknowns `k` and `k + 1`.
pub fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &mut [f64], scratch: &mut Vec<f64>) {
    let n = diag.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut denom = diag[0];
    scratch[0] = if n > 1 { off[0] / denom } else { 0.0 };
    rhs[0] /= denom;
    for k in 1..n {
        denom = diag[k] - off[k - 1] * scratch[k - 1];
        if k + 1 < n {
            scratch[k] = off[k] / denom;
        }
        rhs[k] = (rhs[k] - off[k - 1] * rhs[k - 1]) / denom;
    }
    for k in (0..n - 1).rev() {
        rhs[k] -= scratch[k] * rhs[k + 1];
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients for `A x = b` with `A` given as an
/// operator. Starts from `x` and stops once `‖r‖ ≤ tol·‖b‖`.
pub fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    precond: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgStats> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = norm2(&r) / bnorm;
    for it in 0..max_iter {
        if rel <= tol {
            return Ok(CgStats {
                iterations: it,
                relative_residual: rel,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverDivergence {
                iterations: it,
                residual: rel,
            });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        rel = norm2(&r) / bnorm;
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if rel <= tol {
        return Ok(CgStats {
            iterations: max_iter,
            relative_residual: rel,
        });
    }
    Err(Error::SolverDivergence {
        iterations: max_iter,
        residual: rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, -1.0), (0, 1, -1.0)]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert!(m.is_symmetric(0.0));
        assert_eq!(m.bandwidth(), 1);
    }

    #[test]
    fn banded_cholesky_solves() {
        // 2D 5-point operator, bandwidth 6
        let k = 6;
        let n = k * k;
        let mut t = Vec::new();
        for j in 0..k {
            for i in 0..k {
                let r = i + j * k;
                t.push((r, r, 4.5));
                if i + 1 < k {
                    t.push((r, r + 1, -1.0));
                    t.push((r + 1, r, -1.0));
                }
                if j + 1 < k {
                    t.push((r, r + k, -1.0));
                    t.push((r + k, r, -1.0));
                }
            }
        }
        let a = CsrMatrix::from_triplets(n, t);
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = a.matvec(&xs);
        BandedCholesky::factor(&a).unwrap().solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&xs) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(BandedCholesky::factor(&a).is_err());
    }

    #[test]
    fn tridiagonal_matches_cg() {
        let n = 50;
        let a = laplace_1d(n);
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.01).collect();
        let mut x = b.clone();
        let mut scratch = Vec::new();
        solve_tridiagonal(&vec![2.0; n], &vec![-1.0; n - 1], &mut x, &mut scratch);
        let mut y = vec![0.0; n];
        let stats = pcg(|v, out| a.matvec_into(v, out), |r, z| z.copy_from_slice(r), &b, &mut y, 1e-13, 500).unwrap();
        assert!(stats.relative_residual <= 1e-13);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn pcg_zero_rhs() {
        let a = laplace_1d(4);
        let mut x = vec![1.0; 4];
        let s = pcg(|v, out| a.matvec_into(v, out), |r, z| z.copy_from_slice(r), &[0.0; 4], &mut x, 1e-10, 10).unwrap();
        assert_eq!(s.iterations, 0);
        assert_eq!(x, vec![0.0; 4]);
    }
}
