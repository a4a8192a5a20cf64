//! Small dense linear-algebra kernel: vectors, row-major matrices, LU and QR
//! factorizations, and a cyclic Jacobi eigensolver for symmetric matrices.
//!
//! Everything here is sized for desk-scale problems (tens of variables); the
//! solvers favour determinism and robustness over speed.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A finite real vector. Construction rejects NaN and infinite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidInput(
                "vector entries must be finite".into(),
            ));
        }
        Ok(Vector(entries))
    }

    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Vec<f64> {
        v.0
    }
}

impl std::ops::Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `y += a * x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Ok(Mat {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.cols, x.len());
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ x`
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.rows, x.len());
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            axpy(x[i], self.row(i), &mut out);
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a != 0.0 {
                    axpy(a, other.row(k), out.row_mut(i));
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `A x = b` for square `A` by LU with partial pivoting.
/// Returns `None` when `A` is numerically singular.
pub fn lu_solve(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.len());
    let mut m = a.clone();
    let mut x = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pivot_row, mut pivot_val) = (k, m[(k, k)].abs());
        for i in (k + 1)..n {
            if m[(i, k)].abs() > pivot_val {
                pivot_row = i;
                pivot_val = m[(i, k)].abs();
            }
        }
        if pivot_val < 1e-13 {
            return None;
        }
        if pivot_row != k {
            for j in 0..n {
                let tmp = m[(k, j)];
                m[(k, j)] = m[(pivot_row, j)];
                m[(pivot_row, j)] = tmp;
            }
            x.swap(k, pivot_row);
            perm.swap(k, pivot_row);
        }
        for i in (k + 1)..n {
            let f = m[(i, k)] / m[(k, k)];
            m[(i, k)] = 0.0;
            for j in (k + 1)..n {
                m[(i, j)] -= f * m[(k, j)];
            }
            x[i] -= f * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in (i + 1)..n {
            s -= m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Some(x)
}

/// Column-pivoted Householder QR of an `n × k` matrix `A`, with the full
/// orthogonal factor kept explicitly: `A P = Q R`.
///
/// Used on transposed constraint blocks to expose both a null-space basis and
/// a min-norm multiplier solve.
pub struct ColPivQr {
    /// full n × n orthogonal factor
    pub q: Mat,
    /// n × k upper-triangular factor (in pivoted column order)
    pub r: Mat,
    /// column permutation: factorized column `j` is original column `piv[j]`
    pub piv: Vec<usize>,
    pub rank: usize,
}

impl ColPivQr {
    pub fn new(a: &Mat, rank_tol: f64) -> Self {
        let n = a.nrows();
        let k = a.ncols();
        let mut r = a.clone();
        let mut q = Mat::identity(n);
        let mut piv: Vec<usize> = (0..k).collect();
        let mut col_norms: Vec<f64> = (0..k)
            .map(|j| (0..n).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>())
            .collect();
        let steps = n.min(k);
        let mut rank = 0;
        let scale0 = col_norms.iter().cloned().fold(0.0, f64::max).sqrt();
        for step in 0..steps {
            // pick the remaining column with the largest norm (ties: lowest index)
            let (mut best_j, mut best) = (step, -1.0);
            for j in step..k {
                if col_norms[j] > best + 1e-18 {
                    best = col_norms[j];
                    best_j = j;
                }
            }
            if best_j != step {
                for i in 0..n {
                    let tmp = r[(i, step)];
                    r[(i, step)] = r[(i, best_j)];
                    r[(i, best_j)] = tmp;
                }
                piv.swap(step, best_j);
                col_norms.swap(step, best_j);
            }
            let col_norm = (step..n)
                .map(|i| r[(i, step)] * r[(i, step)])
                .sum::<f64>()
                .sqrt();
            if col_norm <= rank_tol * scale0.max(1.0) {
                break;
            }
            rank += 1;
            // Householder vector for column `step`
            let alpha = if r[(step, step)] >= 0.0 {
                -col_norm
            } else {
                col_norm
            };
            let mut v = vec![0.0; n];
            for i in step..n {
                v[i] = r[(i, step)];
            }
            v[step] -= alpha;
            let vnorm2 = dot(&v, &v);
            if vnorm2 > 0.0 {
                // apply H = I - 2 v vᵀ / (vᵀv) to R (remaining columns) and accumulate in Q
                for j in step..k {
                    let mut s = 0.0;
                    for i in step..n {
                        s += v[i] * r[(i, j)];
                    }
                    let f = 2.0 * s / vnorm2;
                    for i in step..n {
                        r[(i, j)] -= f * v[i];
                    }
                }
                for jq in 0..n {
                    let mut s = 0.0;
                    for i in step..n {
                        s += v[i] * q[(jq, i)];
                    }
                    let f = 2.0 * s / vnorm2;
                    for i in step..n {
                        q[(jq, i)] -= f * v[i];
                    }
                }
            }
            r[(step, step)] = alpha;
            for i in (step + 1)..n {
                r[(i, step)] = 0.0;
            }
            for (j, cn) in col_norms.iter_mut().enumerate().take(k).skip(step + 1) {
                *cn = (step + 1..n).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>();
                let _ = j;
            }
        }
        ColPivQr { q, r, piv, rank }
    }

    /// Orthonormal basis of the null space of `Aᵀ` (columns `rank..n` of Q).
    pub fn null_basis(&self) -> Mat {
        let n = self.q.nrows();
        let mut z = Mat::zeros(n, n - self.rank);
        for i in 0..n {
            for (jj, j) in (self.rank..n).enumerate() {
                z[(i, jj)] = self.q[(i, j)];
            }
        }
        z
    }

    /// Min-norm least-squares solution of `A y = rhs` where `A` is the
    /// factorized matrix (`n × k`, possibly rank deficient).
    pub fn solve_min_norm(&self, rhs: &[f64]) -> Vec<f64> {
        let k = self.r.ncols();
        let qtb = self.q.matvec_t(rhs);
        let mut y_piv = vec![0.0; k];
        for i in (0..self.rank).rev() {
            let mut s = qtb[i];
            for j in (i + 1)..self.rank {
                s -= self.r[(i, j)] * y_piv[j];
            }
            y_piv[i] = s / self.r[(i, i)];
        }
        let mut y = vec![0.0; k];
        for j in 0..k {
            y[self.piv[j]] = y_piv[j];
        }
        y
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues (ascending) and the matrix of matching orthonormal
/// column eigenvectors.
pub fn sym_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m = a.clone();
    let mut v = Mat::identity(n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = c * mip - s * miq;
                    m[(i, q)] = s * mip + c * miq;
                }
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = c * mpj - s * mqj;
                    m[(q, j)] = s * mpj + c * mqj;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vecs = Mat::zeros(n, n);
    for (jj, &j) in order.iter().enumerate() {
        for i in 0..n {
            vecs[(i, jj)] = v[(i, j)];
        }
    }
    (vals, vecs)
}
