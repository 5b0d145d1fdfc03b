//! Dense row-major matrices and a Householder QR least-squares kernel.
//!
//! Sizes in this crate stay small (p ≤ 100, n ≤ a few thousand), so
//! everything is plain `Vec<f64>` storage without blocking.

use crate::error::{Error, Result};

/// Smallest accepted ratio between the smallest and largest |R_jj|.
pub const RANK_RATIO_TOL: f64 = 1e-10;

/// Dense matrix stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Wraps a row-major buffer. Panics if the length does not match.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length does not match shape");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Builds a matrix from column vectors of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "ragged columns");
            for (i, &v) in c.iter().enumerate() {
                m.data[i * cols + j] = v;
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ · v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    /// `selfᵀ · self`.
    pub fn gram(&self) -> Matrix {
        let p = self.cols;
        let mut g = Matrix::zeros(p, p);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..p {
                let ra = r[a];
                for b in a..p {
                    g.data[a * p + b] += ra * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g.data[a * p + b] = g.data[b * p + a];
            }
        }
        g
    }

    /// Copy holding only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            let src = self.row(i);
            for (k, &j) in cols.iter().enumerate() {
                m.data[i * cols.len() + k] = src[j];
            }
        }
        m
    }

    /// Copy holding only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Matrix::from_vec(rows.len(), self.cols, data)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Thin QR factorization of a tall matrix given by its columns, applied to
/// a right-hand side at the same time.
///
/// Only what least squares needs is kept: the upper-triangular factor and
/// `Qᵀy`.
#[derive(Debug, Clone)]
pub struct QrSolve {
    p: usize,
    /// Upper triangle, row-major p×p.
    r: Vec<f64>,
    qty: Vec<f64>,
}

impl QrSolve {
    /// Factorizes the n×p matrix whose columns are `columns`.
    ///
    /// Fails with `RankDeficient` when min|R_jj| / max|R_jj| < 1e-10.
    pub fn new(mut columns: Vec<Vec<f64>>, y: &[f64]) -> Result<Self> {
        let p = columns.len();
        let n = y.len();
        if n <= p {
            return Err(Error::InsufficientDf { n, p });
        }
        let mut qty = y.to_vec();
        let mut r = vec![0.0; p * p];
        let mut v = vec![0.0; n];

        for k in 0..p {
            let (done, rest) = columns.split_at_mut(k + 1);
            let ck = &mut done[k];
            debug_assert_eq!(ck.len(), n);
            let norm = norm_sq(&ck[k..]).sqrt();
            if norm == 0.0 {
                return Err(Error::RankDeficient { ratio: 0.0 });
            }
            let alpha = if ck[k] > 0.0 { -norm } else { norm };
            // v = x - alpha e1, stored over rows k..n
            let vk = &mut v[k..];
            vk.copy_from_slice(&ck[k..]);
            vk[0] -= alpha;
            let vnorm_sq = norm_sq(vk);
            r[k * p + k] = alpha;
            if vnorm_sq > 0.0 {
                let scale = 2.0 / vnorm_sq;
                for c in rest.iter_mut() {
                    let s = dot(vk, &c[k..]) * scale;
                    for (ci, vi) in c[k..].iter_mut().zip(vk.iter()) {
                        *ci -= s * vi;
                    }
                }
                let s = dot(vk, &qty[k..]) * scale;
                for (qi, vi) in qty[k..].iter_mut().zip(vk.iter()) {
                    *qi -= s * vi;
                }
            }
            for (j, c) in rest.iter().enumerate() {
                r[k * p + k + 1 + j] = c[k];
            }
        }

        let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
        for k in 0..p {
            let d = r[k * p + k].abs();
            dmin = dmin.min(d);
            dmax = dmax.max(d);
        }
        if p > 0 && (dmax == 0.0 || dmin / dmax < RANK_RATIO_TOL) {
            return Err(Error::RankDeficient {
                ratio: if dmax == 0.0 { 0.0 } else { dmin / dmax },
            });
        }
        Ok(Self { p, r, qty })
    }

    /// Factorizes the listed columns of a row-major matrix.
    pub fn from_matrix(x: &Matrix, cols: &[usize], y: &[f64]) -> Result<Self> {
        let columns = cols.iter().map(|&j| x.column(j)).collect();
        Self::new(columns, y)
    }

    /// Least-squares coefficients by back substitution.
    pub fn coefficients(&self) -> Vec<f64> {
        let p = self.p;
        let mut beta = self.qty[..p].to_vec();
        for k in (0..p).rev() {
            let mut s = beta[k];
            for j in k + 1..p {
                s -= self.r[k * p + j] * beta[j];
            }
            beta[k] = s / self.r[k * p + k];
        }
        beta
    }

    /// Residual sum of squares, ‖(Qᵀy)[p..]‖².
    pub fn rss(&self) -> f64 {
        norm_sq(&self.qty[self.p..])
    }

    /// Diagonal of (XᵀX)⁻¹ = R⁻¹R⁻ᵀ, i.e. squared row norms of R⁻¹.
    pub fn inverse_gram_diagonal(&self) -> Vec<f64> {
        let p = self.p;
        // Invert R column by column; R⁻¹ is upper triangular.
        let mut inv = vec![0.0; p * p];
        for c in 0..p {
            inv[c * p + c] = 1.0 / self.r[c * p + c];
            for k in (0..c).rev() {
                let mut s = 0.0;
                for j in k + 1..=c {
                    s += self.r[k * p + j] * inv[j * p + c];
                }
                inv[k * p + c] = -s / self.r[k * p + k];
            }
        }
        (0..p)
            .map(|k| inv[k * p + k..(k + 1) * p].iter().map(|v| v * v).sum())
            .collect()
    }
}
