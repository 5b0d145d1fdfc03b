//! Standardization and no-intercept least squares on z-scored data.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::linalg::{norm_sq, Matrix, QrSolve};

/// Fits with rss below this fraction of ‖y‖² are rejected as perfect.
pub const PERFECT_FIT_TOL: f64 = 1e-12;

/// Raw regression data before any transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    x: Matrix,
    y: Vec<f64>,
    column_names: Vec<String>,
}

impl RawDataset {
    pub fn new(x: Matrix, y: Vec<f64>, column_names: Vec<String>) -> Result<Self> {
        let (n, p) = (x.rows(), x.cols());
        if y.len() != n {
            return Err(Error::LengthMismatch(format!(
                "x has {n} rows but y has {} entries",
                y.len()
            )));
        }
        if column_names.len() != p {
            return Err(Error::LengthMismatch(format!(
                "x has {p} columns but {} names were given",
                column_names.len()
            )));
        }
        if n < 2 || p < 1 {
            return Err(Error::ConfigInvalid(format!(
                "need n >= 2 and p >= 1, got n = {n}, p = {p}"
            )));
        }
        if x.as_slice().iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::ConfigInvalid("non-finite value in data".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = column_names.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(Error::ConfigInvalid(format!("duplicate column name '{dup}'")));
        }
        Ok(Self {
            x,
            y,
            column_names,
        })
    }

    /// Dataset with generated names `x1..xp`.
    pub fn unnamed(x: Matrix, y: Vec<f64>) -> Result<Self> {
        let names = (1..=x.cols()).map(|j| format!("x{j}")).collect();
        Self::new(x, y, names)
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }
}

/// Z-scored predictors and response, with the moments used to produce them.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedDataset {
    pub zx: Matrix,
    pub zy: Vec<f64>,
    pub x_means: Vec<f64>,
    pub x_sds: Vec<f64>,
    pub y_mean: f64,
    pub y_sd: f64,
}

impl StandardizedDataset {
    pub fn n(&self) -> usize {
        self.zx.rows()
    }

    pub fn p(&self) -> usize {
        self.zx.cols()
    }

    /// Maps back to raw units using the stored moments.
    pub fn unstandardize(&self) -> (Matrix, Vec<f64>) {
        let mut x = self.zx.clone();
        let p = self.p();
        for i in 0..self.n() {
            for j in 0..p {
                x.set(i, j, x.get(i, j) * self.x_sds[j] + self.x_means[j]);
            }
        }
        let y = self.zy.iter().map(|v| v * self.y_sd + self.y_mean).collect();
        (x, y)
    }
}

/// Two-pass mean and sample standard deviation (divisor n − 1).
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn is_degenerate(mean: f64, sd: f64) -> bool {
    sd == 0.0 || !sd.is_finite() || sd < 1e-12 * mean.abs()
}

/// Z-scores every predictor column and the response.
///
/// A constant column yields `ConstantColumn(j)`; the response reports
/// index `p`.
pub fn standardize(raw: &RawDataset) -> Result<StandardizedDataset> {
    let (n, p) = (raw.n(), raw.p());
    let mut zx = raw.x.clone();
    let mut x_means = Vec::with_capacity(p);
    let mut x_sds = Vec::with_capacity(p);
    for j in 0..p {
        let col = raw.x.column(j);
        let (m, s) = mean_sd(&col);
        if is_degenerate(m, s) {
            return Err(Error::ConstantColumn(j));
        }
        for (i, v) in col.iter().enumerate() {
            zx.set(i, j, (v - m) / s);
        }
        x_means.push(m);
        x_sds.push(s);
    }
    let (y_mean, y_sd) = mean_sd(&raw.y);
    if is_degenerate(y_mean, y_sd) {
        return Err(Error::ConstantColumn(p));
    }
    let zy = raw.y.iter().map(|v| (v - y_mean) / y_sd).collect();
    debug_assert_eq!(zx.rows(), n);
    Ok(StandardizedDataset {
        zx,
        zy,
        x_means,
        x_sds,
        y_mean,
        y_sd,
    })
}

/// Coefficients, standard errors and t-statistics of a least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub beta_hat: Vec<f64>,
    pub se: Vec<f64>,
    pub t_values: Vec<f64>,
    pub rss_raw: f64,
    pub df_resid: usize,
}

impl OlsFit {
    /// Builds a fit from its parts, deriving the t-values.
    pub fn from_parts(beta_hat: Vec<f64>, se: Vec<f64>, rss_raw: f64, df_resid: usize) -> Self {
        let t_values = beta_hat.iter().zip(&se).map(|(b, s)| b / s).collect();
        Self {
            beta_hat,
            se,
            t_values,
            rss_raw,
            df_resid,
        }
    }

    /// The t-statistics in column order.
    pub fn t_value_vector(&self) -> Vec<f64> {
        self.t_values.clone()
    }
}

/// No-intercept least squares of `y` on the listed columns of `x`.
pub fn fit_ols_columns(x: &Matrix, cols: &[usize], y: &[f64]) -> Result<OlsFit> {
    let (n, p) = (y.len(), cols.len());
    if n <= p {
        return Err(Error::InsufficientDf { n, p });
    }
    let qr = QrSolve::from_matrix(x, cols, y)?;
    let rss_raw = qr.rss();
    if rss_raw < PERFECT_FIT_TOL * norm_sq(y) {
        return Err(Error::PerfectFit);
    }
    let df_resid = n - p;
    let s2 = rss_raw / df_resid as f64;
    let se = qr
        .inverse_gram_diagonal()
        .into_iter()
        .map(|d| (s2 * d).sqrt())
        .collect();
    Ok(OlsFit::from_parts(qr.coefficients(), se, rss_raw, df_resid))
}

/// No-intercept least squares of `y` on every column of `x`.
pub fn fit_ols(x: &Matrix, y: &[f64]) -> Result<OlsFit> {
    let cols: Vec<usize> = (0..x.cols()).collect();
    fit_ols_columns(x, &cols, y)
}

/// The standardized regression without intercept.
pub fn fit_ols_no_intercept(data: &StandardizedDataset) -> Result<OlsFit> {
    fit_ols(&data.zx, &data.zy)
}

/// Residual sum of squares for a column subset; the empty subset gives ‖y‖².
pub fn subset_rss(x: &Matrix, cols: &[usize], y: &[f64]) -> Result<f64> {
    if cols.is_empty() {
        return Ok(norm_sq(y));
    }
    Ok(QrSolve::from_matrix(x, cols, y)?.rss())
}
