//! ℓ₁-penalized least squares by cyclic coordinate descent, with k-fold
//! cross-validation over a λ grid.
//!
//! Objective: (1/n)‖y − Xβ‖² + λ‖β‖₁. Working in covariance form
//! (G = XᵀX/n, c = Xᵀy/n), a coordinate update is
//! β_j ← S(c_j − Σ_{k≠j} G_jk β_k, λ/2) / G_jj with S the soft threshold.

use std::time::Instant;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::ols::StandardizedDataset;
use crate::rng::substream;
use crate::selector::{Method, SelectionResult};
use crate::synthgen::InclusionMask;

/// |β_j| at or below this counts as zero in the mask.
pub const LASSO_ZERO_THRESHOLD: f64 = 1e-8;

const DEFAULT_MAX_ITER: usize = 10_000;
const DEFAULT_TOL: f64 = 1e-7;

#[inline]
fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Sufficient statistics of a least-squares problem.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    p: usize,
    /// XᵀX / n, row-major.
    gram: Vec<f64>,
    /// Xᵀy / n.
    c: Vec<f64>,
    /// yᵀy / n.
    yy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub beta: Vec<f64>,
    pub cycles: usize,
}

impl LassoProblem {
    pub fn new(x: &Matrix, y: &[f64]) -> Self {
        let n = x.rows() as f64;
        let mut gram = x.gram().as_slice().to_vec();
        gram.iter_mut().for_each(|g| *g /= n);
        let mut c = x.tr_mul_vec(y);
        c.iter_mut().for_each(|v| *v /= n);
        Self {
            p: x.cols(),
            gram,
            c,
            yy: dot(y, y) / n,
        }
    }

    pub fn from_data(data: &StandardizedDataset) -> Self {
        Self::new(&data.zx, &data.zy)
    }

    /// Smallest λ whose solution is identically zero: 2·max_j |c_j|.
    pub fn lambda_max(&self) -> f64 {
        2.0 * self.c.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn objective(&self, beta: &[f64], lambda: f64) -> f64 {
        let p = self.p;
        let mut quad = 0.0;
        for a in 0..p {
            quad += beta[a] * dot(&self.gram[a * p..(a + 1) * p], beta);
        }
        self.yy - 2.0 * dot(&self.c, beta) + quad + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    /// Coordinate descent until the largest change in a full cycle is
    /// below `tol`.
    pub fn solve(
        &self,
        lambda: f64,
        warm_start: Option<&[f64]>,
        max_iter: usize,
        tol: f64,
    ) -> Result<LassoFit> {
        self.solve_inner(lambda, warm_start, max_iter, tol, None)
    }

    /// As [`solve`](Self::solve), also returning the objective after each
    /// cycle.
    pub fn solve_traced(
        &self,
        lambda: f64,
        warm_start: Option<&[f64]>,
        max_iter: usize,
        tol: f64,
    ) -> Result<(LassoFit, Vec<f64>)> {
        let mut trace = Vec::new();
        let fit = self.solve_inner(lambda, warm_start, max_iter, tol, Some(&mut trace))?;
        Ok((fit, trace))
    }

    fn solve_inner(
        &self,
        lambda: f64,
        warm_start: Option<&[f64]>,
        max_iter: usize,
        tol: f64,
        mut trace: Option<&mut Vec<f64>>,
    ) -> Result<LassoFit> {
        if !(lambda >= 0.0) {
            return Err(Error::ConfigInvalid(format!("lambda {lambda} must be >= 0")));
        }
        let p = self.p;
        let mut beta = match warm_start {
            Some(w) if w.len() == p => w.to_vec(),
            Some(w) => {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: w.len(),
                })
            }
            None => vec![0.0; p],
        };
        // gb = G·β, kept in sync with every coordinate move
        let mut gb: Vec<f64> = (0..p)
            .map(|a| dot(&self.gram[a * p..(a + 1) * p], &beta))
            .collect();
        let half = lambda / 2.0;
        for cycle in 1..=max_iter {
            let mut max_change = 0.0f64;
            for j in 0..p {
                let gjj = self.gram[j * p + j];
                let old = beta[j];
                let partial = self.c[j] - (gb[j] - gjj * old);
                let new = soft_threshold(partial, half) / gjj;
                let delta = new - old;
                if delta != 0.0 {
                    beta[j] = new;
                    for (g, col) in gb.iter_mut().zip(self.gram[j..].iter().step_by(p)) {
                        *g += delta * col;
                    }
                    max_change = max_change.max(delta.abs());
                }
            }
            if let Some(t) = trace.as_deref_mut() {
                t.push(self.objective(&beta, lambda));
            }
            if max_change < tol {
                return Ok(LassoFit {
                    beta,
                    cycles: cycle,
                });
            }
        }
        Err(Error::NoConvergence(max_iter))
    }
}

/// (1/n)‖zy − zx·β‖² + λ‖β‖₁ evaluated from the residuals.
pub fn lasso_objective(data: &StandardizedDataset, beta: &[f64], lambda: f64) -> f64 {
    let fitted = data.zx.mul_vec(beta);
    let rss: f64 = data
        .zy
        .iter()
        .zip(&fitted)
        .map(|(y, f)| (y - f).powi(2))
        .sum();
    rss / data.n() as f64 + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

pub fn lambda_max(data: &StandardizedDataset) -> f64 {
    LassoProblem::from_data(data).lambda_max()
}

/// Solves the penalized problem at one λ with default iteration limits.
pub fn lasso_coordinate_descent(
    data: &StandardizedDataset,
    lambda: f64,
    warm_start: Option<&[f64]>,
) -> Result<Vec<f64>> {
    Ok(LassoProblem::from_data(data)
        .solve(lambda, warm_start, DEFAULT_MAX_ITER, DEFAULT_TOL)?
        .beta)
}

/// `count` values log-spaced from `lmax` down to `lmax · ratio`.
pub fn default_lambda_grid(lmax: f64, count: usize, ratio: f64) -> Vec<f64> {
    if lmax <= 0.0 || count == 0 {
        return vec![0.0];
    }
    if count == 1 {
        return vec![lmax];
    }
    let (hi, lo) = (lmax.ln(), (lmax * ratio).ln());
    (0..count)
        .map(|i| (hi + (lo - hi) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaGrid {
    /// Log-spaced from λ_max of the full data down to λ_max · ratio.
    Auto { count: usize, ratio: f64 },
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoConfig {
    pub lambda_grid: LambdaGrid,
    pub folds: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            lambda_grid: LambdaGrid::Auto {
                count: 100,
                ratio: 1e-4,
            },
            folds: 10,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            seed: 0,
        }
    }
}

impl LassoConfig {
    fn grid(&self, problem: &LassoProblem) -> Result<Vec<f64>> {
        let grid = match &self.lambda_grid {
            LambdaGrid::Auto { count, ratio } => {
                default_lambda_grid(problem.lambda_max(), *count, *ratio)
            }
            LambdaGrid::Explicit(g) => g.clone(),
        };
        if grid.is_empty() || grid.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::ConfigInvalid(
                "lambda grid must be non-empty and non-negative".into(),
            ));
        }
        if grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::ConfigInvalid(
                "lambda grid must be strictly descending".into(),
            ));
        }
        Ok(grid)
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.folds < 2 || self.folds > n {
            return Err(Error::ConfigInvalid(format!(
                "folds = {} must be in [2, n = {n}]",
                self.folds
            )));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::ConfigInvalid("tol and max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Warm-started path over the whole grid, returning each solution.
fn solve_path(problem: &LassoProblem, grid: &[f64], cfg: &LassoConfig) -> Result<Vec<Vec<f64>>> {
    let mut warm: Option<Vec<f64>> = None;
    let mut out = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let fit = problem.solve(lambda, warm.as_deref(), cfg.max_iter, cfg.tol)?;
        warm = Some(fit.beta.clone());
        out.push(fit.beta);
    }
    Ok(out)
}

/// Picks λ by k-fold CV (seeded fold assignment, mean held-out MSE; ties go
/// to the larger λ), refits on all rows and selects the nonzero pattern.
pub fn lasso_cv_select(data: &StandardizedDataset, cfg: &LassoConfig) -> Result<SelectionResult> {
    let start = Instant::now();
    let (n, p) = (data.n(), data.p());
    cfg.validate(n)?;
    let full = LassoProblem::from_data(data);
    let grid = cfg.grid(&full)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(cfg.seed, &[]));
    let mut fold_of = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % cfg.folds;
    }

    let mut cv_error = vec![0.0; grid.len()];
    for fold in 0..cfg.folds {
        let (train, held): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold_of[i] != fold);
        let problem = LassoProblem::new(&data.zx.select_rows(&train), &select(&data.zy, &train));
        let path = solve_path(&problem, &grid, cfg)?;
        for (err, beta) in cv_error.iter_mut().zip(&path) {
            let mse = held
                .iter()
                .map(|&i| (data.zy[i] - dot(data.zx.row(i), beta)).powi(2))
                .sum::<f64>()
                / held.len() as f64;
            *err += mse / cfg.folds as f64;
        }
    }
    let best = cv_error
        .iter()
        .enumerate()
        .fold(0, |b, (i, e)| if *e < cv_error[b] { i } else { b });

    let beta = solve_path(&full, &grid[..=best], cfg)?
        .pop()
        .expect("non-empty path");
    let active: Vec<usize> = (0..p)
        .filter(|&j| beta[j].abs() > LASSO_ZERO_THRESHOLD)
        .collect();
    Ok(SelectionResult {
        mask: InclusionMask::from_indices(p, &active),
        scores: None,
        method: Method::Lasso,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

fn select(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ols::standardize;
    use crate::rng::substream;
    use crate::synthgen::simulate_dataset;

    fn data(beta: &[f64], n: usize, s2: f64, seed: u64) -> StandardizedDataset {
        standardize(&simulate_dataset(beta, n, s2, &mut substream(seed, &[])).unwrap()).unwrap()
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(0.8, 0.2), 0.6000000000000001);
        assert_eq!(soft_threshold(-0.8, 0.2), -0.6000000000000001);
        assert_eq!(soft_threshold(0.1, 0.2), 0.0);
    }

    #[test]
    fn covariance_objective_matches_residual_form() {
        let d = data(&[1.0, 0.0, -0.5], 80, 0.2, 1);
        let prob = LassoProblem::from_data(&d);
        let beta = [0.3, -0.1, 0.2];
        let a = prob.objective(&beta, 0.05);
        let b = lasso_objective(&d, &beta, 0.05);
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn grid_shape() {
        let g = default_lambda_grid(2.0, 100, 1e-4);
        assert_eq!(g.len(), 100);
        assert!((g[0] - 2.0).abs() < 1e-12);
        assert!((g[99] - 2e-4).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn single_zero_lambda_keeps_everything() {
        let d = data(&[1.0, 0.0, 0.5, 0.0], 100, 0.3, 2);
        let cfg = LassoConfig {
            lambda_grid: LambdaGrid::Explicit(vec![0.0]),
            ..LassoConfig::default()
        };
        let r = lasso_cv_select(&d, &cfg).unwrap();
        assert_eq!(r.mask, InclusionMask::ones(4));
    }

    #[test]
    fn fold_count_checked() {
        let d = data(&[1.0], 10, 0.3, 3);
        let cfg = LassoConfig {
            folds: 11,
            ..LassoConfig::default()
        };
        assert!(matches!(lasso_cv_select(&d, &cfg), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn ascending_grid_rejected() {
        let d = data(&[1.0], 30, 0.3, 3);
        let cfg = LassoConfig {
            lambda_grid: LambdaGrid::Explicit(vec![0.1, 0.2]),
            ..LassoConfig::default()
        };
        assert!(matches!(lasso_cv_select(&d, &cfg), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let d = data(&[1.0, 0.5], 50, 0.3, 4);
        let r = LassoProblem::from_data(&d).solve(0.0, None, 1, 1e-300);
        assert_eq!(r.unwrap_err(), Error::NoConvergence(1));
    }
}
