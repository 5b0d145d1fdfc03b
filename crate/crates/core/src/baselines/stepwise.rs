use std::time::Instant;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::ols::{fit_ols_columns, StandardizedDataset};
use crate::selector::{Method, SelectionResult};
use crate::synthgen::InclusionMask;

#[derive(Debug, Clone, PartialEq)]
pub struct StepwiseConfig {
    pub alpha_enter: f64,
    pub alpha_remove: f64,
    pub max_steps: usize,
}

impl Default for StepwiseConfig {
    fn default() -> Self {
        Self {
            alpha_enter: 0.05,
            alpha_remove: 0.05,
            max_steps: usize::MAX,
        }
    }
}

impl StepwiseConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |a: f64| a > 0.0 && a < 1.0;
        if !unit(self.alpha_enter) || !unit(self.alpha_remove) {
            return Err(Error::ConfigInvalid("alphas must lie in (0, 1)".into()));
        }
        if self.alpha_enter > self.alpha_remove {
            return Err(Error::ConfigInvalid(format!(
                "alpha_enter {} exceeds alpha_remove {}",
                self.alpha_enter, self.alpha_remove
            )));
        }
        Ok(())
    }
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
pub fn two_sided_p_value(t: f64, df: usize) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

fn result(p: usize, selected: &[usize], method: Method, start: Instant) -> SelectionResult {
    SelectionResult {
        mask: InclusionMask::from_indices(p, selected),
        scores: None,
        method,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    }
}

/// Forward selection by partial-t p-values. Starts empty and adds the
/// candidate with the smallest p-value while it is below `alpha_enter`;
/// ties go to the lowest column index.
pub fn stepwise_forward(data: &StandardizedDataset, cfg: &StepwiseConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    let start = Instant::now();
    let p = data.p();
    let mut selected: Vec<usize> = Vec::new();
    let mut cols = Vec::with_capacity(p);
    for _ in 0..cfg.max_steps.min(p) {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..p).filter(|j| !selected.contains(j)) {
            cols.clear();
            cols.extend_from_slice(&selected);
            cols.push(j);
            let fit = fit_ols_columns(&data.zx, &cols, &data.zy)?;
            let pv = two_sided_p_value(fit.t_values[cols.len() - 1], fit.df_resid);
            if best.is_none_or(|(_, b)| pv < b) {
                best = Some((j, pv));
            }
        }
        match best {
            Some((j, pv)) if pv < cfg.alpha_enter => {
                selected.push(j);
            }
            _ => break,
        }
    }
    selected.sort_unstable();
    Ok(result(p, &selected, Method::Forward, start))
}

/// Backward elimination. Starts from the full model and drops the
/// predictor with the largest p-value while it is at least
/// `alpha_remove`; ties go to the lowest column index.
pub fn stepwise_backward(data: &StandardizedDataset, cfg: &StepwiseConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    let start = Instant::now();
    let p = data.p();
    let mut selected: Vec<usize> = (0..p).collect();
    let mut steps = 0;
    while !selected.is_empty() && steps < cfg.max_steps {
        let fit = fit_ols_columns(&data.zx, &selected, &data.zy)?;
        let mut worst: Option<(usize, f64)> = None;
        for (pos, &t) in fit.t_values.iter().enumerate() {
            let pv = two_sided_p_value(t, fit.df_resid);
            if worst.is_none_or(|(_, w)| pv > w) {
                worst = Some((pos, pv));
            }
        }
        match worst {
            Some((pos, pv)) if pv >= cfg.alpha_remove => {
                selected.remove(pos);
                steps += 1;
            }
            _ => break,
        }
    }
    Ok(result(p, &selected, Method::Backward, start))
}
