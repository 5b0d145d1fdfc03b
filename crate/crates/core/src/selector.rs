//! The network-based selection pipeline: standardize, fit OLS, take the
//! t-vector, pad it to the model width, run the network, threshold and
//! truncate back to the original predictors.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::baselines::{
    ic_exhaustive, lasso_cv_select, stepwise_backward, stepwise_forward, IcCriterion, LassoConfig,
    StepwiseConfig,
};
use crate::error::{Error, Result};
use crate::nn::MlpParams;
use crate::ols::{fit_ols_no_intercept, standardize, RawDataset, StandardizedDataset};
use crate::synthgen::InclusionMask;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Layer widths used when none are given: one hidden layer of
/// max(64, 2.56·p_max) units, so 64 for p_max = 10 and 256 for 100. A
/// coordinate needs at least two hidden units to express a two-sided rule
/// in |t|, and narrower layers let many large t-values at once switch off
/// a significant coordinate.
pub fn default_architecture(p_max: usize) -> Vec<usize> {
    let hidden = (p_max * 64).div_ceil(25).max(64);
    vec![p_max, hidden, p_max]
}

/// Every selection method in the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Ann,
    Lasso,
    Forward,
    Backward,
    Aic,
    Bic,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Ann,
        Method::Lasso,
        Method::Forward,
        Method::Backward,
        Method::Aic,
        Method::Bic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ann => "ann",
            Method::Lasso => "lasso",
            Method::Forward => "forward",
            Method::Backward => "backward",
            Method::Aic => "aic",
            Method::Bic => "bic",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown method '{s}'")))
    }
}

/// Outcome of one selection call.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub mask: InclusionMask,
    /// Network outputs for the ANN method; `None` for the baselines.
    pub scores: Option<Vec<f64>>,
    pub method: Method,
    pub elapsed_seconds: f64,
}

/// A trained network together with its width and decision threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorModel {
    pub params: MlpParams,
    pub p_max: usize,
    pub threshold: f64,
}

impl SelectorModel {
    pub fn new(params: MlpParams) -> Result<Self> {
        Self::with_threshold(params, DEFAULT_THRESHOLD)
    }

    pub fn with_threshold(params: MlpParams, threshold: f64) -> Result<Self> {
        params.validate()?;
        let p_max = params.input_dim();
        if params.output_dim() != p_max {
            return Err(Error::DimensionMismatch {
                expected: p_max,
                got: params.output_dim(),
            });
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::ConfigInvalid(format!(
                "threshold {threshold} outside (0, 1)"
            )));
        }
        Ok(Self {
            params,
            p_max,
            threshold,
        })
    }

    /// Network scores for an unpadded t-vector.
    pub fn scores(&self, t: &[f64]) -> Result<Vec<f64>> {
        let padded = pad_t_vector(t, self.p_max)?;
        let mut out = self.params.predict(&encode_t_vector(&padded))?;
        out.truncate(t.len());
        Ok(out)
    }

    /// Strict `score > threshold`; exact ties are inactive.
    pub fn classify(&self, scores: &[f64]) -> InclusionMask {
        InclusionMask::new(scores.iter().map(|&s| s > self.threshold).collect())
    }
}

/// Feature map applied to t-values before they enter the network.
///
/// t-values range over several orders of magnitude (|t| ≈ 10³ for strong
/// effects at large n), which saturates every sigmoid unit at
/// initialization. asinh is odd, maps 0 to 0 (so padding is preserved)
/// and is close to the identity near the decision region |t| ≈ 2.
#[inline]
pub fn encode_t(t: f64) -> f64 {
    t.asinh()
}

pub fn encode_t_vector(t: &[f64]) -> Vec<f64> {
    t.iter().map(|&v| encode_t(v)).collect()
}

/// Appends zeros up to `p_max`.
pub fn pad_t_vector(t: &[f64], p_max: usize) -> Result<Vec<f64>> {
    if t.len() > p_max {
        return Err(Error::TooManyPredictors {
            p: t.len(),
            p_max,
        });
    }
    let mut v = t.to_vec();
    v.resize(p_max, 0.0);
    Ok(v)
}

/// Keeps the first `p` entries of a padded mask.
pub fn unpad_mask(padded: &InclusionMask, p: usize) -> InclusionMask {
    padded.truncated(p)
}

/// Runs the pipeline on data that is already standardized.
pub fn select_ann_standardized(
    data: &StandardizedDataset,
    model: &SelectorModel,
) -> Result<SelectionResult> {
    let start = Instant::now();
    if data.p() > model.p_max {
        return Err(Error::TooManyPredictors {
            p: data.p(),
            p_max: model.p_max,
        });
    }
    let fit = fit_ols_no_intercept(data)?;
    let scores = model.scores(&fit.t_value_vector())?;
    Ok(SelectionResult {
        mask: model.classify(&scores),
        scores: Some(scores),
        method: Method::Ann,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Full pipeline from raw data.
pub fn select_ann(raw: &RawDataset, model: &SelectorModel) -> Result<SelectionResult> {
    let start = Instant::now();
    if raw.p() > model.p_max {
        return Err(Error::TooManyPredictors {
            p: raw.p(),
            p_max: model.p_max,
        });
    }
    let mut res = select_ann_standardized(&standardize(raw)?, model)?;
    res.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(res)
}

/// Settings for the classical selectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BaselineConfigs {
    pub stepwise: StepwiseConfig,
    pub lasso: LassoConfig,
}

/// Runs one method on standardized data. The ANN method needs `model`.
pub fn run_selector(
    method: Method,
    data: &StandardizedDataset,
    model: Option<&SelectorModel>,
    cfgs: &BaselineConfigs,
) -> Result<SelectionResult> {
    match method {
        Method::Ann => {
            let model = model
                .ok_or_else(|| Error::ConfigInvalid("the ann method needs a trained model".into()))?;
            select_ann_standardized(data, model)
        }
        Method::Lasso => lasso_cv_select(data, &cfgs.lasso),
        Method::Forward => stepwise_forward(data, &cfgs.stepwise),
        Method::Backward => stepwise_backward(data, &cfgs.stepwise),
        Method::Aic => ic_exhaustive(data, IcCriterion::Aic),
        Method::Bic => ic_exhaustive(data, IcCriterion::Bic),
    }
}
