use std::cmp::Ordering;
use std::time::Instant;

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ols::{subset_rss, StandardizedDataset};
use crate::selector::{Method, SelectionResult};
use crate::synthgen::InclusionMask;

/// Largest p accepted by the 2^p enumeration.
pub const MAX_EXHAUSTIVE_P: usize = 20;

/// Score assigned when a subset fits exactly (log of zero).
pub const RSS_ZERO_SENTINEL: f64 = -1e300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcCriterion {
    Aic,
    Bic,
}

impl IcCriterion {
    fn penalty(self, n: usize) -> f64 {
        match self {
            IcCriterion::Aic => 2.0,
            IcCriterion::Bic => (n as f64).ln(),
        }
    }

    fn method(self) -> Method {
        match self {
            IcCriterion::Aic => Method::Aic,
            IcCriterion::Bic => Method::Bic,
        }
    }

    /// Gaussian concentrated log-likelihood form with constants dropped:
    /// n·ln(RSS/n) + penalty·k.
    pub fn score(self, rss: f64, n: usize, k: usize) -> f64 {
        if rss <= 0.0 {
            return RSS_ZERO_SENTINEL;
        }
        let nf = n as f64;
        nf * (rss / nf).ln() + self.penalty(n) * k as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcScore {
    pub subset: InclusionMask,
    pub score: f64,
    pub criterion: IcCriterion,
    pub k: usize,
}

fn subset_columns(bits: u32, p: usize) -> Vec<usize> {
    (0..p).filter(|j| bits >> j & 1 == 1).collect()
}

/// Scores all 2^p subsets, in order of their bit pattern.
pub fn ic_scores(data: &StandardizedDataset, criterion: IcCriterion) -> Result<Vec<IcScore>> {
    let (n, p) = (data.n(), data.p());
    if p > MAX_EXHAUSTIVE_P {
        return Err(Error::TooManyPredictorsForExhaustive {
            p,
            max: MAX_EXHAUSTIVE_P,
        });
    }
    if n <= p {
        return Err(Error::InsufficientDf { n, p });
    }
    (0..1u32 << p)
        .into_par_iter()
        .map(|bits| {
            let cols = subset_columns(bits, p);
            let rss = subset_rss(&data.zx, &cols, &data.zy)?;
            if rss <= 0.0 {
                warn!("subset {cols:?} fits exactly; scoring with sentinel");
            }
            Ok(IcScore {
                subset: InclusionMask::from_indices(p, &cols),
                score: criterion.score(rss, n, cols.len()),
                criterion,
                k: cols.len(),
            })
        })
        .collect()
}

/// Lower score wins, then fewer predictors, then the lexicographically
/// smaller list of active indices.
fn compare(a: &IcScore, b: &IcScore) -> Ordering {
    a.score
        .total_cmp(&b.score)
        .then(a.k.cmp(&b.k))
        .then_with(|| a.subset.active_indices().cmp(&b.subset.active_indices()))
}

/// Best subset under AIC or BIC by full enumeration.
pub fn ic_exhaustive(data: &StandardizedDataset, criterion: IcCriterion) -> Result<SelectionResult> {
    let start = Instant::now();
    let scores = ic_scores(data, criterion)?;
    let best = scores
        .into_iter()
        .min_by(compare)
        .expect("at least the empty subset");
    Ok(SelectionResult {
        mask: best.subset,
        scores: None,
        method: criterion.method(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}
