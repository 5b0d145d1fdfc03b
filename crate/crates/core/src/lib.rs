//! Variable selection for linear regression with a small neural network
//! trained on simulated t-statistics, plus the classical baselines
//! (LASSO, stepwise, exhaustive AIC/BIC), a Monte-Carlo study harness and
//! a preprocessing pipeline for real data.
//!
//! ```no_run
//! use varsel::{load_weights, select_ann, RawDataset, SelectorModel};
//! # fn main() -> varsel::Result<()> {
//! let file = std::io::BufReader::new(std::fs::File::open("model.txt")?);
//! let model = SelectorModel::new(load_weights(file)?)?;
//! # let raw: RawDataset = unimplemented!();
//! let chosen = select_ann(&raw, &model)?;
//! println!("{:?}", chosen.mask.active_indices());
//! # Ok(())
//! # }
//! ```

pub mod baselines;
pub mod datapipe;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod nn;
pub mod ols;
pub mod rng;
pub mod selector;
pub mod synthgen;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use nn::{load_weights, save_weights, MlpParams, Optimizer, TrainConfig, TrainReport};
pub use ols::{fit_ols_no_intercept, standardize, OlsFit, RawDataset, StandardizedDataset};
pub use selector::{
    run_selector, select_ann, BaselineConfigs, Method, SelectionResult, SelectorModel,
};
pub use synthgen::{Corpus, CorpusRecord, CorpusRole, GenConfig, InclusionMask};
