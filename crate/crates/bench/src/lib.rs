//! Fixtures shared by the benchmarks in `benches/`.

use varsel::eval::{confusion_dataset, STUDY_P};
use varsel::nn::MlpParams;
use varsel::ols::StandardizedDataset;
use varsel::rng::substream;
use varsel::selector::{default_architecture, SelectorModel};

/// Standardized study dataset with ten predictors and noise variance 0.1.
pub fn fixture(n: usize, seed: u64) -> StandardizedDataset {
    confusion_dataset(seed, 0, 0, n, 0.1)
        .expect("study datasets are well posed")
        .data
}

/// Randomly initialized selector of the study width. Timing does not
/// depend on the weights.
pub fn untrained_model() -> SelectorModel {
    let params = MlpParams::glorot(&default_architecture(STUDY_P), &mut substream(1, &[])).unwrap();
    SelectorModel::new(params).unwrap()
}
