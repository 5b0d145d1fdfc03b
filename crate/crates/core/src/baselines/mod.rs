//! Classical comparison selectors.

mod ic;
mod lasso;
mod stepwise;

pub use ic::{ic_exhaustive, ic_scores, IcCriterion, IcScore, MAX_EXHAUSTIVE_P, RSS_ZERO_SENTINEL};
pub use lasso::{
    default_lambda_grid, lambda_max, lasso_coordinate_descent, lasso_cv_select, lasso_objective,
    LambdaGrid, LassoConfig, LassoFit, LassoProblem, LASSO_ZERO_THRESHOLD,
};
pub use stepwise::{stepwise_backward, stepwise_forward, two_sided_p_value, StepwiseConfig};
