//! Sufficient dimension association (SDA): model-free tests of whether a
//! predictor belongs to the Markov blanket of an outcome in high-dimensional
//! regression.
//!
//! For each predictor `X_i` the pipeline
//!
//! 1. slices the outcome into `H` groups ([`slicing`]),
//! 2. regresses `X_i` on the other predictors with a cross-validated LASSO
//!    and keeps the residual `Z_i` ([`lasso`]),
//! 3. estimates the slice-wise covariances `nu_h = Cov(Z_i, 1{Y in J_h})`
//!    and their asymptotic covariance ([`sda`]),
//! 4. combines the standardized estimates into a KS (max) or CvM (mean)
//!    statistic and calibrates it with a Gaussian multiplier bootstrap
//!    ([`inference`]).
//!
//! [`screening`] adds correlation screening for ultra-high dimensions and
//! Benjamini-Hochberg control across variables; [`simgen`] generates the
//! synthetic designs used to measure size and power.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod inference;
pub mod lasso;
pub mod rng;
pub mod screening;
pub mod sda;
pub mod simgen;
pub mod slicing;

pub use dataset::{load_csv, write_csv, Dataset, Outcome, OutcomeKind, OutcomeSpec};
pub use error::{Result, SdaError};
pub use inference::{test_variable, SdaTester, StatisticKind, TestConfig, TestOutcome, VariableTest};
pub use lasso::{cv_select_lambda, fit_lasso, nodewise_fit, CvReport, LassoFit};
pub use screening::{bh_adjust, outcome_screen, sis_screen, CorrelationMethod, FdrReport, ScreenSet};
pub use sda::SdaResult;
pub use slicing::{default_h, make_slices, SlicePlan};
