//! Fitting identified expressions to data and predicting the target.
//!
//! Discrete data gives one smoothed frequency table per observational term.
//! Continuous data gives linear-Gaussian regressions; sums over bound
//! variables are integrated by Monte Carlo with a per-row seed.

mod dataset;
mod gaussian;
mod ols;
mod predictor;
mod regression;

pub use dataset::{Column, ColumnKind, DataError, Dataset, DatasetConfig};
pub use ols::{fit_ols, predict_ols, OlsModel};
pub use predictor::{fit, fit_population, mse, nll, FitConfig, FitError, FittedFactor, MonteCarlo, Prediction, Predictor};
pub use regression::{RankDeficient, Regression};
