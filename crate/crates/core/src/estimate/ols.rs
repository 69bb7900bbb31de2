use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::predictor::FitError;
use super::regression::Regression;

/// Pooled ordinary least squares of the target on a fixed feature list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OlsModel {
    pub regression: Regression,
}

impl OlsModel {
    pub fn target(&self) -> &str {
        &self.regression.response
    }

    pub fn features(&self) -> &[String] {
        &self.regression.regressors
    }

    /// Predicted means, one per row.
    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>, FitError> {
        let cols: Vec<&[f64]> = self
            .features()
            .iter()
            .map(|f| data.values(f))
            .collect::<Result<_, _>>()?;
        let mut x = vec![0.0; cols.len()];
        Ok((0..data.n_rows())
            .map(|r| {
                for (v, c) in x.iter_mut().zip(&cols) {
                    *v = c[r];
                }
                self.regression.mean(&x)
            })
            .collect())
    }
}

pub fn fit_ols(data: &Dataset, target: &str, features: &[String]) -> Result<OlsModel, FitError> {
    let xs: Vec<&[f64]> = features
        .iter()
        .map(|f| data.values(f))
        .collect::<Result<_, _>>()?;
    let regression = Regression::fit(target, data.values(target)?, features, &xs).map_err(|_| {
        FitError::RankDeficient {
            factor: format!("OLS of {target} on {}", features.join(",")),
        }
    })?;
    Ok(OlsModel { regression })
}

pub fn predict_ols(model: &OlsModel, data: &Dataset) -> Result<Vec<f64>, FitError> {
    model.predict(data)
}
