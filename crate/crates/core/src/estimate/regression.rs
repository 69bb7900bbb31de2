use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Relative singular-value cutoff below which a design matrix counts as rank deficient.
const RANK_TOL: f64 = 1e-10;

/// An ordinary least-squares fit `y = intercept + Σ coefficients_j x_j + ε`,
/// `ε ~ N(0, noise_variance)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub response: String,
    pub regressors: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Residual variance with `n - p - 1` degrees of freedom.
    pub noise_variance: f64,
    /// Standard errors of the intercept followed by each coefficient.
    pub std_errors: Vec<f64>,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankDeficient;

impl Regression {
    /// Fits `response` on `regressors`; columns are given in the same order as names.
    pub fn fit(response: &str, y: &[f64], regressors: &[String], xs: &[&[f64]]) -> Result<Regression, RankDeficient> {
        let n = y.len();
        let p = xs.len() + 1;
        if n <= p {
            return Err(RankDeficient);
        }
        let design = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { xs[j - 1][i] });
        let target = DVector::from_column_slice(y);
        let svd = design.clone().svd(true, true);
        let smax = svd.singular_values.max();
        if !(smax > 0.0) || svd.singular_values.iter().any(|&s| s <= RANK_TOL * smax) {
            return Err(RankDeficient);
        }
        let beta = svd.solve(&target, 0.0).map_err(|_| RankDeficient)?;
        let resid = &target - &design * &beta;
        let dof = (n - p) as f64;
        let noise_variance = resid.norm_squared() / dof;
        // (XᵀX)⁻¹ = V Σ⁻² Vᵀ
        let v_t = svd.v_t.as_ref().ok_or(RankDeficient)?;
        let std_errors = (0..p)
            .map(|j| {
                let var: f64 = (0..p)
                    .map(|k| v_t[(k, j)].powi(2) / svd.singular_values[k].powi(2))
                    .sum();
                (var * noise_variance).sqrt()
            })
            .collect();
        Ok(Regression {
            response: response.to_string(),
            regressors: regressors.to_vec(),
            intercept: beta[0],
            coefficients: beta.iter().skip(1).copied().collect(),
            noise_variance,
            std_errors,
            n,
        })
    }

    /// `intercept + Σ coefficients_j x_j`.
    pub fn mean(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    pub fn coefficient(&self, regressor: &str) -> Option<f64> {
        self.regressors
            .iter()
            .position(|r| r == regressor)
            .map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, regressor: &str) -> Option<f64> {
        self.regressors
            .iter()
            .position(|r| r == regressor)
            .map(|i| self.std_errors[i + 1])
    }
}
