use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::estimate::{Column, Dataset};

/// `var = intercept + Σ coefficient·parent + N(0, noise_variance)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearEquation {
    pub var: String,
    pub intercept: f64,
    pub coefficients: Vec<(String, f64)>,
    pub noise_variance: f64,
}

/// A parameter of a [`LinearGaussianSem`] that an environment may change.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Handle {
    Intercept { var: String },
    Coefficient { var: String, parent: String },
}

/// Linear-Gaussian structural model with equations in topological order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearGaussianSem {
    equations: Vec<LinearEquation>,
}

impl LinearGaussianSem {
    /// Checks that every parent is defined earlier and every variance is positive.
    pub fn new(equations: Vec<LinearEquation>) -> Result<Self, SimError> {
        for (i, eq) in equations.iter().enumerate() {
            if !(eq.noise_variance > 0.0) {
                return Err(SimError::BadTable(format!("{}: noise variance must be positive", eq.var)));
            }
            if equations[..i].iter().any(|e| e.var == eq.var) {
                return Err(SimError::BadTable(format!("{} defined twice", eq.var)));
            }
            for (p, _) in &eq.coefficients {
                if !equations[..i].iter().any(|e| &e.var == p) {
                    return Err(SimError::BadTable(format!("{}: parent {p} is not defined earlier", eq.var)));
                }
            }
        }
        Ok(LinearGaussianSem { equations })
    }

    /// The diagnosis model: `K ~ N(0, σ²)`, `T ~ N(w1 K, σ²)`, `A ~ N(w2, σ²)`,
    /// `C ~ N(w3 T + w4 A, σ²)`.
    pub fn diagnosis(w: [f64; 4], sigma: f64) -> Self {
        let s2 = sigma * sigma;
        let eq = |var: &str, intercept: f64, coefficients: Vec<(&str, f64)>| LinearEquation {
            var: var.into(),
            intercept,
            coefficients: coefficients.into_iter().map(|(p, c)| (p.to_string(), c)).collect(),
            noise_variance: s2,
        };
        LinearGaussianSem::new(vec![
            eq("K", 0.0, vec![]),
            eq("T", 0.0, vec![("K", w[0])]),
            eq("A", w[1], vec![]),
            eq("C", 0.0, vec![("T", w[2]), ("A", w[3])]),
        ])
        .expect("diagnosis equations are well formed")
    }

    pub fn equations(&self) -> &[LinearEquation] {
        &self.equations
    }

    pub fn variables(&self) -> Vec<String> {
        self.equations.iter().map(|e| e.var.clone()).collect()
    }

    fn equation_mut(&mut self, var: &str) -> Result<&mut LinearEquation, SimError> {
        self.equations
            .iter_mut()
            .find(|e| e.var == var)
            .ok_or_else(|| SimError::BadTable(format!("no equation for {var}")))
    }

    pub fn get(&self, h: &Handle) -> Result<f64, SimError> {
        let mut copy = self.clone();
        copy.slot(h).map(|v| *v)
    }

    /// Copy with one parameter replaced.
    pub fn with(&self, h: &Handle, value: f64) -> Result<Self, SimError> {
        let mut out = self.clone();
        *out.slot(h)? = value;
        Ok(out)
    }

    fn slot(&mut self, h: &Handle) -> Result<&mut f64, SimError> {
        match h {
            Handle::Intercept { var } => Ok(&mut self.equation_mut(var)?.intercept),
            Handle::Coefficient { var, parent } => self
                .equation_mut(var)?
                .coefficients
                .iter_mut()
                .find(|(p, _)| p == parent)
                .map(|(_, c)| c)
                .ok_or_else(|| SimError::BadTable(format!("{var} has no parent {parent}"))),
        }
    }

    /// Ancestral sampling of every variable.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Dataset {
        let k = self.equations.len();
        let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(n); k];
        let parents: Vec<Vec<(usize, f64)>> = self
            .equations
            .iter()
            .map(|e| {
                e.coefficients
                    .iter()
                    .map(|(p, c)| (self.equations.iter().position(|q| &q.var == p).unwrap(), *c))
                    .collect()
            })
            .collect();
        let mut row = vec![0.0; k];
        for _ in 0..n {
            for (i, e) in self.equations.iter().enumerate() {
                let z: f64 = StandardNormal.sample(rng);
                let mean = e.intercept + parents[i].iter().map(|&(p, c)| c * row[p]).sum::<f64>();
                row[i] = mean + e.noise_variance.sqrt() * z;
            }
            for (c, v) in cols.iter_mut().zip(&row) {
                c.push(*v);
            }
        }
        let columns = self
            .equations
            .iter()
            .zip(cols)
            .map(|(e, v)| Column::continuous(e.var.clone(), v))
            .collect();
        Dataset::new(columns).expect("equations have distinct names")
    }
}

/// Models that share every mechanism except one parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentFamily {
    pub base: LinearGaussianSem,
    pub handle: Handle,
    pub values: Vec<f64>,
}

impl EnvironmentFamily {
    pub fn member(&self, value: f64) -> Result<LinearGaussianSem, SimError> {
        self.base.with(&self.handle, value)
    }

    pub fn members(&self) -> Result<Vec<LinearGaussianSem>, SimError> {
        self.values.iter().map(|&v| self.member(v)).collect()
    }
}
