use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dataset::{ColumnKind, DataError, Dataset};
use super::gaussian::{ChainIndex, GaussianPlan};
use super::regression::Regression;
use crate::identify::{base_name, evaluate, AtomSource, EvalError, Expr, JointSource, Table};

#[derive(Debug, Error)]
pub enum FitError {
    #[error("variable {0} is not in the data")]
    MissingVariable(String),
    #[error("variable {0} does not match the target's type (all categorical or all continuous)")]
    MixedTypes(String),
    #[error("rank-deficient regressors while fitting {factor}")]
    RankDeficient { factor: String },
    #[error("empty context cell {cell:?} while fitting {factor}")]
    EmptyContext { factor: String, cell: Vec<(String, usize)> },
    #[error("unsupported expression shape: {0}")]
    UnsupportedShape(String),
    #[error("degenerate prediction: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Fitting and Monte Carlo settings. The seed has no default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Pseudo-count added to every cell of a discrete table.
    pub smoothing: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl FitConfig {
    pub const DEFAULT_SMOOTHING: f64 = 1e-9;
    pub const DEFAULT_MC_SAMPLES: usize = 10_000;

    pub fn new(seed: u64) -> Self {
        FitConfig {
            smoothing: Self::DEFAULT_SMOOTHING,
            mc_samples: Self::DEFAULT_MC_SAMPLES,
            seed,
        }
    }
}

/// A fitted observational term `P(over | given)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FittedFactor {
    /// Table over `over ++ given`, normalized over `over` in every context.
    DiscreteTable {
        over: Vec<String>,
        given: Vec<String>,
        table: Table,
    },
    /// `P(h_1..h_k | C) = ∏ P(h_i | h_<i, C)`, one regression per head variable.
    LinearGaussian {
        over: Vec<String>,
        given: Vec<String>,
        chain: Vec<Regression>,
    },
}

impl FittedFactor {
    pub fn over(&self) -> &[String] {
        match self {
            FittedFactor::DiscreteTable { over, .. } | FittedFactor::LinearGaussian { over, .. } => over,
        }
    }

    pub fn given(&self) -> &[String] {
        match self {
            FittedFactor::DiscreteTable { given, .. } | FittedFactor::LinearGaussian { given, .. } => given,
        }
    }
}

/// Predictive distribution of the target for one row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Prediction {
    /// Probabilities indexed by the target's level code.
    Distribution { probs: Vec<f64> },
    Gaussian { mean: f64, variance: f64 },
}

impl Prediction {
    /// Expected target value; for a distribution, level codes are the values.
    pub fn mean(&self) -> f64 {
        match self {
            Prediction::Distribution { probs } => probs.iter().enumerate().map(|(i, p)| i as f64 * p).sum(),
            Prediction::Gaussian { mean, .. } => *mean,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
}

/// A fitted estimator of the target: the expression normalized over the
/// target plus one fitted block per observational term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    pub target: String,
    pub expr: Expr,
    /// Free variables other than the target, in name order.
    pub features: Vec<String>,
    pub factors: Vec<FittedFactor>,
    /// Level labels of every categorical variable the predictor reads.
    #[serde(default)]
    pub levels: BTreeMap<String, Vec<String>>,
    pub monte_carlo: MonteCarlo,
}

fn normalized(expr: &Expr, target: &str) -> Expr {
    match expr {
        Expr::Normalize { target: t, .. } if t == target => expr.clone(),
        other => Expr::normalize(target, other.clone()),
    }
}

/// Distinct observational terms by base name, in first-seen order.
fn base_atoms(expr: &Expr) -> Vec<(Vec<String>, Vec<String>)> {
    let mut out = Vec::new();
    for (over, given) in expr.atoms() {
        let b = |v: &[String]| v.iter().map(|n| base_name(n).to_string()).collect::<Vec<_>>();
        let key = (b(&over), b(&given));
        if !out.contains(&key) {
            out.push(key);
        }
    }
    out
}

fn atom_label(over: &[String], given: &[String]) -> String {
    format!("{}", Expr::atom(over, given))
}

/// Fits every observational term of `expr` to `data` and returns a predictor
/// of `target`. A categorical target needs categorical variables throughout
/// and yields smoothed frequency tables; a continuous target yields one
/// linear-Gaussian regression per head variable.
pub fn fit(expr: &Expr, target: &str, data: &Dataset, cfg: &FitConfig) -> Result<Predictor, FitError> {
    let expr = normalized(expr, target);
    let mut vars: BTreeSet<String> = expr.all_vars().iter().map(|v| base_name(v).to_string()).collect();
    vars.insert(target.to_string());
    for v in &vars {
        if !data.has_column(v) {
            return Err(FitError::MissingVariable(v.clone()));
        }
    }
    let discrete = data.column(target)?.is_categorical();
    for v in &vars {
        if data.column(v)?.is_categorical() != discrete {
            return Err(FitError::MixedTypes(v.clone()));
        }
    }
    let atoms = base_atoms(&expr);
    let features: Vec<String> = expr.free_vars().into_iter().filter(|v| v != target).collect();
    let mut levels = BTreeMap::new();
    for v in &vars {
        if let ColumnKind::Categorical { levels: l } = &data.column(v)?.kind {
            levels.insert(v.clone(), l.clone());
        }
    }
    let factors: Vec<FittedFactor> = if discrete {
        atoms
            .par_iter()
            .map(|(o, g)| fit_table(o, g, data, cfg.smoothing))
            .collect::<Result<_, _>>()?
    } else {
        atoms
            .par_iter()
            .map(|(o, g)| fit_gaussian(o, g, data))
            .collect::<Result<_, _>>()?
    };
    let p = Predictor {
        target: target.to_string(),
        expr,
        features,
        factors,
        levels,
        monte_carlo: MonteCarlo {
            samples: cfg.mc_samples,
            seed: cfg.seed,
        },
    };
    p.check()?;
    Ok(p)
}

/// A discrete predictor whose terms are read off an exact joint table.
pub fn fit_population(expr: &Expr, target: &str, joint: &Table) -> Result<Predictor, FitError> {
    let expr = normalized(expr, target);
    let src = JointSource::new(joint);
    let factors = base_atoms(&expr)
        .into_iter()
        .map(|(over, given)| {
            let table = src.atom(&over, &given)?;
            Ok(FittedFactor::DiscreteTable { over, given, table })
        })
        .collect::<Result<Vec<_>, FitError>>()?;
    let features: Vec<String> = expr.free_vars().into_iter().filter(|v| v != target).collect();
    let p = Predictor {
        target: target.to_string(),
        expr,
        features,
        factors,
        levels: BTreeMap::new(),
        monte_carlo: MonteCarlo { samples: 0, seed: 0 },
    };
    p.check()?;
    Ok(p)
}

fn fit_table(over: &[String], given: &[String], data: &Dataset, eps: f64) -> Result<FittedFactor, FitError> {
    let vars: Vec<String> = over.iter().chain(given).cloned().collect();
    let mut card = Vec::with_capacity(vars.len());
    let mut cols = Vec::with_capacity(vars.len());
    for v in &vars {
        let c = data.column(v)?;
        card.push(c.cardinality().ok_or_else(|| FitError::MixedTypes(v.clone()))?);
        cols.push(c);
    }
    let mut counts = Table::from_fn(vars.clone(), card.clone(), |_| 0.0);
    let mut values = counts.values().to_vec();
    let mut state = vec![0usize; vars.len()];
    for r in 0..data.n_rows() {
        for (s, c) in state.iter_mut().zip(&cols) {
            *s = c.code(r);
        }
        values[counts.index_of(&state)] += 1.0;
    }
    counts = Table::new(vars.clone(), card.clone(), values.iter().map(|n| n + eps).collect());
    // Σ_over (n + ε) = n(context) + ε·|over states|
    let context = counts.marginal(given);
    if eps == 0.0 {
        if let Some(i) = context.values().iter().position(|&n| n == 0.0) {
            let states = context.assignment(i);
            return Err(FitError::EmptyContext {
                factor: atom_label(over, given),
                cell: given.iter().cloned().zip(states).collect(),
            });
        }
    }
    let table = counts.div(&context);
    Ok(FittedFactor::DiscreteTable {
        over: over.to_vec(),
        given: given.to_vec(),
        table,
    })
}

fn fit_gaussian(over: &[String], given: &[String], data: &Dataset) -> Result<FittedFactor, FitError> {
    let mut chain = Vec::with_capacity(over.len());
    for (i, h) in over.iter().enumerate() {
        let regressors: Vec<String> = over[..i].iter().chain(given).cloned().collect();
        let xs: Vec<&[f64]> = regressors
            .iter()
            .map(|r| data.values(r))
            .collect::<Result<_, _>>()?;
        let reg = Regression::fit(h, data.values(h)?, &regressors, &xs).map_err(|_| FitError::RankDeficient {
            factor: atom_label(over, given),
        })?;
        chain.push(reg);
    }
    Ok(FittedFactor::LinearGaussian {
        over: over.to_vec(),
        given: given.to_vec(),
        chain,
    })
}

/// Looks up fitted tables by base-name atom.
struct FittedTables<'a> {
    tables: HashMap<(&'a [String], &'a [String]), &'a Table>,
}

impl AtomSource for FittedTables<'_> {
    fn cardinality(&self, var: &str) -> Result<usize, EvalError> {
        self.tables
            .values()
            .find_map(|t| t.cardinality_of(var))
            .ok_or_else(|| EvalError::UnknownVariable(var.to_string()))
    }

    fn atom(&self, over: &[String], given: &[String]) -> Result<Table, EvalError> {
        self.tables
            .get(&(over, given))
            .map(|t| (*t).clone())
            .ok_or_else(|| EvalError::MalformedAtom(format!("unfitted term {}", atom_label(over, given))))
    }
}

impl Predictor {
    pub fn target_levels(&self) -> Option<&[String]> {
        self.levels.get(&self.target).map(Vec::as_slice)
    }

    pub fn is_discrete(&self) -> bool {
        self.factors
            .iter()
            .all(|f| matches!(f, FittedFactor::DiscreteTable { .. }))
    }

    fn check(&self) -> Result<(), FitError> {
        if self.is_discrete() {
            self.predictive_table().map(|_| ())
        } else {
            self.plan().map(|_| ())
        }
    }

    fn regressions(&self) -> (Vec<Regression>, ChainIndex) {
        let mut regs = Vec::new();
        let mut index = ChainIndex::new();
        for f in &self.factors {
            if let FittedFactor::LinearGaussian { over, given, chain } = f {
                let ids = (regs.len()..regs.len() + chain.len()).collect();
                regs.extend(chain.iter().cloned());
                index.insert((over.clone(), given.clone()), ids);
            }
        }
        (regs, index)
    }

    fn plan(&self) -> Result<GaussianPlan, FitError> {
        let (regs, index) = self.regressions();
        GaussianPlan::build(&self.expr, &self.target, &self.features, &regs, &index)
    }

    /// The exact predictive table over `features ++ [target]`, normalized over
    /// the target in every context.
    pub fn predictive_table(&self) -> Result<Table, FitError> {
        let mut tables = HashMap::new();
        for f in &self.factors {
            if let FittedFactor::DiscreteTable { over, given, table } = f {
                tables.insert((over.as_slice(), given.as_slice()), table);
            }
        }
        let src = FittedTables { tables };
        let t = evaluate(&self.expr, &src)?;
        let mut order = self.features.clone();
        order.push(self.target.clone());
        let t = if t.position(&self.target).is_none() {
            t.broadcast(&self.target, src.cardinality(&self.target)?)
        } else {
            t
        };
        Ok(t.permute(&order))
    }

    /// Predicts every row of `data`. Row `i` of a Monte Carlo predictor uses
    /// the seed `seed ^ i`.
    pub fn predict(&self, data: &Dataset) -> Result<Vec<Prediction>, FitError> {
        let cols: Vec<&[f64]> = self
            .features
            .iter()
            .map(|f| data.values(f))
            .collect::<Result<_, _>>()?;
        let n = data.n_rows();
        if self.is_discrete() {
            let table = self.predictive_table()?;
            let k = *table.card().last().unwrap_or(&1);
            let mut state = vec![0usize; self.features.len() + 1];
            let mut out = Vec::with_capacity(n);
            for r in 0..n {
                for (s, c) in state.iter_mut().zip(&cols) {
                    *s = c[r] as usize;
                }
                let probs = (0..k)
                    .map(|v| {
                        state[self.features.len()] = v;
                        table.values()[table.index_of(&state)]
                    })
                    .collect();
                out.push(Prediction::Distribution { probs });
            }
            Ok(out)
        } else {
            let (regs, _) = self.regressions();
            let plan = self.plan()?;
            (0..n)
                .into_par_iter()
                .map(|r| {
                    let x: Vec<f64> = cols.iter().map(|c| c[r]).collect();
                    let (mean, variance) =
                        plan.predict(&regs, &x, self.monte_carlo.samples, self.monte_carlo.seed ^ r as u64)?;
                    Ok(Prediction::Gaussian { mean, variance })
                })
                .collect()
        }
    }

    /// Predicts one row given by name; `index` selects the Monte Carlo stream.
    pub fn predict_row(&self, row: &HashMap<String, f64>, index: u64) -> Result<Prediction, FitError> {
        let cols: Vec<crate::estimate::Column> = self
            .features
            .iter()
            .map(|f| {
                let v = *row.get(f).ok_or_else(|| FitError::MissingVariable(f.clone()))?;
                Ok(crate::estimate::Column::continuous(f.clone(), vec![v]))
            })
            .collect::<Result<_, FitError>>()?;
        if self.is_discrete() {
            let d = Dataset::new(cols)?;
            return Ok(self.predict(&d)?.remove(0));
        }
        let (regs, _) = self.regressions();
        let x: Vec<f64> = cols.iter().map(|c| c.values[0]).collect();
        let (mean, variance) = self
            .plan()?
            .predict(&regs, &x, self.monte_carlo.samples, self.monte_carlo.seed ^ index)?;
        Ok(Prediction::Gaussian { mean, variance })
    }

    /// Validation loss on `data`: negative log-likelihood of the target for a
    /// discrete predictor, squared error of the predictive mean otherwise.
    pub fn loss(&self, data: &Dataset) -> Result<f64, FitError> {
        let preds = self.predict(data)?;
        let truth = data.values(&self.target)?;
        if self.is_discrete() {
            let probs: Vec<Vec<f64>> = preds
                .into_iter()
                .map(|p| match p {
                    Prediction::Distribution { probs } => probs,
                    Prediction::Gaussian { .. } => unreachable!(),
                })
                .collect();
            let codes: Vec<usize> = truth.iter().map(|&v| v as usize).collect();
            Ok(nll(&probs, &codes))
        } else {
            let means: Vec<f64> = preds.iter().map(Prediction::mean).collect();
            Ok(mse(&means, truth))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("predictor serializes")
    }

    pub fn from_json(text: &str) -> Result<Predictor, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Mean squared difference of two equally long, non-empty vectors.
pub fn mse(pred: &[f64], truth: &[f64]) -> f64 {
    assert_eq!(pred.len(), truth.len(), "mse needs equal lengths");
    assert!(!pred.is_empty(), "mse needs at least one value");
    pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64
}

/// Mean negative log-probability of the observed codes.
pub fn nll(probs: &[Vec<f64>], truth: &[usize]) -> f64 {
    assert_eq!(probs.len(), truth.len(), "nll needs equal lengths");
    assert!(!probs.is_empty(), "nll needs at least one row");
    probs.iter().zip(truth).map(|(p, &t)| -p[t].ln()).sum::<f64>() / probs.len() as f64
}
