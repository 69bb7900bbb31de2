//! The diagnosis simulation: one surgery estimator trained on a single source
//! environment against pooled OLS, evaluated over a grid of test environments.
//!
//! Each replicate draws `w1..w4 ~ N(0, 1)`. Source environment 0 uses the
//! drawn value of the varied parameter; the other source environments redraw
//! it from `N(0, 1)`. Surgery sees only environment 0 (split into training and
//! validation rows); OLS regresses `T` on `A, C` over all source rows.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::linear::{EnvironmentFamily, Handle, LinearEquation, LinearGaussianSem};
use super::SimError;
use crate::estimate::{fit_ols, mse, DataError, Dataset, FitConfig, FitError, OlsModel};
use crate::graph::{Admg, AdmgBuilder};
use crate::surgery::{surgery_search, SearchConfig, SurgeryError, SurgeryResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// `A` is mutable; its intercept varies.
    MutableA,
    /// `T` is mutable; the coefficient of `K` in `T` varies.
    TargetShift,
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mutable-a" | "mutable-A" => Ok(Scenario::MutableA),
            "target-shift" => Ok(Scenario::TargetShift),
            _ => Err(format!("unknown scenario `{s}` (expected mutable-a or target-shift)")),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::MutableA => "mutable-a",
            Scenario::TargetShift => "target-shift",
        })
    }
}

/// How `A` is generated in the mutable-A scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AMechanism {
    /// `A ~ N(w2, σ²)`; the intercept `w2` varies.
    Intercept,
    /// `A ~ N(w2 K, σ²)`; the coefficient of `K` varies.
    KCoefficient,
}

impl FromStr for AMechanism {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "intercept" => Ok(AMechanism::Intercept),
            "k-coefficient" => Ok(AMechanism::KCoefficient),
            _ => Err(format!("unknown a_mechanism `{s}` (expected intercept or k-coefficient)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n_per_env: usize,
    pub n_source_envs: usize,
    pub grid_points: usize,
    /// Defaults to `-100` (mutable-A) or `-10` (target shift).
    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub n_reps: usize,
    pub seed: u64,
    pub sigma: f64,
    /// Fraction of environment 0 held out for surgery model selection.
    pub valid_fraction: f64,
    pub a_mechanism: AMechanism,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid experiment config: {0}")]
    Invalid(String),
    #[error("replicate {rep}: {source}")]
    Surgery { rep: usize, source: SurgeryError },
    #[error("replicate {rep}: {source}")]
    Fit { rep: usize, source: FitError },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl ExperimentConfig {
    /// Desk-scale defaults: 500 rows per environment, 5 source environments,
    /// 21 grid points, 10 replicates, `σ = 0.1`.
    pub fn desk(scenario: Scenario, seed: u64) -> Self {
        ExperimentConfig {
            scenario,
            n_per_env: 500,
            n_source_envs: 5,
            grid_points: 21,
            grid_min: None,
            grid_max: None,
            n_reps: 10,
            seed,
            sigma: 0.1,
            valid_fraction: 0.2,
            a_mechanism: AMechanism::Intercept,
        }
    }

    /// Sets one `key=value` option.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("`{v}` is not a valid value for {key}"))
        }
        match key {
            "scenario" => self.scenario = value.parse()?,
            "n_per_env" => self.n_per_env = num(key, value)?,
            "n_source_envs" => self.n_source_envs = num(key, value)?,
            "grid_points" => self.grid_points = num(key, value)?,
            "grid_min" => self.grid_min = Some(num(key, value)?),
            "grid_max" => self.grid_max = Some(num(key, value)?),
            "n_reps" => self.n_reps = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "sigma" => self.sigma = num(key, value)?,
            "valid_fraction" => self.valid_fraction = num(key, value)?,
            "a_mechanism" => self.a_mechanism = value.parse()?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Applies `key=value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(mut self, text: &str) -> Result<Self, ExperimentError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ExperimentError::Config { line: i + 1, msg };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
            self.set(k.trim(), v.trim()).map_err(err)?;
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Invalid(m.into()));
        let (lo, hi) = self.grid_range();
        if self.n_source_envs == 0 || self.n_reps == 0 || self.grid_points == 0 {
            return bad("n_source_envs, n_reps and grid_points must be positive");
        }
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad("grid_min must not exceed grid_max");
        }
        if self.grid_points == 1 && lo != hi {
            return bad("a single grid point needs grid_min = grid_max");
        }
        if !(self.sigma > 0.0) {
            return bad("sigma must be positive");
        }
        if !(self.valid_fraction > 0.0 && self.valid_fraction < 1.0) {
            return bad("valid_fraction must lie in (0, 1)");
        }
        let n_valid = (self.n_per_env as f64 * self.valid_fraction).round() as usize;
        if n_valid < 2 || self.n_per_env - n_valid < 10 {
            return bad("n_per_env too small for the train/validation split");
        }
        Ok(())
    }

    pub fn grid_range(&self) -> (f64, f64) {
        let half = match self.scenario {
            Scenario::MutableA => 100.0,
            Scenario::TargetShift => 10.0,
        };
        (self.grid_min.unwrap_or(-half), self.grid_max.unwrap_or(half))
    }

    /// Equally spaced test values including both ends.
    pub fn grid(&self) -> Vec<f64> {
        let (lo, hi) = self.grid_range();
        if self.grid_points == 1 {
            return vec![lo];
        }
        let step = (hi - lo) / (self.grid_points - 1) as f64;
        (0..self.grid_points)
            .map(|i| if i + 1 == self.grid_points { hi } else { lo + step * i as f64 })
            .collect()
    }

    /// The selection diagram the surgery estimator is searched on.
    pub fn graph(&self) -> Admg {
        diagnosis_graph(match self.scenario {
            Scenario::MutableA => "A",
            Scenario::TargetShift => "T",
        })
    }

    fn handle(&self) -> Handle {
        match (self.scenario, self.a_mechanism) {
            (Scenario::MutableA, AMechanism::Intercept) => Handle::Intercept { var: "A".into() },
            (Scenario::MutableA, AMechanism::KCoefficient) => Handle::Coefficient {
                var: "A".into(),
                parent: "K".into(),
            },
            (Scenario::TargetShift, _) => Handle::Coefficient {
                var: "T".into(),
                parent: "K".into(),
            },
        }
    }

    fn base_sem(&self, w: [f64; 4]) -> LinearGaussianSem {
        let sem = LinearGaussianSem::diagnosis(w, self.sigma);
        if self.scenario == Scenario::TargetShift || self.a_mechanism == AMechanism::Intercept {
            return sem;
        }
        let equations = sem
            .equations()
            .iter()
            .map(|e| match e.var.as_str() {
                "A" => LinearEquation {
                    intercept: 0.0,
                    coefficients: vec![("K".into(), w[1])],
                    ..e.clone()
                },
                _ => e.clone(),
            })
            .collect();
        LinearGaussianSem::new(equations).expect("K precedes A")
    }
}

/// `T <-> A`, `T -> C`, `A -> C` with one selection vertex pointing at `mutable`.
pub fn diagnosis_graph(mutable: &str) -> Admg {
    AdmgBuilder::new()
        .observed_all(&["T", "A", "C"])
        .bidirected("T", "A")
        .edge("T", "C")
        .edge("A", "C")
        .selection("S", mutable)
        .build()
        .expect("diagnosis graph is well formed")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ols,
    Surgery,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ols => "ols",
            Method::Surgery => "surgery",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub rep: usize,
    pub env_value: f64,
    pub method: Method,
    pub mse: f64,
}

const OBSERVED: [&str; 3] = ["T", "A", "C"];

/// One replicate after training: drawn parameters, fitted models and the
/// random stream that test environments are drawn from.
pub struct Replicate {
    pub rep: usize,
    pub w: [f64; 4],
    pub family: EnvironmentFamily,
    /// Handle values of the source environments; the first trained surgery.
    pub source_values: Vec<f64>,
    pub ols: OlsModel,
    pub surgery: SurgeryResult,
    rng: ChaCha8Rng,
}

impl Replicate {
    /// Draws parameters and source data for replicate `rep` and fits both methods.
    pub fn train(cfg: &ExperimentConfig, rep: usize) -> Result<Self, ExperimentError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(rep as u64);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let w = [normal(), normal(), normal(), normal()];
        let handle = cfg.handle();
        let base = cfg.base_sem(w);
        let mut source_values = vec![base.get(&handle)?];
        for _ in 1..cfg.n_source_envs {
            source_values.push(normal());
        }
        let family = EnvironmentFamily {
            base,
            handle,
            values: source_values.clone(),
        };
        let sources = family
            .members()?
            .iter()
            .map(|sem| sem.sample(cfg.n_per_env, &mut rng).select_columns(&OBSERVED))
            .collect::<Result<Vec<_>, _>>()?;

        let n_valid = (cfg.n_per_env as f64 * cfg.valid_fraction).round() as usize;
        let (train, valid) = sources[0].split_at(cfg.n_per_env - n_valid);
        let g = cfg.graph();
        let t = g.id("T").expect("T is observed");
        let fit_cfg = FitConfig::new(cfg.seed ^ rep as u64);
        let surgery = surgery_search(&g, t, &train, &valid, &fit_cfg, &SearchConfig::default())
            .map_err(|source| ExperimentError::Surgery { rep, source })?;

        let pooled = Dataset::concat(&sources)?;
        let ols = fit_ols(&pooled, "T", &["A".to_string(), "C".to_string()])
            .map_err(|source| ExperimentError::Fit { rep, source })?;
        Ok(Replicate {
            rep,
            w,
            family,
            source_values,
            ols,
            surgery,
            rng,
        })
    }

    /// Test MSE of both methods at each handle value, drawing `n_per_env`
    /// fresh rows per value.
    pub fn evaluate(&mut self, values: &[f64], n_per_env: usize) -> Result<Vec<ResultRow>, ExperimentError> {
        let tests = values
            .iter()
            .map(|&v| Ok(self.family.member(v)?.sample(n_per_env, &mut self.rng)))
            .collect::<Result<Vec<_>, ExperimentError>>()?;
        let rep = self.rep;
        let predictor = self
            .surgery
            .chosen
            .predictor
            .as_ref()
            .expect("surgery_search keeps the fitted predictor");
        let per_env = values
            .par_iter()
            .zip(&tests)
            .map(|(&v, data)| {
                let truth = data.values("T")?;
                let ols = mse(&self.ols.predict(data).map_err(|source| ExperimentError::Fit { rep, source })?, truth);
                let means: Vec<f64> = predictor
                    .predict(data)
                    .map_err(|source| ExperimentError::Fit { rep, source })?
                    .iter()
                    .map(|p| p.mean())
                    .collect();
                let surgery = mse(&means, truth);
                Ok([(Method::Ols, ols), (Method::Surgery, surgery)].map(|(method, mse)| ResultRow {
                    rep,
                    env_value: v,
                    method,
                    mse,
                }))
            })
            .collect::<Result<Vec<_>, ExperimentError>>()?;
        Ok(per_env.into_iter().flatten().collect())
    }
}

/// Rows ordered by replicate, grid value, then method, plus each replicate's
/// chosen surgery expression.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub chosen: Vec<String>,
}

/// Runs every replicate in parallel. Each replicate draws from its own
/// stream, so the output does not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, ExperimentError> {
    cfg.validate()?;
    let grid = cfg.grid();
    let reps = (0..cfg.n_reps)
        .into_par_iter()
        .map(|rep| {
            let mut r = Replicate::train(cfg, rep)?;
            let rows = r.evaluate(&grid, cfg.n_per_env)?;
            Ok((rows, r.surgery.chosen.expr.to_string()))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let (rows, chosen): (Vec<_>, Vec<_>) = reps.into_iter().unzip();
    Ok(ExperimentResult {
        config: cfg.clone(),
        rows: rows.into_iter().flatten().collect(),
        chosen,
    })
}

impl ExperimentResult {
    /// CSV with columns `rep,env_value,method,mse`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["rep", "env_value", "method", "mse"])?;
        for r in &self.rows {
            w.write_record([r.rep.to_string(), r.env_value.to_string(), r.method.to_string(), r.mse.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Mean MSE over replicates at each grid value, in grid order.
    pub fn mean_curve(&self, method: Method) -> Vec<(f64, f64)> {
        let mut curve: Vec<(f64, f64, usize)> = Vec::new();
        for r in self.rows.iter().filter(|r| r.method == method) {
            match curve.iter_mut().find(|c| c.0 == r.env_value) {
                Some(c) => {
                    c.1 += r.mse;
                    c.2 += 1;
                }
                None => curve.push((r.env_value, r.mse, 1)),
            }
        }
        curve.into_iter().map(|(v, s, n)| (v, s / n as f64)).collect()
    }

    /// Largest over smallest value of the mean curve.
    pub fn curve_ratio(&self, method: Method) -> f64 {
        let ys: Vec<f64> = self.mean_curve(method).into_iter().map(|p| p.1).collect();
        let max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = ys.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// The smaller of the two end-point values of the mean curve over its minimum.
    pub fn extremes_ratio(&self, method: Method) -> f64 {
        let ys: Vec<f64> = self.mean_curve(method).into_iter().map(|p| p.1).collect();
        let min = ys.iter().copied().fold(f64::INFINITY, f64::min);
        match (ys.first(), ys.last()) {
            (Some(a), Some(b)) => a.min(*b) / min,
            _ => f64::NAN,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scenario: Scenario) -> ExperimentConfig {
        ExperimentConfig {
            n_reps: 2,
            grid_points: 5,
            ..ExperimentConfig::desk(scenario, 11)
        }
    }

    #[test]
    fn config_text_overrides_defaults() {
        let cfg = ExperimentConfig::desk(Scenario::MutableA, 0)
            .apply_text("# pilot\nscenario = target-shift\nn_reps=3\ngrid_points=4 # short\n")
            .unwrap();
        assert_eq!(cfg.scenario, Scenario::TargetShift);
        assert_eq!(cfg.n_reps, 3);
        let g = cfg.grid();
        assert_eq!((g.len(), g[0], g[3]), (4, -10.0, 10.0));
        assert!((g[1] + 10.0 / 3.0).abs() < 1e-12 && (g[2] - 10.0 / 3.0).abs() < 1e-12);
        assert!(matches!(
            ExperimentConfig::desk(Scenario::MutableA, 0).apply_text("bogus=1"),
            Err(ExperimentError::Config { line: 1, .. })
        ));
    }

    #[test]
    fn grid_spans_both_ends() {
        let g = ExperimentConfig::desk(Scenario::MutableA, 0).grid();
        assert_eq!(g.len(), 21);
        assert_eq!((g[0], g[10], g[20]), (-100.0, 0.0, 100.0));
    }

    #[test]
    fn source_environment_test_error_reaches_the_noise_floor() {
        let cfg = ExperimentConfig::desk(Scenario::MutableA, 5);
        let mut r = Replicate::train(&cfg, 0).unwrap();
        let rows = r.evaluate(&[r.source_values[0]], 20_000).unwrap();
        // Var(T | A, C) with T = w1 K + e independent of A.
        let s2 = cfg.sigma * cfg.sigma;
        let var_t = s2 * (r.w[0] * r.w[0] + 1.0);
        let floor = var_t * s2 / (r.w[2] * r.w[2] * var_t + s2);
        let ols = rows.iter().find(|x| x.method == Method::Ols).unwrap().mse;
        assert!((ols / floor - 1.0).abs() < 0.1, "ols {ols} floor {floor}");
    }

    #[test]
    fn results_do_not_depend_on_scheduling() {
        let cfg = small(Scenario::TargetShift);
        let a = run_experiment(&cfg).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg).unwrap());
        assert_eq!(a, b);
        let mut out = Vec::new();
        a.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("rep,env_value,method,mse\n0,-10,ols,"));
        assert_eq!(text.lines().count(), 1 + 2 * 5 * 2);
    }

    #[test]
    fn target_shift_surgery_drops_the_target_prior() {
        let res = run_experiment(&small(Scenario::TargetShift)).unwrap();
        for e in &res.chosen {
            assert!(!e.contains("P(T)"), "{e}");
        }
    }
}
