//! Monte Carlo evaluation of a linear-Gaussian predictive distribution.
//!
//! An expression `norm_t[Σ_U ∏ f]` is flattened into one sum over bound
//! variables `U` and a list of factors, each a chain of fitted regressions.
//! Bound variables are drawn ancestrally from the first factor that has them
//! as response. Every factor mentioning `t` is Gaussian in `t`, so their
//! product is combined in closed form per draw; the remaining factors weight
//! the draw. When some draw needs `t` itself, `t` is sampled like a bound
//! variable and the prediction is self-normalized importance sampling.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::predictor::FitError;
use super::regression::Regression;
use crate::identify::{base_name, Expr, Source, FRESH_SEP};

/// One regression bound to concrete slots.
#[derive(Clone, Debug)]
struct Unit {
    reg: usize,
    response: usize,
    regressors: Vec<usize>,
}

#[derive(Clone, Debug)]
enum Weight {
    Density(Unit),
    Ratio { num: Vec<Unit>, den: Vec<Unit> },
}

#[derive(Clone, Debug)]
pub(crate) struct GaussianPlan {
    n_features: usize,
    n_slots: usize,
    target: usize,
    generators: Vec<Unit>,
    target_units: Vec<Unit>,
    weights: Vec<Weight>,
    sample_target: bool,
}

/// Regression chains keyed by the base names of the atom they fit.
pub(crate) type ChainIndex = HashMap<(Vec<String>, Vec<String>), Vec<usize>>;

impl GaussianPlan {
    pub(crate) fn build(
        expr: &Expr,
        target: &str,
        features: &[String],
        regs: &[Regression],
        chains: &ChainIndex,
    ) -> Result<GaussianPlan, FitError> {
        let body = match expr {
            Expr::Normalize { target: t, of } if t == target => of.as_ref().clone(),
            other => other.clone(),
        };
        let mut used = body.all_vars();
        let mut bound = Vec::new();
        let mut factors = Vec::new();
        flatten(body, &mut bound, &mut factors, &mut used)?;

        let mut slots: Vec<String> = features.to_vec();
        slots.extend(bound.iter().cloned());
        slots.push(target.to_string());
        let slot_of: HashMap<&str, usize> = slots.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let t_slot = slots.len() - 1;

        let mut units_per_factor: Vec<Weight> = Vec::new();
        for f in &factors {
            match f {
                Expr::Kernel { .. } => {
                    let units = atom_units(f, regs, chains, &slot_of)?;
                    units_per_factor.extend(units.into_iter().map(Weight::Density));
                }
                Expr::Quotient { num, den } => {
                    let side = |e: &Expr| -> Result<Vec<Unit>, FitError> {
                        let mut out = Vec::new();
                        for a in product_atoms(e)? {
                            out.extend(atom_units(a, regs, chains, &slot_of)?);
                        }
                        Ok(out)
                    };
                    units_per_factor.push(Weight::Ratio {
                        num: side(num)?,
                        den: side(den)?,
                    });
                }
                other => return Err(FitError::UnsupportedShape(format!("factor {other}"))),
            }
        }

        let bound_slots: Vec<usize> = (features.len()..t_slot).collect();
        let n_features = features.len();
        let analytic = classify(&units_per_factor, &bound_slots, t_slot, n_features, false);
        let (generators, target_units, weights, sample_target) = match analytic {
            Some(parts) => parts,
            None => {
                let mut with_t = bound_slots.clone();
                with_t.push(t_slot);
                classify(&units_per_factor, &with_t, t_slot, n_features, true).ok_or_else(|| {
                    FitError::UnsupportedShape(format!("cannot sample the sums of {expr}"))
                })?
            }
        };
        if !sample_target && target_units.is_empty() {
            return Err(FitError::UnsupportedShape(format!("{target} is unconstrained in {expr}")));
        }
        Ok(GaussianPlan {
            n_features,
            n_slots: slots.len(),
            target: t_slot,
            generators,
            target_units,
            weights,
            sample_target,
        })
    }

    pub(crate) fn needs_sampling(&self) -> bool {
        !self.generators.is_empty()
    }

    /// Predictive mean and variance of the target given feature values.
    pub(crate) fn predict(
        &self,
        regs: &[Regression],
        features: &[f64],
        samples: usize,
        seed: u64,
    ) -> Result<(f64, f64), FitError> {
        let mut vals = vec![0.0; self.n_slots];
        vals[..self.n_features].copy_from_slice(features);
        if !self.needs_sampling() {
            let (m, v, _) = self.combine_target(regs, &vals)?;
            return Ok((m, v));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut comps: Vec<(f64, f64, f64)> = Vec::with_capacity(samples);
        for _ in 0..samples {
            for g in &self.generators {
                let r = &regs[g.reg];
                let z: f64 = StandardNormal.sample(&mut rng);
                vals[g.response] = mean_of(r, g, &vals) + r.noise_variance.sqrt() * z;
            }
            let mut logw = 0.0;
            for w in &self.weights {
                logw += match w {
                    Weight::Density(u) => log_density(&regs[u.reg], u, &vals),
                    Weight::Ratio { num, den } => {
                        num.iter().map(|u| log_density(&regs[u.reg], u, &vals)).sum::<f64>()
                            - den.iter().map(|u| log_density(&regs[u.reg], u, &vals)).sum::<f64>()
                    }
                };
            }
            if self.sample_target {
                comps.push((logw, vals[self.target], 0.0));
            } else {
                let (m, v, logc) = self.combine_target(regs, &vals)?;
                comps.push((logw + logc, m, v));
            }
        }
        let top = comps.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(FitError::Degenerate("all Monte Carlo weights vanish".into()));
        }
        let (mut sw, mut sm, mut s2) = (0.0, 0.0, 0.0);
        for (lw, m, v) in comps {
            let w = (lw - top).exp();
            sw += w;
            sm += w * m;
            s2 += w * (v + m * m);
        }
        let mean = sm / sw;
        Ok((mean, (s2 / sw - mean * mean).max(0.0)))
    }

    /// Product of the target factors as a Gaussian in `t`: mean, variance and
    /// the log of its integral.
    fn combine_target(&self, regs: &[Regression], vals: &[f64]) -> Result<(f64, f64, f64), FitError> {
        let mut logc = 0.0;
        let (mut prec, mut lin, mut quad, mut logv, mut n) = (0.0, 0.0, 0.0, 0.0, 0usize);
        for u in &self.target_units {
            let r = &regs[u.reg];
            let s2 = r.noise_variance;
            let (m, v) = if u.response == self.target {
                (mean_of(r, u, vals), s2)
            } else {
                let mut alpha = r.intercept;
                let mut beta = 0.0;
                for (c, &slot) in r.coefficients.iter().zip(&u.regressors) {
                    if slot == self.target {
                        beta += c;
                    } else {
                        alpha += c * vals[slot];
                    }
                }
                let y = vals[u.response];
                if beta == 0.0 {
                    logc += normal_logpdf(y, alpha, s2);
                    continue;
                }
                logc -= beta.abs().ln();
                ((y - alpha) / beta, s2 / (beta * beta))
            };
            prec += 1.0 / v;
            lin += m / v;
            quad += m * m / v;
            logv += v.ln();
            n += 1;
        }
        if n == 0 || !(prec > 0.0) {
            return Err(FitError::Degenerate("target has no Gaussian factor".into()));
        }
        let var = 1.0 / prec;
        let mean = lin * var;
        logc += -((n - 1) as f64) / 2.0 * (2.0 * PI).ln() - 0.5 * logv + 0.5 * var.ln()
            - 0.5 * (quad - mean * mean * prec);
        Ok((mean, var, logc))
    }
}

fn mean_of(r: &Regression, u: &Unit, vals: &[f64]) -> f64 {
    r.intercept
        + r.coefficients
            .iter()
            .zip(&u.regressors)
            .map(|(c, &s)| c * vals[s])
            .sum::<f64>()
}

fn log_density(r: &Regression, u: &Unit, vals: &[f64]) -> f64 {
    normal_logpdf(vals[u.response], mean_of(r, u, vals), r.noise_variance)
}

fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * PI * var).ln() + (x - mean) * (x - mean) / var)
}

fn flatten(e: Expr, bound: &mut Vec<String>, out: &mut Vec<Expr>, used: &mut BTreeSet<String>) -> Result<(), FitError> {
    match e {
        Expr::Product { factors } => {
            for f in factors {
                flatten(f, bound, out, used)?;
            }
            Ok(())
        }
        Expr::Marginal { sum_out, of } => {
            let mut body = *of;
            for b in sum_out {
                let base = base_name(&b).to_string();
                let fresh = (1..)
                    .map(|k| format!("{base}{FRESH_SEP}{k}"))
                    .find(|n| !used.contains(n))
                    .unwrap();
                used.insert(fresh.clone());
                body = body.rename_free(&b, &fresh);
                bound.push(fresh);
            }
            flatten(body, bound, out, used)
        }
        k @ Expr::Kernel { .. } => {
            if let Expr::Kernel {
                source: Source::Derived { expr },
                ..
            } = k
            {
                return flatten(*expr, bound, out, used);
            }
            out.push(k);
            Ok(())
        }
        q @ Expr::Quotient { .. } => {
            out.push(q);
            Ok(())
        }
        Expr::Normalize { .. } => Err(FitError::UnsupportedShape("nested normalization".into())),
    }
}

fn product_atoms(e: &Expr) -> Result<Vec<&Expr>, FitError> {
    match e {
        Expr::Product { factors } => {
            let mut out = Vec::new();
            for f in factors {
                out.extend(product_atoms(f)?);
            }
            Ok(out)
        }
        k @ Expr::Kernel { .. } if k.as_atom().is_some() => Ok(vec![k]),
        other => Err(FitError::UnsupportedShape(format!("quotient term {other}"))),
    }
}

fn atom_units(
    atom: &Expr,
    regs: &[Regression],
    chains: &ChainIndex,
    slot_of: &HashMap<&str, usize>,
) -> Result<Vec<Unit>, FitError> {
    let (over, given) = atom
        .as_atom()
        .ok_or_else(|| FitError::UnsupportedShape(format!("term {atom}")))?;
    let base = |v: &[String]| v.iter().map(|n| base_name(n).to_string()).collect::<Vec<_>>();
    let key = (base(over), base(given));
    let chain = chains
        .get(&key)
        .ok_or_else(|| FitError::UnsupportedShape(format!("no fitted factor for {atom}")))?;
    let actual: HashMap<&str, &str> = over
        .iter()
        .chain(given)
        .map(|n| (base_name(n), n.as_str()))
        .collect();
    let slot = |b: &str| -> Result<usize, FitError> {
        let name = actual.get(b).copied().unwrap_or(b);
        slot_of
            .get(name)
            .copied()
            .ok_or_else(|| FitError::MissingVariable(name.to_string()))
    };
    chain
        .iter()
        .map(|&i| {
            let r = &regs[i];
            Ok(Unit {
                reg: i,
                response: slot(&r.response)?,
                regressors: r.regressors.iter().map(|x| slot(x)).collect::<Result<_, _>>()?,
            })
        })
        .collect()
}

type Parts = (Vec<Unit>, Vec<Unit>, Vec<Weight>, bool);

/// Splits units into ordered generators for `sampled`, target factors and weights.
fn classify(
    all: &[Weight],
    sampled: &[usize],
    target: usize,
    n_features: usize,
    sample_target: bool,
) -> Option<Parts> {
    let density = |wi: usize| match &all[wi] {
        Weight::Density(u) => u,
        Weight::Ratio { .. } => unreachable!(),
    };
    let mut gen_for: HashMap<usize, usize> = HashMap::new();
    for (wi, w) in all.iter().enumerate() {
        if let Weight::Density(u) = w {
            if sampled.contains(&u.response) {
                gen_for.entry(u.response).or_insert(wi);
            }
        }
    }
    if sampled.iter().any(|s| !gen_for.contains_key(s)) {
        return None;
    }
    // ancestral order; the target is unknown unless it is sampled
    let mut known: Vec<bool> = (0..=target).map(|s| s < n_features).collect();
    let mut generators = Vec::new();
    let mut pending: Vec<usize> = sampled.to_vec();
    while !pending.is_empty() {
        let pos = pending
            .iter()
            .position(|s| density(gen_for[s]).regressors.iter().all(|&r| known[r]))?;
        let s = pending.remove(pos);
        generators.push(density(gen_for[&s]).clone());
        known[s] = true;
    }
    let is_gen: BTreeSet<usize> = gen_for.values().copied().collect();
    let mut target_units = Vec::new();
    let mut weights = Vec::new();
    for (wi, w) in all.iter().enumerate() {
        if is_gen.contains(&wi) {
            continue;
        }
        let mentions_t = match w {
            Weight::Density(u) => u.response == target || u.regressors.contains(&target),
            Weight::Ratio { num, den } => num
                .iter()
                .chain(den)
                .any(|u| u.response == target || u.regressors.contains(&target)),
        };
        match w {
            Weight::Density(u) if mentions_t && !sample_target => target_units.push(u.clone()),
            Weight::Ratio { .. } if mentions_t && !sample_target => return None,
            other => weights.push(other.clone()),
        }
    }
    Some((generators, target_units, weights, sample_target))
}
