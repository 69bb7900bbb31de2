//! Search for the best stable surgery estimator of a target.
//!
//! For every conditioning set `Z` of non-mutable observed vertices the search
//! forms up to two interventional queries that intervene on all mutable
//! vertices: `P_M(t | Z)` reduced by [`uq`] in `G`, and the same reduction in
//! `G` with the edges into `t` removed followed by moving `t` into the
//! intervention set. Each identified query is normalized over `t`, fitted on
//! training data and scored on validation data; the lowest loss wins.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::estimate::{fit, Dataset, FitConfig, Predictor};
use crate::graph::{Admg, MutilationSpec, VertexSet};
use crate::identify::{id, simplify, uq, Expr, IdFailure, VarOrder};

/// Largest number of non-mutable observed vertices the search enumerates.
pub const MAX_FREE_VERTICES: usize = 20;

/// True iff every selection vertex is m-separated from `y` in the graph with
/// the edges into `x` removed.
pub fn is_stable(g: &Admg, x: VertexSet, y: VertexSet) -> bool {
    let cut = g.mutilate(&MutilationSpec::overline(x));
    cut.m_separated(g.selection(), y, VertexSet::empty())
}

/// Conditioning sets `Z ⊆ O \ {t}` with `t` m-separated from every selection
/// vertex given `Z`, largest first, then by sorted names.
pub fn pruning_search(g: &Admg, t: usize) -> Vec<Vec<String>> {
    let rest = g.observed().without(t);
    let mut out: Vec<Vec<String>> = rest
        .subsets()
        .filter(|&z| g.m_separated(VertexSet::singleton(t), g.selection(), z))
        .map(|z| sorted_names(g, z))
        .collect();
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    out
}

fn sorted_names(g: &Admg, s: VertexSet) -> Vec<String> {
    let mut v = g.names(s);
    v.sort();
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `uq(M, {t}, Z)` in `G`.
    Conditional,
    /// `uq(M \ {t}, {t}, Z)` in `G` without edges into `t`, then `t` joins the
    /// intervention set.
    TargetIntervened,
}

/// What happened to one query of the search.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Outcome {
    Identified { expr: Expr },
    NotIdentified { failure: IdFailure },
    /// The outcome set shares nothing with `t` and its children.
    Skipped,
}

/// One query formed by the search, before fitting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchQuery {
    pub conditioning: Vec<String>,
    pub branch: Branch,
    /// Post-reduction intervention set `X'`.
    pub intervene: Vec<String>,
    /// Post-reduction outcome set `Y'`.
    pub outcome: Vec<String>,
    pub result: Outcome,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchConfig {
    /// Largest conditioning set tried; all sizes when `None`.
    pub max_conditioning: Option<usize>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SurgeryError {
    #[error("target {0} is not an observed vertex")]
    TargetNotObserved(String),
    #[error("{0} non-mutable observed vertices exceed the enumeration limit of {MAX_FREE_VERTICES}")]
    TooManyVertices(usize),
    #[error("no stable surgery estimator for predicting {target}")]
    NoStableEstimator { target: String, queries: Vec<SearchQuery> },
    #[error("no identified surgery estimator for {target} could be fitted")]
    NoFittableEstimator { target: String, report: Vec<ReportEntry> },
}

/// Enumerates the queries of the search and runs identification on each, in
/// order of conditioning-set size, then names, then branch.
pub fn enumerate_queries(g: &Admg, t: usize, cfg: &SearchConfig) -> Result<Vec<SearchQuery>, SurgeryError> {
    if !g.observed().contains(t) {
        return Err(SurgeryError::TargetNotObserved(g.name(t).to_string()));
    }
    let m = g.mutable_set();
    let free = g.observed().difference(m).without(t);
    if free.len() > MAX_FREE_VERTICES {
        return Err(SurgeryError::TooManyVertices(free.len()));
    }
    let t_set = VertexSet::singleton(t);
    let children_t = g.children_of(t).intersection(g.observed());
    if m.contains(t) && children_t.is_empty() {
        return Ok(Vec::new());
    }
    let mut zs: Vec<VertexSet> = free
        .subsets()
        .filter(|z| cfg.max_conditioning.is_none_or(|k| z.len() <= k))
        .collect();
    zs.sort_by_key(|&z| (z.len(), sorted_names(g, z)));
    let cut = g.mutilate(&MutilationSpec::overline(t_set));
    let ord = VarOrder::from_graph(g);
    let finish = |x: VertexSet, y: VertexSet| match id(g, x, y) {
        Ok(p) => Outcome::Identified {
            expr: simplify(Expr::normalize(g.name(t), p), &ord),
        },
        Err(failure) => Outcome::NotIdentified { failure },
    };
    let per_z = |z: VertexSet| {
        let mut out = Vec::with_capacity(2);
        if !m.contains(t) {
            let (x, y) = uq(g, m, t_set, z);
            out.push(SearchQuery {
                conditioning: sorted_names(g, z),
                branch: Branch::Conditional,
                intervene: g.names(x),
                outcome: g.names(y),
                result: finish(x, y),
            });
        }
        let (x, y) = uq(&cut, m.without(t), t_set, z);
        let (x, y) = (x.union(t_set), y.without(t));
        let status = if y.is_disjoint(children_t) {
            Outcome::Skipped
        } else {
            finish(x, y)
        };
        out.push(SearchQuery {
            conditioning: sorted_names(g, z),
            branch: Branch::TargetIntervened,
            intervene: g.names(x),
            outcome: g.names(y),
            result: status,
        });
        out
    };
    Ok(zs.into_par_iter().flat_map_iter(per_z).collect())
}

/// An identified, fitted and scored stable estimator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurgeryCandidate {
    pub conditioning: Vec<String>,
    pub branch: Branch,
    pub intervene: Vec<String>,
    pub outcome: Vec<String>,
    /// The identified distribution normalized over the target.
    pub expr: Expr,
    pub used_t_mutilation: bool,
    pub validation_loss: f64,
    #[serde(skip)]
    pub predictor: Option<Predictor>,
}

/// One line of the candidate report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportEntry {
    pub conditioning: Vec<String>,
    pub branch: Branch,
    pub intervene: Vec<String>,
    pub outcome: Vec<String>,
    /// `identified`, `not-identified`, `skipped` or `fit-failed`.
    pub status: String,
    pub expr: Option<String>,
    pub loss: Option<f64>,
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurgeryResult {
    pub target: String,
    pub chosen: SurgeryCandidate,
    pub all_candidates: Vec<SurgeryCandidate>,
    pub report: Vec<ReportEntry>,
}

/// Score of one candidate.
pub struct Scored {
    pub loss: f64,
    pub predictor: Option<Predictor>,
}

/// Orders candidates by loss, then larger conditioning set, then expression text.
fn better(a: &SurgeryCandidate, b: &SurgeryCandidate) -> Ordering {
    a.validation_loss
        .total_cmp(&b.validation_loss)
        .then_with(|| b.conditioning.len().cmp(&a.conditioning.len()))
        .then_with(|| a.expr.to_string().cmp(&b.expr.to_string()))
}

/// Runs the search with a caller-supplied scorer. A candidate whose scorer
/// fails is reported as `fit-failed` and dropped.
pub fn surgery_search_by<F>(g: &Admg, t: usize, cfg: &SearchConfig, score: F) -> Result<SurgeryResult, SurgeryError>
where
    F: Fn(&Expr) -> Result<Scored, String> + Sync,
{
    let queries = enumerate_queries(g, t, cfg)?;
    let target = g.name(t).to_string();
    if !queries
        .iter()
        .any(|q| matches!(q.result, Outcome::Identified { .. }))
    {
        return Err(SurgeryError::NoStableEstimator { target, queries });
    }
    let scored: Vec<(ReportEntry, Option<SurgeryCandidate>)> = queries
        .par_iter()
        .map(|q| {
            let mut entry = ReportEntry {
                conditioning: q.conditioning.clone(),
                branch: q.branch,
                intervene: q.intervene.clone(),
                outcome: q.outcome.clone(),
                status: String::new(),
                expr: None,
                loss: None,
                message: None,
            };
            match &q.result {
                Outcome::Skipped => {
                    entry.status = "skipped".into();
                    (entry, None)
                }
                Outcome::NotIdentified { failure } => {
                    entry.status = "not-identified".into();
                    entry.message = Some(failure.to_string());
                    (entry, None)
                }
                Outcome::Identified { expr } => {
                    entry.expr = Some(expr.to_string());
                    match score(expr) {
                        Ok(s) => {
                            entry.status = "identified".into();
                            entry.loss = Some(s.loss);
                            let c = SurgeryCandidate {
                                conditioning: q.conditioning.clone(),
                                branch: q.branch,
                                intervene: q.intervene.clone(),
                                outcome: q.outcome.clone(),
                                expr: expr.clone(),
                                used_t_mutilation: q.branch == Branch::TargetIntervened,
                                validation_loss: s.loss,
                                predictor: s.predictor,
                            };
                            (entry, Some(c))
                        }
                        Err(msg) => {
                            entry.status = "fit-failed".into();
                            entry.message = Some(msg);
                            (entry, None)
                        }
                    }
                }
            }
        })
        .collect();
    let (report, cands): (Vec<ReportEntry>, Vec<Option<SurgeryCandidate>>) = scored.into_iter().unzip();
    let all_candidates: Vec<SurgeryCandidate> = cands.into_iter().flatten().collect();
    let Some(chosen) = all_candidates.iter().min_by(|a, b| better(a, b)).cloned() else {
        return Err(SurgeryError::NoFittableEstimator { target, report });
    };
    Ok(SurgeryResult {
        target,
        chosen,
        all_candidates,
        report,
    })
}

/// Runs the search, fitting each candidate on `train` and scoring it on
/// `valid` (negative log-likelihood for a categorical target, squared error
/// of the predictive mean otherwise).
pub fn surgery_search(
    g: &Admg,
    t: usize,
    train: &Dataset,
    valid: &Dataset,
    fit_cfg: &FitConfig,
    cfg: &SearchConfig,
) -> Result<SurgeryResult, SurgeryError> {
    let target = g.name(t).to_string();
    surgery_search_by(g, t, cfg, |expr| {
        let p = fit(expr, &target, train, fit_cfg).map_err(|e| e.to_string())?;
        let loss = p.loss(valid).map_err(|e| e.to_string())?;
        if loss.is_nan() {
            return Err("validation loss is undefined".into());
        }
        Ok(Scored {
            loss,
            predictor: Some(p),
        })
    })
}
