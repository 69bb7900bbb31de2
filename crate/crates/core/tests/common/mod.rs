//! Checks shared by the focused integration tests and the acceptance report.
#![allow(dead_code)]

use std::collections::HashMap;
use std::time::{Duration, Instant};

use graph_surgery::estimate::{fit, fit_population, Dataset, FitConfig, Predictor};
use graph_surgery::graph::{Admg, AdmgBuilder, VertexSet};
use graph_surgery::identify::{evaluate_discrete, id, id_conditional, parse_expr, Expr, Query, Table};
use graph_surgery::simulate::{
    bow_witness, dag_for_admg, instrument_witness, random_admg, CorpusConfig, DiscreteSem, LinearGaussianSem,
};
use graph_surgery::surgery::{enumerate_queries, pruning_search, surgery_search_by, Outcome, Scored, SearchConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn graph_path(name: &str) -> String {
    format!("{}/graphs/{name}.graph", env!("CARGO_MANIFEST_DIR"))
}

pub fn diagnosis_sem<R: Rng>(rng: &mut R) -> DiscreteSem {
    let g = diagnosis();
    DiscreteSem::random_positive(dag_for_admg(&g), 2, rng).unwrap()
}

pub fn diagnosis() -> Admg {
    AdmgBuilder::new()
        .observed_all(&["T", "A", "C"])
        .bidirected("T", "A")
        .edge("T", "C")
        .edge("A", "C")
        .selection("S", "A")
        .build()
        .unwrap()
}

pub fn front_door() -> Admg {
    AdmgBuilder::new()
        .observed_all(&["M", "Z", "T"])
        .edge("M", "Z")
        .edge("Z", "T")
        .bidirected("M", "T")
        .build()
        .unwrap()
}

pub fn instrument() -> Admg {
    AdmgBuilder::new()
        .observed_all(&["X", "T", "Y"])
        .edge("X", "T")
        .bidirected("X", "T")
        .edge("T", "Y")
        .selection("S", "X")
        .build()
        .unwrap()
}

pub fn set(g: &Admg, names: &[&str]) -> VertexSet {
    g.set(names).unwrap()
}

fn random_split<R: Rng>(g: &Admg, rng: &mut R) -> (VertexSet, VertexSet, VertexSet) {
    let (mut x, mut y, mut z) = (VertexSet::empty(), VertexSet::empty(), VertexSet::empty());
    for v in g.observed().iter() {
        match rng.random_range(0..4) {
            0 => x.insert(v),
            1 | 2 => y.insert(v),
            _ => z.insert(v),
        }
    }
    (x, y, z)
}

/// `P_x(y | z)` from the oracle, as a table over `y ∪ z ∪ x`.
fn oracle_conditional(sem: &DiscreteSem, x: &[String], y: &[String], z: &[String]) -> Table {
    let mut yz = y.to_vec();
    yz.extend(z.iter().cloned());
    let joint = sem.oracle_table(x, &yz).unwrap();
    if z.is_empty() {
        return joint;
    }
    let den = joint.sum_out(y);
    joint.div(&den)
}

#[derive(Debug, Default)]
pub struct OracleReport {
    pub pairs: usize,
    pub queries: usize,
    pub identified: usize,
    pub conditional_identified: usize,
    pub max_diff: f64,
    pub worst: Option<String>,
    pub elapsed: Duration,
}

/// Random (selection ADMG, positive binary model) pairs; every identified
/// query is compared with truncated factorization.
pub fn oracle_suite(pairs: usize, seed: u64) -> OracleReport {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = CorpusConfig::default();
    let mut rep = OracleReport {
        pairs,
        ..Default::default()
    };
    for _ in 0..pairs {
        let g = random_admg(&cfg, &mut rng);
        let sem = DiscreteSem::random_positive(dag_for_admg(&g), 2, &mut rng).unwrap();
        let joint = sem.observational_joint().unwrap();
        for _ in 0..4 {
            let (x, y, z) = random_split(&g, &mut rng);
            if y.is_empty() {
                continue;
            }
            rep.queries += 1;
            let mut record = |d: f64, what: String| {
                if d > rep.max_diff || d.is_nan() {
                    rep.max_diff = if d.is_nan() { f64::INFINITY } else { d };
                    rep.worst = Some(what);
                }
            };
            if let Ok(e) = id(&g, x, y) {
                rep.identified += 1;
                let t = evaluate_discrete(&e, &joint).unwrap();
                let o = sem.oracle_table(&g.names(x), &g.names(y)).unwrap();
                record(t.max_abs_diff(&o), format!("{g:?} do {:?} on {:?}: {e}", g.names(x), g.names(y)));
            }
            if z.is_empty() {
                continue;
            }
            if let Ok((_, e)) = id_conditional(&g, &Query::new(x, y, z)) {
                rep.conditional_identified += 1;
                let t = evaluate_discrete(&e, &joint).unwrap();
                let o = oracle_conditional(&sem, &g.names(x), &g.names(y), &g.names(z));
                record(
                    t.max_abs_diff(&o),
                    format!("{g:?} do {:?} on {:?} given {:?}: {e}", g.names(x), g.names(y), g.names(z)),
                );
            }
        }
    }
    rep.elapsed = start.elapsed();
    rep
}

pub struct Golden {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// The fixed identities from the worked examples.
pub fn golden_identities() -> Vec<Golden> {
    let mut out = Vec::new();

    let g = diagnosis();
    let e = id(&g, set(&g, &["A"]), set(&g, &["T", "C"])).unwrap();
    let expected = parse_expr("P(T) P(C|T,A)").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sem = diagnosis_sem(&mut rng);
    let joint = sem.observational_joint().unwrap();
    let numeric = evaluate_discrete(&e, &joint)
        .unwrap()
        .max_abs_diff(&sem.oracle_table(&["A".into()], &["T".into(), "C".into()]).unwrap());
    let direct = evaluate_discrete(&expected, &joint)
        .unwrap()
        .max_abs_diff(&sem.oracle_table(&["A".into()], &["T".into(), "C".into()]).unwrap());
    out.push(Golden {
        name: "diagnosis P_A(T,C) = P(T) P(C|T,A)",
        passed: e.canonical() == expected.canonical() && numeric < 1e-12 && direct < 1e-12,
        detail: format!("{e}; numeric gap {numeric:.1e}"),
    });

    let g = front_door();
    let (_, e) = id_conditional(&g, &Query::new(set(&g, &["M"]), set(&g, &["T"]), set(&g, &["Z"]))).unwrap();
    let expected = parse_expr("Σ_{M'} [P(T|M',Z) P(M')]").unwrap();
    out.push(Golden {
        name: "front door P(T|do(M),Z) = Σ_{m'} P(T|m',Z) P(m')",
        passed: e.canonical() == expected.canonical(),
        detail: e.to_string(),
    });

    let g = instrument();
    let fails = id(&g, set(&g, &["X"]), set(&g, &["T"])).is_err();
    let e = id(&g, set(&g, &["X", "T"]), set(&g, &["Y"]));
    let ok = e.as_ref().map(|e| e.to_string() == "P(Y|X,T)").unwrap_or(false);
    out.push(Golden {
        name: "instrument graph: P_X(T) fails, P_{X,T}(Y) = P(Y|X,T)",
        passed: fails && ok,
        detail: format!(
            "P_X(T) {}; P_XT(Y) {}",
            if fails { "fails" } else { "identified" },
            e.map(|e| e.to_string()).unwrap_or_else(|f| f.to_string())
        ),
    });
    out
}

pub struct WitnessCheck {
    pub name: &'static str,
    pub id_fails: bool,
    pub observational_gap: f64,
    pub interventional_gap: f64,
}

impl WitnessCheck {
    pub fn passed(&self) -> bool {
        self.id_fails && self.observational_gap < 1e-12 && self.interventional_gap > 0.05
    }
}

pub fn witness_checks() -> Vec<WitnessCheck> {
    [("bow", bow_witness().unwrap()), ("instrument", instrument_witness().unwrap())]
        .into_iter()
        .map(|(name, w)| {
            let g = &w.graph;
            let x = g.set(&w.intervene).unwrap();
            let y = g.set(&w.outcome).unwrap();
            WitnessCheck {
                name,
                id_fails: id(g, x, y).is_err(),
                observational_gap: w.observational_gap().unwrap(),
                interventional_gap: w.interventional_gap().unwrap(),
            }
        })
        .collect()
}

/// A random selection ADMG that has selection vertices, with its target.
pub fn shifted_corpus(n: usize, seed: u64) -> Vec<(Admg, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = CorpusConfig {
        max_observed: 5,
        ..CorpusConfig::default()
    };
    let mut out = Vec::new();
    while out.len() < n {
        let g = random_admg(&cfg, &mut rng);
        if g.selection().is_empty() {
            continue;
        }
        let obs: Vec<usize> = g.observed().iter().collect();
        let t = obs[rng.random_range(0..obs.len())];
        out.push((g, t));
    }
    out
}

/// Source model and one with every mutable mechanism redrawn.
pub fn environment_pair<R: Rng>(g: &Admg, rng: &mut R) -> (DiscreteSem, DiscreteSem) {
    let a = DiscreteSem::random_positive(dag_for_admg(g), 2, rng).unwrap();
    let mut b = a.clone();
    for m in g.names(g.mutable_set()) {
        b = b.with_new_mechanism(&m, rng).unwrap();
    }
    (a, b)
}

fn identified(g: &Admg, t: usize) -> Vec<Expr> {
    enumerate_queries(g, t, &SearchConfig::default())
        .unwrap()
        .into_iter()
        .filter_map(|q| match q.result {
            Outcome::Identified { expr } => Some(expr),
            _ => None,
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct StabilityReport {
    pub graphs: usize,
    pub candidates: usize,
    pub max_diff: f64,
    /// Largest root-mean-square z statistic over candidates (sampled check).
    pub worst_rms_z: f64,
    /// Share of unstable comparison predictors that moved by more than 3 standard errors.
    pub control_detected: f64,
}

/// Exact-population check: every identified candidate of every graph with a
/// successful search gives the same predictive table in both environments.
pub fn stability_population(graphs: usize, seed: u64) -> StabilityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut rep = StabilityReport::default();
    for (g, t) in shifted_corpus(graphs, seed) {
        let exprs = identified(&g, t);
        if exprs.is_empty() {
            continue;
        }
        rep.graphs += 1;
        let (a, b) = environment_pair(&g, &mut rng);
        let (ja, jb) = (a.observational_joint().unwrap(), b.observational_joint().unwrap());
        for e in exprs {
            let pa = fit_population(&e, g.name(t), &ja).unwrap().predictive_table().unwrap();
            let pb = fit_population(&e, g.name(t), &jb).unwrap().predictive_table().unwrap();
            rep.candidates += 1;
            rep.max_diff = rep.max_diff.max(pa.max_abs_diff(&pb));
        }
    }
    rep
}

fn bootstrap_tables(p: &Predictor, expr: &Expr, data: &Dataset, reps: usize, rng: &mut ChaCha8Rng) -> Vec<Table> {
    let n = data.n_rows();
    (0..reps)
        .map(|_| {
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let d = data.select_rows(&rows);
            fit(expr, &p.target, &d, &FitConfig::new(0))
                .and_then(|q| q.predictive_table())
                .unwrap()
        })
        .collect()
}

fn cell_variance(tables: &[Table]) -> Vec<f64> {
    let k = tables[0].len();
    let n = tables.len() as f64;
    (0..k)
        .map(|i| {
            let m = tables.iter().map(|t| t.values()[i]).sum::<f64>() / n;
            tables.iter().map(|t| (t.values()[i] - m).powi(2)).sum::<f64>() / (n - 1.0)
        })
        .collect()
}

/// Root-mean-square over cells of the difference divided by its bootstrap
/// standard error.
fn rms_z(expr: &Expr, target: &str, da: &Dataset, db: &Dataset, rng: &mut ChaCha8Rng) -> f64 {
    let pa = fit(expr, target, da, &FitConfig::new(0)).unwrap();
    let pb = fit(expr, target, db, &FitConfig::new(0)).unwrap();
    let (ta, tb) = (pa.predictive_table().unwrap(), pb.predictive_table().unwrap());
    let tb = tb.permute(ta.vars());
    let va = cell_variance(&bootstrap_tables(&pa, expr, da, 40, rng));
    let vb = cell_variance(&bootstrap_tables(&pb, expr, db, 40, rng));
    let mut sum = 0.0;
    for i in 0..ta.len() {
        let se = (va[i] + vb[i]).sqrt().max(1e-12);
        sum += ((ta.values()[i] - tb.values()[i]) / se).powi(2);
    }
    (sum / ta.len() as f64).sqrt()
}

/// Sampled check at `n` rows per environment. As a control, the full
/// conditional `P(T | O \ {T})` is scored the same way on graphs where it is
/// not stable.
pub fn stability_sampled(graphs: usize, n: usize, seed: u64) -> StabilityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb007);
    let mut rep = StabilityReport::default();
    let (mut controls, mut detected) = (0usize, 0usize);
    for (g, t) in shifted_corpus(graphs, seed) {
        let exprs = identified(&g, t);
        if exprs.is_empty() {
            continue;
        }
        rep.graphs += 1;
        let (a, b) = environment_pair(&g, &mut rng);
        let da = a.sample(n, &mut rng);
        let db = b.sample(n, &mut rng);
        let target = g.name(t).to_string();
        for e in &exprs {
            rep.candidates += 1;
            rep.worst_rms_z = rep.worst_rms_z.max(rms_z(e, &target, &da, &db, &mut rng));
        }
        let rest = g.observed().without(t);
        if !g.m_separated(VertexSet::singleton(t), g.selection(), rest) {
            let (ja, jb) = (a.observational_joint().unwrap(), b.observational_joint().unwrap());
            let full = Expr::atom(std::slice::from_ref(&target), g.names(rest).as_slice());
            let pa = fit_population(&full, &target, &ja).unwrap().predictive_table().unwrap();
            let pb = fit_population(&full, &target, &jb).unwrap().predictive_table().unwrap();
            if pa.max_abs_diff(&pb) > 0.05 {
                controls += 1;
                if rms_z(&full, &target, &da, &db, &mut rng) > 3.0 {
                    detected += 1;
                }
            }
        }
    }
    rep.control_detected = if controls == 0 {
        f64::NAN
    } else {
        detected as f64 / controls as f64
    };
    rep
}

#[derive(Debug, Default)]
pub struct PruningReport {
    pub graphs: usize,
    pub targets: usize,
    pub with_stable_set: usize,
    pub counterexamples: Vec<String>,
}

/// Whenever a stable conditioning set exists, the surgery search succeeds.
pub fn pruning_subsumption(graphs: usize, seed: u64) -> PruningReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = CorpusConfig::default();
    let mut rep = PruningReport::default();
    while rep.graphs < graphs {
        let g = random_admg(&cfg, &mut rng);
        if g.selection().is_empty() {
            continue;
        }
        rep.graphs += 1;
        for t in g.observed().iter() {
            rep.targets += 1;
            if pruning_search(&g, t).is_empty() {
                continue;
            }
            rep.with_stable_set += 1;
            let found = surgery_search_by(&g, t, &SearchConfig::default(), |_| {
                Ok(Scored {
                    loss: 0.0,
                    predictor: None,
                })
            });
            if found.is_err() {
                rep.counterexamples.push(format!("{g:?} target {}", g.name(t)));
            }
        }
    }
    rep
}

pub struct Recovery {
    pub w: [f64; 4],
    pub coef_t: (f64, f64),
    pub coef_a: (f64, f64),
    pub noise_variance: f64,
    pub noise_se: f64,
}

impl Recovery {
    pub fn passed(&self) -> bool {
        (self.coef_t.0 - self.w[2]).abs() < 3.0 * self.coef_t.1
            && (self.coef_a.0 - self.w[3]).abs() < 3.0 * self.coef_a.1
            && (self.noise_variance - 0.01).abs() < 3.0 * self.noise_se
    }
}

/// Fits `P(C|T,A)` on `n` rows of the diagnosis model with `w ~ N(0, 1)`.
pub fn parameter_recovery(n: usize, seed: u64) -> Recovery {
    use graph_surgery::estimate::FittedFactor;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
    let data = LinearGaussianSem::diagnosis(w, 0.1).sample(n, &mut rng);
    let p = fit(&parse_expr("P(C|T,A)").unwrap(), "C", &data, &FitConfig::new(seed)).unwrap();
    let FittedFactor::LinearGaussian { chain, .. } = &p.factors[0] else {
        panic!("continuous data gives a regression")
    };
    let r = &chain[0];
    Recovery {
        w,
        coef_t: (r.coefficient("T").unwrap(), r.std_error("T").unwrap()),
        coef_a: (r.coefficient("A").unwrap(), r.std_error("A").unwrap()),
        noise_variance: r.noise_variance,
        noise_se: r.noise_variance * (2.0 / (r.n - 3) as f64).sqrt(),
    }
}

/// Runs the command-line entry point and captures its streams.
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["graph-surgery"];
    full.extend_from_slice(args);
    let code = graph_surgery::cli::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Writes a binary sample from the diagnosis model with a categorical sidecar.
pub fn write_discrete_diagnosis(dir: &std::path::Path, n: usize, seed: u64) -> (String, String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sem = diagnosis_sem(&mut rng);
    let train = dir.join("train.csv");
    let valid = dir.join("valid.csv");
    let cfg = dir.join("data.cfg");
    sem.sample(n, &mut rng).write_csv(&train).unwrap();
    sem.sample(n / 4, &mut rng).write_csv(&valid).unwrap();
    std::fs::write(&cfg, "categorical=T,A,C\n").unwrap();
    let s = |p: std::path::PathBuf| p.to_string_lossy().into_owned();
    (s(train), s(valid), s(cfg))
}

/// Row lookup helper for continuous predictions.
pub fn row(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub fn path_string(p: &std::path::Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Writes continuous `T, A, C` samples of the diagnosis model.
pub fn continuous_diagnosis(dir: &std::path::Path, seed: u64) -> (String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sem = LinearGaussianSem::diagnosis([0.8, 1.0, 0.5, -0.7], 0.5);
    let train = dir.join("ctrain.csv");
    let valid = dir.join("cvalid.csv");
    for (path, n) in [(&train, 800), (&valid, 200)] {
        sem.sample(n, &mut rng)
            .select_columns(&["T", "A", "C"])
            .unwrap()
            .write_csv(path)
            .unwrap();
    }
    (path_string(&train), path_string(&valid))
}

/// Runs every subcommand twice with identical flags; `true` when the primary
/// outputs match byte for byte.
pub fn determinism_check() -> Vec<(String, bool)> {
    let dir = tempfile::tempdir().unwrap();
    let (train, valid) = continuous_diagnosis(dir.path(), 53);
    let model = path_string(&dir.path().join("model.json"));
    let bike_sharing = graph_path("bike_sharing");
    let diagnosis = graph_path("diagnosis");
    let commands: Vec<Vec<&str>> = vec![
        vec!["identify", "--graph", &bike_sharing, "--do", "H,T,W,F", "--on", "R", "--format", "json"],
        vec!["surgery", "--graph", &diagnosis, "--train", &train, "--valid", &valid, "--seed", "3", "--model-out", &model],
        vec!["fit", "--expr", "Σ_{A'} [P(A') P(C|T,A')]", "--target", "C", "--train", &train, "--seed", "4", "--format", "json"],
        vec!["predict", "--model", &model, "--data", &valid],
        vec!["evaluate", "--model", &model, "--data", &valid],
        vec!["simulate", "--scenario", "target-shift", "--seed", "5", "--set", "n_reps=2", "--set", "grid_points=5"],
    ];
    commands
        .iter()
        .map(|args| {
            let first = cli(args);
            let model_first = std::fs::read(&model).ok();
            let second = cli(args);
            let same = first.0 == 0 && first == second && model_first == std::fs::read(&model).ok();
            (args[0].to_string(), same)
        })
        .collect()
}
