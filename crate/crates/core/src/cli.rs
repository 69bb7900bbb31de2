//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 not identifiable,
//! 3 no stable surgery estimator.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::estimate::{fit, Dataset, DatasetConfig, FitConfig, Prediction, Predictor};
use crate::graph::format::{read_graph_file, GraphFile};
use crate::graph::{Admg, VertexSet};
use crate::identify::{id_conditional, parse_expr, Expr, Query};
use crate::simulate::{run_experiment, ExperimentConfig, Method, Scenario};
use crate::surgery::{surgery_search, Outcome, SearchConfig, SurgeryError, SurgeryResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_IDENTIFIABLE: i32 = 2;
pub const EXIT_NO_ESTIMATOR: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "graph-surgery", version, about = "Stable prediction by graph surgery on selection diagrams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Identify P_x(y | z) from the observational distribution.
    Identify(IdentifyArgs),
    /// Search for, fit and select the best stable surgery estimator.
    Surgery(SurgeryArgs),
    /// Fit an expression to data and save the predictor.
    Fit(FitArgs),
    /// Predict the target for every row of a dataset.
    Predict(PredictArgs),
    /// Score a saved predictor on a dataset.
    Evaluate(EvaluateArgs),
    /// Run a shifted-environment simulation and write per-environment errors.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
struct Output {
    /// Write the primary output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct IdentifyArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Intervened vertices, comma separated; empty or `∅` for none.
    #[arg(long = "do", default_value = "")]
    intervene: String,
    /// Outcome vertices, comma separated.
    #[arg(long)]
    on: String,
    /// Conditioning vertices, comma separated.
    #[arg(long, default_value = "")]
    given: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Sidecar `key=value` file declaring categorical and environment columns.
    #[arg(long)]
    data_config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SurgeryArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Defaults to the `target` line of the graph file.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    valid: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    mc_samples: usize,
    /// Largest conditioning set to try.
    #[arg(long)]
    max_conditioning: Option<usize>,
    /// Save the chosen fitted predictor as JSON.
    #[arg(long)]
    model_out: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Expression in printed notation.
    #[arg(long, conflicts_with = "expr_file", required_unless_present = "expr_file")]
    expr: Option<String>,
    /// File holding an expression as JSON or printed notation.
    #[arg(long)]
    expr_file: Option<PathBuf>,
    #[arg(long)]
    target: String,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    mc_samples: usize,
    #[arg(long, default_value_t = 1e-9)]
    smoothing: f64,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Replaces the Monte Carlo seed stored in the model.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    data_args: DataArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    data_args: DataArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// `mutable-a` or `target-shift`.
    #[arg(long)]
    scenario: Scenario,
    /// `key=value` experiment settings applied over the desk-scale defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// Extra `key=value` settings applied after the config file.
    #[arg(long = "set")]
    overrides: Vec<String>,
    #[command(flatten)]
    output: Output,
}

/// A failure carrying its exit code and message.
struct Failure {
    code: i32,
    message: String,
    /// Written to stdout before the message goes to stderr.
    detail: Option<String>,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.to_string(),
            detail: None,
        }
    }
}

type CmdResult = Result<(), Failure>;

/// Runs the program on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let result = match cli.command {
        Command::Identify(a) => identify(a, stdout),
        Command::Surgery(a) => surgery(a, stdout, stderr),
        Command::Fit(a) => fit_cmd(a, stdout),
        Command::Predict(a) => predict(a, stdout),
        Command::Evaluate(a) => evaluate(a, stdout),
        Command::Simulate(a) => simulate(a, stdout, stderr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            if let Some(d) = f.detail {
                let _ = stdout.write_all(d.as_bytes());
            }
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn emit(output: &Output, text: &str, stdout: &mut dyn Write) -> CmdResult {
    match &output.out {
        Some(path) => write_file(path, text),
        None => stdout.write_all(text.as_bytes()).map_err(Failure::usage),
    }
}

fn write_file(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text).map_err(|e| Failure::usage(format!("writing {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("reading {}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<GraphFile, Failure> {
    read_graph_file(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn vertex_list(g: &Admg, list: &str) -> Result<VertexSet, Failure> {
    let names: Vec<&str> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty() && *s != "∅")
        .collect();
    g.set(&names).map_err(Failure::usage)
}

fn load_data(path: &Path, cfg: &DataArgs) -> Result<Dataset, Failure> {
    let dc = match &cfg.data_config {
        Some(p) => DatasetConfig::read(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
        None => DatasetConfig::default(),
    };
    Dataset::read_csv(path, &dc).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

fn identify(a: IdentifyArgs, stdout: &mut dyn Write) -> CmdResult {
    let g = load_graph(&a.graph)?.graph;
    let q = Query::new(vertex_list(&g, &a.intervene)?, vertex_list(&g, &a.on)?, vertex_list(&g, &a.given)?);
    if q.outcome.is_empty() {
        return Err(Failure::usage("--on needs at least one vertex"));
    }
    if !q.is_valid_for(&g) {
        return Err(Failure::usage("--do, --on and --given must be disjoint sets of observed vertices"));
    }
    match id_conditional(&g, &q) {
        Ok((reduced, expr)) => {
            let text = match a.output.format {
                Format::Text => format!("{expr}\n"),
                Format::Json => to_json(&json!({
                    "status": "identified",
                    "intervene": sorted(&g, reduced.intervene),
                    "outcome": sorted(&g, reduced.outcome),
                    "given": sorted(&g, reduced.condition),
                    "expr": expr,
                })),
            };
            emit(&a.output, &text, stdout)
        }
        Err(failure) => {
            let text = match a.output.format {
                Format::Text => format!(
                    "not identifiable\nhedge vertices: {}\nhedge bidirected edges: {}\nblocked component: {}\n",
                    failure.subgraph.join(","),
                    failure
                        .bidirected
                        .iter()
                        .map(|(x, y)| format!("{x}<->{y}"))
                        .collect::<Vec<_>>()
                        .join(","),
                    failure.offending.join(","),
                ),
                Format::Json => to_json(&json!({ "status": "not-identified", "failure": failure })),
            };
            emit(&a.output, &text, stdout)?;
            Err(Failure {
                code: EXIT_NOT_IDENTIFIABLE,
                message: failure.to_string(),
                detail: None,
            })
        }
    }
}

fn sorted(g: &Admg, s: VertexSet) -> Vec<String> {
    let mut v = g.names(s);
    v.sort();
    v
}

fn braces(v: &[String]) -> String {
    format!("{{{}}}", v.join(","))
}

fn surgery_text(res: &SurgeryResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "target {}", res.target);
    for e in &res.report {
        let branch = serde_json::to_value(e.branch).expect("branch serializes");
        let _ = write!(
            s,
            "Z={} {} do{} on{}: {}",
            braces(&e.conditioning),
            branch.as_str().unwrap_or_default(),
            braces(&e.intervene),
            braces(&e.outcome),
            e.status
        );
        if let Some(l) = e.loss {
            let _ = write!(s, " loss={l}");
        }
        if let Some(x) = &e.expr {
            let _ = write!(s, " {x}");
        }
        if let Some(m) = &e.message {
            let _ = write!(s, " ({m})");
        }
        s.push('\n');
    }
    let c = &res.chosen;
    let _ = writeln!(s, "chosen {}", c.expr);
    let _ = writeln!(
        s,
        "conditioning {} intervene {} loss {}",
        braces(&c.conditioning),
        braces(&c.intervene),
        c.validation_loss
    );
    s
}

fn surgery(a: SurgeryArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let gf = load_graph(&a.graph)?;
    let target = a
        .target
        .or(gf.target)
        .ok_or_else(|| Failure::usage("no --target given and the graph file names none"))?;
    let g = gf.graph;
    let t = g.id(&target).map_err(Failure::usage)?;
    let mut train = load_data(&a.train, &a.data)?;
    let mut valid = load_data(&a.valid, &a.data)?;
    Dataset::harmonize(&mut [&mut train, &mut valid]);
    let fit_cfg = FitConfig {
        mc_samples: a.mc_samples,
        ..FitConfig::new(a.seed)
    };
    let cfg = SearchConfig {
        max_conditioning: a.max_conditioning,
    };
    match surgery_search(&g, t, &train, &valid, &fit_cfg, &cfg) {
        Ok(res) => {
            let text = match a.output.format {
                Format::Text => surgery_text(&res),
                Format::Json => to_json(&res),
            };
            emit(&a.output, &text, stdout)?;
            if let Some(path) = &a.model_out {
                let p = res.chosen.predictor.as_ref().expect("chosen candidate is fitted");
                write_file(path, &(p.to_json() + "\n"))?;
            }
            Ok(())
        }
        Err(e) => {
            let detail = match &e {
                SurgeryError::NoStableEstimator { queries, .. } => {
                    for q in queries {
                        let status = match &q.result {
                            Outcome::Identified { .. } => "identified".to_string(),
                            Outcome::Skipped => "skipped".to_string(),
                            Outcome::NotIdentified { failure } => failure.to_string(),
                        };
                        let _ = writeln!(
                            stderr,
                            "Z={} do{} on{}: {status}",
                            braces(&q.conditioning),
                            braces(&q.intervene),
                            braces(&q.outcome)
                        );
                    }
                    None
                }
                SurgeryError::NoFittableEstimator { report, .. } => Some(match a.output.format {
                    Format::Json => to_json(report),
                    Format::Text => report
                        .iter()
                        .map(|r| {
                            format!(
                                "Z={} {}: {}\n",
                                braces(&r.conditioning),
                                r.status,
                                r.message.clone().unwrap_or_default()
                            )
                        })
                        .collect(),
                }),
                _ => None,
            };
            let code = match e {
                SurgeryError::NoStableEstimator { .. } | SurgeryError::NoFittableEstimator { .. } => EXIT_NO_ESTIMATOR,
                _ => EXIT_USAGE,
            };
            Err(Failure {
                code,
                message: e.to_string(),
                detail,
            })
        }
    }
}

fn read_expr(a: &FitArgs) -> Result<Expr, Failure> {
    let text = match (&a.expr, &a.expr_file) {
        (Some(t), _) => t.clone(),
        (None, Some(p)) => read_file(p)?,
        (None, None) => return Err(Failure::usage("give --expr or --expr-file")),
    };
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(&text).map_err(|e| Failure::usage(format!("expression JSON: {e}")));
    }
    parse_expr(text.trim()).map_err(|e| Failure::usage(format!("expression: {e}")))
}

fn fit_cmd(a: FitArgs, stdout: &mut dyn Write) -> CmdResult {
    let expr = read_expr(&a)?;
    let data = load_data(&a.train, &a.data)?;
    let cfg = FitConfig {
        smoothing: a.smoothing,
        mc_samples: a.mc_samples,
        seed: a.seed,
    };
    let p = fit(&expr, &a.target, &data, &cfg).map_err(Failure::usage)?;
    let text = match a.output.format {
        Format::Json => p.to_json() + "\n",
        Format::Text => {
            let mut s = format!("target {}\nexpr {}\n", p.target, p.expr);
            for f in &p.factors {
                let _ = writeln!(s, "factor {}", Expr::atom(f.over(), f.given()));
            }
            s
        }
    };
    emit(&a.output, &text, stdout)
}

fn load_model(path: &Path, seed: Option<u64>) -> Result<Predictor, Failure> {
    let mut p =
        Predictor::from_json(&read_file(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        p.monte_carlo.seed = s;
    }
    Ok(p)
}

fn model_data(p: &Predictor, path: &Path, args: &DataArgs) -> Result<Dataset, Failure> {
    let data = load_data(path, args)?;
    data.recode_to(&p.levels).map_err(Failure::usage)
}

fn predict(a: PredictArgs, stdout: &mut dyn Write) -> CmdResult {
    let p = load_model(&a.model, a.seed)?;
    let data = model_data(&p, &a.data, &a.data_args)?;
    let preds = p.predict(&data).map_err(Failure::usage)?;
    let text = match a.output.format {
        Format::Json => to_json(&preds),
        Format::Text => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Failure::usage(e);
            match p.target_levels() {
                Some(levels) => {
                    let mut header = vec!["row".to_string(), "predicted".to_string()];
                    header.extend(levels.iter().map(|l| format!("p_{l}")));
                    w.write_record(&header).map_err(csv_err)?;
                    for (i, pr) in preds.iter().enumerate() {
                        let Prediction::Distribution { probs } = pr else { unreachable!() };
                        let best = (0..probs.len()).fold(0, |b, k| if probs[k] > probs[b] { k } else { b });
                        let mut rec = vec![i.to_string(), levels[best].clone()];
                        rec.extend(probs.iter().map(f64::to_string));
                        w.write_record(&rec).map_err(csv_err)?;
                    }
                }
                None => {
                    w.write_record(["row", "mean", "variance"]).map_err(csv_err)?;
                    for (i, pr) in preds.iter().enumerate() {
                        let (m, v) = match pr {
                            Prediction::Gaussian { mean, variance } => (*mean, *variance),
                            Prediction::Distribution { .. } => unreachable!(),
                        };
                        w.write_record([i.to_string(), m.to_string(), v.to_string()]).map_err(csv_err)?;
                    }
                }
            }
            String::from_utf8(w.into_inner().map_err(Failure::usage)?).expect("csv is utf-8")
        }
    };
    emit(&a.output, &text, stdout)
}

fn evaluate(a: EvaluateArgs, stdout: &mut dyn Write) -> CmdResult {
    let p = load_model(&a.model, a.seed)?;
    let data = model_data(&p, &a.data, &a.data_args)?;
    let loss = p.loss(&data).map_err(Failure::usage)?;
    let metric = if p.is_discrete() { "nll" } else { "mse" };
    let text = match a.output.format {
        Format::Text => format!("{metric} {loss}\nrows {}\n", data.n_rows()),
        Format::Json => to_json(&json!({ "metric": metric, "value": loss, "rows": data.n_rows() })),
    };
    emit(&a.output, &text, stdout)
}

fn simulate(a: SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let mut cfg = ExperimentConfig::desk(a.scenario, a.seed);
    if let Some(path) = &a.config {
        cfg = cfg
            .apply_text(&read_file(path)?)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }
    for kv in &a.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("--set expects key=value, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim()).map_err(Failure::usage)?;
    }
    // The flags win over the file.
    cfg.scenario = a.scenario;
    cfg.seed = a.seed;
    let res = run_experiment(&cfg).map_err(Failure::usage)?;
    let text = match a.output.format {
        Format::Text => {
            let mut buf = Vec::new();
            res.write_csv(&mut buf).map_err(Failure::usage)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
        Format::Json => to_json(&res),
    };
    emit(&a.output, &text, stdout)?;
    let _ = writeln!(
        stderr,
        "{}: surgery max/min {:.3}, ols max/min {:.3}, ols extremes/min {:.3}",
        cfg.scenario,
        res.curve_ratio(Method::Surgery),
        res.curve_ratio(Method::Ols),
        res.extremes_ratio(Method::Ols)
    );
    Ok(())
}
