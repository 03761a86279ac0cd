//! Command-line front end.
//!
//! A run is driven by one JSON config. Run-level keys (`seed`, `input`,
//! `output`, `figure`, `diagnostics`, `verbose`, `log_diagnostics`,
//! `schema`, `generator`, `truth`, `logit`, `plot`) sit next to the
//! pipeline fields of [`PhenoConfig`]. `--set key.path=value` and the
//! dedicated flags override config entries, in that order. A top-level
//! `seed` replaces the initializer and generator seeds.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::data_io::{
    generate_scd_cohort, load_csv, load_result, save_cohort, save_result, standardize, write_json,
    Cohort, Column, Scaling, Schema, ScdGenParams,
};
use crate::diagnostics::write_diagnostics;
use crate::gmm::{fit_gmm, ElboTrace};
use crate::init::initialize;
use crate::pipeline::{run_model, PhenoConfig};
use crate::plot::{class_moments, emit_scatter_svg, ScatterPlot};
use crate::regression::{fit_logit_cavi, sens_spec, SensSpec};
use crate::{datasets, Error};

const BUILTIN_FAITHFUL: &str = "builtin:faithful";

#[derive(Debug, Parser)]
#[command(name = "phenovb", version, about = "Variational Bayes latent-class phenotyping")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration (required except for gen-cohort).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Input CSV, or `builtin:faithful`.
    #[arg(long, global = true, value_name = "PATH")]
    pub input: Option<String>,
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    pub fig: Option<PathBuf>,
    #[arg(long, global = true)]
    pub verbose: bool,
    /// Write per-iteration ELBO diagnostics next to the output.
    #[arg(long, global = true)]
    pub log_diagnostics: bool,
    /// Override a config entry, e.g. `--set gmm_prior.alpha=0.001`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the mixture model alone.
    FitGmm(FitArgs),
    /// Fit a variational logistic regression.
    FitLogit(LogitArgs),
    /// Run the three-stage pipeline.
    Phenotype(FitArgs),
    /// Write a synthetic cohort CSV.
    GenCohort(GenArgs),
    /// Render a saved result as a scatter plot.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitKind {
    Kmeans,
    Dbscan,
    Random,
}

#[derive(Debug, Default, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub k: Option<usize>,
    /// Scalar Dirichlet concentration.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum)]
    pub init: Option<InitKind>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub min_pts: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub stop_on_elbo_reverse: bool,
}

#[derive(Debug, Default, Args)]
pub struct LogitArgs {
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Default, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub prevalence: Option<f64>,
    /// Also write the generator's ground truth as JSON.
    #[arg(long, value_name = "PATH")]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct PlotArgs {
    /// Result file written by `phenotype`.
    #[arg(long, value_name = "PATH")]
    pub result: Option<PathBuf>,
}

/// Response and predictors for `fit-logit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogitTask {
    pub response: String,
    pub predictors: Vec<String>,
    pub intercept: bool,
}

impl Default for LogitTask {
    fn default() -> Self {
        Self {
            response: "y".into(),
            predictors: Vec::new(),
            intercept: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotTask {
    /// Two columns to plot; defaults to the mixture columns.
    pub columns: Option<Vec<String>>,
    pub result: Option<PathBuf>,
    pub level: f64,
}

impl Default for PlotTask {
    fn default() -> Self {
        Self {
            columns: None,
            result: None,
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub seed: Option<u64>,
    pub input: Option<String>,
    pub output: Option<PathBuf>,
    pub figure: Option<PathBuf>,
    pub diagnostics: Option<PathBuf>,
    pub verbose: bool,
    pub log_diagnostics: bool,
    pub schema: Schema,
    pub generator: ScdGenParams,
    pub truth: Option<PathBuf>,
    pub logit: LogitTask,
    pub plot: PlotTask,
}

const RUN_KEYS: [&str; 12] = [
    "seed",
    "input",
    "output",
    "figure",
    "diagnostics",
    "verbose",
    "log_diagnostics",
    "schema",
    "generator",
    "truth",
    "logit",
    "plot",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub run: RunSettings,
    pub model: PhenoConfig,
}

impl RunConfig {
    pub fn from_value(value: Value) -> std::result::Result<Self, String> {
        let Value::Object(mut all) = value else {
            return Err("config must be a JSON object".into());
        };
        let mut run = Map::new();
        for key in RUN_KEYS {
            if let Some(v) = all.remove(key) {
                run.insert(key.to_string(), v);
            }
        }
        let mut run: RunSettings =
            serde_json::from_value(Value::Object(run)).map_err(|e| format!("config: {e}"))?;
        let mut model: PhenoConfig =
            serde_json::from_value(Value::Object(all)).map_err(|e| format!("config: {e}"))?;
        if let Some(seed) = run.seed {
            model.init.seed = seed;
            run.generator.seed = seed;
        }
        Ok(Self { run, model })
    }
}

/// Set `path` (dot separated) inside `root`, creating objects on the way.
pub fn set_dotted(root: &mut Value, path: &str, value: Value) -> std::result::Result<(), String> {
    let mut cur = root;
    let mut parts = path.split('.').peekable();
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(format!("bad key `{path}`"));
        }
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        let obj = cur.as_object_mut().expect("just made an object");
        if parts.peek().is_none() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

fn remove_dotted(root: &mut Value, parent: &str, key: &str) {
    let node = parent.split('.').try_fold(&mut *root, |v, p| v.get_mut(p));
    if let Some(Value::Object(obj)) = node {
        obj.remove(key);
    }
}

/// `KEY=VALUE`; the value is JSON when it parses as JSON, else a string.
fn parse_assignment(s: &str) -> std::result::Result<(String, Value), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("--set expects KEY=VALUE, got `{s}`"))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

#[derive(Debug)]
pub enum CliError {
    /// Config missing, unreadable or invalid. Exit code 2.
    Config(String),
    /// Failure while running. Exit code 1.
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) => 1,
        }
    }

    /// `phenovb: error[<module>]: <message>` on one line.
    pub fn line(&self) -> String {
        let (module, msg) = match self {
            CliError::Config(m) => ("config", m.clone()),
            CliError::Run(e) => (e.module(), e.to_string()),
        };
        format!("phenovb: error[{module}]: {}", msg.replace('\n', " "))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Assemble the effective configuration from file, `--set` and flags.
pub fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let g = &cli.global;
    let mut value = match &g.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None if matches!(cli.command, Command::GenCohort(_)) => Value::Object(Map::new()),
        None => return Err(CliError::Config("--config is required".into())),
    };

    let mut overrides = Vec::new();
    for s in &g.set {
        overrides.push(parse_assignment(s).map_err(CliError::Config)?);
    }
    let mut put = |k: &str, v: Value| overrides.push((k.to_string(), v));
    if let Some(s) = g.seed {
        put("seed", s.into());
    }
    if let Some(i) = &g.input {
        put("input", i.as_str().into());
    }
    if let Some(o) = &g.out {
        put("output", o.to_string_lossy().as_ref().into());
    }
    if let Some(f) = &g.fig {
        put("figure", f.to_string_lossy().as_ref().into());
    }
    if g.verbose {
        put("verbose", true.into());
    }
    if g.log_diagnostics {
        put("log_diagnostics", true.into());
    }
    let mut reset_init_params = false;
    match &cli.command {
        Command::FitGmm(a) | Command::Phenotype(a) => {
            if let Some(k) = a.k {
                put("k", k.into());
            }
            if let Some(alpha) = a.alpha {
                put("gmm_prior.alpha", alpha.into());
            }
            if let Some(init) = a.init {
                let name = match init {
                    InitKind::Kmeans => "kmeans",
                    InitKind::Dbscan => "dbscan",
                    InitKind::Random => "random",
                };
                put("init.method", name.into());
                reset_init_params = init != InitKind::Dbscan;
            }
            if let Some(eps) = a.eps {
                put("init.eps", eps.into());
            }
            if let Some(m) = a.min_pts {
                put("init.min_pts", m.into());
            }
            if let Some(d) = a.delta {
                put("gmm_opts.delta", d.into());
            }
            if let Some(m) = a.max_iters {
                put("gmm_opts.max_iters", m.into());
            }
            if a.stop_on_elbo_reverse {
                put("gmm_opts.stop_if_elbo_reverse", true.into());
            }
        }
        Command::FitLogit(a) => {
            if let Some(d) = a.delta {
                put("regression_opts.delta", d.into());
            }
            if let Some(m) = a.max_iters {
                put("regression_opts.max_iters", m.into());
            }
        }
        Command::GenCohort(a) => {
            if let Some(n) = a.n {
                put("generator.n", n.into());
            }
            if let Some(p) = a.prevalence {
                put("generator.prevalence", p.into());
            }
            if let Some(t) = &a.truth {
                put("truth", t.to_string_lossy().as_ref().into());
            }
        }
        Command::Plot(a) => {
            if let Some(r) = &a.result {
                put("plot.result", r.to_string_lossy().as_ref().into());
            }
        }
    }
    for (k, v) in overrides {
        set_dotted(&mut value, &k, v).map_err(CliError::Config)?;
    }
    if reset_init_params {
        remove_dotted(&mut value, "init", "eps");
        remove_dotted(&mut value, "init", "min_pts");
    }
    RunConfig::from_value(value).map_err(CliError::Config)
}

fn required<'a, T>(v: &'a Option<T>, what: &str) -> CliResult<&'a T> {
    v.as_ref()
        .ok_or_else(|| CliError::Config(format!("no {what} path given")))
}

fn load_input(run: &RunSettings) -> CliResult<Cohort> {
    let input = required(&run.input, "input")?;
    if input == BUILTIN_FAITHFUL {
        let data = datasets::faithful();
        let mut c = Cohort::new();
        for (j, name) in datasets::FAITHFUL_COLUMNS.iter().enumerate() {
            c.insert(*name, Column::Continuous(data.column(j).iter().copied().collect()))?;
        }
        return Ok(c);
    }
    Ok(load_csv(input, &run.schema)?)
}

fn diagnostics_path(run: &RunSettings) -> PathBuf {
    if let Some(p) = &run.diagnostics {
        return p.clone();
    }
    match &run.output {
        Some(out) => {
            let mut s = out.clone().into_os_string();
            s.push(".diag.txt");
            PathBuf::from(s)
        }
        None => PathBuf::from("diagnostics.txt"),
    }
}

fn maybe_diagnostics(run: &RunSettings, trace: &ElboTrace) -> CliResult<()> {
    if run.log_diagnostics {
        write_diagnostics(trace, diagnostics_path(run))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct GmmReport<'a> {
    columns: &'a [String],
    scaling: Vec<Option<Scaling>>,
    k: usize,
    alpha: Vec<f64>,
    lambda: Vec<f64>,
    /// One mean vector per component, in fitted units.
    m: Vec<Vec<f64>>,
    w: Vec<Vec<Vec<f64>>>,
    nu: Vec<f64>,
    mixing_weights: Vec<f64>,
    effective_components: usize,
    hard_labels: &'a [usize],
    degenerate_components: &'a [usize],
    elbo_trace: &'a ElboTrace,
    config_echo: &'a PhenoConfig,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn plot_columns(run: &RunSettings, model: &PhenoConfig) -> CliResult<Vec<String>> {
    let cols = run.plot.columns.clone().unwrap_or_else(|| model.gmm_columns.clone());
    if cols.len() != 2 {
        return Err(CliError::Config(format!(
            "plots need exactly two columns, got {}; set plot.columns",
            cols.len()
        )));
    }
    Ok(cols)
}

fn cmd_fit_gmm(cfg: &RunConfig) -> CliResult<()> {
    let (run, model) = (&cfg.run, &cfg.model);
    let output = required(&run.output, "output")?;
    let cohort = load_input(run)?;
    model.init.validate()?;
    let fitted = if model.standardize_gmm {
        standardize(&cohort, &model.gmm_columns)?
    } else {
        cohort.clone()
    };
    let data = fitted.matrix(&model.gmm_columns)?;
    let prior = model.gmm_prior.resolve(&data, model.k)?;
    let init = initialize(&data, model.k, &model.init)?;
    let fit = fit_gmm(&data, model.k, &prior, &init.labels, &model.gmm_opts)?;
    log::info!(
        "{} iterations, stopped on {}, {} effective components",
        fit.trace.len(),
        fit.trace.stopped_because.as_str(),
        fit.state.effective_components(0.05)
    );

    let st = &fit.state;
    let report = GmmReport {
        columns: &model.gmm_columns,
        scaling: model
            .gmm_columns
            .iter()
            .map(|c| fitted.scaling().get(c).copied())
            .collect(),
        k: model.k,
        alpha: st.alpha.iter().copied().collect(),
        lambda: st.lambda.iter().copied().collect(),
        m: (0..st.k()).map(|c| st.m.column(c).iter().copied().collect()).collect(),
        w: st.w.iter().map(matrix_rows).collect(),
        nu: st.nu.iter().copied().collect(),
        mixing_weights: st.mixing_weights.iter().copied().collect(),
        effective_components: st.effective_components(0.05),
        hard_labels: &fit.resp.hard_labels,
        degenerate_components: &st.degenerate_components,
        elbo_trace: &fit.trace,
        config_echo: model,
    };
    write_json(&report, output)?;
    maybe_diagnostics(run, &fit.trace)?;

    if let Some(fig) = &run.figure {
        let cols = plot_columns(run, model)?;
        let idx: Vec<usize> = cols
            .iter()
            .map(|c| {
                model.gmm_columns.iter().position(|g| g == c).ok_or_else(|| {
                    CliError::Config(format!("plot column `{c}` is not a mixture column"))
                })
            })
            .collect::<CliResult<_>>()?;
        // back to raw units: x = mean + sd · z
        let scale: Vec<(f64, f64)> = idx
            .iter()
            .map(|&j| {
                fitted
                    .scaling()
                    .get(&model.gmm_columns[j])
                    .map_or((0.0, 1.0), |s| (s.mean, s.sd))
            })
            .collect();
        let raw = cohort.matrix(&cols)?;
        let mut counts = vec![0usize; model.k];
        for &l in &fit.resp.hard_labels {
            counts[l] += 1;
        }
        let means = DMatrix::from_fn(2, model.k, |a, c| scale[a].0 + scale[a].1 * st.m[(idx[a], c)]);
        let covs: Vec<Option<DMatrix<f64>>> = (0..model.k)
            .map(|c| {
                (counts[c] > 0).then(|| {
                    let full = st.expected_covariance(c);
                    DMatrix::from_fn(2, 2, |a, b| full[(idx[a], idx[b])] * scale[a].1 * scale[b].1)
                })
            })
            .collect();
        let plot = ScatterPlot {
            data: &raw,
            labels: &fit.resp.hard_labels,
            means: &means,
            covs: &covs,
            x_label: &cols[0],
            y_label: &cols[1],
            level: run.plot.level,
        };
        emit_scatter_svg(&plot, fig)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct LogitReport<'a> {
    design: Vec<String>,
    m: Vec<f64>,
    s: Vec<Vec<f64>>,
    xi: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sens_spec: Option<SensSpec>,
    elbo_trace: &'a ElboTrace,
}

fn cmd_fit_logit(cfg: &RunConfig) -> CliResult<()> {
    let (run, model) = (&cfg.run, &cfg.model);
    let output = required(&run.output, "output")?;
    let cohort = load_input(run)?;
    let task = &run.logit;
    let mut design = Vec::new();
    if task.intercept {
        design.push("intercept".to_string());
    }
    design.extend(task.predictors.iter().cloned());
    let cols = task
        .predictors
        .iter()
        .map(|c| cohort.values(c))
        .collect::<crate::Result<Vec<_>>>()?;
    let off = usize::from(task.intercept);
    let x = DMatrix::from_fn(cohort.n(), design.len(), |i, j| {
        if j < off {
            1.0
        } else {
            cols[j - off][i]
        }
    });
    let y = cohort.values(&task.response)?;
    let prior = model.logit_prior.resolve(design.len())?;
    let fit = fit_logit_cavi(&x, &y, &prior, &model.regression_opts)?;
    let report = LogitReport {
        sens_spec: if task.intercept && design.len() == 2 {
            Some(sens_spec(&fit)?)
        } else {
            None
        },
        design,
        m: fit.m.iter().copied().collect(),
        s: matrix_rows(&fit.s),
        xi: fit.xi.iter().copied().collect(),
        elbo_trace: &fit.elbo_trace,
    };
    write_json(&report, output)?;
    maybe_diagnostics(run, &fit.elbo_trace)
}

fn class_plot(
    cohort: &Cohort,
    cols: &[String],
    classes: &[u8],
    level: f64,
    fig: &Path,
) -> CliResult<()> {
    let data = cohort.matrix(cols)?;
    let labels: Vec<usize> = classes.iter().map(|&c| c as usize).collect();
    if labels.len() != data.nrows() {
        return Err(Error::DimensionMismatch {
            context: "result rows",
            expected: data.nrows(),
            found: labels.len(),
        }
        .into());
    }
    let (means, covs) = class_moments(&data, &labels, 2);
    let plot = ScatterPlot {
        data: &data,
        labels: &labels,
        means: &means,
        covs: &covs,
        x_label: &cols[0],
        y_label: &cols[1],
        level,
    };
    Ok(emit_scatter_svg(&plot, fig)?)
}

fn cmd_phenotype(cfg: &RunConfig) -> CliResult<()> {
    let (run, model) = (&cfg.run, &cfg.model);
    let output = required(&run.output, "output")?;
    let cohort = load_input(run)?;
    let result = run_model(&cohort, model)?;
    log::info!(
        "{} rows in the disease class (component {})",
        result.disease_count(),
        result.disease_component
    );
    save_result(&result, output)?;
    maybe_diagnostics(run, &result.elbo_trace)?;
    if let Some(fig) = &run.figure {
        let cols = plot_columns(run, model)?;
        class_plot(&cohort, &cols, &result.latent_class, run.plot.level, fig)?;
    }
    Ok(())
}

fn cmd_gen_cohort(cfg: &RunConfig) -> CliResult<()> {
    let run = &cfg.run;
    let output = required(&run.output, "output")?;
    let generated = generate_scd_cohort(&run.generator)?;
    save_cohort(&generated.cohort, output)?;
    if let Some(truth) = &run.truth {
        write_json(&generated.truth, truth)?;
    }
    Ok(())
}

fn cmd_plot(cfg: &RunConfig) -> CliResult<()> {
    let (run, model) = (&cfg.run, &cfg.model);
    let fig = required(&run.figure, "figure")?;
    let result_path = required(&run.plot.result, "result")?;
    let cohort = load_input(run)?;
    let result = load_result(result_path)?;
    let cols = plot_columns(run, model)?;
    class_plot(&cohort, &cols, &result.latent_class, run.plot.level, fig)
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let cfg = resolve_config(cli)?;
    let level = if cfg.run.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match &cli.command {
        Command::FitGmm(_) => cmd_fit_gmm(&cfg),
        Command::FitLogit(_) => cmd_fit_logit(&cfg),
        Command::Phenotype(_) => cmd_phenotype(&cfg),
        Command::GenCohort(_) => cmd_gen_cohort(&cfg),
        Command::Plot(_) => cmd_plot(&cfg),
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.line());
            e.exit_code()
        }
    }
}
