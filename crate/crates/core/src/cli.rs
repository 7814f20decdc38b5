//! The `nnkit` command line.
//!
//! Subcommands: `build`, `query`, `classify`, `localize`, `detect`, `bench`
//! and `gen`. Results are written as CSV (default) or JSON lines to
//! `--output` or stdout. `--config FILE` reads `key=value` lines that act as
//! flags placed before the command-line ones, so explicit flags win. When
//! `NNKIT_OUTPUT_DIR` is set, relative output paths resolve against it.
//!
//! Exit codes: 0 success, 2 usage or precondition error, 3 data error,
//! 4 failed check (oracle mismatch or bench assertion).

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::classifier::{fit, split, EvalReport, KnnModel, TrainingSet};
use crate::error::{Error, Result};
use crate::kdtree::{KdTree, TEXT_FORMAT_HEADER};
use crate::linear_scan::{scan_knn, scan_nn, scan_radius, Dataset, NeighborList};
use crate::metrics::{MetricKind, Point};
use crate::proximity::{diameter, mst};
use crate::synth_data::{
    load_csv, read_csv, seeded_rng, write_csv, CsvSchema, FingerprintMap, GaussianMixture, Grid,
    KpiRecord, LosNlosParams, PathLossParams, Scenario, SleepingCellParams,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

/// Environment variable redirecting relative output paths.
pub const OUTPUT_DIR_ENV: &str = "NNKIT_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "nnkit", version, about = "K-d tree search, proximity problems and k-NN classification")]
#[command(args_override_self = true)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a K-d tree from a CSV file and write its text serialization.
    Build(BuildArgs),
    /// Run nn / knn / radius / ann / mst / diameter queries.
    Query(QueryArgs),
    /// Normalize, split, fit and evaluate a k-NN classifier.
    Classify(ClassifyArgs),
    /// Monte-Carlo RSS fingerprint localization.
    Localize(LocalizeArgs),
    /// Sleeping-cell anomaly detection with k-NN.
    Detect(DetectArgs),
    /// Tree build and search scaling report.
    Bench(BenchArgs),
    /// Generate a synthetic dataset as CSV.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    #[value(name = "jsonl", alias = "json-lines")]
    Jsonl,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// Worker threads for Monte-Carlo and query fan-out.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// euclidean, manhattan, chebyshev or minkowski:<p>.
    #[arg(long, default_value = "euclidean")]
    pub metric: String,
    /// Read key=value defaults from this file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, short)]
    pub input: PathBuf,
    /// Column to ignore as a label.
    #[arg(long)]
    pub label_column: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum QueryMode {
    Nn,
    Knn,
    Radius,
    Ann,
    Mst,
    Diameter,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub common: Common,
    /// Point CSV or serialized tree.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long, value_enum)]
    pub mode: QueryMode,
    /// Single query point, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// CSV of query points (all columns are coordinates).
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub epsilon: f64,
    /// Cross-check every search result against the brute-force scan.
    #[arg(long)]
    pub oracle_check: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Labeled CSV; a LoS/NLoS set is generated when omitted.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    pub label_column: String,
    #[arg(long, default_value_t = 500)]
    pub n_los: usize,
    #[arg(long, default_value_t = 500)]
    pub n_nlos: usize,
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Comma-separated k values, one report row each.
    #[arg(long)]
    pub k_sweep: Option<String>,
    /// Known Bayes risk; adds nearest-neighbor risk bounds to the report.
    #[arg(long)]
    pub bayes_risk: Option<f64>,
    /// CSV of unlabeled points to classify with the fitted model.
    #[arg(long)]
    pub predict: Option<PathBuf>,
    /// Where predictions go (required with --predict).
    #[arg(long)]
    pub predict_output: Option<PathBuf>,
    /// Write the fitted model (first k) as CSV.
    #[arg(long)]
    pub export_model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Existing fingerprint map (x,y,rss_1..); queries then perturb stored
    /// fingerprints with N(0, sigma) noise.
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = -40.0, allow_hyphen_values = true)]
    pub p0: f64,
    #[arg(long, default_value_t = 2.5)]
    pub n_exp: f64,
    #[arg(long, default_value_t = 1.0)]
    pub d0: f64,
    #[arg(long, default_value_t = 20.0)]
    pub width: f64,
    #[arg(long, default_value_t = 20.0)]
    pub height: f64,
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long)]
    pub k_sweep: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub queries: usize,
    /// Write per-query errors (query, k, error) here.
    #[arg(long)]
    pub per_query: Option<PathBuf>,
    /// Write the generated fingerprint map here.
    #[arg(long)]
    pub map_output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub common: Common,
    /// Labeled KPI CSV (label 2 = anomalous); generated when omitted.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    pub label_column: String,
    #[arg(long, default_value_t = 1600)]
    pub n_normal: usize,
    #[arg(long, default_value_t = 400)]
    pub n_anomalous: usize,
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long)]
    pub k_sweep: Option<String>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "1000,10000,100000")]
    pub sizes: String,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 1000)]
    pub queries: usize,
    /// Include wall-clock build times (not reproducible across runs).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Uniform,
    SixPoint,
    Fingerprints,
    LosNlos,
    SleepingCell,
    Mixture,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub kind: GenKind,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 2.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 500)]
    pub n_los: usize,
    #[arg(long, default_value_t = 500)]
    pub n_nlos: usize,
    #[arg(long, default_value_t = 1600)]
    pub n_normal: usize,
    #[arg(long, default_value_t = 400)]
    pub n_anomalous: usize,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Build(a) => &a.common,
            Command::Query(a) => &a.common,
            Command::Classify(a) => &a.common,
            Command::Localize(a) => &a.common,
            Command::Detect(a) => &a.common,
            Command::Bench(a) => &a.common,
            Command::Gen(a) => &a.common,
        }
    }
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_)
        | Error::InvalidMetric(_)
        | Error::InvalidPoint(_)
        | Error::DimensionMismatch { .. } => EXIT_USAGE,
        Error::EmptyDataset | Error::Parse { .. } | Error::Io { .. } | Error::MalformedTree(_) => EXIT_DATA,
        Error::OracleMismatch(_) => EXIT_CHECK,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match merge_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("nnkit: {e}");
            return exit_code(&e);
        }
    };
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&config, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("nnkit: {e}");
            exit_code(&e)
        }
    }
}

/// Expands `--config FILE` into flags inserted right after the subcommand.
fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let pos = args.iter().position(|a| a == "--config");
    let path = match pos {
        Some(i) => args
            .get(i + 1)
            .ok_or_else(|| Error::param("--config needs a file"))?
            .clone(),
        None => match args.iter().find_map(|a| a.to_str()?.strip_prefix("--config=").map(OsString::from)) {
            Some(p) => p,
            None => return Ok(args),
        },
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::io(PathBuf::from(&path), e))?;
    let mut extra = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: PathBuf::from(&path),
            line: no as u64 + 1,
            message: "expected key=value".into(),
        })?;
        let flag = format!("--{}", key.trim().replace('_', "-"));
        match value.trim() {
            "true" => extra.push(OsString::from(flag)),
            "false" => {}
            v => {
                extra.push(OsString::from(flag));
                extra.push(OsString::from(v));
            }
        }
    }
    // Subcommand is the first token after the program name that is not a flag.
    let sub = args
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|p| p + 1)
        .ok_or_else(|| Error::param("missing subcommand"))?;
    let mut out = args[..=sub].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

/// Runs a parsed command, writing primary output to `--output` or `stdout`.
pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let jobs = config.command.common().jobs;
    if jobs == 0 {
        return Err(Error::param("--jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
    let mut buf = Vec::new();
    let result = pool.install(|| {
        let out = &mut buf;
        match &config.command {
            Command::Build(a) => cmd_build(a, out),
            Command::Query(a) => cmd_query(a, out),
            Command::Classify(a) => cmd_classify(a, out),
            Command::Localize(a) => cmd_localize(a, out),
            Command::Detect(a) => cmd_detect(a, out),
            Command::Bench(a) => cmd_bench(a, out),
            Command::Gen(a) => cmd_gen(a, out),
        }
    });
    // Partial output (e.g. a bench table before a failed assertion) is kept.
    stdout
        .write_all(&buf)
        .and_then(|_| stdout.flush())
        .map_err(|e| Error::io("<stdout>", e))?;
    result
}

fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn emit(common: &Common, stdout: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    write_to(common.output.as_deref(), stdout, bytes)
}

fn write_to(path: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            let p = resolve_output(p);
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            fs::write(&p, bytes).map_err(|e| Error::io(&p, e))
        }
        None => stdout
            .write_all(bytes)
            .and_then(|_| stdout.flush())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn metric_of(common: &Common) -> Result<MetricKind> {
    common.metric.parse()
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::param(format!("bad {what} value {v:?}")))
        })
        .collect()
}

fn k_values(k: usize, sweep: &Option<String>) -> Result<Vec<usize>> {
    match sweep {
        Some(s) => parse_list(s, "k"),
        None => Ok(vec![k]),
    }
}

/// Rows with named columns, rendered as CSV or JSON lines.
struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let wrap = |e: csv::Error| Error::param(format!("csv write failed: {e}"));
                w.write_record(&self.columns).map_err(wrap)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(cell)).map_err(wrap)?;
                }
                w.into_inner().map_err(|e| Error::param(format!("csv write failed: {e}")))
            }
            Format::Jsonl => {
                let mut out = Vec::new();
                for row in &self.rows {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .cloned()
                        .zip(row.iter().cloned())
                        .collect();
                    serde_json::to_writer(&mut out, &obj).map_err(|e| Error::param(e.to_string()))?;
                    out.push(b'\n');
                }
                Ok(out)
            }
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if !(n.is_i64() || n.is_u64()) => f.to_string(),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn opt_num(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

fn load_points(path: &Path, label_column: Option<&str>, metric: MetricKind) -> Result<Dataset> {
    let schema = CsvSchema {
        label_column: label_column.map(str::to_string),
        feature_columns: None,
        metric,
    };
    Ok(load_csv(path, &schema)?.dataset)
}

/// `build`: serialized tree to the output, build stats to stderr.
pub fn cmd_build(a: &BuildArgs, stdout: &mut dyn Write) -> Result<()> {
    let ds = load_points(&a.input, a.label_column.as_deref(), metric_of(&a.common)?)?;
    let tree = KdTree::build(ds)?;
    let s = tree.tree_stats();
    eprintln!("nodes={} depth={} comparisons={}", s.nodes, s.depth, s.build_comparisons);
    emit(&a.common, stdout, tree.to_text().as_bytes())
}

fn load_tree_or_points(a: &QueryArgs) -> Result<KdTree> {
    let text = fs::read_to_string(&a.input).map_err(|e| Error::io(&a.input, e))?;
    if text.starts_with(TEXT_FORMAT_HEADER) {
        return KdTree::from_text(&text);
    }
    let schema = CsvSchema {
        label_column: a.label_column.clone(),
        feature_columns: None,
        metric: metric_of(&a.common)?,
    };
    let ds = read_csv(text.as_bytes(), &a.input.display().to_string(), &schema)?.dataset;
    KdTree::build(ds)
}

/// `query`: one output row per neighbor, edge or diameter pair.
pub fn cmd_query(a: &QueryArgs, stdout: &mut dyn Write) -> Result<()> {
    let tree = load_tree_or_points(a)?;
    let ds = tree.dataset();
    let dim = ds.dim();

    let table = match a.mode {
        QueryMode::Mst => {
            let edges = mst(ds);
            let mut t = Table::new(vec!["i", "j", "weight"]);
            for e in &edges.0 {
                t.push(vec![json!(e.i), json!(e.j), num(e.weight)]);
            }
            eprintln!("total_weight={}", edges.total_weight());
            t
        }
        QueryMode::Diameter => {
            let d = diameter(ds)?;
            let mut cols: Vec<String> = vec!["i".into(), "j".into(), "distance".into()];
            cols.extend(coord_columns("a", dim));
            cols.extend(coord_columns("b", dim));
            let mut t = Table::new(cols);
            let mut row = vec![json!(d.i), json!(d.j), num(d.weight)];
            row.extend(ds.point(d.i).iter().map(|&c| num(c)));
            row.extend(ds.point(d.j).iter().map(|&c| num(c)));
            t.push(row);
            t
        }
        mode => {
            let queries: Vec<Vec<f64>> = match (&a.q, &a.queries) {
                (Some(q), None) => vec![q.parse::<Point>()?.into_inner()],
                (None, Some(path)) => load_points(path, None, ds.metric())?.rows().map(<[f64]>::to_vec).collect(),
                _ => return Err(Error::param("give exactly one of --q or --queries")),
            };
            let results: Vec<NeighborList> = queries
                .par_iter()
                .map(|q| search_checked(&tree, q, mode, a))
                .collect::<Result<_>>()?;
            let mut cols: Vec<String> = ["query", "rank", "index", "distance"].map(String::from).to_vec();
            cols.extend(coord_columns("x", dim));
            let mut t = Table::new(cols);
            for (qi, list) in results.iter().enumerate() {
                for (rank, n) in list.iter().enumerate() {
                    let mut row = vec![json!(qi), json!(rank + 1), json!(n.index), num(n.distance)];
                    row.extend(ds.point(n.index).iter().map(|&c| num(c)));
                    t.push(row);
                }
            }
            t
        }
    };
    emit(&a.common, stdout, &table.render(a.common.format)?)
}

fn coord_columns(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("{prefix}{i}")).collect()
}

fn search_checked(tree: &KdTree, q: &[f64], mode: QueryMode, a: &QueryArgs) -> Result<NeighborList> {
    let ds = tree.dataset();
    let rho = || a.rho.ok_or_else(|| Error::param("--rho is required for radius mode"));
    let run_tree = || -> Result<NeighborList> {
        match mode {
            QueryMode::Nn => tree.query_nn(q),
            QueryMode::Knn => tree.query_knn(q, a.k),
            QueryMode::Radius => tree.query_radius(q, rho()?),
            QueryMode::Ann => tree.query_ann(q, a.epsilon),
            QueryMode::Mst | QueryMode::Diameter => unreachable!("handled by caller"),
        }
    };
    if !a.oracle_check {
        return run_tree();
    }
    let run_scan = || -> Result<NeighborList> {
        match mode {
            QueryMode::Nn | QueryMode::Ann => scan_nn(ds, q),
            QueryMode::Knn => scan_knn(ds, q, a.k),
            QueryMode::Radius => scan_radius(ds, q, rho()?),
            QueryMode::Mst | QueryMode::Diameter => unreachable!("handled by caller"),
        }
    };
    let (got, want) = rayon::join(run_tree, run_scan);
    let (got, want) = (got?, want?);
    let agrees = match mode {
        QueryMode::Ann => got[0].distance <= (1.0 + a.epsilon) * want[0].distance,
        _ => got == want,
    };
    if !agrees {
        return Err(Error::OracleMismatch(format!(
            "query {q:?}: tree returned {:?}, scan returned {:?}",
            got.indices(),
            want.indices()
        )));
    }
    Ok(got)
}

fn load_labeled(path: &Path, label_column: &str, metric: MetricKind) -> Result<TrainingSet> {
    let schema = CsvSchema {
        label_column: Some(label_column.to_string()),
        feature_columns: None,
        metric,
    };
    load_csv(path, &schema)?.into_training_set()
}

fn report_row(k: usize, n_train: usize, r: &EvalReport) -> Vec<Value> {
    vec![
        json!(k),
        json!(n_train),
        json!(r.n_test),
        json!(r.errors()),
        num(r.error_rate),
        num(r.accuracy()),
        opt_num(r.bound_low),
        opt_num(r.bound_high),
        json!(r.confusion),
    ]
}

/// `classify`: normalize (training split only), split, fit and evaluate for
/// each k; optionally predict a query file and export the model.
pub fn cmd_classify(a: &ClassifyArgs, stdout: &mut dyn Write) -> Result<()> {
    let metric = metric_of(&a.common)?;
    let data = match &a.input {
        Some(p) => load_labeled(p, &a.label_column, metric)?,
        None => LosNlosParams::default().generate(a.common.seed, a.n_los, a.n_nlos)?,
    };
    let (train, test) = split(&data, a.alpha, a.common.seed)?;
    let ks = k_values(a.k, &a.k_sweep)?;
    let mut cols = vec![
        "k", "n_train", "n_test", "errors", "error_rate", "accuracy", "bound_low", "bound_high",
    ];
    if a.common.format == Format::Jsonl {
        cols.push("confusion");
    }
    let mut t = Table::new(cols.clone());
    let mut first: Option<KnnModel> = None;
    for &k in &ks {
        let model = fit(&train, k, metric)?;
        let mut report = model.evaluate(&test)?;
        if let Some(r) = a.bayes_risk {
            report = report.with_bayes_risk(r)?;
        }
        let mut row = report_row(k, train.len(), &report);
        row.truncate(cols.len());
        t.push(row);
        first.get_or_insert(model);
    }
    let model = first.ok_or_else(|| Error::param("no k values given"))?;

    if let Some(path) = &a.export_model {
        let mut buf = Vec::new();
        model.export_csv(&mut buf)?;
        write_to(Some(path), stdout, &buf)?;
    }
    match (&a.predict, &a.predict_output) {
        (Some(input), Some(out)) => {
            let queries = load_points(input, None, metric)?;
            let mut p = Table::new(vec!["query", "label"]);
            for (i, q) in queries.rows().enumerate() {
                p.push(vec![json!(i), json!(model.predict(q)?.get())]);
            }
            write_to(Some(out), stdout, &p.render(a.common.format)?)?;
        }
        (Some(_), None) => return Err(Error::param("--predict needs --predict-output")),
        _ => {}
    }
    emit(&a.common, stdout, &t.render(a.common.format)?)
}

/// `localize`: error summary per k over Monte-Carlo queries.
pub fn cmd_localize(a: &LocalizeArgs, stdout: &mut dyn Write) -> Result<()> {
    let ks = k_values(a.k, &a.k_sweep)?;
    let params = PathLossParams {
        p0: a.p0,
        n_exp: a.n_exp,
        sigma: a.sigma,
        d0: a.d0,
    };
    params.validate()?;
    let runs = match &a.map {
        None => {
            let grid = Grid {
                width: a.width,
                height: a.height,
                spacing: a.spacing,
            };
            let scenario = Scenario {
                params,
                aps: vec![[0.0, 0.0], [a.width, 0.0], [0.0, a.height], [a.width, a.height]],
                grid,
            };
            if let Some(path) = &a.map_output {
                let mut buf = Vec::new();
                scenario.fingerprint_map(a.common.seed)?.write_csv(&mut buf)?;
                write_to(Some(path), stdout, &buf)?;
            }
            scenario.localization_trial(&ks, a.queries, a.common.seed)?
        }
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            let map = FingerprintMap::read_csv(file, &path.display().to_string())?;
            map_trial(&map, &ks, a.queries, a.sigma, a.common.seed)?
        }
    };

    let mut t = Table::new(vec!["k", "queries", "median_error", "p90_error", "mean_error", "max_error"]);
    for r in &runs {
        t.push(vec![json!(r.k), json!(r.queries), num(r.median), num(r.p90), num(r.mean), num(r.max)]);
    }
    if let Some(path) = &a.per_query {
        let mut pq = Table::new(vec!["query", "k", "error"]);
        for i in 0..a.queries {
            for r in &runs {
                pq.push(vec![json!(i), json!(r.k), num(r.errors[i])]);
            }
        }
        write_to(Some(path), stdout, &pq.render(a.common.format)?)?;
    }
    emit(&a.common, stdout, &t.render(a.common.format)?)
}

fn map_trial(
    map: &FingerprintMap,
    ks: &[usize],
    queries: usize,
    sigma: f64,
    seed: u64,
) -> Result<Vec<crate::synth_data::LocalizationRun>> {
    use rand_distr::{Distribution, Normal};
    let loc = map.localizer()?;
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::param(format!("sigma: {e}")))?;
    let per_query: Vec<Vec<f64>> = (0..queries)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded_rng(seed, i as u64 + 1);
            let j = rng.random_range(0..map.len());
            let truth = map.locations()[j];
            let rss: Vec<f64> = map.rss().point(j).iter().map(|r| r + noise.sample(&mut rng)).collect();
            ks.iter()
                .map(|&k| {
                    let e = loc.locate(&rss, k)?;
                    Ok(((e[0] - truth[0]).powi(2) + (e[1] - truth[1]).powi(2)).sqrt())
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(ks
        .iter()
        .enumerate()
        .map(|(j, &k)| crate::synth_data::LocalizationRun::from_errors(k, per_query.iter().map(|e| e[j]).collect()))
        .collect())
}

/// `detect`: sleeping-cell detection report per k. Label 2 is anomalous.
pub fn cmd_detect(a: &DetectArgs, stdout: &mut dyn Write) -> Result<()> {
    let metric = metric_of(&a.common)?;
    let data = match &a.input {
        Some(p) => load_labeled(p, &a.label_column, metric)?,
        None => SleepingCellParams::default().generate(a.common.seed, a.n_normal, a.n_anomalous)?,
    };
    if data.classes() != 2 {
        return Err(Error::param("detection needs exactly two classes (1 normal, 2 anomalous)"));
    }
    let (train, test) = split(&data, a.alpha, a.common.seed)?;
    let mut t = Table::new(vec![
        "k", "n_train", "n_test", "accuracy", "detection_rate", "false_alarm_rate", "tn", "fp", "fn", "tp",
    ]);
    for k in k_values(a.k, &a.k_sweep)? {
        let r = fit(&train, k, metric)?.evaluate(&test)?;
        let c = &r.confusion;
        let (tn, fp, fneg, tp) = (c[0][0], c[0][1], c[1][0], c[1][1]);
        let ratio = |a: u64, b: u64| if a + b == 0 { Value::Null } else { num(a as f64 / (a + b) as f64) };
        t.push(vec![
            json!(k),
            json!(train.len()),
            json!(r.n_test),
            num(r.accuracy()),
            ratio(tp, fneg),
            ratio(fp, tn),
            json!(tn),
            json!(fp),
            json!(fneg),
            json!(tp),
        ]);
    }
    emit(&a.common, stdout, &t.render(a.common.format)?)
}

/// One size of the scaling sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub dim: usize,
    pub nodes: usize,
    pub depth: usize,
    pub build_comparisons: u64,
    pub mean_visited: f64,
    pub build_ms: Option<f64>,
}

/// Uniform `[0,1)^dim` data and queries; mean visited nodes for exact NN.
pub fn bench_size(n: usize, dim: usize, queries: usize, seed: u64, timing: bool) -> Result<BenchRow> {
    if n == 0 || dim == 0 {
        return Err(Error::param("bench sizes and dimension must be positive"));
    }
    let mut rng = seeded_rng(seed, n as u64);
    let flat: Vec<f64> = (0..n * dim).map(|_| rng.random::<f64>()).collect();
    let ds = Dataset::from_flat(flat, dim, MetricKind::Euclidean)?;
    let build_ms = if timing {
        // warm-up build discarded
        KdTree::build(ds.clone())?;
        let start = Instant::now();
        KdTree::build(ds.clone())?;
        Some(start.elapsed().as_secs_f64() * 1e3)
    } else {
        None
    };
    let tree = KdTree::build(ds)?;
    let qs: Vec<Vec<f64>> = (0..queries).map(|_| (0..dim).map(|_| rng.random()).collect()).collect();
    let visited: usize = qs
        .par_iter()
        .map(|q| {
            let mut h = tree.handle();
            h.nn(q)?;
            Ok(h.last_visited().unwrap_or(0))
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum();
    let s = tree.tree_stats();
    Ok(BenchRow {
        n,
        dim,
        nodes: s.nodes,
        depth: s.depth,
        build_comparisons: s.build_comparisons,
        mean_visited: if queries == 0 { 0.0 } else { visited as f64 / queries as f64 },
        build_ms,
    })
}

/// `bench`: visited-node scaling for each size. Fails when, at `n >= 1000`
/// and `dim <= 3`, the tree visits as many nodes as a full scan.
pub fn cmd_bench(a: &BenchArgs, stdout: &mut dyn Write) -> Result<()> {
    let sizes: Vec<usize> = parse_list(&a.sizes, "size")?;
    let mut cols = vec![
        "n",
        "dim",
        "nodes",
        "depth",
        "build_comparisons",
        "mean_visited_tree",
        "visited_scan",
        "visited_fraction",
        "visited_growth",
        "n_growth",
        "note",
    ];
    if a.timing {
        cols.push("build_ms");
    }
    let mut t = Table::new(cols);
    let mut prev: Option<BenchRow> = None;
    let mut failures = Vec::new();
    for &n in &sizes {
        let r = bench_size(n, a.dim, a.queries, a.common.seed, a.timing)?;
        let fraction = r.mean_visited / n as f64;
        let note = if n < 1000 {
            "small n: not asserted"
        } else if a.dim > 3 {
            if fraction > 0.1 {
                "high dimension: pruning degraded"
            } else {
                "high dimension: not asserted"
            }
        } else {
            if r.mean_visited >= n as f64 {
                failures.push(n);
            }
            "asserted visited < n"
        };
        let mut row = vec![
            json!(r.n),
            json!(r.dim),
            json!(r.nodes),
            json!(r.depth),
            json!(r.build_comparisons),
            num(r.mean_visited),
            json!(n),
            num(fraction),
            opt_num(prev.as_ref().map(|p| r.mean_visited / p.mean_visited)),
            opt_num(prev.as_ref().map(|p| n as f64 / p.n as f64)),
            json!(note),
        ];
        if a.timing {
            row.push(opt_num(r.build_ms));
        }
        t.push(row);
        prev = Some(r);
    }
    emit(&a.common, stdout, &t.render(a.common.format)?)?;
    if !failures.is_empty() {
        return Err(Error::OracleMismatch(format!(
            "tree visited at least n nodes for sizes {failures:?}"
        )));
    }
    Ok(())
}

/// `gen`: synthetic datasets as CSV.
pub fn cmd_gen(a: &GenArgs, stdout: &mut dyn Write) -> Result<()> {
    let seed = a.common.seed;
    let mut buf = Vec::new();
    match a.kind {
        GenKind::Uniform => {
            if a.n == 0 || a.dim == 0 {
                return Err(Error::param("--n and --dim must be positive"));
            }
            let mut rng = seeded_rng(seed, 0);
            let flat = (0..a.n * a.dim).map(|_| rng.random::<f64>()).collect();
            write_csv(&Dataset::from_flat(flat, a.dim, MetricKind::Euclidean)?, &mut buf, None, "label")?;
        }
        GenKind::SixPoint => {
            let flat = vec![7., 2., 5., 4., 9., 6., 2., 3., 4., 7., 8., 1.];
            let names = ["x".to_string(), "y".to_string()];
            write_csv(&Dataset::from_flat(flat, 2, MetricKind::Euclidean)?, &mut buf, Some(&names), "label")?;
        }
        GenKind::Fingerprints => {
            Scenario::default().with_sigma(a.sigma).fingerprint_map(seed)?.write_csv(&mut buf)?;
        }
        GenKind::LosNlos => {
            let t = LosNlosParams::default().generate(seed, a.n_los, a.n_nlos)?;
            let names = ["rss".to_string(), "range_residual".to_string()];
            write_csv(t.data(), &mut buf, Some(&names), "label")?;
        }
        GenKind::SleepingCell => {
            let t = SleepingCellParams::default().generate(seed, a.n_normal, a.n_anomalous)?;
            let names = KpiRecord::FEATURES.map(str::to_string);
            write_csv(t.data(), &mut buf, Some(&names), "label")?;
        }
        GenKind::Mixture => {
            let g = GaussianMixture::new(a.separation, a.classes, a.dim)?;
            eprintln!("bayes_risk={}", g.bayes_risk());
            write_csv(g.sample(a.n, seed)?.data(), &mut buf, None, "label")?;
        }
    }
    emit(&a.common, stdout, &buf)
}

/// Entry point for the binary.
pub fn main() -> ! {
    let code = main_with_args(std::env::args_os(), &mut io::stdout().lock());
    std::process::exit(code)
}
