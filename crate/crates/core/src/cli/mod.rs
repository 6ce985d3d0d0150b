//! The `ejet` command line: gen, train, eval, sweep, predict, report.
//!
//! Exit codes: 0 success, 1 usage, 2 data/schema/io, 3 numeric failure.

mod plot;
pub mod report;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::baselines::{KnnParams, LogregParams};
use crate::cart::TreeParams;
use crate::dataset::{self, stratified_split, Class, Dataset, Features, CSV_HEADER, DEFAULT_LABEL_THRESHOLD};
use crate::ensembles::{BoostParams, ForestParams};
use crate::error::Error;
use crate::format;
use crate::metrics::{roc_curve, EvalReport, PrecisionConvention};
use crate::model::{Model, ModelSpec};
use crate::seed::DEFAULT_SEED;
use crate::synthgen::{generate, generate_full_grid, GeneratorConfig};
use crate::validation::{sweep_cp, sweep_ntrees, SweepResult};

pub use plot::Chart;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ejet", version, about = "Conductance-class prediction for e-jet printed electrodes")]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output file (directory for `report`). Defaults to stdout where that makes sense.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled dataset.
    Gen(GenArgs),
    /// Fit a model and save it as JSON.
    Train(TrainArgs),
    /// Evaluate saved models on a labeled dataset.
    Eval(EvalArgs),
    /// Cross-validated accuracy over a cp or AdaBoost-size grid.
    Sweep(SweepArgs),
    /// Classify process settings with a saved model.
    Predict(PredictArgs),
    /// Run the whole comparison and write every artifact into a directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of samples (default 240).
    #[arg(long)]
    pub n: Option<usize>,
    /// Measurement noise sd in ohm/sq.
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Resistance cut between the two classes.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// One sample per grid cell instead of `n` random draws.
    #[arg(long)]
    pub full_grid: bool,
    /// Base generator config (JSON); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Tree,
    Forest,
    Knn,
    Logreg,
    Adaboost,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled CSV dataset.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Prune the tree at this complexity parameter.
    #[arg(long)]
    pub cp: Option<f64>,
    /// Neighbours for knn.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Random-forest size.
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    /// Features tried per forest split.
    #[arg(long, default_value_t = 1)]
    pub mtry: usize,
    /// AdaBoost rounds.
    #[arg(long, default_value_t = 10)]
    pub stumps: usize,
    /// Logistic-regression step size.
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 5000)]
    pub epochs: usize,
    /// Hold out this fraction (stratified) and report test metrics too.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Resistance cut for rows that carry no class.
    #[arg(long, default_value_t = DEFAULT_LABEL_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Labeled CSV dataset.
    #[arg(long)]
    pub data: PathBuf,
    /// Model file; repeat for several.
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    /// Write ROC points here (numbered per model when several are given).
    #[arg(long)]
    pub roc: Option<PathBuf>,
    /// Compute precision and recall with the classes swapped.
    #[arg(long)]
    pub swap_precision: bool,
    #[arg(long, default_value_t = DEFAULT_LABEL_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Cp,
    Trees,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Labeled CSV dataset.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub kind: SweepKind,
    /// Comma-separated grid, e.g. 0,0.01,0.05.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Also draw the curve as SVG.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_LABEL_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Saved model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Nozzle speed, mm/min.
    #[arg(long)]
    pub speed: Option<f64>,
    /// Voltage, kV.
    #[arg(long)]
    pub voltage: Option<f64>,
    /// Flow rate, uL/min.
    #[arg(long)]
    pub flow: Option<f64>,
    /// CSV with nozzle_speed_mm_min, voltage_kv and flow_rate_ul_min columns.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, conflicts_with = "gen")]
    pub data: Option<PathBuf>,
    /// Synthesize the default dataset from `--seed` instead of reading one.
    #[arg(long)]
    pub gen: bool,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = DEFAULT_LABEL_THRESHOLD)]
    pub threshold: f64,
}

/// An error with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: msg.into(),
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e.root_cause() {
        Error::InvalidParameter(_) => EXIT_USAGE,
        Error::Numeric(_) | Error::Undefined(_) => EXIT_NUMERIC,
        _ => EXIT_DATA,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(cli, a),
        Command::Train(a) => cmd_train(cli, a),
        Command::Eval(a) => cmd_eval(cli, a),
        Command::Sweep(a) => cmd_sweep(cli, a),
        Command::Predict(a) => cmd_predict(cli, a),
        Command::Report(a) => cmd_report(cli, a),
    }
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> crate::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Sends output to `--out` when given, stdout otherwise.
fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => Ok(write_atomic(p, text.as_bytes())?),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e).into())
        }
    }
}

fn to_json<T: Serialize + ?Sized>(v: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v).map_err(Error::from)? + "\n")
}

/// Loads a CSV and labels any unlabeled rows by resistance.
pub fn load_labeled(path: &Path, threshold: f64) -> crate::Result<Dataset> {
    dataset::label_by_threshold(&dataset::load_csv(path)?, threshold)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    out.with_file_name(format!("{stem}.config.json"))
}

fn cmd_gen(cli: &Cli, a: &GenArgs) -> CliResult<()> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(Error::from)?
        }
        None => GeneratorConfig::default(),
    };
    cfg.seed = cli.seed;
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(s) = a.noise_sigma {
        cfg.noise_sigma = s;
    }
    if let Some(t) = a.threshold {
        cfg.threshold = t;
    }
    let ds = if a.full_grid {
        generate_full_grid(&cfg)?
    } else {
        generate(&cfg)?
    };
    emit(cli.out.as_deref(), &ds.to_csv_string())?;
    if let Some(out) = &cli.out {
        write_atomic(&sidecar_path(out), to_json(&cfg)?.as_bytes())?;
    }
    Ok(())
}

fn spec_from_train_args(cli: &Cli, a: &TrainArgs) -> CliResult<ModelSpec> {
    if a.cp.is_some() && a.model != ModelKind::Tree {
        return Err(CliError::usage("--cp only applies to --model tree"));
    }
    Ok(match a.model {
        ModelKind::Tree => ModelSpec::Tree {
            params: TreeParams::default(),
            prune_cp: a.cp,
        },
        ModelKind::Forest => ModelSpec::Forest {
            params: ForestParams {
                n_trees: a.trees,
                mtry: a.mtry,
                seed: cli.seed,
                ..Default::default()
            },
        },
        ModelKind::Knn => ModelSpec::Knn {
            params: KnnParams { k: a.k },
        },
        ModelKind::Logreg => ModelSpec::Logreg {
            params: LogregParams {
                lr: a.lr,
                max_epochs: a.epochs,
                ..Default::default()
            },
        },
        ModelKind::Adaboost => ModelSpec::Adaboost {
            params: BoostParams {
                n_stumps: a.stumps,
                seed: cli.seed,
            },
        },
    })
}

fn evaluate_model(
    name: &str,
    model: &Model,
    ds: &Dataset,
    conv: PrecisionConvention,
) -> crate::Result<(EvalReport, Vec<f64>)> {
    let preds = model.predict_all(ds);
    let actual = ds.labels()?;
    let predicted: Vec<Class> = preds.iter().map(|p| p.0).collect();
    let scores: Vec<f64> = preds.iter().map(|p| p.1).collect();
    let report = EvalReport::from_predictions(name, &actual, &predicted, Some(&scores), conv)?;
    Ok((report, scores))
}

fn reports_text(format: OutputFormat, reports: &[EvalReport]) -> CliResult<String> {
    match format {
        OutputFormat::Json => to_json(reports),
        OutputFormat::Csv => {
            let mut s = EvalReport::csv_header() + "\n";
            for r in reports {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            Ok(s)
        }
    }
}

fn cmd_train(cli: &Cli, a: &TrainArgs) -> CliResult<()> {
    let out = cli
        .out
        .as_deref()
        .ok_or_else(|| CliError::usage("train needs --out for the model file"))?;
    let spec = spec_from_train_args(cli, a)?;
    let ds = load_labeled(&a.data, a.threshold)?;
    let (train, test) = match a.test_fraction {
        Some(f) => {
            let (tr, te) = stratified_split(&ds, f, cli.seed)?;
            (tr, Some(te))
        }
        None => (ds, None),
    };
    let model = spec.fit(&train)?;
    write_atomic(out, model.to_json()?.as_bytes())?;

    let name = spec.name();
    let conv = PrecisionConvention::Standard;
    let mut reports = vec![evaluate_model(&format!("{name}:train"), &model, &train, conv)?.0];
    if let Some(test) = test {
        reports.push(evaluate_model(&format!("{name}:test"), &model, &test, conv)?.0);
    }
    emit(None, &reports_text(cli.format, &reports)?)
}

fn roc_path(base: &Path, index: usize, count: usize) -> PathBuf {
    if count == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{}.{}", index + 1, ext.to_string_lossy()),
        None => format!("{stem}_{}", index + 1),
    };
    base.with_file_name(name)
}

fn cmd_eval(cli: &Cli, a: &EvalArgs) -> CliResult<()> {
    let ds = load_labeled(&a.data, a.threshold)?;
    let conv = if a.swap_precision {
        PrecisionConvention::Swapped
    } else {
        PrecisionConvention::Standard
    };
    let mut reports = Vec::with_capacity(a.models.len());
    for (i, path) in a.models.iter().enumerate() {
        let model = Model::load(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| model.kind().to_string());
        let (report, scores) = evaluate_model(&name, &model, &ds, conv)?;
        if let Some(base) = &a.roc {
            let curve = roc_curve(&scores, &ds.labels()?)?;
            let mut buf = Vec::new();
            curve.write_csv(&mut buf).map_err(|e| Error::io(base, e))?;
            write_atomic(&roc_path(base, i, a.models.len()), &buf)?;
        }
        reports.push(report);
    }
    emit(cli.out.as_deref(), &reports_text(cli.format, &reports)?)
}

/// Sweep values as AdaBoost round counts.
fn tree_counts(values: &[f64]) -> CliResult<Vec<usize>> {
    values
        .iter()
        .map(|&v| {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(CliError::usage(format!("tree counts must be positive integers, got {v}")))
            }
        })
        .collect()
}

pub(crate) fn sweep_chart(kind: SweepKind, r: &SweepResult) -> String {
    let (title, x_label) = match kind {
        SweepKind::Cp => ("CV accuracy vs complexity parameter", "cp"),
        SweepKind::Trees => ("AdaBoost CV accuracy vs number of trees", "trees"),
    };
    let lo = r.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = r.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pts: Vec<(f64, f64)> = r.values.iter().cloned().zip(r.mean_accuracy.iter().cloned()).collect();
    Chart {
        title,
        x_label,
        y_label: "accuracy",
        x_range: (lo, hi),
        y_range: (0.0, 1.0),
        diagonal: false,
    }
    .render(&pts)
}

fn cmd_sweep(cli: &Cli, a: &SweepArgs) -> CliResult<()> {
    let ds = load_labeled(&a.data, a.threshold)?;
    let result = match a.kind {
        SweepKind::Cp => sweep_cp(&ds, &a.values, a.folds, cli.seed)?,
        SweepKind::Trees => sweep_ntrees(&ds, &tree_counts(&a.values)?, a.folds, cli.seed)?,
    };
    if let Some(svg) = &a.svg {
        write_atomic(svg, sweep_chart(a.kind, &result).as_bytes())?;
    }
    let text = match cli.format {
        OutputFormat::Csv => result.to_csv(),
        OutputFormat::Json => to_json(&result)?,
    };
    emit(cli.out.as_deref(), &text)
}

/// Reads the three feature columns (by name) from a CSV; other columns are ignored.
pub fn read_feature_rows(path: &Path) -> crate::Result<Vec<Features>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Schema(e.to_string()))?
        .clone();
    let mut cols = [0usize; 3];
    for (j, name) in CSV_HEADER[..3].iter().enumerate() {
        cols[j] = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))?;
    }
    let mut rows = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let line = r + 2;
        let rec = rec.map_err(|e| Error::Row {
            line,
            message: e.to_string(),
        })?;
        let mut x = [0.0; 3];
        for j in 0..3 {
            let cell = rec.get(cols[j]).unwrap_or("");
            x[j] = cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                line,
                column: CSV_HEADER[j].to_string(),
                value: cell.to_string(),
            })?;
        }
        rows.push(x);
    }
    Ok(rows)
}

#[derive(Serialize)]
struct Prediction {
    nozzle_speed: f64,
    voltage: f64,
    flow_rate: f64,
    class: Class,
    score: f64,
    gate: &'static str,
}

fn gate(c: Class) -> &'static str {
    match c {
        Class::High => "GO",
        Class::Low => "NO-GO",
    }
}

fn cmd_predict(cli: &Cli, a: &PredictArgs) -> CliResult<()> {
    let scalars = [a.speed, a.voltage, a.flow];
    let batch = match (&a.input, scalars) {
        (Some(_), [None, None, None]) => true,
        (Some(_), _) => return Err(CliError::usage("use either --in or --speed/--voltage/--flow")),
        (None, [Some(_), Some(_), Some(_)]) => false,
        (None, _) => {
            return Err(CliError::usage(
                "predict needs --speed, --voltage and --flow, or --in <csv>",
            ))
        }
    };
    let model = Model::load(&a.model)?;
    let rows = match &a.input {
        Some(p) if batch => read_feature_rows(p)?,
        _ => vec![[a.speed.unwrap_or(0.0), a.voltage.unwrap_or(0.0), a.flow.unwrap_or(0.0)]],
    };
    let preds: Vec<Prediction> = rows
        .iter()
        .map(|x| {
            let (class, score) = model.predict(x);
            Prediction {
                nozzle_speed: x[0],
                voltage: x[1],
                flow_rate: x[2],
                class,
                score,
                gate: gate(class),
            }
        })
        .collect();
    let text = match cli.format {
        OutputFormat::Json => to_json(&preds)?,
        OutputFormat::Csv => {
            let mut s = format!("{},{},{},class,score,gate\n", CSV_HEADER[0], CSV_HEADER[1], CSV_HEADER[2]);
            for p in &preds {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    format::real(p.nozzle_speed),
                    format::real(p.voltage),
                    format::real(p.flow_rate),
                    p.class,
                    format::real(p.score),
                    p.gate
                ));
            }
            if !batch {
                s.push_str(preds[0].gate);
                s.push('\n');
            }
            s
        }
    };
    emit(cli.out.as_deref(), &text)
}

fn cmd_report(cli: &Cli, a: &ReportArgs) -> CliResult<()> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("report"));
    let source = match (&a.data, a.gen) {
        (Some(p), false) => report::Source::File(p.clone()),
        (None, true) => report::Source::Generated(GeneratorConfig {
            seed: cli.seed,
            threshold: a.threshold,
            ..Default::default()
        }),
        _ => return Err(CliError::usage("report needs --data <csv> or --gen")),
    };
    let opts = report::ReportOptions {
        seed: cli.seed,
        folds: a.folds,
        threshold: a.threshold,
    };
    let files = report::run_report(&source, &opts, &dir).map_err(|e| CliError {
        code: exit_code(&e.source),
        message: e.to_string(),
    })?;
    println!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}
