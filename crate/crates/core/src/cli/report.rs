//! One-shot comparison of every model family, written as a directory of
//! CSV, SVG, text and JSON artifacts.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{sweep_chart, write_atomic, Chart, SweepKind};
use crate::cart::DecisionTree;
use crate::dataset::{Dataset, FEATURE_NAMES};
use crate::ensembles::feature_importance;
use crate::error::Error;
use crate::format;
use crate::metrics::{roc_curve, EvalReport, PrecisionConvention};
use crate::model::{Model, ModelSpec, MODEL_FORMAT_VERSION};
use crate::synthgen::{generate, GeneratorConfig};
use crate::validation::{cross_validate, sweep_cp, sweep_ntrees, CvResult, Summary};

pub const CP_GRID: [f64; 5] = [0.0, 0.01, 0.05, 0.1, 0.2];
pub const TREE_GRID: [usize; 5] = [1, 5, 10, 15, 20];
/// Pruning levels rendered next to the default tree.
pub const RENDERED_CPS: [f64; 2] = [0.05, 0.2];

pub enum Source {
    File(PathBuf),
    Generated(GeneratorConfig),
}

#[derive(Debug, Clone, Copy)]
pub struct ReportOptions {
    pub seed: u64,
    pub folds: usize,
    pub threshold: f64,
}

/// A failure tagged with the pipeline stage that produced it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub source: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "report stage `{}`: {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {}

trait Stage<T> {
    fn stage(self, name: &'static str) -> Result<T, StageError>;
}

impl<T> Stage<T> for crate::Result<T> {
    fn stage(self, name: &'static str) -> Result<T, StageError> {
        self.map_err(|source| StageError { stage: name, source })
    }
}

/// The compared models: file tag and spec.
pub fn comparison_specs(seed: u64) -> Vec<(&'static str, ModelSpec)> {
    vec![
        ("tree", ModelSpec::tree()),
        ("forest", ModelSpec::forest(100, seed)),
        ("logreg", ModelSpec::logreg()),
        ("knn3", ModelSpec::knn(3)),
        ("knn10", ModelSpec::knn(10)),
        ("adaboost", ModelSpec::adaboost(10)),
    ]
}

const ROC_TAGS: [&str; 4] = ["forest", "logreg", "knn3", "knn10"];

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    model_format_version: u32,
    seed: u64,
    folds: usize,
    threshold: f64,
    data: String,
    n_samples: usize,
    class_counts: [usize; 2],
    files: &'a [String],
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, text: &str) -> crate::Result<()> {
        write_atomic(&self.dir.join(name), text.as_bytes())?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn summary_cells(s: Option<Summary>) -> String {
    match s {
        Some(s) => format!("{},{}", format::real(s.mean), format::real(s.sd)),
        None => ",".into(),
    }
}

/// Runs the pipeline and returns the written file names, sorted.
pub fn run_report(source: &Source, opts: &ReportOptions, dir: &Path) -> Result<Vec<String>, StageError> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)).stage("output")?;
    let mut w = Writer { dir, files: Vec::new() };

    let (ds, data_name) = match source {
        Source::File(p) => {
            let ds = super::load_labeled(p, opts.threshold).stage("data")?;
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            (ds, name)
        }
        Source::Generated(cfg) => {
            let ds = generate(cfg).stage("data")?;
            w.put("dataset.csv", &ds.to_csv_string()).stage("data")?;
            let cfg_json = serde_json::to_string_pretty(cfg).map_err(Error::from).stage("data")? + "\n";
            w.put("dataset.config.json", &cfg_json).stage("data")?;
            (ds, "generated".to_string())
        }
    };

    let cv = cross_validation(&ds, opts, &mut w)?;
    roc_exports(&ds, &cv, &mut w)?;
    importance(&ds, opts, &mut w)?;
    tree_renders(&ds, &mut w)?;

    let cp = sweep_cp(&ds, &CP_GRID, opts.folds, opts.seed).stage("sweep_cp")?;
    w.put("sweep_cp.csv", &cp.to_csv()).stage("sweep_cp")?;
    w.put("sweep_cp.svg", &sweep_chart(SweepKind::Cp, &cp)).stage("sweep_cp")?;
    let trees = sweep_ntrees(&ds, &TREE_GRID, opts.folds, opts.seed).stage("sweep_trees")?;
    w.put("sweep_trees.csv", &trees.to_csv()).stage("sweep_trees")?;
    w.put("sweep_trees.svg", &sweep_chart(SweepKind::Trees, &trees)).stage("sweep_trees")?;

    w.files.push("manifest.json".into());
    w.files.sort();
    let manifest = Manifest {
        tool: "ejet",
        version: env!("CARGO_PKG_VERSION"),
        model_format_version: MODEL_FORMAT_VERSION,
        seed: opts.seed,
        folds: opts.folds,
        threshold: opts.threshold,
        data: data_name,
        n_samples: ds.len(),
        class_counts: ds.class_counts(),
        files: &w.files,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(Error::from).stage("manifest")? + "\n";
    write_atomic(&dir.join("manifest.json"), text.as_bytes()).stage("manifest")?;
    Ok(w.files)
}

/// Cross-validates every compared model; the comparison table pools out-of-fold predictions.
fn cross_validation(ds: &Dataset, opts: &ReportOptions, w: &mut Writer) -> Result<Vec<(&'static str, CvResult)>, StageError> {
    let mut results = Vec::new();
    let mut comparison = EvalReport::csv_header() + "\n";
    let mut summary = String::from("model,mean_accuracy,sd_accuracy,mean_auc,sd_auc,mean_kappa,sd_kappa\n");
    let mut confusion = String::from("model,tn,fp,fn,tp\n");
    for (tag, spec) in comparison_specs(opts.seed) {
        let r = cross_validate(&spec, ds, opts.folds, opts.seed).stage("cross_validation")?;
        let pooled = r.pooled_report(ds, PrecisionConvention::Standard).stage("cross_validation")?;
        comparison.push_str(&pooled.csv_row());
        comparison.push('\n');
        summary.push_str(&format!(
            "{},{},{},{}\n",
            pooled.model_name,
            summary_cells(Some(r.accuracy)),
            summary_cells(r.auc),
            summary_cells(r.kappa)
        ));
        let cm = pooled.cm;
        confusion.push_str(&format!("{},{},{},{},{}\n", pooled.model_name, cm.tn, cm.fp, cm.fn_, cm.tp));
        results.push((tag, r));
    }
    w.put("comparison.csv", &comparison).stage("cross_validation")?;
    w.put("cv_summary.csv", &summary).stage("cross_validation")?;
    w.put("confusion.csv", &confusion).stage("cross_validation")?;
    Ok(results)
}

fn roc_exports(ds: &Dataset, cv: &[(&'static str, CvResult)], w: &mut Writer) -> Result<(), StageError> {
    let actual = ds.labels().stage("roc")?;
    for tag in ROC_TAGS {
        let (_, r) = cv.iter().find(|(t, _)| *t == tag).expect("roc tags are compared models");
        let scores: Vec<f64> = r
            .out_of_fold
            .as_ref()
            .expect("cross-validation keeps out-of-fold scores")
            .iter()
            .map(|p| p.1)
            .collect();
        let curve = roc_curve(&scores, &actual).stage("roc")?;
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).map_err(|e| Error::io(w.dir, e)).stage("roc")?;
        w.put(&format!("roc_{tag}.csv"), &String::from_utf8_lossy(&buf)).stage("roc")?;
        let title = format!("ROC {} (AUC {})", r.model_name, format::real(curve.auc()));
        let svg = Chart {
            title: &title,
            x_label: "false positive rate",
            y_label: "true positive rate",
            x_range: (0.0, 1.0),
            y_range: (0.0, 1.0),
            diagonal: true,
        }
        .render(&curve.points);
        w.put(&format!("roc_{tag}.svg"), &svg).stage("roc")?;
    }
    Ok(())
}

fn importance(ds: &Dataset, opts: &ReportOptions, w: &mut Writer) -> Result<(), StageError> {
    let forest = match ModelSpec::forest(100, opts.seed).fit(ds).stage("importance")? {
        Model::Forest(f) => f,
        _ => unreachable!("forest spec fits a forest"),
    };
    let imp = feature_importance(&forest).stage("importance")?;
    let mut s = String::from("feature,importance\n");
    for (name, v) in FEATURE_NAMES.iter().zip(imp) {
        s.push_str(&format!("{name},{}\n", format::real(v)));
    }
    w.put("importance.csv", &s).stage("importance")
}

fn tree_renders(ds: &Dataset, w: &mut Writer) -> Result<(), StageError> {
    let tree = DecisionTree::fit(ds, Default::default()).stage("trees")?;
    w.put("tree_default.txt", &tree.render()).stage("trees")?;
    for cp in RENDERED_CPS {
        let pruned = tree.pruned(cp).stage("trees")?;
        w.put(&format!("tree_cp{cp}.txt"), &pruned.render()).stage("trees")?;
    }
    Ok(())
}
