//! Stratified k-fold cross-validation, bootstrap evaluation, and the two
//! hyperparameter sweeps (tree pruning cp, AdaBoost round count).

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Class, Dataset};
use crate::error::{Error, Result};
use crate::format;
use crate::metrics::{EvalReport, PrecisionConvention};
use crate::model::ModelSpec;
use crate::seed;

/// Redraws allowed per bootstrap round before giving up.
pub const MAX_BOOTSTRAP_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold index of every sample.
    pub assignments: Vec<usize>,
    pub seed: u64,
    pub stratified: bool,
}

impl FoldPlan {
    /// Sample indices (ascending) held out in `fold`.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles within each class (or globally) and deals samples round-robin.
///
/// The dealing position carries over from one class to the next, so overall
/// fold sizes differ by at most one as well as per-class sizes.
pub fn make_folds(ds: &Dataset, k: usize, seed: u64, stratified: bool) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be at least 2, got {k}")));
    }
    if ds.len() < k {
        return Err(Error::invalid(format!(
            "cannot make {k} folds from {} samples",
            ds.len()
        )));
    }
    let mut rng = seed::rng(seed);
    let groups: Vec<Vec<usize>> = if stratified {
        let labels = ds.labels()?;
        let mut by_class = vec![Vec::new(), Vec::new()];
        for (i, c) in labels.iter().enumerate() {
            by_class[c.index()].push(i);
        }
        for (c, idx) in by_class.iter().enumerate() {
            if !idx.is_empty() && idx.len() < k {
                return Err(Error::invalid(format!(
                    "class {c} has {} samples, fewer than k = {k}",
                    idx.len()
                )));
            }
        }
        by_class
    } else {
        vec![(0..ds.len()).collect()]
    };

    let mut assignments = vec![0; ds.len()];
    let mut pos = 0;
    for mut idx in groups {
        idx.shuffle(&mut rng);
        for i in idx {
            assignments[i] = pos % k;
            pos += 1;
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
        stratified,
    })
}

/// Mean and population standard deviation of one metric across folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    /// Folds on which the metric was defined.
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Summary {
            mean,
            sd: var.max(0.0).sqrt(),
            n: values.len(),
        })
    }

    fn of_defined(values: impl Iterator<Item = Option<f64>>) -> Option<Summary> {
        let v: Vec<f64> = values.flatten().collect();
        Summary::of(&v)
    }
}

/// Per-fold (or per-round) reports and their aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub model_name: String,
    pub folds: Vec<EvalReport>,
    /// Number of evaluated samples in each fold or round.
    pub eval_sizes: Vec<usize>,
    /// Out-of-fold class and score of every sample (cross-validation only).
    pub out_of_fold: Option<Vec<(Class, f64)>>,
    pub accuracy: Summary,
    pub misclassification: Summary,
    pub precision: Option<Summary>,
    pub recall: Option<Summary>,
    pub f1: Option<Summary>,
    pub kappa: Option<Summary>,
    pub auc: Option<Summary>,
}

impl CvResult {
    fn aggregate(
        model_name: String,
        folds: Vec<EvalReport>,
        eval_sizes: Vec<usize>,
        out_of_fold: Option<Vec<(Class, f64)>>,
    ) -> CvResult {
        let acc: Vec<f64> = folds.iter().map(|r| r.accuracy).collect();
        let mis: Vec<f64> = folds.iter().map(|r| r.misclassification).collect();
        CvResult {
            accuracy: Summary::of(&acc).expect("at least one fold"),
            misclassification: Summary::of(&mis).expect("at least one fold"),
            precision: Summary::of_defined(folds.iter().map(|r| r.precision)),
            recall: Summary::of_defined(folds.iter().map(|r| r.recall)),
            f1: Summary::of_defined(folds.iter().map(|r| r.f1)),
            kappa: Summary::of_defined(folds.iter().map(|r| r.kappa)),
            auc: Summary::of_defined(folds.iter().map(|r| r.auc)),
            model_name,
            folds,
            eval_sizes,
            out_of_fold,
        }
    }

    /// One report over all out-of-fold predictions pooled together.
    pub fn pooled_report(&self, ds: &Dataset, conv: PrecisionConvention) -> Result<EvalReport> {
        let oof = self
            .out_of_fold
            .as_ref()
            .ok_or_else(|| Error::Undefined("bootstrap results have no out-of-fold predictions".into()))?;
        let actual = ds.labels()?;
        let predicted: Vec<Class> = oof.iter().map(|p| p.0).collect();
        let scores: Vec<f64> = oof.iter().map(|p| p.1).collect();
        EvalReport::from_predictions(&self.model_name, &actual, &predicted, Some(&scores), conv)
    }
}

fn evaluate(
    spec: &ModelSpec,
    ds: &Dataset,
    train: &[usize],
    test: &[usize],
) -> Result<(EvalReport, Vec<(Class, f64)>)> {
    let model = spec.fit(&ds.subset(train))?;
    let held_out = ds.subset(test);
    let preds = model.predict_all(&held_out);
    let actual = held_out.labels()?;
    let predicted: Vec<Class> = preds.iter().map(|p| p.0).collect();
    let scores: Vec<f64> = preds.iter().map(|p| p.1).collect();
    let report = EvalReport::from_predictions(
        spec.name(),
        &actual,
        &predicted,
        Some(&scores),
        PrecisionConvention::Standard,
    )?;
    Ok((report, preds))
}

/// Stratified k-fold cross-validation.
///
/// Fold `f` is fitted with the spec reseeded from `(seed, f)`, so folds run
/// in parallel with schedule-independent results.
pub fn cross_validate(spec: &ModelSpec, ds: &Dataset, k: usize, seed: u64) -> Result<CvResult> {
    let plan = make_folds(ds, k, seed, true)?;
    cross_validate_with(spec, ds, &plan)
}

/// Cross-validation over a given fold plan.
pub fn cross_validate_with(spec: &ModelSpec, ds: &Dataset, plan: &FoldPlan) -> Result<CvResult> {
    if plan.assignments.len() != ds.len() {
        return Err(Error::invalid("fold plan does not match the dataset size"));
    }
    let per_fold: Vec<Result<(Vec<usize>, EvalReport, Vec<(Class, f64)>)>> = (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let test = plan.test_indices(f);
            let train = plan.train_indices(f);
            let fold_spec = spec.reseeded(plan.seed, f as u64);
            evaluate(&fold_spec, ds, &train, &test)
                .map(|(r, p)| (test, r, p))
                .map_err(|e| Error::Fold {
                    fold: f,
                    source: Box::new(e),
                })
        })
        .collect();

    let mut folds = Vec::with_capacity(plan.k);
    let mut sizes = Vec::with_capacity(plan.k);
    let mut oof = vec![(Class::Low, 0.0); ds.len()];
    for r in per_fold {
        let (test, report, preds) = r?;
        sizes.push(test.len());
        for (i, p) in test.into_iter().zip(preds) {
            oof[i] = p;
        }
        folds.push(report);
    }
    Ok(CvResult::aggregate(spec.name(), folds, sizes, Some(oof)))
}

/// Draws a resample of size n and its out-of-resample complement, redrawing
/// when either side is unusable.
fn draw_round(labels: &[Class], seed: u64, round: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = labels.len();
    let mut rng = seed::stream_rng(seed, round);
    for _ in 0..MAX_BOOTSTRAP_RETRIES {
        let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let mut seen = vec![false; n];
        let mut counts = [0usize; 2];
        for &i in &idx {
            seen[i] = true;
            counts[labels[i].index()] += 1;
        }
        let oob: Vec<usize> = (0..n).filter(|&i| !seen[i]).collect();
        if !oob.is_empty() && counts[0] > 0 && counts[1] > 0 {
            return Ok((idx, oob));
        }
    }
    Err(Error::Numeric(format!(
        "bootstrap round {round}: no usable resample after {MAX_BOOTSTRAP_RETRIES} draws"
    )))
}

/// `rounds` bootstrap rounds, each evaluated on its out-of-resample samples.
pub fn bootstrap_validate(spec: &ModelSpec, ds: &Dataset, rounds: usize, seed: u64) -> Result<CvResult> {
    if rounds == 0 {
        return Err(Error::invalid("bootstrap needs at least one round"));
    }
    let labels = ds.labels()?;
    let per_round: Vec<Result<(usize, EvalReport)>> = (0..rounds)
        .into_par_iter()
        .map(|b| {
            let wrap = |e| Error::Fold {
                fold: b,
                source: Box::new(e),
            };
            let (train, test) = draw_round(&labels, seed, b as u64).map_err(wrap)?;
            let round_spec = spec.reseeded(seed, b as u64);
            let (report, _) = evaluate(&round_spec, ds, &train, &test).map_err(wrap)?;
            Ok((test.len(), report))
        })
        .collect();
    let mut reports = Vec::with_capacity(rounds);
    let mut sizes = Vec::with_capacity(rounds);
    for r in per_round {
        let (size, report) = r?;
        sizes.push(size);
        reports.push(report);
    }
    Ok(CvResult::aggregate(spec.name(), reports, sizes, None))
}

/// Mean CV accuracy and its sd for each value of a swept parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub values: Vec<f64>,
    pub mean_accuracy: Vec<f64>,
    pub sd: Vec<f64>,
}

impl SweepResult {
    pub const CSV_HEADER: &'static str = "param,mean_accuracy,sd";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for i in 0..self.values.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                format::real(self.values[i]),
                format::real(self.mean_accuracy[i]),
                format::real(self.sd[i])
            ));
        }
        out
    }

    fn collect(values: Vec<f64>, results: Vec<Result<CvResult>>) -> Result<SweepResult> {
        let mut mean_accuracy = Vec::with_capacity(values.len());
        let mut sd = Vec::with_capacity(values.len());
        for r in results {
            let r = r?;
            mean_accuracy.push(r.accuracy.mean);
            sd.push(r.accuracy.sd);
        }
        Ok(SweepResult {
            values,
            mean_accuracy,
            sd,
        })
    }
}

/// CV accuracy of the default tree pruned at each cp. All points share one fold plan.
pub fn sweep_cp(ds: &Dataset, cp_values: &[f64], k: usize, seed: u64) -> Result<SweepResult> {
    if cp_values.is_empty() {
        return Err(Error::invalid("cp list is empty"));
    }
    if let Some(cp) = cp_values.iter().find(|cp| !(0.0..=1.0).contains(*cp)) {
        return Err(Error::invalid(format!("cp must lie in [0, 1], got {cp}")));
    }
    let plan = make_folds(ds, k, seed, true)?;
    let results = cp_values
        .par_iter()
        .map(|&cp| cross_validate_with(&ModelSpec::pruned_tree(cp), ds, &plan))
        .collect();
    SweepResult::collect(cp_values.to_vec(), results)
}

/// CV accuracy of AdaBoost with each number of stumps. All points share one fold plan.
pub fn sweep_ntrees(ds: &Dataset, counts: &[usize], k: usize, seed: u64) -> Result<SweepResult> {
    if counts.is_empty() {
        return Err(Error::invalid("tree count list is empty"));
    }
    if counts.contains(&0) {
        return Err(Error::invalid("tree counts must be at least 1"));
    }
    let plan = make_folds(ds, k, seed, true)?;
    let results = counts
        .par_iter()
        .map(|&n| cross_validate_with(&ModelSpec::adaboost(n), ds, &plan))
        .collect();
    SweepResult::collect(counts.iter().map(|&n| n as f64).collect(), results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::PrintSample;
    use crate::synthgen::{generate, GeneratorConfig};

    fn marginals(n0: usize, n1: usize) -> Dataset {
        let mut s = Vec::new();
        for i in 0..n0 + n1 {
            let c = if i < n0 { Class::Low } else { Class::High };
            s.push(PrintSample::new(300.0 + i as f64, 2.0, 10.0).with_label(c));
        }
        Dataset::new(s)
    }

    #[test]
    fn fold_sizes_for_239() {
        let ds = marginals(154, 85);
        let plan = make_folds(&ds, 10, 42, true).unwrap();
        let mut sizes = plan.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, [vec![23], vec![24; 9]].concat());
        for f in 0..10 {
            let test = plan.test_indices(f);
            let c0 = test.iter().filter(|&&i| i < 154).count();
            let c1 = test.len() - c0;
            assert!((15..=16).contains(&c0), "fold {f}: {c0}");
            assert!((8..=9).contains(&c1), "fold {f}: {c1}");
        }
        assert_eq!(plan, make_folds(&ds, 10, 42, true).unwrap());
        assert_ne!(plan, make_folds(&ds, 10, 43, true).unwrap());
        let flat = make_folds(&ds, 10, 42, false).unwrap();
        assert!(flat.fold_sizes().iter().all(|&s| s == 23 || s == 24));
    }

    #[test]
    fn fold_errors() {
        let ds = marginals(20, 3);
        assert!(make_folds(&ds, 5, 1, true).is_err());
        assert!(make_folds(&ds, 5, 1, false).is_ok());
        assert!(make_folds(&ds, 1, 1, false).is_err());
    }

    #[test]
    fn constant_model_cv_is_majority_fraction() {
        let ds = marginals(154, 85);
        let r = cross_validate(&ModelSpec::Constant { class: Class::Low }, &ds, 10, 42).unwrap();
        let plan = make_folds(&ds, 10, 42, true).unwrap();
        let expect: Vec<f64> = (0..10)
            .map(|f| {
                let t = plan.test_indices(f);
                t.iter().filter(|&&i| i < 154).count() as f64 / t.len() as f64
            })
            .collect();
        for (rep, e) in r.folds.iter().zip(&expect) {
            assert!((rep.accuracy - e).abs() < 1e-15);
            assert_eq!(rep.kappa, Some(0.0));
        }
        let pooled = r.pooled_report(&ds, PrecisionConvention::Standard).unwrap();
        assert!((pooled.accuracy - 154.0 / 239.0).abs() < 1e-15);
        assert!(r.accuracy.sd > 0.0);
    }

    #[test]
    fn fold_errors_carry_index() {
        let ds = marginals(30, 30);
        let spec = ModelSpec::knn(100);
        let err = cross_validate(&spec, &ds, 3, 1).unwrap_err();
        assert!(matches!(err, Error::Fold { fold: 0, .. }), "{err}");
        assert!(matches!(err.root_cause(), Error::InvalidParameter(_)));
    }

    #[test]
    fn out_of_fold_predictions_match_fold_reports() {
        let ds = generate(&GeneratorConfig { n: 80, ..Default::default() }).unwrap();
        let r = cross_validate(&ModelSpec::tree(), &ds, 5, 3).unwrap();
        let plan = make_folds(&ds, 5, 3, true).unwrap();
        let oof = r.out_of_fold.as_ref().unwrap();
        let labels = ds.labels().unwrap();
        for f in 0..5 {
            let t = plan.test_indices(f);
            let correct = t.iter().filter(|&&i| oof[i].0 == labels[i]).count();
            assert!((r.folds[f].accuracy - correct as f64 / t.len() as f64).abs() < 1e-15);
        }
        assert_eq!(r.eval_sizes.iter().sum::<usize>(), 80);
    }

    #[test]
    fn bootstrap_oob_fraction_and_determinism() {
        let ds = generate(&GeneratorConfig::default()).unwrap();
        let r = bootstrap_validate(&ModelSpec::tree(), &ds, 1, 42).unwrap();
        let frac = r.eval_sizes[0] as f64 / ds.len() as f64;
        assert!((frac - (-1.0f64).exp()).abs() <= 0.07, "{frac}");
        assert_eq!(r, bootstrap_validate(&ModelSpec::tree(), &ds, 1, 42).unwrap());
    }

    #[test]
    fn bootstrap_degenerate_pair_is_deterministic() {
        let ds = marginals(1, 1);
        let a = bootstrap_validate(&ModelSpec::Constant { class: Class::Low }, &ds, 3, 9);
        let b = bootstrap_validate(&ModelSpec::Constant { class: Class::Low }, &ds, 3, 9);
        // a 2-sample resample is never both two-class and leaving a sample out
        assert!(a.is_err() && b.is_err());
        assert_eq!(a.unwrap_err().to_string(), b.unwrap_err().to_string());
        assert!(bootstrap_validate(&ModelSpec::tree(), &ds, 0, 9).is_err());
    }

    #[test]
    fn cp_sweep_extremes() {
        let ds = generate(&GeneratorConfig { n: 120, ..Default::default() }).unwrap();
        let s = sweep_cp(&ds, &[0.0, 0.05, 1.0], 5, 7).unwrap();
        let plain = cross_validate(&ModelSpec::tree(), &ds, 5, 7).unwrap();
        assert_eq!(s.mean_accuracy[0], plain.accuracy.mean);
        assert_eq!(s.sd[0], plain.accuracy.sd);
        let root_only = cross_validate(&ModelSpec::Constant { class: Class::Low }, &ds, 5, 7).unwrap();
        let counts = ds.class_counts();
        if counts[0] > counts[1] {
            assert!((s.mean_accuracy[2] - root_only.accuracy.mean).abs() < 1e-12);
        }
        let max = s.mean_accuracy.iter().cloned().fold(0.0, f64::max);
        assert!(s.mean_accuracy[2] <= max);
        assert!(sweep_cp(&ds, &[1.5], 5, 7).is_err());
        assert!(sweep_cp(&ds, &[], 5, 7).is_err());
    }

    #[test]
    fn ntrees_sweep_on_separable_data() {
        let s: Vec<PrintSample> = (0..40)
            .map(|i| {
                let speed = if i < 20 { 300.0 + 5.0 * i as f64 } else { 600.0 + 5.0 * i as f64 };
                let c = if speed < 500.0 { Class::High } else { Class::Low };
                PrintSample::new(speed, (i % 4) as f64 + 1.0, 9.0).with_label(c)
            })
            .collect();
        let ds = Dataset::new(s);
        let r = sweep_ntrees(&ds, &[1], 5, 3).unwrap();
        assert_eq!(r.mean_accuracy, vec![1.0]);
        assert_eq!(r.to_csv(), "param,mean_accuracy,sd\n1,1,0\n");
        assert_eq!(r, sweep_ntrees(&ds, &[1], 5, 3).unwrap());
        assert!(sweep_ntrees(&ds, &[0], 5, 3).is_err());
    }
}
