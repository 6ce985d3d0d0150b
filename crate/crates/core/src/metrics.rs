//! Binary classification metrics, ROC curves and AUC.
//!
//! Class 1 (high conductance) is the positive class throughout. Metrics whose
//! denominator vanishes are reported as `None` rather than zero.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::Class;
use crate::error::{Error, Result};
use crate::format;

/// 2×2 counts, rows = actual class, columns = predicted class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tp: usize,
}

/// Which denominators precision and recall use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionConvention {
    /// precision = tp/(tp+fp), recall = tp/(tp+fn)
    #[default]
    Standard,
    /// precision = tp/(tp+fn), recall = tp/(tp+fp)
    Swapped,
}

impl ConfusionMatrix {
    /// Builds a matrix from rows `[[tn, fp], [fn, tp]]` (actual × predicted).
    pub fn from_rows(rows: [[usize; 2]; 2]) -> ConfusionMatrix {
        ConfusionMatrix {
            tn: rows[0][0],
            fp: rows[0][1],
            fn_: rows[1][0],
            tp: rows[1][1],
        }
    }

    pub fn total(&self) -> usize {
        self.tn + self.fp + self.fn_ + self.tp
    }

    /// Actual-class totals `[tn+fp, fn+tp]`.
    pub fn row_sums(&self) -> [usize; 2] {
        [self.tn + self.fp, self.fn_ + self.tp]
    }

    /// Predicted-class totals `[tn+fn, fp+tp]`.
    pub fn col_sums(&self) -> [usize; 2] {
        [self.tn + self.fn_, self.fp + self.tp]
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    pub fn misclassification(&self) -> f64 {
        1.0 - self.accuracy()
    }

    pub fn precision(&self) -> Option<f64> {
        self.precision_with(PrecisionConvention::Standard)
    }

    pub fn recall(&self) -> Option<f64> {
        self.recall_with(PrecisionConvention::Standard)
    }

    pub fn precision_with(&self, conv: PrecisionConvention) -> Option<f64> {
        match conv {
            PrecisionConvention::Standard => ratio(self.tp, self.tp + self.fp),
            PrecisionConvention::Swapped => ratio(self.tp, self.tp + self.fn_),
        }
    }

    pub fn recall_with(&self, conv: PrecisionConvention) -> Option<f64> {
        match conv {
            PrecisionConvention::Standard => ratio(self.tp, self.tp + self.fn_),
            PrecisionConvention::Swapped => ratio(self.tp, self.tp + self.fp),
        }
    }

    pub fn f1(&self) -> Option<f64> {
        self.f1_with(PrecisionConvention::Standard)
    }

    /// Harmonic mean of precision and recall; symmetric in the two, so both
    /// conventions agree.
    pub fn f1_with(&self, conv: PrecisionConvention) -> Option<f64> {
        let p = self.precision_with(conv)?;
        let r = self.recall_with(conv)?;
        if p + r == 0.0 {
            return None;
        }
        Some(2.0 * p * r / (p + r))
    }

    /// Chance agreement `(row0·col0 + row1·col1) / total²`.
    pub fn random_accuracy(&self) -> f64 {
        let rows = self.row_sums();
        let cols = self.col_sums();
        let t = self.total() as f64;
        (rows[0] as f64 * cols[0] as f64 + rows[1] as f64 * cols[1] as f64) / (t * t)
    }

    /// Cohen's kappa; `None` when chance agreement is 1.
    pub fn kappa(&self) -> Option<f64> {
        let random = self.random_accuracy();
        if random >= 1.0 {
            return None;
        }
        Some((self.accuracy() - random) / (1.0 - random))
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Counts `(actual, predicted)` pairs.
pub fn confusion(actual: &[Class], predicted: &[Class]) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::invalid(format!(
            "{} actual labels but {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut cm = ConfusionMatrix::default();
    for (a, p) in actual.iter().zip(predicted) {
        match (a, p) {
            (Class::Low, Class::Low) => cm.tn += 1,
            (Class::Low, Class::High) => cm.fp += 1,
            (Class::High, Class::Low) => cm.fn_ += 1,
            (Class::High, Class::High) => cm.tp += 1,
        }
    }
    Ok(cm)
}

/// ROC points ordered from `(0, 0)` to `(1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` pairs.
    pub points: Vec<(f64, f64)>,
    /// Score cutoff of each point (`score >= cutoff` is predicted positive).
    /// The leading `(0, 0)` point has cutoff `+inf`.
    pub thresholds: Vec<f64>,
}

/// Threshold sweep over descending scores; tied scores move in one step.
pub fn roc_curve(scores: &[f64], actual: &[Class]) -> Result<RocCurve> {
    if scores.len() != actual.len() {
        return Err(Error::invalid("scores and labels differ in length"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    let pos = actual.iter().filter(|&&c| c == Class::High).count();
    let neg = actual.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            match actual[order[i]] {
                Class::High => tp += 1,
                Class::Low => fp += 1,
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        thresholds.push(s);
    }
    if points.last() != Some(&(1.0, 1.0)) {
        points.push((1.0, 1.0));
        thresholds.push(f64::NEG_INFINITY);
    }
    Ok(RocCurve { points, thresholds })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5)
        .sum()
}

impl RocCurve {
    pub fn auc(&self) -> f64 {
        auc(self)
    }

    /// Two-column `fpr,tpr` CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "fpr,tpr")?;
        for (fpr, tpr) in &self.points {
            writeln!(out, "{},{}", format::real(*fpr), format::real(*tpr))?;
        }
        Ok(())
    }
}

/// Metric bundle for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_name: String,
    pub accuracy: f64,
    pub misclassification: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub kappa: Option<f64>,
    pub auc: Option<f64>,
    pub cm: ConfusionMatrix,
}

/// Column order of [`EvalReport::csv_row`].
pub const REPORT_COLUMNS: [&str; 7] = [
    "model",
    "accuracy",
    "misclassification",
    "f1",
    "auc",
    "kappa",
    "recall",
];

impl EvalReport {
    /// Scores are optional; AUC is absent without them or when `actual` has one class.
    pub fn from_predictions(
        model_name: impl Into<String>,
        actual: &[Class],
        predicted: &[Class],
        scores: Option<&[f64]>,
        conv: PrecisionConvention,
    ) -> Result<EvalReport> {
        let cm = confusion(actual, predicted)?;
        let auc = match scores {
            Some(s) => match roc_curve(s, actual) {
                Ok(c) => Some(c.auc()),
                Err(Error::SingleClass) => None,
                Err(e) => return Err(e),
            },
            None => None,
        };
        Ok(EvalReport::from_confusion(model_name, cm, auc, conv))
    }

    pub fn from_confusion(
        model_name: impl Into<String>,
        cm: ConfusionMatrix,
        auc: Option<f64>,
        conv: PrecisionConvention,
    ) -> EvalReport {
        EvalReport {
            model_name: model_name.into(),
            accuracy: cm.accuracy(),
            misclassification: cm.misclassification(),
            precision: cm.precision_with(conv),
            recall: cm.recall_with(conv),
            f1: cm.f1_with(conv),
            kappa: cm.kappa(),
            auc,
            cm,
        }
    }

    pub fn csv_header() -> String {
        REPORT_COLUMNS.join(",")
    }

    pub fn csv_row(&self) -> String {
        [
            self.model_name.clone(),
            format::real(self.accuracy),
            format::real(self.misclassification),
            format::opt_real(self.f1),
            format::opt_real(self.auc),
            format::opt_real(self.kappa),
            format::opt_real(self.recall),
        ]
        .join(",")
    }
}
