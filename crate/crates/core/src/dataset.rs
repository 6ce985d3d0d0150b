//! Print-run records: CSV loading, resistance labeling, feature scaling and
//! stratified train/test splitting.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format;
use crate::seed;

/// Number of process features per sample.
pub const N_FEATURES: usize = 3;

/// Feature names in column order.
pub const FEATURE_NAMES: [&str; N_FEATURES] = ["nozzle_speed", "voltage", "flow_rate"];

/// CSV header, in the order written by [`Dataset::write_csv`].
pub const CSV_HEADER: [&str; 5] = [
    "nozzle_speed_mm_min",
    "voltage_kv",
    "flow_rate_ul_min",
    "resistance_ohm_sqr",
    "class",
];

/// Resistance cut (Ω/sqr) separating high- from low-conductance prints.
pub const DEFAULT_LABEL_THRESHOLD: f64 = 100.0;

/// A process feature triple `(nozzle_speed, voltage, flow_rate)`.
pub type Features = [f64; N_FEATURES];

/// Conductance class of a printed electrode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Class {
    /// Low conductance, treated as defective.
    Low = 0,
    /// High conductance.
    High = 1,
}

impl Class {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Class> {
        match i {
            0 => Some(Class::Low),
            1 => Some(Class::High),
            _ => None,
        }
    }

    /// Majority of two counts; a tie goes to [`Class::Low`].
    pub fn majority(counts: [usize; 2]) -> Class {
        if counts[1] > counts[0] {
            Class::High
        } else {
            Class::Low
        }
    }

    /// `-1.0` for `Low`, `+1.0` for `High`.
    pub fn sign(self) -> f64 {
        match self {
            Class::Low => -1.0,
            Class::High => 1.0,
        }
    }
}

impl TryFrom<u8> for Class {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        Class::from_index(v as usize).ok_or_else(|| format!("class must be 0 or 1, got {v}"))
    }
}

impl From<Class> for u8 {
    fn from(c: Class) -> u8 {
        c as u8
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// One e-jet print run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrintSample {
    /// mm/min
    pub nozzle_speed: f64,
    /// kV
    pub voltage: f64,
    /// µl/min
    pub flow_rate: f64,
    /// Measured sheet resistance, Ω/sqr.
    pub resistance: Option<f64>,
    pub label: Option<Class>,
}

impl PrintSample {
    pub fn new(nozzle_speed: f64, voltage: f64, flow_rate: f64) -> Self {
        PrintSample {
            nozzle_speed,
            voltage,
            flow_rate,
            resistance: None,
            label: None,
        }
    }

    pub fn with_label(mut self, label: Class) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_resistance(mut self, resistance: f64) -> Self {
        self.resistance = Some(resistance);
        self
    }

    pub fn features(&self) -> Features {
        [self.nozzle_speed, self.voltage, self.flow_rate]
    }

    fn set_features(&mut self, x: Features) {
        self.nozzle_speed = x[0];
        self.voltage = x[1];
        self.flow_rate = x[2];
    }
}

/// An ordered collection of print samples.
///
/// Sample order is significant: every resampling routine refers to samples
/// by their index in this order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<PrintSample>,
}

impl Dataset {
    pub fn new(samples: Vec<PrintSample>) -> Self {
        Dataset { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_names(&self) -> [&'static str; N_FEATURES] {
        FEATURE_NAMES
    }

    /// Feature rows and labels, failing on an empty or partially labeled set.
    pub fn labeled(&self) -> Result<(Vec<Features>, Vec<Class>)> {
        if self.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut xs = Vec::with_capacity(self.len());
        let mut ys = Vec::with_capacity(self.len());
        for (i, s) in self.samples.iter().enumerate() {
            let label = s.label.ok_or(Error::Unlabeled { index: i })?;
            xs.push(s.features());
            ys.push(label);
        }
        Ok((xs, ys))
    }

    pub fn features(&self) -> Vec<Features> {
        self.samples.iter().map(PrintSample::features).collect()
    }

    /// Labels of a fully labeled dataset.
    pub fn labels(&self) -> Result<Vec<Class>> {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, s)| s.label.ok_or(Error::Unlabeled { index: i }))
            .collect()
    }

    /// `[n_low, n_high]` over labeled samples.
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for s in &self.samples {
            if let Some(c) = s.label {
                counts[c.index()] += 1;
            }
        }
        counts
    }

    /// Samples at `indices`, in the given order (duplicates allowed).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset::new(indices.iter().map(|&i| self.samples[i].clone()).collect())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
            .clone();
        let mut column = [usize::MAX; 5];
        for (pos, name) in headers.iter().enumerate() {
            let slot = CSV_HEADER
                .iter()
                .position(|h| *h == name)
                .ok_or_else(|| Error::Schema(format!("unknown column `{name}`")))?;
            if column[slot] != usize::MAX {
                return Err(Error::Schema(format!("duplicate column `{name}`")));
            }
            column[slot] = pos;
        }
        if let Some(slot) = column.iter().position(|&c| c == usize::MAX) {
            return Err(Error::Schema(format!("missing column `{}`", CSV_HEADER[slot])));
        }

        let mut samples = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            // header is line 1
            let line = row + 2;
            let record = record.map_err(|e| Error::Row {
                line,
                message: e.to_string(),
            })?;
            let cell = |slot: usize| record.get(column[slot]).unwrap_or("");
            let number = |slot: usize| -> Result<Option<f64>> {
                let raw = cell(slot);
                if raw.is_empty() {
                    return Ok(None);
                }
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(Some)
                    .ok_or_else(|| Error::Parse {
                        line,
                        column: CSV_HEADER[slot].to_string(),
                        value: raw.to_string(),
                    })
            };
            let required = |slot: usize| -> Result<f64> {
                number(slot)?.ok_or_else(|| Error::Row {
                    line,
                    message: format!("missing value for `{}`", CSV_HEADER[slot]),
                })
            };

            let nozzle_speed = required(0)?;
            let voltage = required(1)?;
            let flow_rate = required(2)?;
            let resistance = number(3)?;
            let label = match cell(4) {
                "" => None,
                "0" => Some(Class::Low),
                "1" => Some(Class::High),
                other => {
                    return Err(Error::Parse {
                        line,
                        column: CSV_HEADER[4].to_string(),
                        value: other.to_string(),
                    })
                }
            };

            let bad = |message: &str| Error::Row {
                line,
                message: message.to_string(),
            };
            if nozzle_speed <= 0.0 {
                return Err(bad("nozzle speed must be positive"));
            }
            if voltage < 0.0 {
                return Err(bad("voltage must be non-negative"));
            }
            if flow_rate <= 0.0 {
                return Err(bad("flow rate must be positive"));
            }
            if matches!(resistance, Some(r) if r <= 0.0) {
                return Err(bad("resistance must be positive"));
            }
            if resistance.is_none() && label.is_none() {
                return Err(bad("row has neither resistance nor class"));
            }
            samples.push(PrintSample {
                nozzle_speed,
                voltage,
                flow_rate,
                resistance,
                label,
            });
        }
        Ok(Dataset::new(samples))
    }

    /// Writes the dataset with reals at six significant digits and LF line endings.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", CSV_HEADER.join(","))?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{}",
                format::real(s.nozzle_speed),
                format::real(s.voltage),
                format::real(s.flow_rate),
                format::opt_real(s.resistance),
                s.label.map(|c| c.to_string()).unwrap_or_default()
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Reads a dataset from a CSV file.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Dataset::read_csv(std::io::BufReader::new(file))
}

/// Class from a resistance reading: at or above `threshold` is low conductance.
pub fn class_for_resistance(resistance: f64, threshold: f64) -> Class {
    if resistance >= threshold {
        Class::Low
    } else {
        Class::High
    }
}

/// Labels every unlabeled sample from its resistance. Existing labels are kept.
pub fn label_by_threshold(ds: &Dataset, threshold: f64) -> Result<Dataset> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::invalid(format!(
            "label threshold must be positive, got {threshold}"
        )));
    }
    let mut out = ds.clone();
    for (i, s) in out.samples.iter_mut().enumerate() {
        if s.label.is_none() {
            let r = s.resistance.ok_or(Error::Unlabeled { index: i })?;
            s.label = Some(class_for_resistance(r, threshold));
        }
    }
    Ok(out)
}

/// Per-feature centering and scaling fitted on a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Features,
    /// Population standard deviation.
    pub stddev: Features,
    pub constant: [bool; N_FEATURES],
}

impl ScalerParams {
    pub fn fit(rows: &[Features]) -> Result<ScalerParams> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = rows.len() as f64;
        let mut mean = [0.0; N_FEATURES];
        let mut stddev = [0.0; N_FEATURES];
        let mut constant = [false; N_FEATURES];
        for j in 0..N_FEATURES {
            mean[j] = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
            stddev[j] = var.sqrt();
            constant[j] = stddev[j] == 0.0;
        }
        Ok(ScalerParams {
            mean,
            stddev,
            constant,
        })
    }

    pub fn transform(&self, x: &Features) -> Features {
        let mut z = [0.0; N_FEATURES];
        for j in 0..N_FEATURES {
            z[j] = if self.constant[j] {
                0.0
            } else {
                (x[j] - self.mean[j]) / self.stddev[j]
            };
        }
        z
    }

    /// Maps standardized values back to raw units. Constant features return their mean.
    pub fn inverse(&self, z: &Features) -> Features {
        let mut x = [0.0; N_FEATURES];
        for j in 0..N_FEATURES {
            x[j] = z[j] * self.stddev[j] + self.mean[j];
        }
        x
    }
}

pub fn standardize_fit(ds: &Dataset) -> Result<ScalerParams> {
    ScalerParams::fit(&ds.features())
}

/// Replaces every sample's features with their standardized values.
pub fn standardize_apply(ds: &Dataset, sp: &ScalerParams) -> Dataset {
    let mut out = ds.clone();
    for s in &mut out.samples {
        let z = sp.transform(&s.features());
        s.set_features(z);
    }
    out
}

/// Seeded stratified holdout split, returning `(train, test)` in dataset order.
///
/// Each class contributes `round(count * test_fraction)` test samples; when
/// the per-class roundings overshoot or undershoot `round(n * test_fraction)`
/// one class is adjusted by a single sample.
pub fn stratified_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = stratified_split_indices(ds, test_fraction, seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Index form of [`stratified_split`].
pub fn stratified_split_indices(
    ds: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let labels = ds.labels()?;
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, c) in labels.iter().enumerate() {
        by_class[c.index()].push(i);
    }
    if by_class.iter().any(Vec::is_empty) {
        return Err(Error::SingleClass);
    }

    let exact: Vec<f64> = by_class
        .iter()
        .map(|idx| idx.len() as f64 * test_fraction)
        .collect();
    let mut take: Vec<usize> = exact.iter().map(|e| e.round() as usize).collect();
    let target = (ds.len() as f64 * test_fraction).round() as usize;
    let total: usize = take.iter().sum();
    if total > target {
        // drop from the class whose rounding went furthest up
        let c = (0..2)
            .filter(|&c| take[c] > 0)
            .max_by(|&a, &b| {
                (take[a] as f64 - exact[a])
                    .partial_cmp(&(take[b] as f64 - exact[b]))
                    .unwrap()
                    .then(b.cmp(&a))
            });
        if let Some(c) = c {
            take[c] -= 1;
        }
    } else if total < target {
        let c = (0..2)
            .filter(|&c| take[c] < by_class[c].len())
            .min_by(|&a, &b| {
                (take[a] as f64 - exact[a])
                    .partial_cmp(&(take[b] as f64 - exact[b]))
                    .unwrap()
                    .then(a.cmp(&b))
            });
        if let Some(c) = c {
            take[c] += 1;
        }
    }

    let mut rng = seed::rng(seed);
    let mut test = Vec::with_capacity(target);
    let mut train = Vec::with_capacity(ds.len() - target);
    for (c, idx) in by_class.iter().enumerate() {
        let mut shuffled = idx.clone();
        shuffled.shuffle(&mut rng);
        test.extend_from_slice(&shuffled[..take[c]]);
        train.extend_from_slice(&shuffled[take[c]..]);
    }
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "nozzle_speed_mm_min,voltage_kv,flow_rate_ul_min,resistance_ohm_sqr,class\n";

    fn load(body: &str) -> Result<Dataset> {
        Dataset::read_csv(format!("{HEADER}{body}").as_bytes())
    }

    #[test]
    fn loads_sample_table_rows() {
        let ds = load("300,0.0,16,,1\n300,0.5,15,,1\n300,0.0,15,,1\n300,1.0,16,,1\n400,1.0,15,,1\n").unwrap();
        assert_eq!(ds.len(), 5);
        assert_eq!(ds.samples[0].features(), [300.0, 0.0, 16.0]);
        assert!(ds.samples.iter().all(|s| s.label == Some(Class::High)));
        assert!(ds.samples.iter().all(|s| s.resistance.is_none()));
    }

    #[test]
    fn header_only_is_empty() {
        let ds = load("").unwrap();
        assert!(ds.is_empty());
        assert!(matches!(ds.labeled(), Err(Error::EmptyDataset)));
    }

    #[test]
    fn row_without_resistance_or_class() {
        let err = load("300,1.0,15,40,\n300,1.0,15,,\n").unwrap_err();
        assert!(matches!(err, Error::Row { line: 3, .. }), "{err}");
    }

    #[test]
    fn non_numeric_cell() {
        let err = load("300,abc,15,40,\n").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert_eq!(column, "voltage_kv");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bad_class_value() {
        assert!(matches!(load("300,1,15,,2\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn schema_errors_name_the_column() {
        let err = Dataset::read_csv("nozzle_speed_mm_min,voltage_kv,flow_rate_ul_min,resistance_ohm_sqr\n".as_bytes())
            .unwrap_err();
        assert!(err.to_string().contains("class"), "{err}");
        let err = Dataset::read_csv(
            "nozzle_speed_mm_min,voltage_kv,flow,resistance_ohm_sqr,class\n".as_bytes(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("`flow`"), "{err}");
    }

    #[test]
    fn columns_may_be_reordered() {
        let ds = Dataset::read_csv(
            "class,resistance_ohm_sqr,flow_rate_ul_min,voltage_kv,nozzle_speed_mm_min\n0,241,6,2,700\n".as_bytes(),
        )
        .unwrap();
        assert_eq!(ds.samples[0].features(), [700.0, 2.0, 6.0]);
        assert_eq!(ds.samples[0].resistance, Some(241.0));
    }

    #[test]
    fn threshold_labels() {
        let ds = Dataset::new(vec![
            PrintSample::new(700.0, 3.0, 10.0).with_resistance(241.0),
            PrintSample::new(300.0, 2.0, 15.0).with_resistance(35.0),
            PrintSample::new(500.0, 2.0, 12.0).with_resistance(100.0),
            PrintSample::new(500.0, 2.0, 12.0)
                .with_resistance(10.0)
                .with_label(Class::Low),
        ]);
        let out = label_by_threshold(&ds, 100.0).unwrap();
        let labels: Vec<_> = out.samples.iter().map(|s| s.label.unwrap()).collect();
        assert_eq!(labels, vec![Class::Low, Class::High, Class::Low, Class::Low]);
        assert_eq!(out.samples[0].resistance, Some(241.0));
    }

    #[test]
    fn threshold_needs_resistance() {
        let ds = Dataset::new(vec![
            PrintSample::new(300.0, 1.0, 15.0).with_label(Class::High),
            PrintSample::new(300.0, 1.0, 15.0),
        ]);
        assert!(matches!(label_by_threshold(&ds, 100.0), Err(Error::Unlabeled { index: 1 })));
    }

    fn column(vals: &[f64]) -> Dataset {
        Dataset::new(
            vals.iter()
                .map(|&v| PrintSample::new(v, 2.0, 15.0).with_label(Class::Low))
                .collect(),
        )
    }

    #[test]
    fn scaler_fit_population_stddev() {
        let sp = standardize_fit(&column(&[300.0, 500.0, 700.0])).unwrap();
        assert_eq!(sp.mean[0], 500.0);
        assert!((sp.stddev[0] - (80000.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((sp.stddev[0] - 163.299).abs() < 1e-3);
        assert!(!sp.constant[0]);
        assert_eq!(sp.stddev[2], 0.0);
        assert!(sp.constant[1] && sp.constant[2]);
    }

    #[test]
    fn scaler_single_sample_and_empty() {
        let sp = standardize_fit(&column(&[300.0])).unwrap();
        assert_eq!(sp.stddev, [0.0; 3]);
        assert_eq!(sp.constant, [true; 3]);
        assert!(matches!(standardize_fit(&Dataset::default()), Err(Error::EmptyDataset)));
    }

    #[test]
    fn scaler_apply() {
        let ds = column(&[300.0, 500.0, 700.0]);
        let sp = standardize_fit(&ds).unwrap();
        let z: Vec<f64> = standardize_apply(&ds, &sp).samples.iter().map(|s| s.nozzle_speed).collect();
        assert!((z[0] + 1.224744871391589).abs() < 1e-12);
        assert_eq!(z[1], 0.0);
        assert!((z[2] - 1.224744871391589).abs() < 1e-12);
        assert_eq!(sp.transform(&sp.mean), [0.0; 3]);
        assert_eq!(sp.transform(&[1e6, -5.0, 123.0])[2], 0.0);
    }

    fn imbalanced(n0: usize, n1: usize) -> Dataset {
        let mut samples = Vec::new();
        for i in 0..n0 + n1 {
            let c = if i < n0 { Class::Low } else { Class::High };
            samples.push(PrintSample::new(300.0 + i as f64, 1.0, 15.0).with_label(c));
        }
        Dataset::new(samples)
    }

    #[test]
    fn split_counts_follow_marginals() {
        let ds = imbalanced(154, 85);
        let (train, test) = stratified_split(&ds, 0.2, 11).unwrap();
        assert_eq!(test.class_counts(), [31, 17]);
        assert_eq!(train.class_counts(), [123, 68]);
    }

    #[test]
    fn split_is_deterministic() {
        let ds = imbalanced(30, 20);
        let a = stratified_split_indices(&ds, 0.3, 5).unwrap();
        let b = stratified_split_indices(&ds, 0.3, 5).unwrap();
        assert_eq!(a, b);
        let c = stratified_split_indices(&ds, 0.3, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_two_samples() {
        let ds = imbalanced(1, 1);
        let (train, test) = stratified_split(&ds, 0.5, 0).unwrap();
        assert_eq!(train.len(), 1);
        assert_eq!(test.len(), 1);
        assert_ne!(train.samples[0].label, test.samples[0].label);
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let ds = imbalanced(5, 5);
        for f in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(stratified_split(&ds, f, 0), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn csv_round_trip_keeps_values() {
        let ds = Dataset::new(vec![
            PrintSample::new(300.0, 2.5, 15.0).with_resistance(35.0).with_label(Class::High),
            PrintSample::new(700.0, 1.0, 3.0).with_resistance(241.125),
            PrintSample::new(500.0, 4.0, 9.0).with_label(Class::Low),
        ]);
        let text = ds.to_csv_string();
        assert!(text.starts_with("nozzle_speed_mm_min,voltage_kv,"));
        assert!(!text.contains('\r'));
        assert_eq!(Dataset::read_csv(text.as_bytes()).unwrap(), ds);
    }
}
