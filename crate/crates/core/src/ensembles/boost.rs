use serde::{Deserialize, Serialize};

use crate::cart::midpoint;
use crate::dataset::{Class, Dataset, Features, N_FEATURES};
use crate::error::{Error, Result};
use crate::seed::DEFAULT_SEED;

/// Weighted errors are clamped to `[EPSILON_CLAMP, 1 - EPSILON_CLAMP]` before
/// computing a stump weight.
pub const EPSILON_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub n_stumps: usize,
    /// Unused by the deterministic fit; kept so models record their provenance.
    pub seed: u64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            n_stumps: 10,
            seed: DEFAULT_SEED,
        }
    }
}

/// A depth-1 tree: `x[feature] >= threshold` predicts `above`, otherwise the other class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub above: Class,
}

impl Stump {
    pub fn predict(&self, x: &Features) -> Class {
        if x[self.feature] >= self.threshold {
            self.above
        } else {
            match self.above {
                Class::Low => Class::High,
                Class::High => Class::Low,
            }
        }
    }

    /// Prediction as `±1`.
    pub fn vote(&self, x: &Features) -> f64 {
        self.predict(x).sign()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub params: BoostParams,
    pub stumps: Vec<Stump>,
    pub alphas: Vec<f64>,
    /// Weighted training error of each accepted stump, clamped away from 0.
    pub training_errors: Vec<f64>,
}

impl BoostModel {
    /// `Π_t 2·sqrt(ε_t (1 − ε_t))`, an upper bound on the training error.
    pub fn training_error_bound(&self) -> f64 {
        self.training_errors
            .iter()
            .map(|&e| 2.0 * (e * (1.0 - e)).sqrt())
            .product()
    }

    pub fn margin(&self, x: &Features) -> f64 {
        self.stumps
            .iter()
            .zip(&self.alphas)
            .map(|(s, a)| a * s.vote(x))
            .sum()
    }

    pub fn predict(&self, x: &Features) -> (Class, f64) {
        adaboost_predict(self, x)
    }
}

/// `½·ln((1 − ε)/ε)` with `ε` clamped to `[1e-10, 1 − 1e-10]`.
pub fn stump_weight(epsilon: f64) -> f64 {
    let e = epsilon.clamp(EPSILON_CLAMP, 1.0 - EPSILON_CLAMP);
    0.5 * ((1.0 - e) / e).ln()
}

/// The stump with the lowest weighted misclassification error.
///
/// Ties go to the lowest feature, then the lowest threshold, then `above = High`.
fn best_stump(xs: &[Features], ys: &[Class], w: &[f64]) -> Option<(Stump, f64)> {
    let n = xs.len();
    let mut total = [0.0; 2];
    for (y, wi) in ys.iter().zip(w) {
        total[y.index()] += wi;
    }
    let mut best: Option<(Stump, f64)> = None;
    let mut order: Vec<usize> = (0..n).collect();
    for f in 0..N_FEATURES {
        order.sort_by(|&a, &b| xs[a][f].total_cmp(&xs[b][f]));
        let mut below = [0.0; 2];
        for pos in 0..n.saturating_sub(1) {
            let i = order[pos];
            below[ys[i].index()] += w[i];
            let lo = xs[i][f];
            let hi = xs[order[pos + 1]][f];
            if lo >= hi {
                continue;
            }
            let threshold = midpoint(lo, hi);
            // above = High: low-class weight above and high-class weight below are wrong
            let err_high = below[1] + (total[0] - below[0]);
            let err_low = below[0] + (total[1] - below[1]);
            for (above, err) in [(Class::High, err_high), (Class::Low, err_low)] {
                if best.map_or(true, |(_, e)| err < e) {
                    best = Some((Stump { feature: f, threshold, above }, err));
                }
            }
        }
    }
    best
}

/// Discrete AdaBoost over decision stumps, recording the sample weights after every round.
pub fn fit_adaboost_traced(train: &Dataset, params: &BoostParams) -> Result<(BoostModel, Vec<Vec<f64>>)> {
    if params.n_stumps < 1 {
        return Err(Error::invalid("n_stumps must be at least 1"));
    }
    let (xs, ys) = train.labeled()?;
    let counts = train.class_counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::SingleClass);
    }
    let n = xs.len();
    let mut w = vec![1.0 / n as f64; n];
    let mut model = BoostModel {
        params: *params,
        stumps: Vec::new(),
        alphas: Vec::new(),
        training_errors: Vec::new(),
    };
    let mut trace = Vec::new();

    for _ in 0..params.n_stumps {
        let Some((stump, eps)) = best_stump(&xs, &ys, &w) else {
            break;
        };
        if eps >= 0.5 {
            break;
        }
        let perfect = eps <= EPSILON_CLAMP;
        let eps = eps.max(EPSILON_CLAMP);
        let alpha = stump_weight(eps);
        for i in 0..n {
            w[i] *= (-alpha * ys[i].sign() * stump.vote(&xs[i])).exp();
        }
        let z: f64 = w.iter().sum();
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::Numeric(format!(
                "AdaBoost weight normalizer became {z} in round {}",
                model.stumps.len() + 1
            )));
        }
        for wi in &mut w {
            *wi /= z;
        }
        model.stumps.push(stump);
        model.alphas.push(alpha);
        model.training_errors.push(eps);
        trace.push(w.clone());
        if perfect {
            break;
        }
    }
    if model.stumps.is_empty() {
        return Err(Error::Undefined(
            "AdaBoost: no stump beats chance on the training data".into(),
        ));
    }
    Ok((model, trace))
}

pub fn fit_adaboost(train: &Dataset, params: &BoostParams) -> Result<BoostModel> {
    fit_adaboost_traced(train, params).map(|(m, _)| m)
}

/// Weighted vote; `score = ½(1 + margin / Σ|α|)`, and a zero margin is class 0.
pub fn adaboost_predict(m: &BoostModel, x: &Features) -> (Class, f64) {
    let margin = m.margin(x);
    let scale: f64 = m.alphas.iter().map(|a| a.abs()).sum();
    let score = if scale > 0.0 {
        (0.5 * (1.0 + margin / scale)).clamp(0.0, 1.0)
    } else {
        0.5
    };
    let class = if margin > 0.0 { Class::High } else { Class::Low };
    (class, score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::PrintSample;

    fn ds_1d(pairs: &[(f64, Class)]) -> Dataset {
        Dataset::new(
            pairs
                .iter()
                .map(|&(x, y)| PrintSample::new(x, 1.0, 1.0).with_label(y))
                .collect(),
        )
    }

    #[test]
    fn stump_weights() {
        assert_eq!(stump_weight(0.5), 0.0);
        assert!((stump_weight(0.3) - 0.42365).abs() < 1e-5);
        assert!((stump_weight(0.7) + 0.42365).abs() < 1e-5);
        assert!(stump_weight(0.0).is_finite());
        assert_eq!(stump_weight(0.0), stump_weight(1e-10));
    }

    #[test]
    fn separable_in_one_round() {
        use Class::*;
        let d = ds_1d(&[(1.0, High), (2.0, High), (3.0, Low), (4.0, Low)]);
        let m = fit_adaboost(&d, &BoostParams { n_stumps: 1, seed: 0 }).unwrap();
        assert_eq!(m.stumps.len(), 1);
        assert_eq!(m.stumps[0], Stump { feature: 0, threshold: 2.5, above: Low });
        assert_eq!(m.alphas[0], stump_weight(1e-10));
        for s in &d.samples {
            assert_eq!(m.predict(&s.features()).0, s.label.unwrap());
        }
    }

    #[test]
    fn stops_after_perfect_stump() {
        use Class::*;
        let d = ds_1d(&[(1.0, Low), (2.0, High)]);
        let m = fit_adaboost(&d, &BoostParams { n_stumps: 50, seed: 0 }).unwrap();
        assert_eq!(m.stumps.len(), 1);
    }

    #[test]
    fn single_class_rejected() {
        let d = ds_1d(&[(1.0, Class::Low), (2.0, Class::Low)]);
        assert!(matches!(fit_adaboost(&d, &BoostParams::default()), Err(Error::SingleClass)));
    }

    #[test]
    fn chance_level_data_rejected() {
        // identical features, mixed labels: no stump exists
        let d = ds_1d(&[(1.0, Class::Low), (1.0, Class::High)]);
        assert!(fit_adaboost(&d, &BoostParams::default()).is_err());
    }

    #[test]
    fn prediction_conventions() {
        let s = Stump { feature: 0, threshold: 5.0, above: Class::High };
        let one = BoostModel {
            params: BoostParams::default(),
            stumps: vec![s],
            alphas: vec![0.7],
            training_errors: vec![0.2],
        };
        assert_eq!(adaboost_predict(&one, &[9.0, 0.0, 0.0]), (Class::High, 1.0));
        let opposed = BoostModel {
            stumps: vec![s, Stump { above: Class::Low, ..s }],
            alphas: vec![0.7, 0.7],
            training_errors: vec![0.2, 0.2],
            ..one.clone()
        };
        assert_eq!(adaboost_predict(&opposed, &[9.0, 0.0, 0.0]), (Class::Low, 0.5));
    }

    #[test]
    fn weights_stay_a_distribution() {
        use Class::*;
        let pairs: Vec<(f64, Class)> = (0..30)
            .map(|i| (i as f64, if (i * 7) % 5 < 2 { High } else { Low }))
            .collect();
        let d = ds_1d(&pairs);
        let (m, trace) = fit_adaboost_traced(&d, &BoostParams { n_stumps: 25, seed: 0 }).unwrap();
        assert_eq!(trace.len(), m.stumps.len());
        for w in &trace {
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|&x| x >= 0.0));
        }
        assert!(m.training_errors.iter().all(|&e| e > 0.0 && e < 0.5));
        let wrong = d
            .samples
            .iter()
            .filter(|s| m.predict(&s.features()).0 != s.label.unwrap())
            .count();
        assert!(wrong as f64 / 30.0 <= m.training_error_bound());
    }
}
