use serde::{Deserialize, Serialize};

use crate::dataset::{Class, Dataset, Features, ScalerParams, N_FEATURES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogregParams {
    pub lr: f64,
    pub max_epochs: usize,
    /// Stop once the loss changes by less than this between epochs.
    pub tol: f64,
}

impl Default for LogregParams {
    fn default() -> Self {
        LogregParams {
            lr: 0.1,
            max_epochs: 5000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogregModel {
    pub weights: [f64; N_FEATURES],
    pub bias: f64,
    pub scaler: ScalerParams,
    pub final_loss: f64,
    pub epochs_run: usize,
}

/// Logistic function, evaluated without overflow for any finite input.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)`.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn logit(w: &[f64; N_FEATURES], b: f64, x: &Features) -> f64 {
    w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b
}

/// Mean binary cross-entropy of `σ(w·x + b)` against `ys`.
pub fn loss(xs: &[Features], ys: &[Class], w: &[f64; N_FEATURES], b: f64) -> f64 {
    let n = xs.len() as f64;
    xs.iter()
        .zip(ys)
        .map(|(x, y)| {
            let z = logit(w, b, x);
            // -[y ln σ(z) + (1-y) ln(1-σ(z))] = softplus(z) - y z
            softplus(z) - y.index() as f64 * z
        })
        .sum::<f64>()
        / n
}

/// Loss together with its analytic gradient `(∂L/∂w, ∂L/∂b)`.
pub fn loss_and_gradient(
    xs: &[Features],
    ys: &[Class],
    w: &[f64; N_FEATURES],
    b: f64,
) -> (f64, [f64; N_FEATURES], f64) {
    let n = xs.len() as f64;
    let mut total = 0.0;
    let mut gw = [0.0; N_FEATURES];
    let mut gb = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let z = logit(w, b, x);
        let yv = y.index() as f64;
        total += softplus(z) - yv * z;
        let r = sigmoid(z) - yv;
        for j in 0..N_FEATURES {
            gw[j] += r * x[j];
        }
        gb += r;
    }
    (total / n, gw.map(|g| g / n), gb / n)
}

/// Full-batch gradient descent from zero weights on standardized features.
pub fn fit_logreg(train: &Dataset, params: &LogregParams) -> Result<LogregModel> {
    fit_logreg_with_history(train, params).map(|(m, _)| m)
}

/// [`fit_logreg`], also returning the loss evaluated at the start of every epoch.
pub fn fit_logreg_with_history(
    train: &Dataset,
    params: &LogregParams,
) -> Result<(LogregModel, Vec<f64>)> {
    if !(params.lr > 0.0 && params.lr.is_finite()) {
        return Err(Error::invalid("learning rate must be positive"));
    }
    if !(params.tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }
    let (raw, ys) = train.labeled()?;
    let counts = train.class_counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::SingleClass);
    }
    let scaler = ScalerParams::fit(&raw)?;
    let xs: Vec<Features> = raw.iter().map(|x| scaler.transform(x)).collect();

    let mut w = [0.0; N_FEATURES];
    let mut b = 0.0;
    let mut prev = f64::INFINITY;
    let mut history = Vec::new();
    let mut epochs_run = 0;
    for epoch in 1..=params.max_epochs {
        let (l, gw, gb) = loss_and_gradient(&xs, &ys, &w, b);
        if !l.is_finite() {
            return Err(Error::Numeric(format!("non-finite loss at epoch {epoch}")));
        }
        history.push(l);
        if (prev - l).abs() < params.tol {
            break;
        }
        prev = l;
        for j in 0..N_FEATURES {
            w[j] -= params.lr * gw[j];
        }
        b -= params.lr * gb;
        epochs_run = epoch;
    }
    let final_loss = loss(&xs, &ys, &w, b);
    if !(final_loss.is_finite() && w.iter().all(|v| v.is_finite()) && b.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite model after epoch {epochs_run}"
        )));
    }
    let model = LogregModel {
        weights: w,
        bias: b,
        scaler,
        final_loss,
        epochs_run,
    };
    Ok((model, history))
}

/// Probability of class 1, kept strictly inside `(0, 1)`; exactly 0.5 predicts class 0.
pub fn logreg_predict(m: &LogregModel, x: &Features) -> (Class, f64) {
    let z = logit(&m.weights, m.bias, &m.scaler.transform(x));
    let p = sigmoid(z).clamp(f64::EPSILON, 1.0 - f64::EPSILON);
    let class = if p > 0.5 { Class::High } else { Class::Low };
    (class, p)
}

impl LogregModel {
    pub fn predict(&self, x: &Features) -> (Class, f64) {
        logreg_predict(self, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::PrintSample;

    fn ds_1d(pairs: &[(f64, Class)]) -> Dataset {
        Dataset::new(
            pairs
                .iter()
                .map(|&(x, y)| PrintSample::new(x, 2.0, 15.0).with_label(y))
                .collect(),
        )
    }

    #[test]
    fn zero_model_predicts_half() {
        let d = ds_1d(&[(1.0, Class::Low), (2.0, Class::High)]);
        let m = fit_logreg(&d, &LogregParams { max_epochs: 0, ..Default::default() }).unwrap();
        assert_eq!(m.weights, [0.0; 3]);
        assert_eq!(logreg_predict(&m, &[123.0, 4.0, 5.0]), (Class::Low, 0.5));
        assert!((m.final_loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn separable_reaches_full_accuracy() {
        use Class::*;
        let pairs: Vec<(f64, Class)> = (0..20).map(|i| (i as f64, if i < 10 { Low } else { High })).collect();
        let d = ds_1d(&pairs);
        let m = fit_logreg(&d, &LogregParams::default()).unwrap();
        for (x, y) in pairs {
            assert_eq!(logreg_predict(&m, &[x, 2.0, 15.0]).0, y);
        }
        assert!(m.weights[0] > 0.0);
        assert_eq!(m.weights[1], 0.0);
    }

    #[test]
    fn single_class_rejected() {
        let d = ds_1d(&[(1.0, Class::Low), (2.0, Class::Low)]);
        assert!(matches!(fit_logreg(&d, &LogregParams::default()), Err(Error::SingleClass)));
    }

    #[test]
    fn sigmoid_symmetry_and_range() {
        for i in -300..=300 {
            let z = i as f64 * 0.1;
            assert!((sigmoid(-z) - (1.0 - sigmoid(z))).abs() <= 1e-15, "z = {z}");
        }
        let m = LogregModel {
            weights: [0.0; 3],
            bias: 800.0,
            scaler: ScalerParams { mean: [0.0; 3], stddev: [1.0; 3], constant: [false; 3] },
            final_loss: 0.0,
            epochs_run: 0,
        };
        let p = logreg_predict(&m, &[0.0; 3]).1;
        assert!(p > 0.5 && p < 1.0);
        let m = LogregModel { bias: -800.0, ..m };
        let p = logreg_predict(&m, &[0.0; 3]).1;
        assert!(p > 0.0 && p < 0.5);
    }

    #[test]
    fn bias_drives_probability_up() {
        let mut prev = 0.0;
        for b in 0..40 {
            let m = LogregModel {
                weights: [0.0; 3],
                bias: b as f64,
                scaler: ScalerParams { mean: [0.0; 3], stddev: [1.0; 3], constant: [false; 3] },
                final_loss: 0.0,
                epochs_run: 0,
            };
            let p = logreg_predict(&m, &[1.0; 3]).1;
            assert!(p >= prev);
            prev = p;
        }
        assert!(prev > 1.0 - 1e-15);
    }
}
