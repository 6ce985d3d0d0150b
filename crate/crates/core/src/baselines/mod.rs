//! Distance- and gradient-based baselines. Both standardize features internally.

mod knn;
mod logreg;

pub use knn::{knn_predict, KnnModel, KnnParams};
pub use logreg::{
    fit_logreg, fit_logreg_with_history, logreg_predict, loss, loss_and_gradient, sigmoid, LogregModel, LogregParams,
};
