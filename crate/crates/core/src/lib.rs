//! Classification toolkit for electrohydrodynamic-jet printed electrodes:
//! predicts whether a (nozzle speed, voltage, flow rate) setting yields a
//! low-resistance electrode, with CART, random forests, AdaBoost, KNN and
//! logistic regression, plus the evaluation machinery around them.

pub mod baselines;
pub mod cart;
pub mod cli;
pub mod dataset;
pub mod ensembles;
pub mod error;
pub mod format;
pub mod metrics;
pub mod model;
pub mod seed;
pub mod synthgen;
pub mod validation;

pub use dataset::{Class, Dataset, Features, PrintSample};
pub use error::{Error, Result};
pub use model::{Model, ModelSpec};
