//! Tree ensembles: bagged random forests and discrete AdaBoost over stumps.

mod boost;
mod forest;

pub use boost::{
    adaboost_predict, fit_adaboost, fit_adaboost_traced, stump_weight, BoostModel, BoostParams,
    Stump, EPSILON_CLAMP,
};
pub use forest::{
    feature_importance, fit_forest, forest_predict, oob_error, Forest, ForestParams, OobEstimate,
};
