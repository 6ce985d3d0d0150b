//! Uniform handling of the five classifier families: hyperparameter specs,
//! fitted models, and their versioned JSON files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{fit_logreg, KnnModel, KnnParams, LogregModel, LogregParams};
use crate::cart::{DecisionTree, TreeParams};
use crate::dataset::{Class, Dataset, Features};
use crate::ensembles::{fit_adaboost, fit_forest, BoostModel, BoostParams, Forest, ForestParams};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Version written into, and required from, every model file.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A model family plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    /// CART grown with `params`, optionally pruned afterwards.
    Tree {
        params: TreeParams,
        prune_cp: Option<f64>,
    },
    Forest { params: ForestParams },
    Knn { params: KnnParams },
    Logreg { params: LogregParams },
    Adaboost { params: BoostParams },
    /// Always predicts `class` with score `class as f64`.
    Constant { class: Class },
}

impl ModelSpec {
    pub fn tree() -> ModelSpec {
        ModelSpec::Tree {
            params: TreeParams::default(),
            prune_cp: None,
        }
    }

    pub fn pruned_tree(cp: f64) -> ModelSpec {
        ModelSpec::Tree {
            params: TreeParams::default(),
            prune_cp: Some(cp),
        }
    }

    pub fn forest(n_trees: usize, seed: u64) -> ModelSpec {
        ModelSpec::Forest {
            params: ForestParams {
                n_trees,
                seed,
                ..Default::default()
            },
        }
    }

    pub fn knn(k: usize) -> ModelSpec {
        ModelSpec::Knn {
            params: KnnParams { k },
        }
    }

    pub fn logreg() -> ModelSpec {
        ModelSpec::Logreg {
            params: LogregParams::default(),
        }
    }

    pub fn adaboost(n_stumps: usize) -> ModelSpec {
        ModelSpec::Adaboost {
            params: BoostParams {
                n_stumps,
                ..Default::default()
            },
        }
    }

    /// Short display name, e.g. `knn(k=10)` or `tree(cp=0.2)`.
    pub fn name(&self) -> String {
        match self {
            ModelSpec::Tree { prune_cp: None, .. } => "tree".into(),
            ModelSpec::Tree {
                prune_cp: Some(cp), ..
            } => format!("tree(cp={cp})"),
            ModelSpec::Forest { .. } => "forest".into(),
            ModelSpec::Knn { params } => format!("knn(k={})", params.k),
            ModelSpec::Logreg { .. } => "logreg".into(),
            ModelSpec::Adaboost { params } => format!("adaboost(n={})", params.n_stumps),
            ModelSpec::Constant { class } => format!("constant({class})"),
        }
    }

    /// The same spec with its random seed replaced by `derive_seed(seed, stream)`.
    ///
    /// Deterministic families are returned unchanged.
    pub fn reseeded(&self, seed: u64, stream: u64) -> ModelSpec {
        let mut spec = self.clone();
        match &mut spec {
            ModelSpec::Forest { params } => params.seed = derive_seed(seed, stream),
            ModelSpec::Adaboost { params } => params.seed = derive_seed(seed, stream),
            _ => {}
        }
        spec
    }

    pub fn fit(&self, train: &Dataset) -> Result<Model> {
        Ok(match self {
            ModelSpec::Tree { params, prune_cp } => {
                let tree = DecisionTree::fit(train, *params)?;
                match prune_cp {
                    Some(cp) => Model::Tree(tree.pruned(*cp)?),
                    None => Model::Tree(tree),
                }
            }
            ModelSpec::Forest { params } => Model::Forest(fit_forest(train, params)?),
            ModelSpec::Knn { params } => Model::Knn(KnnModel::fit(train, *params)?),
            ModelSpec::Logreg { params } => Model::Logreg(fit_logreg(train, params)?),
            ModelSpec::Adaboost { params } => Model::Adaboost(fit_adaboost(train, params)?),
            ModelSpec::Constant { class } => {
                if train.is_empty() {
                    return Err(Error::EmptyDataset);
                }
                Model::Constant { class: *class }
            }
        })
    }
}

/// A fitted classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Tree(DecisionTree),
    Forest(Forest),
    Knn(KnnModel),
    Logreg(LogregModel),
    Adaboost(BoostModel),
    Constant { class: Class },
}

#[derive(Serialize)]
struct ModelFileRef<'a> {
    version: u32,
    #[serde(flatten)]
    model: &'a Model,
}

impl Model {
    /// Predicted class and a score in `[0, 1]` (higher means class 1 is more likely).
    pub fn predict(&self, x: &Features) -> (Class, f64) {
        match self {
            Model::Tree(t) => t.predict(x),
            Model::Forest(f) => f.predict(x),
            Model::Knn(k) => k.predict(x),
            Model::Logreg(m) => m.predict(x),
            Model::Adaboost(m) => m.predict(x),
            Model::Constant { class } => (*class, class.index() as f64),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::Tree(_) => "tree",
            Model::Forest(_) => "forest",
            Model::Knn(_) => "knn",
            Model::Logreg(_) => "logreg",
            Model::Adaboost(_) => "adaboost",
            Model::Constant { .. } => "constant",
        }
    }

    /// Predictions for every sample of `ds`, in order.
    pub fn predict_all(&self, ds: &Dataset) -> Vec<(Class, f64)> {
        ds.samples.iter().map(|s| self.predict(&s.features())).collect()
    }

    /// Pretty-printed JSON with a leading `"version"` key.
    pub fn to_json(&self) -> Result<String> {
        let file = ModelFileRef {
            version: MODEL_FORMAT_VERSION,
            model: self,
        };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| {
                Error::Schema(format!(
                    "model file lacks an integer \"version\" (expected {MODEL_FORMAT_VERSION})"
                ))
            })?;
        if found != MODEL_FORMAT_VERSION as u64 {
            return Err(Error::Version {
                expected: MODEL_FORMAT_VERSION,
                found,
            });
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Model> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Model::from_json(&text)
    }
}
