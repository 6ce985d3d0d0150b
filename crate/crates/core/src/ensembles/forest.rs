use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cart::{FeatureSampler, Grower, TreeNode, TreeParams};
use crate::dataset::{Class, Dataset, Features, N_FEATURES};
use crate::error::{Error, Result};
use crate::seed::{self, DEFAULT_SEED};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features drawn (without replacement) as split candidates at each node.
    pub mtry: usize,
    pub seed: u64,
    /// When false every tree sees the full training set. Meant for tests.
    #[serde(default = "yes")]
    pub bootstrap: bool,
    #[serde(default = "TreeParams::unpruned")]
    pub tree: TreeParams,
}

fn yes() -> bool {
    true
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            mtry: (N_FEATURES as f64).sqrt().floor() as usize,
            seed: DEFAULT_SEED,
            bootstrap: true,
            tree: TreeParams::unpruned(),
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::invalid("n_trees must be at least 1"));
        }
        if !(1..=N_FEATURES).contains(&self.mtry) {
            return Err(Error::invalid(format!(
                "mtry must lie in [1, {N_FEATURES}], got {}",
                self.mtry
            )));
        }
        self.tree.validate()
    }
}

/// A fitted random forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub params: ForestParams,
    pub trees: Vec<TreeNode>,
    /// Per tree, the training indices its bootstrap sample missed (ascending).
    pub oob_indices: Vec<Vec<usize>>,
    /// Accumulated node-size-weighted Gini decrease per feature.
    pub importance_raw: [f64; N_FEATURES],
}

struct FittedTree {
    tree: TreeNode,
    oob: Vec<usize>,
    importance: [f64; N_FEATURES],
}

fn fit_one(xs: &[Features], ys: &[Class], params: &ForestParams, t: usize) -> FittedTree {
    let n = xs.len();
    let mut rng = seed::stream_rng(params.seed, t as u64);
    let (idx, oob) = if params.bootstrap {
        let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let mut seen = vec![false; n];
        for &i in &idx {
            seen[i] = true;
        }
        let oob = (0..n).filter(|&i| !seen[i]).collect();
        (idx, oob)
    } else {
        ((0..n).collect(), Vec::new())
    };
    let sampler = FeatureSampler {
        rng: &mut rng,
        mtry: params.mtry,
    };
    let mut grower = Grower::new(xs, ys, params.tree, Some(sampler));
    let tree = grower.grow(idx);
    FittedTree {
        tree,
        oob,
        importance: grower.importance,
    }
}

/// Fits `n_trees` trees on bootstrap resamples with per-split feature sampling.
///
/// Tree `t` draws all of its randomness from `derive_seed(seed, t)`, so trees
/// are grown in parallel without affecting the result.
pub fn fit_forest(train: &Dataset, params: &ForestParams) -> Result<Forest> {
    params.validate()?;
    let (xs, ys) = train.labeled()?;
    let fitted: Vec<FittedTree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| fit_one(&xs, &ys, params, t))
        .collect();

    let mut importance_raw = [0.0; N_FEATURES];
    let mut trees = Vec::with_capacity(fitted.len());
    let mut oob_indices = Vec::with_capacity(fitted.len());
    for f in fitted {
        for (acc, v) in importance_raw.iter_mut().zip(f.importance) {
            *acc += v;
        }
        trees.push(f.tree);
        oob_indices.push(f.oob);
    }
    Ok(Forest {
        params: *params,
        trees,
        oob_indices,
        importance_raw,
    })
}

/// Majority vote. The score is the fraction of trees voting class 1; a tie is class 0.
pub fn forest_predict(f: &Forest, x: &Features) -> (Class, f64) {
    let votes = f
        .trees
        .iter()
        .filter(|t| t.predict(x).0 == Class::High)
        .count();
    let score = votes as f64 / f.trees.len() as f64;
    let class = if score > 0.5 { Class::High } else { Class::Low };
    (class, score)
}

/// Mean-decrease-in-impurity importance, normalized to sum to 1.
pub fn feature_importance(f: &Forest) -> Result<[f64; N_FEATURES]> {
    let total: f64 = f.importance_raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Undefined(
            "feature importance: the forest contains no splits".into(),
        ));
    }
    Ok(f.importance_raw.map(|v| v / total))
}

/// Out-of-bag error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OobEstimate {
    /// Misclassified fraction among samples that received at least one OOB vote.
    pub error: f64,
    pub voted: usize,
    /// Samples that were in every bootstrap sample.
    pub skipped: usize,
}

/// Each sample is classified by majority vote of the trees that did not see it.
pub fn oob_error(f: &Forest, train: &Dataset) -> Result<OobEstimate> {
    let (xs, ys) = train.labeled()?;
    let n = xs.len();
    let mut votes = vec![[0usize; 2]; n];
    for (tree, oob) in f.trees.iter().zip(&f.oob_indices) {
        for &i in oob {
            if i >= n {
                return Err(Error::invalid("OOB index outside the training set"));
            }
            votes[i][tree.predict(&xs[i]).0.index()] += 1;
        }
    }
    let mut voted = 0;
    let mut wrong = 0;
    for (v, y) in votes.iter().zip(&ys) {
        if v[0] + v[1] == 0 {
            continue;
        }
        voted += 1;
        if Class::majority(*v) != *y {
            wrong += 1;
        }
    }
    if voted == 0 {
        return Err(Error::Undefined("no sample was out of bag".into()));
    }
    Ok(OobEstimate {
        error: wrong as f64 / voted as f64,
        voted,
        skipped: n - voted,
    })
}

impl Forest {
    pub fn predict(&self, x: &Features) -> (Class, f64) {
        forest_predict(self, x)
    }
}
