//! Binary CART trees: Gini growth, cost-complexity pruning, prediction and
//! text rendering.
//!
//! Splits send `x[feature] < threshold` to the left child. Candidate
//! thresholds are midpoints between consecutive distinct feature values.
//! Pruning works on misclassification risk measured relative to the risk of
//! the root treated as a single leaf, the same scale as the growth gate `cp`.

use std::fmt::Write as _;

use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Class, Dataset, Features, FEATURE_NAMES, N_FEATURES};
use crate::error::{Error, Result};

/// Smallest Gini decrease that counts as an improvement.
pub const MIN_DECREASE: f64 = 1e-12;

/// Growth controls. Defaults mirror rpart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Nodes with fewer samples are not split.
    pub min_split: usize,
    /// Minimum samples in either child of a split.
    pub min_leaf: usize,
    pub max_depth: usize,
    /// Complexity parameter: minimum relative risk reduction of a split.
    pub cp: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_split: 20,
            min_leaf: 7,
            max_depth: 30,
            cp: 0.01,
        }
    }
}

impl TreeParams {
    /// Unpruned deep trees, as grown inside a random forest.
    pub fn unpruned() -> Self {
        TreeParams {
            min_split: 2,
            min_leaf: 1,
            max_depth: 30,
            cp: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_leaf < 1 {
            return Err(Error::invalid("min_leaf must be at least 1"));
        }
        if self.min_split < 2 * self.min_leaf {
            return Err(Error::invalid(format!(
                "min_split ({}) must be at least 2 * min_leaf ({})",
                self.min_split, self.min_leaf
            )));
        }
        if self.max_depth < 1 {
            return Err(Error::invalid("max_depth must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.cp) {
            return Err(Error::invalid(format!("cp must lie in [0, 1], got {}", self.cp)));
        }
        Ok(())
    }
}

/// A node of a binary classification tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        /// Class counts of the training samples that reached this node.
        counts: [usize; 2],
        /// Misclassification risk removed by this split alone.
        risk_reduction: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        counts: [usize; 2],
    },
}

impl TreeNode {
    pub fn leaf(counts: [usize; 2]) -> TreeNode {
        TreeNode::Leaf { counts }
    }

    pub fn counts(&self) -> [usize; 2] {
        match self {
            TreeNode::Internal { counts, .. } | TreeNode::Leaf { counts } => *counts,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    /// Majority class of the node's counts (ties go to class 0).
    pub fn predicted(&self) -> Class {
        Class::majority(self.counts())
    }

    /// Fraction of class 1 among the node's training samples.
    pub fn score(&self) -> f64 {
        let [n0, n1] = self.counts();
        n1 as f64 / (n0 + n1) as f64
    }

    /// Misclassification count if this node were a leaf.
    pub fn risk(&self) -> usize {
        let [n0, n1] = self.counts();
        n0.min(n1)
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    /// Depth of the deepest leaf; a single leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Sum of leaf risks.
    pub fn leaf_risk(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => self.risk(),
            TreeNode::Internal { left, right, .. } => left.leaf_risk() + right.leaf_risk(),
        }
    }

    /// The leaf that `x` falls into.
    pub fn route(&self, x: &Features) -> &TreeNode {
        let mut node = self;
        while let TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
            ..
        } = node
        {
            node = if x[*feature] < *threshold { left } else { right };
        }
        node
    }

    pub fn predict(&self, x: &Features) -> (Class, f64) {
        let leaf = self.route(x);
        (leaf.predicted(), leaf.score())
    }

    /// Feature index of the root split, if any.
    pub fn root_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Internal { feature, .. } => Some(*feature),
            TreeNode::Leaf { .. } => None,
        }
    }
}

/// Gini impurity `1 − p0² − p1²` of a class-count pair.
pub fn gini(counts: [usize; 2]) -> Result<f64> {
    if counts[0] + counts[1] == 0 {
        return Err(Error::invalid("gini of an empty node"));
    }
    Ok(gini_weighted(counts[0] as f64, counts[1] as f64))
}

fn gini_weighted(w0: f64, w1: f64) -> f64 {
    let total = w0 + w1;
    let p0 = w0 / total;
    let p1 = w1 / total;
    1.0 - p0 * p0 - p1 * p1
}

/// Impurity decrease of splitting `parent` weight into `left` and the remainder.
fn split_decrease(parent: [f64; 2], left: [f64; 2]) -> f64 {
    let right = [parent[0] - left[0], parent[1] - left[1]];
    let w = parent[0] + parent[1];
    let wl = left[0] + left[1];
    let wr = right[0] + right[1];
    gini_weighted(parent[0], parent[1])
        - (wl / w) * gini_weighted(left[0], left[1])
        - (wr / w) * gini_weighted(right[0], right[1])
}

/// A candidate split and its weighted Gini decrease.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub decrease: f64,
}

/// Midpoint threshold strictly above `lo` and at most `hi`.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = 0.5 * (lo + hi);
    if m <= lo {
        hi
    } else {
        m
    }
}

/// Exhaustive search for the Gini-optimal split over all three features.
///
/// Returns `None` with fewer than two samples, when no threshold separates
/// the data with both sides holding at least `min_leaf` samples, or when no
/// admissible split lowers impurity. Ties go to the lowest feature index,
/// then the lowest threshold.
pub fn best_split(
    xs: &[Features],
    ys: &[Class],
    weights: Option<&[f64]>,
    min_leaf: usize,
) -> Option<Split> {
    assert_eq!(xs.len(), ys.len(), "features and labels differ in length");
    if let Some(w) = weights {
        assert_eq!(w.len(), xs.len(), "weights and samples differ in length");
    }
    let idx: Vec<usize> = (0..xs.len()).collect();
    let features: Vec<usize> = (0..N_FEATURES).collect();
    best_split_among(xs, ys, weights, &idx, &features, min_leaf.max(1))
}

fn best_split_among(
    xs: &[Features],
    ys: &[Class],
    weights: Option<&[f64]>,
    idx: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let n = idx.len();
    if n < 2 {
        return None;
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let mut parent = [0.0; 2];
    for &i in idx {
        parent[ys[i].index()] += w(i);
    }

    let mut best: Option<Split> = None;
    let mut order = idx.to_vec();
    for &f in features {
        order.sort_by(|&a, &b| xs[a][f].total_cmp(&xs[b][f]));
        let mut left = [0.0; 2];
        for pos in 0..n - 1 {
            let i = order[pos];
            left[ys[i].index()] += w(i);
            let lo = xs[i][f];
            let hi = xs[order[pos + 1]][f];
            if lo >= hi {
                continue;
            }
            let n_left = pos + 1;
            if n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let decrease = split_decrease(parent, left);
            if decrease > MIN_DECREASE && best.map_or(true, |b| decrease > b.decrease) {
                best = Some(Split {
                    feature: f,
                    threshold: midpoint(lo, hi),
                    decrease,
                });
            }
        }
    }
    best
}

/// Random feature subsets drawn at every split (random-forest growth).
pub(crate) struct FeatureSampler<'r> {
    pub rng: &'r mut ChaCha8Rng,
    pub mtry: usize,
}

/// Recursive tree builder over an index set of the training rows.
pub(crate) struct Grower<'a, 'r> {
    xs: &'a [Features],
    ys: &'a [Class],
    params: TreeParams,
    root_risk: usize,
    sampler: Option<FeatureSampler<'r>>,
    /// Sum over splits of node size × Gini decrease, per feature.
    pub importance: [f64; N_FEATURES],
}

impl<'a, 'r> Grower<'a, 'r> {
    pub fn new(
        xs: &'a [Features],
        ys: &'a [Class],
        params: TreeParams,
        sampler: Option<FeatureSampler<'r>>,
    ) -> Self {
        Grower {
            xs,
            ys,
            params,
            root_risk: 0,
            sampler,
            importance: [0.0; N_FEATURES],
        }
    }

    pub fn grow(&mut self, idx: Vec<usize>) -> TreeNode {
        let counts = self.counts(&idx);
        self.root_risk = counts[0].min(counts[1]);
        self.grow_node(idx, counts, 0)
    }

    fn counts(&self, idx: &[usize]) -> [usize; 2] {
        let mut c = [0; 2];
        for &i in idx {
            c[self.ys[i].index()] += 1;
        }
        c
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        match &mut self.sampler {
            Some(s) if s.mtry < N_FEATURES => {
                let mut f = index::sample(s.rng, N_FEATURES, s.mtry).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..N_FEATURES).collect(),
        }
    }

    fn grow_node(&mut self, idx: Vec<usize>, counts: [usize; 2], depth: usize) -> TreeNode {
        let n = idx.len();
        let pure = counts[0] == 0 || counts[1] == 0;
        if depth >= self.params.max_depth || n < self.params.min_split || pure {
            return TreeNode::leaf(counts);
        }
        let features = self.candidate_features();
        let Some(split) =
            best_split_among(self.xs, self.ys, None, &idx, &features, self.params.min_leaf)
        else {
            return TreeNode::leaf(counts);
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.xs[i][split.feature] < split.threshold);
        let lc = self.counts(&left_idx);
        let rc = self.counts(&right_idx);
        let risk_reduction = (counts[0].min(counts[1]) - lc[0].min(lc[1]) - rc[0].min(rc[1])) as f64;
        if self.root_risk > 0 && risk_reduction / (self.root_risk as f64) < self.params.cp {
            return TreeNode::leaf(counts);
        }

        self.importance[split.feature] += n as f64 * split.decrease;
        let left = self.grow_node(left_idx, lc, depth + 1);
        let right = self.grow_node(right_idx, rc, depth + 1);
        TreeNode::Internal {
            feature: split.feature,
            threshold: split.threshold,
            counts,
            risk_reduction,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

/// Grows a tree on every sample of `train`.
pub fn grow(train: &Dataset, params: &TreeParams) -> Result<TreeNode> {
    params.validate()?;
    let (xs, ys) = train.labeled()?;
    Ok(grow_rows(&xs, &ys, params))
}

pub(crate) fn grow_rows(xs: &[Features], ys: &[Class], params: &TreeParams) -> TreeNode {
    Grower::new(xs, ys, *params, None).grow((0..xs.len()).collect())
}

/// Cost-complexity pruning.
///
/// Working bottom-up, an internal node is collapsed into a leaf when the
/// risk its (already pruned) subtree removes, `risk(node) − Σ risk(leaves)`,
/// is at most `cp · root_risk`. `cp = 0` leaves the tree untouched and
/// `cp = 1` always yields a single leaf. Applying `prune` twice equals a
/// single prune at the larger `cp`.
pub fn prune(tree: &TreeNode, cp: f64, root_risk: f64) -> TreeNode {
    if cp <= 0.0 {
        return tree.clone();
    }
    if root_risk <= 0.0 {
        return TreeNode::leaf(tree.counts());
    }
    prune_node(tree, cp, root_risk)
}

/// [`prune`] with the root risk taken from the tree's own root counts.
pub fn prune_relative(tree: &TreeNode, cp: f64) -> TreeNode {
    prune(tree, cp, tree.risk() as f64)
}

fn prune_node(node: &TreeNode, cp: f64, root_risk: f64) -> TreeNode {
    match node {
        TreeNode::Leaf { .. } => node.clone(),
        TreeNode::Internal {
            feature,
            threshold,
            counts,
            risk_reduction,
            left,
            right,
        } => {
            let left = prune_node(left, cp, root_risk);
            let right = prune_node(right, cp, root_risk);
            let subtree_gain = (node.risk() - left.leaf_risk() - right.leaf_risk()) as f64;
            if subtree_gain / root_risk <= cp {
                TreeNode::leaf(*counts)
            } else {
                TreeNode::Internal {
                    feature: *feature,
                    threshold: *threshold,
                    counts: *counts,
                    risk_reduction: *risk_reduction,
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
        }
    }
}

pub fn predict(tree: &TreeNode, x: &Features) -> (Class, f64) {
    tree.predict(x)
}

/// Indented text rendering, one line per node in pre-order (left before right).
///
/// ```
/// use ejet_ml::cart::{render, TreeNode};
/// assert_eq!(render(&TreeNode::leaf([10, 2])), "class=0 (10, 2)\n");
/// ```
pub fn render(tree: &TreeNode) -> String {
    let mut out = String::new();
    render_into(tree, 0, &mut out);
    out
}

fn render_into(node: &TreeNode, depth: usize, out: &mut String) {
    let indent = "  ".repeat(depth);
    match node {
        TreeNode::Leaf { counts } => {
            let _ = writeln!(
                out,
                "{indent}class={} ({}, {})",
                node.predicted(),
                counts[0],
                counts[1]
            );
        }
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
            ..
        } => {
            let _ = writeln!(out, "{indent}{} < {}", FEATURE_NAMES[*feature], threshold);
            render_into(left, depth + 1, out);
            render_into(right, depth + 1, out);
        }
    }
}

/// A fitted tree together with the parameters it was grown with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub params: TreeParams,
    /// Complexity parameter of an explicit pruning pass, if one was applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pruned_at: Option<f64>,
    pub root: TreeNode,
}

impl DecisionTree {
    /// Grows with `params`; `params.cp` acts as the growth gate.
    pub fn fit(train: &Dataset, params: TreeParams) -> Result<DecisionTree> {
        let root = grow(train, &params)?;
        Ok(DecisionTree {
            params,
            pruned_at: None,
            root,
        })
    }

    /// A copy pruned at `cp`.
    pub fn pruned(&self, cp: f64) -> Result<DecisionTree> {
        if !(0.0..=1.0).contains(&cp) {
            return Err(Error::invalid(format!("cp must lie in [0, 1], got {cp}")));
        }
        Ok(DecisionTree {
            params: self.params,
            pruned_at: Some(cp),
            root: prune_relative(&self.root, cp),
        })
    }

    pub fn predict(&self, x: &Features) -> (Class, f64) {
        self.root.predict(x)
    }

    pub fn render(&self) -> String {
        render(&self.root)
    }
}
