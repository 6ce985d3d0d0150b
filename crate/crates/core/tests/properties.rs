use ejet_ml::baselines::{fit_logreg_with_history, loss, loss_and_gradient, LogregParams};
use ejet_ml::baselines::{KnnModel, KnnParams};
use ejet_ml::cart::{best_split, grow, prune_relative, render, TreeNode, TreeParams};
use ejet_ml::dataset::{label_by_threshold, stratified_split_indices, ScalerParams};
use ejet_ml::metrics::{roc_curve, ConfusionMatrix, PrecisionConvention};
use ejet_ml::validation::make_folds;
use ejet_ml::{Class, Dataset, Features, Model, ModelSpec, PrintSample};
use proptest::prelude::*;

fn class(b: bool) -> Class {
    if b {
        Class::High
    } else {
        Class::Low
    }
}

fn ds(rows: &[(Features, bool)]) -> Dataset {
    Dataset::new(
        rows.iter()
            .map(|(x, y)| PrintSample::new(x[0], x[1], x[2]).with_label(class(*y)))
            .collect(),
    )
}

/// Rows on a coarse grid so that ties in every feature are common.
fn grid_rows(max: usize) -> impl Strategy<Value = Vec<(Features, bool)>> {
    prop::collection::vec(((0u8..5, 0u8..3, 0u8..6), any::<bool>()), 1..=max).prop_map(|v| {
        v.into_iter()
            .map(|((a, b, c), y)| ([a as f64 * 100.0, b as f64, c as f64 * 2.5], y))
            .collect()
    })
}

fn real_rows(min: usize, max: usize) -> impl Strategy<Value = Vec<(Features, bool)>> {
    prop::collection::vec(((0.0..10.0f64, 0.0..10.0f64, 0.0..10.0f64), any::<bool>()), min..=max)
        .prop_map(|v| v.into_iter().map(|((a, b, c), y)| ([a, b, c], y)).collect())
}

fn gini(c0: usize, c1: usize) -> f64 {
    let n = (c0 + c1) as f64;
    let (p0, p1) = (c0 as f64 / n, c1 as f64 / n);
    1.0 - p0 * p0 - p1 * p1
}

fn brute_force(rows: &[(Features, bool)], min_leaf: usize) -> Option<(usize, f64, f64)> {
    let n = rows.len();
    let c1 = rows.iter().filter(|r| r.1).count();
    let parent = gini(n - c1, c1);
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..3 {
        let mut vals: Vec<f64> = rows.iter().map(|r| r.0[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let nl = rows.iter().filter(|r| r.0[f] < t).count();
            let l1 = rows.iter().filter(|r| r.0[f] < t && r.1).count();
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let d = parent
                - nl as f64 / n as f64 * gini(nl - l1, l1)
                - nr as f64 / n as f64 * gini(nr - (c1 - l1), c1 - l1);
            if d > 1e-12 && best.map_or(true, |b| d > b.2) {
                best = Some((f, t, d));
            }
        }
    }
    best
}

fn leaves_with_rows<'a>(node: &'a TreeNode, out: &mut Vec<&'a TreeNode>) {
    match node {
        TreeNode::Leaf { .. } => out.push(node),
        TreeNode::Internal { left, right, .. } => {
            leaves_with_rows(left, out);
            leaves_with_rows(right, out);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn split_matches_brute_force(rows in grid_rows(12), min_leaf in 1usize..4) {
        let xs: Vec<Features> = rows.iter().map(|r| r.0).collect();
        let ys: Vec<Class> = rows.iter().map(|r| class(r.1)).collect();
        let got = best_split(&xs, &ys, None, min_leaf).map(|s| (s.feature, s.threshold, s.decrease));
        prop_assert_eq!(got, brute_force(&rows, min_leaf));
    }

    #[test]
    fn unit_weights_equal_unweighted(rows in grid_rows(12)) {
        let xs: Vec<Features> = rows.iter().map(|r| r.0).collect();
        let ys: Vec<Class> = rows.iter().map(|r| class(r.1)).collect();
        let w = vec![1.0; xs.len()];
        prop_assert_eq!(best_split(&xs, &ys, Some(&w), 1), best_split(&xs, &ys, None, 1));
    }

    #[test]
    fn pruning_laws(rows in real_rows(5, 80), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let t = grow(&ds(&rows), &TreeParams::unpruned()).unwrap();
        prop_assert_eq!(prune_relative(&t, 0.0), t.clone());
        prop_assert!(prune_relative(&t, 1.0).is_leaf());
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(prune_relative(&t, hi).node_count() <= prune_relative(&t, lo).node_count());
        prop_assert_eq!(prune_relative(&prune_relative(&t, a), b), prune_relative(&t, a.max(b)));
    }

    #[test]
    fn growth_ignores_row_order(rows in real_rows(2, 60), rot in 0usize..60) {
        let mut shuffled = rows.clone();
        let k = rot % rows.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        let p = TreeParams::default();
        prop_assert_eq!(grow(&ds(&rows), &p).unwrap(), grow(&ds(&shuffled), &p).unwrap());
    }

    #[test]
    fn routing_reproduces_leaf_counts(rows in real_rows(1, 60)) {
        let t = grow(&ds(&rows), &TreeParams::unpruned()).unwrap();
        let mut leaves = Vec::new();
        leaves_with_rows(&t, &mut leaves);
        for leaf in &leaves {
            let mut counts = [0usize; 2];
            for (x, y) in &rows {
                if std::ptr::eq(t.route(x), *leaf) {
                    counts[*y as usize] += 1;
                }
            }
            prop_assert_eq!(counts, leaf.counts());
        }
        prop_assert_eq!(render(&t).lines().count(), t.node_count());
    }

    #[test]
    fn auc_equals_mann_whitney(
        pairs in prop::collection::vec((0u8..5, any::<bool>()), 2..50)
    ) {
        let scores: Vec<f64> = pairs.iter().map(|p| p.0 as f64 / 4.0).collect();
        let labels: Vec<Class> = pairs.iter().map(|p| class(p.1)).collect();
        let pos = labels.iter().filter(|c| **c == Class::High).count();
        prop_assume!(pos > 0 && pos < labels.len());
        let mut wins = 0.0;
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] == Class::High && labels[j] == Class::Low {
                    wins += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
                }
            }
        }
        let mw = wins / (pos * (labels.len() - pos)) as f64;
        let curve = roc_curve(&scores, &labels).unwrap();
        prop_assert!((curve.auc() - mw).abs() <= 1e-12);
        for w in curve.points.windows(2) {
            prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
        prop_assert_eq!(curve.points[0], (0.0, 0.0));
        prop_assert_eq!(*curve.points.last().unwrap(), (1.0, 1.0));
    }

    #[test]
    fn f1_is_convention_free_and_kappa_bounded(tn in 0usize..300, fp in 0usize..300, fn_ in 0usize..300, tp in 0usize..300) {
        let cm = ConfusionMatrix { tn, fp, fn_, tp };
        let a = cm.f1_with(PrecisionConvention::Standard);
        let b = cm.f1_with(PrecisionConvention::Swapped);
        match (a, b) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-12),
            (a, b) => prop_assert_eq!(a.is_none(), b.is_none()),
        }
        if let Some(k) = cm.kappa() {
            prop_assert!(k <= 1.0 + 1e-15 && k >= -1.0 - 1e-15);
            prop_assert_eq!(k == 1.0, fp == 0 && fn_ == 0);
        }
        if cm.total() > 0 {
            prop_assert!((cm.accuracy() + cm.misclassification() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn split_partitions_samples(n0 in 1usize..60, n1 in 1usize..60, frac in 0.05..0.95f64, seed: u64) {
        let rows: Vec<(Features, bool)> = (0..n0 + n1).map(|i| ([i as f64, 1.0, 1.0], i >= n0)).collect();
        let d = ds(&rows);
        let (train, test) = stratified_split_indices(&d, frac, seed).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).cloned().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n0 + n1).collect::<Vec<_>>());
        prop_assert_eq!(test.len(), ((n0 + n1) as f64 * frac).round() as usize);
        for (c, n) in [(0usize, n0), (1, n1)] {
            let got = test.iter().filter(|&&i| (i >= n0) as usize == c).count() as f64;
            // a single adjustment may move one class by one sample past its own rounding
            prop_assert!((got - n as f64 * frac).abs() < 1.5, "class {} took {} of {}", c, got, n);
        }
    }

    #[test]
    fn folds_partition_with_balanced_sizes(n0 in 10usize..80, n1 in 10usize..80, k in 2usize..10, seed: u64) {
        let rows: Vec<(Features, bool)> = (0..n0 + n1).map(|i| ([i as f64, 1.0, 1.0], i >= n0)).collect();
        let plan = make_folds(&ds(&rows), k, seed, true).unwrap();
        let sizes = plan.fold_sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for c in 0..2 {
            let mut per = vec![0usize; k];
            for (i, f) in plan.assignments.iter().enumerate() {
                if (i >= n0) as usize == c {
                    per[*f] += 1;
                }
            }
            prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn standardization_round_trips(rows in real_rows(2, 40)) {
        let xs: Vec<Features> = rows.iter().map(|r| r.0).collect();
        let sp = ScalerParams::fit(&xs).unwrap();
        for x in &xs {
            let back = sp.inverse(&sp.transform(x));
            for j in 0..3 {
                if !sp.constant[j] {
                    prop_assert!((back[j] - x[j]).abs() <= 1e-12 * x[j].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn labeling_is_total(res in prop::collection::vec(1.0..400.0f64, 1..40), threshold in 10.0..300.0f64) {
        let d = Dataset::new(res.iter().map(|&r| PrintSample::new(300.0, 1.0, 9.0).with_resistance(r)).collect());
        let labeled = label_by_threshold(&d, threshold).unwrap();
        for (s, r) in labeled.samples.iter().zip(&res) {
            prop_assert_eq!(s.label, Some(if *r >= threshold { Class::Low } else { Class::High }));
            prop_assert_eq!(s.resistance, Some(*r));
        }
    }

    #[test]
    fn one_nearest_neighbour_memorizes(rows in real_rows(1, 40)) {
        let mut seen = std::collections::HashSet::new();
        let distinct: Vec<(Features, bool)> = rows
            .into_iter()
            .filter(|r| seen.insert(r.0.map(f64::to_bits)))
            .collect();
        let d = ds(&distinct);
        let m = KnnModel::fit(&d, KnnParams { k: 1 }).unwrap();
        for (x, y) in &distinct {
            prop_assert_eq!(m.predict(x).0, class(*y));
        }
    }

    #[test]
    fn logreg_gradient_matches_finite_differences(
        rows in real_rows(3, 30),
        w in prop::array::uniform3(-1.0..1.0f64),
        b in -1.0..1.0f64,
    ) {
        let xs: Vec<Features> = rows.iter().map(|r| r.0.map(|v| v / 5.0 - 1.0)).collect();
        let ys: Vec<Class> = rows.iter().map(|r| class(r.1)).collect();
        let (_, gw, gb) = loss_and_gradient(&xs, &ys, &w, b);
        let h = 1e-5;
        for j in 0..4 {
            let at = |d: f64| {
                let mut w2 = w;
                let mut b2 = b;
                if j < 3 { w2[j] += d } else { b2 += d }
                loss(&xs, &ys, &w2, b2)
            };
            let num = (at(h) - at(-h)) / (2.0 * h);
            let ana = if j < 3 { gw[j] } else { gb };
            prop_assert!((num - ana).abs() <= 1e-5 * ana.abs().max(num.abs()).max(1e-3), "{} vs {}", num, ana);
        }
    }

    #[test]
    fn logreg_loss_never_increases_at_small_rate(rows in real_rows(4, 40)) {
        prop_assume!(rows.iter().any(|r| r.1) && rows.iter().any(|r| !r.1));
        let params = LogregParams { lr: 0.01, max_epochs: 300, tol: 1e-12 };
        let (_, history) = fit_logreg_with_history(&ds(&rows), &params).unwrap();
        for w in history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn saved_models_predict_identically(rows in real_rows(12, 40), probe in prop::array::uniform3(-5.0..15.0f64)) {
        prop_assume!(rows.iter().filter(|r| r.1).count() >= 2 && rows.iter().filter(|r| !r.1).count() >= 2);
        let d = ds(&rows);
        for spec in [ModelSpec::tree(), ModelSpec::forest(5, 1), ModelSpec::knn(3), ModelSpec::logreg(), ModelSpec::adaboost(4)] {
            let Ok(m) = spec.fit(&d) else { continue };
            let back = Model::from_json(&m.to_json().unwrap()).unwrap();
            let (c, s) = m.predict(&probe);
            prop_assert_eq!(back.predict(&probe), (c, s));
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
