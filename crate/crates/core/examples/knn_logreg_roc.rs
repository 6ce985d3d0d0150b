// KNN and logistic regression on a held-out split, compared by ROC AUC.

use ejet_ml::baselines::{fit_logreg, KnnModel, KnnParams, LogregParams};
use ejet_ml::dataset::stratified_split;
use ejet_ml::metrics::roc_curve;
use ejet_ml::synthgen::{generate, GeneratorConfig};
use ejet_ml::Features;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let ds = generate(&GeneratorConfig::default())?;
    let (train, test) = stratified_split(&ds, 0.3, 42)?;
    let (xs, ys) = test.labeled()?;

    let lr = fit_logreg(&train, &LogregParams::default())?;
    println!("logreg: w = {:.3?}, b = {:.3}, loss {:.4} after {} epochs", lr.weights, lr.bias, lr.final_loss, lr.epochs_run);
    let mut curves = vec![("logreg", score_all(&xs, |x| lr.predict(x).1))];
    for k in [3, 10] {
        let knn = KnnModel::fit(&train, KnnParams { k })?;
        curves.push((if k == 3 { "knn3" } else { "knn10" }, score_all(&xs, |x| knn.predict(x).1)));
    }
    for (name, scores) in curves {
        let curve = roc_curve(&scores, &ys)?;
        println!("{name:<7} AUC {:.3} ({} ROC points)", curve.auc(), curve.points.len());
    }
    Ok(())
}

fn score_all(xs: &[Features], f: impl Fn(&Features) -> f64) -> Vec<f64> {
    xs.iter().map(f).collect()
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
