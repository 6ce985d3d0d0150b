// AdaBoost over decision stumps and its accuracy as rounds are added.

use ejet_ml::ensembles::{fit_adaboost_traced, BoostParams};
use ejet_ml::synthgen::{generate, GeneratorConfig};
use ejet_ml::validation::sweep_ntrees;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let ds = generate(&GeneratorConfig::default())?;
    let (model, weights) = fit_adaboost_traced(&ds, &BoostParams { n_stumps: 10, seed: 42 })?;
    for (t, ((s, a), e)) in model.stumps.iter().zip(&model.alphas).zip(&model.training_errors).enumerate() {
        let sum: f64 = weights[t].iter().sum();
        println!(
            "round {:>2}: feature {} < {:<5} above={} eps={:.3} alpha={:.3} weight sum {sum:.12}",
            t + 1, s.feature, s.threshold, s.above, e, a
        );
    }
    let (xs, ys) = ds.labeled()?;
    let wrong = xs.iter().zip(&ys).filter(|(x, y)| model.predict(x).0 != **y).count();
    println!(
        "training error {:.3} <= bound {:.3}",
        wrong as f64 / xs.len() as f64,
        model.training_error_bound()
    );

    let sweep = sweep_ntrees(&ds, &[1, 5, 10, 15, 20], 10, 42)?;
    print!("{}", sweep.to_csv());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
