// Stratified 10-fold CV, bootstrap evaluation and the cp sweep.

use ejet_ml::metrics::PrecisionConvention;
use ejet_ml::synthgen::{generate, GeneratorConfig};
use ejet_ml::validation::{bootstrap_validate, cross_validate, make_folds, sweep_cp};
use ejet_ml::ModelSpec;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let ds = generate(&GeneratorConfig::default())?;
    let plan = make_folds(&ds, 10, 42, true)?;
    println!("fold sizes {:?}", plan.fold_sizes());

    for spec in [ModelSpec::tree(), ModelSpec::forest(100, 42), ModelSpec::logreg(), ModelSpec::knn(10)] {
        let r = cross_validate(&spec, &ds, 10, 42)?;
        let pooled = r.pooled_report(&ds, PrecisionConvention::Standard)?;
        println!(
            "{:<10} accuracy {:.3} +- {:.3}, pooled AUC {:.3}",
            r.model_name,
            r.accuracy.mean,
            r.accuracy.sd,
            pooled.auc.unwrap_or(f64::NAN)
        );
    }

    let boot = bootstrap_validate(&ModelSpec::adaboost(10), &ds, 25, 42)?;
    println!("adaboost bootstrap accuracy {:.3} +- {:.3}", boot.accuracy.mean, boot.accuracy.sd);

    print!("{}", sweep_cp(&ds, &[0.0, 0.01, 0.05, 0.1, 0.2], 10, 42)?.to_csv());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
