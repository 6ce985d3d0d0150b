// Random forest: feature importance and out-of-bag error.

use ejet_ml::dataset::FEATURE_NAMES;
use ejet_ml::ensembles::{feature_importance, fit_forest, forest_predict, oob_error, ForestParams};
use ejet_ml::synthgen::{generate, GeneratorConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let ds = generate(&GeneratorConfig::default())?;
    let forest = fit_forest(&ds, &ForestParams::default())?;

    let imp = feature_importance(&forest)?;
    for (name, v) in FEATURE_NAMES.iter().zip(imp) {
        println!("{name:<13} {v:.3}");
    }
    let oob = oob_error(&forest, &ds)?;
    println!("OOB error {:.3} over {} samples ({} never out of bag)", oob.error, oob.voted, oob.skipped);

    let (class, score) = forest_predict(&forest, &[300.0, 2.0, 12.0]);
    println!("speed 300, 2 kV, 12 ul/min -> class {class} ({score:.2} of trees)");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
