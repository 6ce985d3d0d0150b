// Metrics for three tree confusion matrices (rows actual, columns predicted).

use ejet_ml::format;
use ejet_ml::metrics::{ConfusionMatrix, EvalReport, PrecisionConvention};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let trees = [
        ("default", [[142, 12], [20, 65]]),
        ("pruned", [[149, 5], [31, 54]]),
        ("highly_pruned", [[125, 29], [24, 61]]),
    ];
    println!("{}", EvalReport::csv_header());
    for (name, rows) in trees {
        let cm = ConfusionMatrix::from_rows(rows);
        let r = EvalReport::from_confusion(name, cm, None, PrecisionConvention::Standard);
        println!("{}", r.csv_row());
    }

    let cm = ConfusionMatrix::from_rows(trees[0].1);
    let swapped = cm.precision_with(PrecisionConvention::Swapped).unwrap();
    println!(
        "precision {} (swapped {}), f1 {} either way",
        format::real(cm.precision().unwrap()),
        format::real(swapped),
        format::real(cm.f1_with(PrecisionConvention::Swapped).unwrap())
    );
    println!("random accuracy {}", format::real(cm.random_accuracy()));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
