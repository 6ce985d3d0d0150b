// Synthesize a labeled print dataset, write it as CSV, read it back and split it.

use ejet_ml::dataset::{label_by_threshold, stratified_split, Dataset};
use ejet_ml::synthgen::{generate, resistance_model, GeneratorConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = GeneratorConfig { seed: 7, ..Default::default() };
    for (s, v, f) in [(300.0, 2.5, 15.0), (700.0, 2.5, 15.0), (300.0, 2.5, 3.0)] {
        println!("mean resistance at ({s}, {v}, {f}) = {}", resistance_model(s, v, f, &cfg));
    }

    let ds = generate(&cfg)?;
    let [low, high] = ds.class_counts();
    println!("{} samples: {low} low-conductance, {high} high-conductance", ds.len());

    let csv = ds.to_csv_string();
    print!("{}", csv.lines().take(4).collect::<Vec<_>>().join("\n") + "\n");
    let back = Dataset::read_csv(csv.as_bytes())?;
    assert_eq!(back.len(), ds.len());

    // relabel with a stricter cut
    let strict = label_by_threshold(&Dataset::new(
        back.samples.iter().map(|s| ejet_ml::PrintSample { label: None, ..s.clone() }).collect(),
    ), 80.0)?;
    println!("class counts at 80 ohm/sqr: {:?}", strict.class_counts());

    let (train, test) = stratified_split(&ds, 0.2, cfg.seed)?;
    println!("train {:?}, test {:?}", train.class_counts(), test.class_counts());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
