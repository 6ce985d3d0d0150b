// Save a model, load it back and gate candidate print settings.

use ejet_ml::synthgen::{generate, GeneratorConfig};
use ejet_ml::{Class, Model, ModelSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let ds = generate(&GeneratorConfig::default())?;
    let model = ModelSpec::pruned_tree(0.05).fit(&ds)?;

    let dir = std::env::temp_dir().join(format!("ejet-gating-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("tree.json");
    std::fs::write(&path, model.to_json()?)?;
    let loaded = Model::load(&path)?;
    std::fs::remove_dir_all(&dir)?;

    for x in [[300.0, 2.0, 15.0], [500.0, 1.0, 9.0], [700.0, 3.0, 15.0], [300.0, 4.0, 3.0]] {
        let (class, score) = loaded.predict(&x);
        assert_eq!((class, score), model.predict(&x));
        let gate = if class == Class::High { "GO" } else { "NO-GO" };
        println!("speed {:>3}, {} kV, flow {:>2}: score {score:.2} {gate}", x[0], x[1], x[2]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
