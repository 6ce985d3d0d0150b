// Grow the default CART tree, then prune it at increasing complexity.

use ejet_ml::cart::{best_split, DecisionTree, TreeParams};
use ejet_ml::synthgen::{generate, GeneratorConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let ds = generate(&GeneratorConfig::default())?;
    let (xs, ys) = ds.labeled()?;
    if let Some(s) = best_split(&xs, &ys, None, 1) {
        println!("best root split: feature {} < {} (gini decrease {:.4})", s.feature, s.threshold, s.decrease);
    }

    let tree = DecisionTree::fit(&ds, TreeParams::default())?;
    println!("default tree, {} nodes:\n{}", tree.root.node_count(), tree.render());

    let unpruned = DecisionTree::fit(&ds, TreeParams::unpruned())?;
    for cp in [0.0, 0.01, 0.05, 0.2, 1.0] {
        let t = unpruned.pruned(cp)?;
        println!("cp {cp:<4}: {:>3} nodes, depth {}", t.root.node_count(), t.root.depth());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
