//! The stopping tree of a weight with a spike, generation masses, and the
//! good/bad split of the root cube.

use dyadic_gehring::examples::unit_interval_space;
use dyadic_gehring::stopping::{decay_constant, good_bad_decomposition, stopping_tree_with, CubeMeans};
use dyadic_gehring::weights::Weight;

fn main() -> dyadic_gehring::Result<()> {
    let n = 1024;
    let (space, lattice) = unit_interval_space(n)?;
    // Large on [0, 1/64), small on [1/2, 1).
    let w = Weight::new(
        (0..n)
            .map(|i| {
                if i < n / 64 {
                    200.0
                } else if i >= n / 2 {
                    0.05
                } else {
                    1.0
                }
            })
            .collect(),
    )?;
    let means = CubeMeans::new(&lattice, &space, &w)?;
    let root = lattice.roots()[0];

    for lambda in [2.0, 4.0, 16.0] {
        let tree = stopping_tree_with(&lattice, &means, root, lambda, 32)?;
        let masses: Vec<String> = tree.generation_masses(&means).iter().map(|m| format!("{m:.4}")).collect();
        println!(
            "lambda {lambda:>4}: {} nodes, c = {:.4}, generation masses {}",
            tree.nodes.len(),
            decay_constant(&tree, &means),
            masses.join(" ")
        );
        for node in tree.nodes.iter().skip(1).take(4) {
            let kind = node.kind.map_or("-".to_string(), |k| k.to_string());
            println!("    generation {} cube {} {kind} mean {:.4}", node.generation, node.cube, node.mean);
        }
    }

    let d = good_bad_decomposition(&lattice, &space, &w, root, 4.0)?;
    println!(
        "root at lambda 4: high {:.4} + low {:.4} + good {:.4} = {:.4}",
        d.mass_high, d.mass_low, d.mass_good, d.mass_q
    );
    Ok(())
}
