//! Builds the standard lattice on a uniform grid of `[0,1)`, then a greedy
//! lattice on the same space, and checks both.

use dyadic_gehring::examples::unit_interval_space;
use dyadic_gehring::lattice::{build_lattice_auto, parent_doubling_constant, verify_lattice};

fn main() -> dyadic_gehring::Result<()> {
    let (space, standard) = unit_interval_space(64)?;
    let report = verify_lattice(&standard, &space);
    println!("standard: {} cubes, levels {}..{}", standard.len(), standard.k_min(), standard.k_max());
    println!("  partition {} nesting {} sandwich {}", report.partition_ok, report.nesting_ok, report.sandwich_ok);
    println!("  D = {}", parent_doubling_constant(&standard).0);

    for k in 0..=2 {
        let cubes: Vec<String> = standard
            .generation(k)
            .iter()
            .map(|&q| {
                let m = &standard.cube(q).members;
                format!("[{}..{}]", m[0], m[m.len() - 1])
            })
            .collect();
        println!("  level {k}: {}", cubes.join(" "));
    }

    let greedy = build_lattice_auto(&space, 0.5, 7)?;
    let report = verify_lattice(&greedy, &space);
    let (d, witness) = parent_doubling_constant(&greedy);
    println!("greedy (seed 7): {} cubes, passed {}, D = {d} at {witness:?}", greedy.len(), report.passed());
    Ok(())
}
