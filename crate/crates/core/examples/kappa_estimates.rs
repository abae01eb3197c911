//! Quasi-triangle and doubling constants of a few spaces, and the a priori
//! bound on the parent constant of a lattice built on them.

use dyadic_gehring::examples::{gaussian_line_space, unit_interval_space};
use dyadic_gehring::lattice::{appendix_parent_bound, build_lattice_auto, parent_doubling_constant, verify_lattice};
use dyadic_gehring::space::{estimate_kappa0, kappa1_exhaustive, FiniteSpace, Metric, Sampling};

fn show(name: &str, space: &FiniteSpace) -> dyadic_gehring::Result<()> {
    let k0 = estimate_kappa0(space, Sampling::Exhaustive)?;
    let centers: Vec<usize> = (0..space.len()).collect();
    let k1 = kappa1_exhaustive(space, &centers)?;
    let lattice = build_lattice_auto(space, 0.5, 0)?;
    let rep = verify_lattice(&lattice, space);
    let bound = appendix_parent_bound(k0, k1.value, rep.r0, rep.big_r0, lattice.delta())?;
    println!(
        "{name:<22} kappa0 = {k0:<8.4} kappa1 = {:<8.4} D = {:<8.4} bound = {bound:.3e}",
        k1.value,
        parent_doubling_constant(&lattice).0
    );
    Ok(())
}

fn main() -> dyadic_gehring::Result<()> {
    let (interval, _) = unit_interval_space(128)?;
    show("interval", &interval)?;
    show("gaussian line", &gaussian_line_space(128, 3.0)?)?;

    // Squaring a metric gives a quasi-metric with kappa0 = 2.
    let coords: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64 / 64.0]).collect();
    let snow = FiniteSpace::new(coords, vec![1.0 / 64.0; 64], Metric::Snowflake(2.0))?;
    show("squared distance", &snow)?;
    Ok(())
}
