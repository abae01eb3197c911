//! Weights and spaces shared by the acceptance criteria.

use dyadic_gehring::examples::{
    haircomb_space, haircomb_weight, power_log_weight, Discretization, HaircombSpec, Profile,
};
use dyadic_gehring::lattice::{build_lattice_auto, DyadicLattice};
use dyadic_gehring::space::FiniteSpace;
use dyadic_gehring::weights::Weight;

/// Cell averages of `t^beta` on `n` cells of `[0,1)`.
pub fn power(n: usize, beta: f64) -> Weight {
    power_log_weight(n, Profile::power(beta).unwrap(), Discretization::CellAverage).unwrap()
}

/// 4 on `[0, 1/4)`, 1 elsewhere.
pub fn two_value(n: usize) -> Weight {
    Weight::new((0..n).map(|i| if i < n / 4 { 4.0 } else { 1.0 }).collect()).unwrap()
}

pub fn single_tooth() -> (FiniteSpace, Weight, DyadicLattice) {
    let mut spec = HaircombSpec::new(1, 0.5, 0.01).unwrap();
    spec.eps = vec![1.0 / 16.0];
    let space = haircomb_space(&spec).unwrap();
    let weight = haircomb_weight(&space, &spec).unwrap();
    let lattice = build_lattice_auto(&space, 0.5, 11).unwrap();
    (space, weight, lattice)
}

pub fn comb(teeth: usize, resolution: f64) -> (HaircombSpec, FiniteSpace, Weight) {
    let spec = HaircombSpec::new(teeth, 0.5, resolution).unwrap();
    let space = haircomb_space(&spec).unwrap();
    let weight = haircomb_weight(&space, &spec).unwrap();
    (spec, space, weight)
}
