//! Characteristics of power weights on `[0,1)` over cubes and balls, and how
//! the dyadic reverse Hölder characteristic of `t^(-1/2)` behaves as the
//! exponent approaches 2.

use dyadic_gehring::examples::{power_log_weight, unit_interval_space, Discretization, Profile};
use dyadic_gehring::growth::Classifier;
use dyadic_gehring::weights::{
    ainfty_fujii_wilson, ap_characteristic, c1_parent_condition, doubling_ball, dyadic_depth_table, rh_characteristic,
    BallFamily, ClassId, Family,
};

fn main() -> dyadic_gehring::Result<()> {
    let n = 512;
    let (space, lattice) = unit_interval_space(n)?;
    let balls = BallFamily::all(&space)?;
    let cubes = Family::dyadic(&lattice);

    println!(
        "{:<10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "weight", "RH2 cube", "RH2 ball", "A2 cube", "A_inf", "Db", "C1"
    );
    for beta in [0.0, 1.0, -0.3, -0.5] {
        let w = power_log_weight(n, Profile::power(beta)?, Discretization::CellAverage)?;
        println!(
            "{:<10} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            format!("t^{beta}"),
            rh_characteristic(&w, &space, &cubes, 2.0)?.value,
            rh_characteristic(&w, &space, &Family::Balls(&balls), 2.0)?.value,
            ap_characteristic(&w, &space, &cubes, 2.0)?.value,
            ainfty_fujii_wilson(&w, &space, &balls)?.value,
            doubling_ball(&w, &space, &balls, 2.0)?.value,
            c1_parent_condition(&w, &space, &lattice)?.value,
        );
    }

    // t^(-1/2) is in RH_q exactly for q < 2.
    let w = power_log_weight(n, Profile::power(-0.5)?, Discretization::CellAverage)?;
    for q in [1.5, 1.9, 2.0, 2.2] {
        let table = dyadic_depth_table(&w, &space, &lattice, ClassId::RhDyadic, q)?;
        let growth = Classifier::IncrementTrend { power: q }.classify(&table);
        let values: Vec<String> = table.values().iter().map(|v| format!("{v:.3}")).collect();
        println!("RH_{q} by depth: {} -> {growth}", values.join(" "));
    }
    Ok(())
}
