//! The haircomb: a doubling space with a weight whose dyadic reverse Hölder
//! characteristic grows tooth by tooth while the ball one stays put, and that
//! is not doubling.

use dyadic_gehring::examples::{
    haircomb_nondoubling_report, haircomb_rh_boundary, haircomb_space, haircomb_weight, HaircombSpec, ToothFamily,
};
use dyadic_gehring::lattice::build_lattice_auto;

fn main() -> dyadic_gehring::Result<()> {
    let spec = HaircombSpec::new(6, 0.5, 0.005)?;
    let space = haircomb_space(&spec)?;
    let w = haircomb_weight(&space, &spec)?;
    println!("{} teeth, {} points", spec.teeth, space.len());

    for row in haircomb_nondoubling_report(&space, &w, &spec)? {
        println!(
            "tooth {}: eps {:.4}  w(B) {:.5}  w(2B) {:.4}  w(2B)/w(B) {:.2}",
            row.tooth, row.eps, row.w_ball, row.w_double, row.ratio
        );
    }

    let lattice = build_lattice_auto(&space, 0.5, 11)?;
    for row in haircomb_rh_boundary(&space, &w, &spec, &lattice, &[2.0, 3.0], ToothFamily::default(), None)? {
        let fmt = |v: Vec<f64>| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
        println!("p = {}: ball {} [{}]", row.p, row.ball_growth, fmt(row.ball.values()));
        println!("       dyadic {} [{}]", row.dyadic_growth, fmt(row.dyadic.values()));
    }
    Ok(())
}
