//! The two variants of the certificate: with the parent condition in place of
//! measure doubling, and the ball version for doubling weights, including the
//! refusal on a non-doubling weight.

use dyadic_gehring::examples::{
    haircomb_space, haircomb_weight, power_log_weight, tooth_family, unit_interval_space, Discretization, HaircombSpec,
    Profile, ToothFamily,
};
use dyadic_gehring::gehring::{corollary41_mode, doubling_weight_ball_mode, BallModeOutcome, ParentConditionOutcome};
use dyadic_gehring::growth::Classifier;
use dyadic_gehring::weights::BallFamily;

fn main() -> dyadic_gehring::Result<()> {
    let n = 1024;
    let (space, lattice) = unit_interval_space(n)?;
    let w = power_log_weight(n, Profile::power(-0.5)?, Discretization::CellAverage)?;

    match corollary41_mode(&w, &space, &lattice, 1.5)? {
        ParentConditionOutcome::Certified { c1, run } => {
            println!(
                "parent condition C1 = {:.4}, epsilon = {:.3e}, sound {}",
                c1.value,
                run.certificate.epsilon,
                run.sound()
            );
        }
        ParentConditionOutcome::Refused { reason, .. } => println!("refused: {reason}"),
    }

    let centers: Vec<usize> = (0..n).collect();
    let families = (2..=8)
        .map(|k| BallFamily::with_range(centers.clone(), 0.5f64.powi(k), 1.0))
        .collect::<dyadic_gehring::Result<Vec<_>>>()?;
    report(doubling_weight_ball_mode(&w, &space, &families, &[1.5, 1.7], 2.0, Classifier::DEFAULT_THRESHOLDS)?);

    let spec = HaircombSpec::new(8, 0.5, 0.01)?;
    let comb = haircomb_space(&spec)?;
    let cw = haircomb_weight(&comb, &spec)?;
    let families = (1..=spec.teeth)
        .map(|j| tooth_family(&comb, &spec, j, ToothFamily::default()))
        .collect::<dyadic_gehring::Result<Vec<_>>>()?;
    report(doubling_weight_ball_mode(&cw, &comb, &families, &[1.5], 2.0, Classifier::DEFAULT_THRESHOLDS)?);
    Ok(())
}

fn report(outcome: BallModeOutcome) {
    match outcome {
        BallModeOutcome::Bound { d_w, rows, .. } => {
            for r in rows {
                println!("D_w = {d_w:.3}: q = {} implied {:.4} >= measured {:.4}", r.q, r.implied, r.measured);
            }
        }
        BallModeOutcome::Refused { db_table, witness, family } => {
            println!(
                "refused: doubling constant grows {:.1}x across families, witness {} in family {family}",
                db_table.last_over_first(),
                witness.map_or("-".to_string(), |w| w.to_string())
            );
        }
    }
}
