//! Self-improvement of dyadic reverse Hölder weights.
//!
//! With `λ` large enough the stopping time decays with some measured
//! `c < 1`. Then `∫_{G_n} w^p ≤ a^(n-1) ∫_Q w^p` with
//! `1 - a = (1 - c) / (λ^p [w]^p)`, and any `ε` with `(Dλ)^ε a < 1` gives
//! `⟨Q⟩w^(p+ε) ≤ A [w]^p ⟨Q⟩w^(p+ε)` where `A = Σ_n (Dλ)^(nε) a^(n-1)`.

use crate::error::{Error, Result};
use crate::growth::{Classifier, Growth, GrowthTable};
use crate::lattice::{parent_doubling_constant, DyadicLattice};
use crate::space::FiniteSpace;
use crate::stopping::{decay_over_lattice, generation_profile, CubeMeans, StoppingTree};
use crate::weights::{
    c1_parent_condition, doubling_ball, dyadic_depth_table, rh_characteristic, weak_rh_characteristic, BallFamily,
    CharacteristicReport, ClassId, Family, Weight, Witness,
};

pub const DEFAULT_MARGIN: f64 = 1e-6;

/// Which constant plays the role of `D` in the certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `D` is the parent constant `max μ(Q̂)/μ(Q)` of the measure.
    Standard,
    /// `D` is `C1 = max ⟨Q⟩w/⟨Q̂⟩w`; no doubling of `μ` is used.
    ParentCondition,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Standard => "standard",
            Mode::ParentCondition => "parent-condition",
        })
    }
}

/// Where the certificate's inputs came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub lattice_seed: Option<u64>,
    pub depth: Option<(i32, i32)>,
    pub cubes: Option<usize>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GehringCertificate {
    pub p: f64,
    pub rh_char: f64,
    pub d: f64,
    pub lambda: f64,
    pub lambda_threshold: f64,
    pub c: f64,
    pub a: f64,
    /// `a` with `[w]` in place of `[w]^p` in the denominator.
    pub a_literal: f64,
    pub epsilon: f64,
    pub big_a: f64,
    /// Bound on the dyadic `RH_{p+ε}` characteristic.
    pub char_bound: f64,
    /// `ε < 1/(char_bound - 1)`.
    pub remark_holds: bool,
    pub mode: Mode,
    pub provenance: Provenance,
}

impl GehringCertificate {
    pub fn lambda_above_threshold(&self) -> bool {
        self.lambda >= self.lambda_threshold
    }

    /// `(Dλ)^ε a`, below 1 by construction.
    pub fn summability(&self) -> f64 {
        (self.d * self.lambda).powf(self.epsilon) * self.a
    }

    /// `Σ_{n=1}^{terms} (Dλ)^(nε) a^(n-1)`.
    pub fn partial_series(&self, terms: usize) -> f64 {
        let r = (self.d * self.lambda).powf(self.epsilon);
        let mut sum = 0.0;
        let mut term = r;
        for _ in 0..terms {
            sum += term;
            term *= r * self.a;
        }
        sum
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p <= crate::weights::MAX_EXPONENT {
        Ok(())
    } else {
        Err(Error::arg(format!("exponent {p} outside (1, 64]")))
    }
}

/// `max(3, (3 D [w]^p)^(1/(p-1)))` raised by the relative margin.
pub fn lambda_threshold_with_margin(d: f64, p: f64, rh_char: f64, margin: f64) -> Result<f64> {
    check_p(p)?;
    if !(d >= 1.0) || !(rh_char >= 1.0) || !(margin >= 0.0) {
        return Err(Error::arg(format!("need D >= 1, [w] >= 1, margin >= 0; got {d}, {rh_char}, {margin}")));
    }
    let raw = (3.0 * d * rh_char.powf(p)).powf(1.0 / (p - 1.0));
    Ok(raw.max(3.0) * (1.0 + margin))
}

pub fn lambda_threshold(d: f64, p: f64, rh_char: f64) -> Result<f64> {
    lambda_threshold_with_margin(d, p, rh_char, DEFAULT_MARGIN)
}

/// Measured characteristics within this distance below 1 are rounding.
const JENSEN_SLACK: f64 = 1e-9;

/// The constants `a`, `ε`, `A` and the resulting bound.
///
/// A `λ` below [`lambda_threshold`] is accepted and flagged: the chain only
/// needs the measured `c < 1`, which the threshold guarantees in general.
pub fn constructive_epsilon(p: f64, rh_char: f64, c: f64, d: f64, lambda: f64) -> Result<GehringCertificate> {
    check_p(p)?;
    if !(rh_char >= 1.0 - JENSEN_SLACK) || !rh_char.is_finite() {
        return Err(Error::arg(format!("[w] = {rh_char} must be a finite value >= 1")));
    }
    let rh = rh_char.max(1.0);
    if !(d >= 1.0) || !d.is_finite() {
        return Err(Error::arg(format!("D = {d} must be finite and >= 1")));
    }
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(Error::arg(format!("lambda = {lambda} must exceed 1")));
    }
    if !(c >= 0.0) {
        return Err(Error::arg(format!("decay constant {c} is negative")));
    }
    if c >= 1.0 {
        return Err(Error::NoDecay(c));
    }
    let one_minus_a = (1.0 - c) / (lambda.powf(p) * rh.powf(p));
    let a = 1.0 - one_minus_a;
    if !(a < 1.0) || !(one_minus_a > 0.0) {
        return Err(Error::Degenerate(format!("a = 1 - {one_minus_a:e} rounds to 1")));
    }
    let a_literal = 1.0 - (1.0 - c) / (lambda.powf(p) * rh);
    let log_inv_a = -(-one_minus_a).ln_1p();
    let dl = d * lambda;
    let epsilon = 0.5 * log_inv_a / dl.ln();
    let r = dl.powf(epsilon);
    let big_a = r / (1.0 - r * a);
    let char_bound = (big_a * rh.powf(p)).powf(1.0 / (p + epsilon));
    let remark_holds = char_bound <= 1.0 || epsilon < 1.0 / (char_bound - 1.0);
    Ok(GehringCertificate {
        p,
        rh_char,
        d,
        lambda,
        lambda_threshold: lambda_threshold(d, p, rh)?,
        c,
        a,
        a_literal,
        epsilon,
        big_a,
        char_bound,
        remark_holds,
        mode: Mode::Standard,
        provenance: Provenance::default(),
    })
}

/// A certificate together with the direct measurement it bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedRun {
    pub certificate: GehringCertificate,
    /// Dyadic `RH_p` report that fed `[w]`.
    pub rh_report: CharacteristicReport,
    /// Directly measured dyadic `RH_{p+ε}` report.
    pub measured: CharacteristicReport,
    /// Cube attaining the decay constant.
    pub decay_witness: Option<usize>,
}

impl CertifiedRun {
    /// Measured `RH_{p+ε}` characteristic does not exceed the bound.
    pub fn sound(&self) -> bool {
        self.measured.value <= self.certificate.char_bound
    }
}

/// Measures `[w]`, `D` (or `C1`) and `c` over every cube, builds the
/// certificate and measures the `RH_{p+ε}` characteristic it bounds.
///
/// With an atomic finest generation every step of the chain is an exact
/// finite inequality, so the bound is rigorous for the instance.
pub fn certify(
    weight: &Weight,
    space: &FiniteSpace,
    lattice: &DyadicLattice,
    p: f64,
    lambda: Option<f64>,
    mode: Mode,
) -> Result<CertifiedRun> {
    let family = Family::dyadic(lattice);
    let rh_report = rh_characteristic(weight, space, &family, p)?;
    let d = match mode {
        Mode::Standard => parent_doubling_constant(lattice).0,
        Mode::ParentCondition => {
            let c1 = c1_parent_condition(weight, space, lattice)?.value;
            if !c1.is_finite() {
                return Err(Error::Degenerate(format!("C1 = {c1}")));
            }
            c1.max(1.0)
        }
    };
    let rh = rh_report.value.max(1.0);
    let lambda = match lambda {
        Some(l) => l,
        None => lambda_threshold(d, p, rh)?,
    };
    let means = CubeMeans::new(lattice, space, weight)?;
    let (c, decay_witness) = decay_over_lattice(lattice, &means, lambda)?;
    let mut certificate = constructive_epsilon(p, rh_report.value, c, d, lambda)?;
    certificate.mode = mode;
    certificate.provenance = Provenance {
        lattice_seed: Some(lattice.seed()),
        depth: Some((lattice.k_min(), lattice.k_max())),
        cubes: Some(lattice.len()),
        points: Some(space.len()),
    };
    let measured = rh_characteristic(weight, space, &family, p + certificate.epsilon)?;
    Ok(CertifiedRun { certificate, rh_report, measured, decay_witness })
}

/// Per-generation check of `∫_{G_n} w^p ≤ a^(n-1) ∫_Q w^p` on a tree.
/// Returns the first failing generation, if any.
pub fn verify_generation_decay(
    tree: &StoppingTree,
    lattice: &DyadicLattice,
    space: &FiniteSpace,
    weight: &Weight,
    p: f64,
    a: f64,
) -> (bool, Option<usize>, usize) {
    let rows = generation_profile(tree, lattice, space, weight, p);
    let total = rows[0].wp_b;
    let mut checked = 0;
    for row in rows.iter().filter(|r| r.n >= 1) {
        checked += 1;
        if !(row.wp_g <= a.powi(row.n as i32 - 1) * total) {
            return (false, Some(row.n), checked);
        }
    }
    (true, None, checked)
}

/// One exponent of the empirical sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub q: f64,
    pub table: GrowthTable,
    pub growth: Growth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalReport {
    pub p: f64,
    /// Growth of the table at `p` itself; the sweep is meaningless unless flat.
    pub base: Growth,
    pub rows: Vec<SweepRow>,
    /// Largest grid exponent with every grid exponent up to it flat.
    pub p_plus_eps: Option<f64>,
}

impl EmpiricalReport {
    pub fn epsilon(&self) -> Option<f64> {
        self.p_plus_eps.map(|q| q - self.p)
    }
}

/// Depth tables of the dyadic `RH_q` characteristic (see
/// [`dyadic_depth_table`]) restricted to `depths`, classified per exponent.
/// `classifier = None` uses the increment rule with power `q`.
pub fn empirical_epsilon(
    weight: &Weight,
    space: &FiniteSpace,
    lattice: &DyadicLattice,
    p: f64,
    q_grid: &[f64],
    depths: (i32, i32),
    classifier: Option<Classifier>,
) -> Result<EmpiricalReport> {
    check_p(p)?;
    let classify = |q: f64| -> Result<(GrowthTable, Growth)> {
        let table =
            dyadic_depth_table(weight, space, lattice, ClassId::RhDyadic, q)?.window(depths.0 as f64, depths.1 as f64);
        let rule = classifier.unwrap_or(Classifier::IncrementTrend { power: q });
        let growth = rule.classify(&table);
        Ok((table, growth))
    };
    let (_, base) = classify(p)?;
    let mut rows = Vec::new();
    for &q in q_grid {
        let (table, growth) = classify(q)?;
        rows.push(SweepRow { q, table, growth });
    }
    let mut p_plus_eps = None;
    if base == Growth::Flat {
        let mut sorted: Vec<&SweepRow> = rows.iter().filter(|r| r.q > p).collect();
        sorted.sort_by(|a, b| a.q.total_cmp(&b.q));
        for row in sorted {
            if row.growth != Growth::Flat {
                break;
            }
            p_plus_eps = Some(row.q);
        }
    }
    Ok(EmpiricalReport { p, base, rows, p_plus_eps })
}

/// Grid `a, a+step, ..., ≤ b` (inclusive up to rounding).
pub fn q_grid(a: f64, b: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(b >= a) {
        return Err(Error::arg(format!("bad grid {a}:{b}:{step}")));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12).collect())
}

/// Result of the parent-condition mode.
#[derive(Debug, Clone, PartialEq)]
pub enum ParentConditionOutcome {
    Certified { c1: CharacteristicReport, run: Box<CertifiedRun> },
    Refused { c1: CharacteristicReport, table: GrowthTable, reason: String },
}

/// Gehring without measure doubling: gate on `⟨Q⟩w ≤ C1⟨Q̂⟩w`, then certify
/// with `C1` in place of `D`. Refuses when `C1` grows with depth.
pub fn corollary41_mode(
    weight: &Weight,
    space: &FiniteSpace,
    lattice: &DyadicLattice,
    p: f64,
) -> Result<ParentConditionOutcome> {
    let c1 = c1_parent_condition(weight, space, lattice)?;
    let means = CubeMeans::new(lattice, space, weight)?;
    let mut rows = Vec::new();
    for d in (lattice.k_min() + 1)..=lattice.k_max() {
        let cubes = (0..lattice.len()).filter(|&q| lattice.cube(q).level <= d && lattice.cube(q).parent.is_some());
        let v = cubes
            .filter_map(|q| {
                let parent = lattice.cube(q).parent?;
                (means.mean[parent] > 0.0).then(|| means.mean[q] / means.mean[parent])
            })
            .fold(1.0, f64::max);
        rows.push((d as f64, v));
    }
    let table = GrowthTable::new(rows);
    if !c1.value.is_finite() {
        return Ok(ParentConditionOutcome::Refused { c1, table, reason: "C1 is not finite".into() });
    }
    if Classifier::DEFAULT_THRESHOLDS.classify(&table) == Growth::Diverging {
        return Ok(ParentConditionOutcome::Refused { c1, table, reason: "C1 grows with depth".into() });
    }
    let run = certify(weight, space, lattice, p, None, Mode::ParentCondition)?;
    Ok(ParentConditionOutcome::Certified { c1, run: Box::new(run) })
}

/// One exponent of the doubling-weight ball mode.
#[derive(Debug, Clone, PartialEq)]
pub struct BallModeRow {
    pub q: f64,
    pub weak: f64,
    /// `weak · D_w`, a bound on the ball characteristic.
    pub implied: f64,
    pub measured: f64,
    pub measured_witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BallModeOutcome {
    Bound { d_w: f64, db_table: GrowthTable, rows: Vec<BallModeRow> },
    Refused { db_table: GrowthTable, witness: Option<Witness>, family: usize },
}

/// Doubling-weight route for balls: for each family along a refinement axis
/// measure `D_w = sup w(σB)/w(B)`; refuse if that table diverges, otherwise
/// bound the ball `RH_q` characteristic by `[w]^σ_{RH_q} · D_w` on the last
/// family and compare with the direct measurement.
///
/// The bound holds ball by ball: `⟨B⟩(w^q)^(1/q) ≤ [w]^σ w(σB)/μ(σB)
/// ≤ [w]^σ D_w w(B)/μ(B)`.
pub fn doubling_weight_ball_mode(
    weight: &Weight,
    space: &FiniteSpace,
    families: &[BallFamily],
    q_grid: &[f64],
    sigma: f64,
    classifier: Classifier,
) -> Result<BallModeOutcome> {
    if families.is_empty() {
        return Err(Error::arg("no ball families given"));
    }
    let mut rows = Vec::new();
    let mut worst: Option<(f64, Option<Witness>, usize)> = None;
    for (i, fam) in families.iter().enumerate() {
        let db = doubling_ball(weight, space, fam, sigma)?;
        rows.push((i as f64, db.value));
        if worst.as_ref().is_none_or(|w| db.value > w.0) {
            worst = Some((db.value, db.witness, i));
        }
    }
    let db_table = GrowthTable::new(rows);
    let (d_w, witness, family) = worst.unwrap_or((f64::NAN, None, 0));
    if !d_w.is_finite() || classifier.classify(&db_table) == Growth::Diverging {
        return Ok(BallModeOutcome::Refused { db_table, witness, family });
    }
    let last = families.last().unwrap_or(&families[0]);
    let mut out = Vec::new();
    for &q in q_grid {
        let weak = weak_rh_characteristic(weight, space, last, q, sigma)?;
        let measured = rh_characteristic(weight, space, &Family::Balls(last), q)?;
        out.push(BallModeRow {
            q,
            weak: weak.value,
            implied: weak.value * d_w,
            measured: measured.value,
            measured_witness: measured.witness,
        });
    }
    Ok(BallModeOutcome::Bound { d_w, db_table, rows: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        let t = lambda_threshold(2.0, 2.0, 2.0 / 3f64.sqrt()).unwrap();
        assert!((t - 8.000008).abs() < 1e-9, "{t}");
        assert!((lambda_threshold_with_margin(2.0, 2.0, 1.0, 0.0).unwrap() - 6.0).abs() < 1e-12);
        assert!((lambda_threshold_with_margin(2.0, 60.0, 1.0, 0.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn certificate_example_one() {
        let cert = constructive_epsilon(2.0, 2.0 / 3f64.sqrt(), 0.5, 2.0, 8.0).unwrap();
        assert!((1.0 - cert.a - 0.5 / (64.0 * 4.0 / 3.0)).abs() < 1e-15);
        assert!((cert.epsilon - 1.06e-3).abs() < 5e-6, "{}", cert.epsilon);
        assert!(!cert.lambda_above_threshold());
        assert!((cert.partial_series(200_000) - cert.big_a).abs() < 1e-10 * cert.big_a);
        assert!(cert.summability() < 1.0);
    }

    #[test]
    fn certificate_example_two() {
        let cert = constructive_epsilon(2.0, 1.0, 0.0, 2.0, 6.0).unwrap();
        assert!((1.0 - cert.a - 1.0 / 36.0).abs() < 1e-15);
        let expect = 0.5 * (36.0f64 / 35.0).ln() / 12f64.ln();
        assert!((cert.epsilon - expect).abs() < 1e-15);
        assert!((cert.epsilon - 5.67e-3).abs() < 1e-5);
        assert!(cert.big_a.is_finite());
        // the tail after n terms is A q^n with q = (Dλ)^ε a ≈ 0.986, so 200 terms are not enough
        assert!((cert.partial_series(200) - cert.big_a).abs() > 1e-3 * cert.big_a);
        assert!((cert.partial_series(5_000) - cert.big_a).abs() < 1e-10 * cert.big_a);
    }

    #[test]
    fn epsilon_shrinks_as_decay_weakens() {
        let mut prev = f64::INFINITY;
        for c in [0.0, 0.3, 0.6, 0.9, 0.99, 0.999] {
            let e = constructive_epsilon(2.0, 1.2, c, 2.0, 10.0).unwrap().epsilon;
            assert!(e < prev);
            prev = e;
        }
        let mut prev = f64::INFINITY;
        for rh in [1.0, 1.5, 2.0, 4.0] {
            let e = constructive_epsilon(2.0, rh, 0.2, 2.0, 10.0).unwrap().epsilon;
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn certificate_errors() {
        assert_eq!(constructive_epsilon(2.0, 1.0, 1.0, 2.0, 6.0), Err(Error::NoDecay(1.0)));
        assert!(matches!(constructive_epsilon(2.0, 1e200, 0.0, 2.0, 1e200), Err(Error::Degenerate(_))));
        assert!(constructive_epsilon(2.0, 1.0, 0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(q_grid(1.5, 2.0, 0.1).unwrap(), vec![1.5, 1.6, 1.7, 1.8, 1.9, 2.0]);
        assert!(q_grid(2.0, 1.0, 0.1).is_err());
    }
}
