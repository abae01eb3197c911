//! Weights and their class characteristics.
//!
//! Every characteristic is a sup over a family of sets: cubes of a lattice or
//! open balls `B(x, r)` from a center × radius product. Sums over balls are
//! read off per-center sorted distance profiles with running totals, so one
//! pass per center answers every radius in the family.
//!
//! Weights are divided by their maximum (and, for the dual `A_p` integrand,
//! by their minimum positive value) before raising to powers. All reported
//! characteristics are invariant under `w -> c w`, so this only guards
//! against overflow.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::growth::GrowthTable;
use crate::lattice::{CubeId, DyadicLattice};
use crate::space::{geometric_grid, FiniteSpace, NeighborIndex, PointId};

/// Exponents accepted by the power-based characteristics.
pub const MAX_EXPONENT: f64 = 64.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    values: Vec<f64>,
}

impl Weight {
    /// Fails unless every value is finite and nonnegative and one is positive.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::arg(format!("weight value {v} at point {i}")));
        }
        if !values.iter().any(|&v| v > 0.0) {
            return Err(Error::arg("weight vanishes identically"));
        }
        Ok(Weight { values })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Weight::new(vec![c; n])
    }

    /// Evaluates `f` at each point's coordinates.
    pub fn from_fn(space: &FiniteSpace, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Weight::new((0..space.len()).map(|i| f(space.coords(i))).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: PointId) -> f64 {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Weight::new(self.values.iter().map(|v| v * c).collect())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_positive(&self) -> f64 {
        self.values.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min)
    }

    /// `w(S) = Σ_S w μ`.
    pub fn integral(&self, space: &FiniteSpace, members: &[PointId]) -> f64 {
        members.iter().map(|&x| self.values[x] * space.mass(x)).sum()
    }

    fn check_space(&self, space: &FiniteSpace) -> Result<()> {
        if self.len() == space.len() {
            Ok(())
        } else {
            Err(Error::arg(format!("weight has {} values for {} points", self.len(), space.len())))
        }
    }
}

/// `⟨S⟩w`, the `μ`-average of `w` over `members`.
pub fn mean(weight: &Weight, members: &[PointId], space: &FiniteSpace) -> Result<f64> {
    weight.check_space(space)?;
    let m = space.measure(members)?;
    if !(m > 0.0) {
        return Err(Error::ZeroMeasure);
    }
    Ok(weight.integral(space, members) / m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassId {
    RhDyadic,
    RhBall,
    RhWeak,
    Ap,
    AInf,
    DbBall,
    DbDyadic,
    C1Parent,
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassId::RhDyadic => "RH_dyadic",
            ClassId::RhBall => "RH_ball",
            ClassId::RhWeak => "RH_weak",
            ClassId::Ap => "A_p",
            ClassId::AInf => "A_inf",
            ClassId::DbBall => "Db_ball",
            ClassId::DbDyadic => "Db_dyadic",
            ClassId::C1Parent => "C1_parent",
        })
    }
}

/// The family member attaining a sup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Witness {
    Cube(CubeId),
    Ball { center: PointId, radius: f64 },
}

impl Witness {
    pub fn members(&self, space: &FiniteSpace, lattice: Option<&DyadicLattice>) -> Result<Vec<PointId>> {
        match *self {
            Witness::Cube(q) => {
                let lattice = lattice.ok_or_else(|| Error::arg("cube witness needs its lattice"))?;
                Ok(lattice.cube(q).members.clone())
            }
            Witness::Ball { center, radius } => Ok(space.ball(center, radius)?.members),
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Cube(q) => write!(f, "cube:{q}"),
            Witness::Ball { center, radius } => write!(f, "ball:{center}:{}", crate::io::fmt_f64(*radius)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicReport {
    pub class: ClassId,
    /// `p` for the power classes, the dilation factor for `Db_ball`, 1 otherwise.
    pub exponent: f64,
    /// Dilation `σ` of the weak class.
    pub sigma: Option<f64>,
    pub value: f64,
    pub witness: Option<Witness>,
    pub family_size: usize,
    /// Members left out because the ratio was undefined (zero mass or zero `w`-mass).
    pub skipped: usize,
    /// Weak class only: balls whose dilate covered the whole space.
    pub truncated: usize,
}

impl CharacteristicReport {
    fn new(class: ClassId, exponent: f64, family_size: usize) -> Self {
        CharacteristicReport {
            class,
            exponent,
            sigma: None,
            value: f64::NAN,
            witness: None,
            family_size,
            skipped: 0,
            truncated: 0,
        }
    }
}

/// Balls `B(c, r)` for every center and radius; member `i` is
/// `(centers[i / radii.len()], radii[i % radii.len()])`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallFamily {
    pub centers: Vec<PointId>,
    pub radii: Vec<f64>,
}

impl BallFamily {
    pub fn new(centers: Vec<PointId>, radii: Vec<f64>) -> Result<Self> {
        if centers.is_empty() || radii.is_empty() {
            return Err(Error::arg("ball family is empty"));
        }
        if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::arg(format!("ball radius {r}")));
        }
        Ok(BallFamily { centers, radii })
    }

    /// Every point as a center, radii from the minimum separation past the
    /// diameter by factors of `√2`.
    pub fn all(space: &FiniteSpace) -> Result<Self> {
        BallFamily::new((0..space.len()).collect(), space.radius_grid(std::f64::consts::SQRT_2)?)
    }

    /// Given centers with the default radius grid.
    pub fn around(space: &FiniteSpace, centers: Vec<PointId>) -> Result<Self> {
        BallFamily::new(centers, space.radius_grid(std::f64::consts::SQRT_2)?)
    }

    /// Given centers with radii `lo·√2^i` up to the first one above `hi`.
    pub fn with_range(centers: Vec<PointId>, lo: f64, hi: f64) -> Result<Self> {
        BallFamily::new(centers, geometric_grid(lo, hi, std::f64::consts::SQRT_2))
    }

    pub fn len(&self) -> usize {
        self.centers.len() * self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ball(&self, i: usize) -> (PointId, f64) {
        (self.centers[i / self.radii.len()], self.radii[i % self.radii.len()])
    }

    fn max_radius(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }
}

/// A family of sets over which a characteristic is a sup.
#[derive(Debug, Clone)]
pub enum Family<'a> {
    Cubes { lattice: &'a DyadicLattice, cubes: Vec<CubeId> },
    Balls(&'a BallFamily),
}

impl<'a> Family<'a> {
    /// Every cube of the lattice.
    pub fn dyadic(lattice: &'a DyadicLattice) -> Self {
        Family::Cubes { lattice, cubes: (0..lattice.len()).collect() }
    }

    /// Cubes of level at most `depth`.
    pub fn dyadic_to_depth(lattice: &'a DyadicLattice, depth: i32) -> Self {
        Family::Cubes { lattice, cubes: (0..lattice.len()).filter(|&q| lattice.cube(q).level <= depth).collect() }
    }

    pub fn len(&self) -> usize {
        match self {
            Family::Cubes { cubes, .. } => cubes.len(),
            Family::Balls(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lattice(&self) -> Option<&'a DyadicLattice> {
        match self {
            Family::Cubes { lattice, .. } => Some(lattice),
            Family::Balls(_) => None,
        }
    }
}

/// Per-point integrand densities; set sums multiply by the mass.
struct Columns(Vec<Vec<f64>>);

/// Best value found by a sup scan.
#[derive(Clone, Copy)]
struct Best {
    value: f64,
    index: usize,
    skipped: usize,
    evaluated: usize,
}

impl Best {
    fn empty() -> Self {
        Best { value: f64::NEG_INFINITY, index: usize::MAX, skipped: 0, evaluated: 0 }
    }

    fn offer(&mut self, value: Option<f64>, index: usize) {
        match value {
            None => self.skipped += 1,
            Some(v) => {
                self.evaluated += 1;
                if v > self.value || (v == self.value && index < self.index) {
                    self.value = v;
                    self.index = index;
                }
            }
        }
    }

    fn merge(mut self, other: Best) -> Best {
        self.skipped += other.skipped;
        self.evaluated += other.evaluated;
        if other.value > self.value || (other.value == self.value && other.index < self.index) {
            self.value = other.value;
            self.index = other.index;
        }
        self
    }
}

fn set_sums(space: &FiniteSpace, cols: &Columns, members: &[PointId]) -> Vec<f64> {
    let mut sums = vec![0.0; cols.0.len() + 1];
    for &x in members {
        let m = space.mass(x);
        sums[0] += m;
        for (s, col) in sums[1..].iter_mut().zip(&cols.0) {
            *s += col[x] * m;
        }
    }
    sums
}

/// Sorted `(distance, point)` list for every point within `reach` of `c`.
fn profile(space: &FiniteSpace, index: Option<&NeighborIndex>, c: PointId, reach: f64) -> Vec<(f64, PointId)> {
    let mut out = Vec::new();
    match (index, space.box_half_width(reach)) {
        (Some(index), Some(half)) => index.for_each_in_box(space.coords(c), half, |y| {
            let d = space.distance(c, y);
            if d < reach {
                out.push((d, y));
            }
        }),
        _ => {
            for y in 0..space.len() {
                let d = space.distance(c, y);
                if d < reach {
                    out.push((d, y));
                }
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    out
}

fn ball_index(space: &FiniteSpace, reach: f64) -> Option<NeighborIndex> {
    if reach >= space.diameter() {
        return None;
    }
    space.box_half_width(reach).and_then(|w| NeighborIndex::for_space(space, w))
}

/// Sup of `f(inner sums, dilated sums)` over a family. Sums are
/// `[μ, Σ col_0 μ, Σ col_1 μ, ...]`; the dilated sums are over `σB` for balls
/// and over the parent cube for cubes (`None` at the roots).
fn sup_over<F>(space: &FiniteSpace, family: &Family, cols: &Columns, dilate: Option<f64>, f: F) -> Best
where
    F: Fn(&[f64], Option<&[f64]>) -> Option<f64> + Sync,
{
    match family {
        Family::Cubes { lattice, cubes } => {
            let sums: Vec<Vec<f64>> =
                (0..lattice.len()).into_par_iter().map(|q| set_sums(space, cols, &lattice.cube(q).members)).collect();
            let mut best = Best::empty();
            for (i, &q) in cubes.iter().enumerate() {
                let outer = lattice.cube(q).parent.map(|p| sums[p].as_slice());
                best.offer(f(&sums[q], outer), i);
            }
            best
        }
        Family::Balls(balls) => {
            let sigma = dilate.unwrap_or(1.0);
            let reach = balls.max_radius() * sigma.max(1.0) * (1.0 + 1e-12);
            let index = ball_index(space, reach);
            let nr = balls.radii.len();
            balls
                .centers
                .par_iter()
                .enumerate()
                .map(|(ci, &c)| {
                    let prof = profile(space, index.as_ref(), c, reach);
                    let width = cols.0.len() + 1;
                    // prefix[k*width..]: sums over the first k profile entries
                    let mut prefix = vec![0.0; (prof.len() + 1) * width];
                    for (k, &(_, y)) in prof.iter().enumerate() {
                        let m = space.mass(y);
                        let (head, tail) = prefix.split_at_mut((k + 1) * width);
                        let prev = &head[k * width..];
                        tail[0] = prev[0] + m;
                        for j in 1..width {
                            tail[j] = prev[j] + cols.0[j - 1][y] * m;
                        }
                    }
                    let at = |r: f64| {
                        let k = prof.partition_point(|e| e.0 < r);
                        &prefix[k * width..(k + 1) * width]
                    };
                    let mut best = Best::empty();
                    for (ri, &r) in balls.radii.iter().enumerate() {
                        let inner = at(r);
                        let outer = dilate.map(|s| at(s * r));
                        best.offer(f(inner, outer), ci * nr + ri);
                    }
                    best
                })
                .reduce(Best::empty, Best::merge)
        }
    }
}

fn witness_of(family: &Family, index: usize) -> Option<Witness> {
    if index == usize::MAX {
        return None;
    }
    Some(match family {
        Family::Cubes { cubes, .. } => Witness::Cube(cubes[index]),
        Family::Balls(b) => {
            let (center, radius) = b.ball(index);
            Witness::Ball { center, radius }
        }
    })
}

fn finish(mut report: CharacteristicReport, family: &Family, best: Best) -> CharacteristicReport {
    report.skipped = best.skipped;
    report.witness = witness_of(family, best.index);
    report.value = if best.evaluated == 0 { f64::NAN } else { best.value };
    report
}

fn check_exponent(p: f64) -> Result<()> {
    if p > 1.0 && p <= MAX_EXPONENT {
        Ok(())
    } else {
        Err(Error::arg(format!("exponent {p} outside (1, {MAX_EXPONENT}]")))
    }
}

fn check_family(family: &Family, weight: &Weight, space: &FiniteSpace) -> Result<()> {
    weight.check_space(space)?;
    if family.is_empty() {
        return Err(Error::arg("family is empty"));
    }
    Ok(())
}

/// `w / max w`.
fn normalized(weight: &Weight) -> Vec<f64> {
    let top = weight.max();
    weight.values.iter().map(|v| v / top).collect()
}

fn rh_class(family: &Family) -> ClassId {
    match family {
        Family::Cubes { .. } => ClassId::RhDyadic,
        Family::Balls(_) => ClassId::RhBall,
    }
}

/// `sup_S ⟨S⟩(w^p)^(1/p) / ⟨S⟩w`.
pub fn rh_characteristic(
    weight: &Weight,
    space: &FiniteSpace,
    family: &Family,
    p: f64,
) -> Result<CharacteristicReport> {
    check_exponent(p)?;
    check_family(family, weight, space)?;
    let u = normalized(weight);
    let up: Vec<f64> = u.iter().map(|v| v.powf(p)).collect();
    let cols = Columns(vec![u, up]);
    let best = sup_over(space, family, &cols, None, |s, _| rh_from_sums(s[0], s[1], s[2], p));
    Ok(finish(CharacteristicReport::new(rh_class(family), p, family.len()), family, best))
}

fn rh_from_sums(m: f64, s1: f64, sp: f64, p: f64) -> Option<f64> {
    if !(m > 0.0) || !(s1 > 0.0) {
        return None;
    }
    Some((sp / m).powf(1.0 / p) / (s1 / m))
}

/// Reverse Hölder ratio of a single set.
pub fn rh_ratio(weight: &Weight, space: &FiniteSpace, members: &[PointId], p: f64) -> Result<f64> {
    check_exponent(p)?;
    weight.check_space(space)?;
    let u = normalized(weight);
    let (mut m, mut s1, mut sp) = (0.0, 0.0, 0.0);
    for &x in members {
        let mass = space.measure(&[x])?;
        m += mass;
        s1 += u[x] * mass;
        sp += u[x].powf(p) * mass;
    }
    if !(m > 0.0) {
        return Err(Error::ZeroMeasure);
    }
    Ok(rh_from_sums(m, s1, sp, p).unwrap_or(f64::NAN))
}

/// `sup_B ⟨B⟩(w^p)^(1/p) / ⟨σB⟩w` over a ball family.
pub fn weak_rh_characteristic(
    weight: &Weight,
    space: &FiniteSpace,
    balls: &BallFamily,
    p: f64,
    sigma: f64,
) -> Result<CharacteristicReport> {
    check_exponent(p)?;
    if !(sigma >= 1.0 && sigma.is_finite()) {
        return Err(Error::arg(format!("dilation {sigma} must be at least 1")));
    }
    let family = Family::Balls(balls);
    check_family(&family, weight, space)?;
    let u = normalized(weight);
    let up: Vec<f64> = u.iter().map(|v| v.powf(p)).collect();
    let cols = Columns(vec![u, up]);
    let total = space.total_mass();
    let truncated = std::sync::atomic::AtomicUsize::new(0);
    let best = sup_over(space, &family, &cols, Some(sigma), |inner, outer| {
        let outer = outer?;
        if outer[0] >= total {
            truncated.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        if !(inner[0] > 0.0) || !(outer[1] > 0.0) {
            return None;
        }
        Some((inner[2] / inner[0]).powf(1.0 / p) / (outer[1] / outer[0]))
    });
    let mut report = finish(CharacteristicReport::new(ClassId::RhWeak, p, family.len()), &family, best);
    report.sigma = Some(sigma);
    report.truncated = truncated.into_inner();
    Ok(report)
}

/// `sup_S ⟨S⟩w · ⟨S⟩(w^(1-p'))^(p-1)`; sets touching a zero of `w` give `∞`.
pub fn ap_characteristic(
    weight: &Weight,
    space: &FiniteSpace,
    family: &Family,
    p: f64,
) -> Result<CharacteristicReport> {
    check_exponent(p)?;
    check_family(family, weight, space)?;
    let (top, bottom) = (weight.max(), weight.min_positive());
    let dual_exp = 1.0 - p / (p - 1.0);
    let u: Vec<f64> = weight.values.iter().map(|v| v / top).collect();
    let dual: Vec<f64> =
        weight.values.iter().map(|&v| if v > 0.0 { (v / bottom).powf(dual_exp) } else { 0.0 }).collect();
    let zeros: Vec<f64> = weight.values.iter().map(|&v| if v > 0.0 { 0.0 } else { 1.0 }).collect();
    let cols = Columns(vec![u, dual, zeros]);
    let spread = top / bottom;
    let best = sup_over(space, family, &cols, None, |s, _| {
        if !(s[0] > 0.0) {
            return None;
        }
        if s[3] > 0.0 {
            return Some(f64::INFINITY);
        }
        Some(spread * (s[1] / s[0]) * (s[2] / s[0]).powf(p - 1.0))
    });
    Ok(finish(CharacteristicReport::new(ClassId::Ap, p, family.len()), family, best))
}

/// Per-center data for maximal-function evaluation.
struct CenterProfile {
    entries: Vec<(f64, PointId)>,
}

fn center_profiles(space: &FiniteSpace, balls: &BallFamily) -> Vec<CenterProfile> {
    let reach = balls.max_radius() * (1.0 + 1e-12);
    let index = ball_index(space, reach);
    balls.centers.par_iter().map(|&c| CenterProfile { entries: profile(space, index.as_ref(), c, reach) }).collect()
}

/// Accumulates `M(1_R w)` at every point of `R` into `out` (indexed by point).
fn maximal_on(
    space: &FiniteSpace,
    balls: &BallFamily,
    profiles: &[CenterProfile],
    u: &[f64],
    in_r: &[bool],
    out: &mut [f64],
) {
    let nr = balls.radii.len();
    let mut averages = vec![0.0; nr];
    for prof in profiles {
        // averages of 1_R w over each radius of this center
        let mut k = 0;
        let (mut m, mut s) = (0.0, 0.0);
        for (ri, &r) in balls.radii.iter().enumerate() {
            while k < prof.entries.len() && prof.entries[k].0 < r {
                let y = prof.entries[k].1;
                m += space.mass(y);
                if in_r[y] {
                    s += u[y] * space.mass(y);
                }
                k += 1;
            }
            averages[ri] = if m > 0.0 { s / m } else { 0.0 };
        }
        // suffix max: a point at distance d sees every radius r > d
        for ri in (0..nr.saturating_sub(1)).rev() {
            averages[ri] = averages[ri].max(averages[ri + 1]);
        }
        for &(d, x) in &prof.entries {
            if in_r[x] {
                let ri = balls.radii.partition_point(|&r| r <= d);
                if ri < nr {
                    out[x] = out[x].max(averages[ri]);
                }
            }
        }
    }
}

/// `sup ⟨B'⟩(1_R w)` over family balls `B'` containing `point`, where `R` is
/// the restriction ball.
pub fn maximal_function(
    weight: &Weight,
    space: &FiniteSpace,
    balls: &BallFamily,
    point: PointId,
    restriction: (PointId, f64),
) -> Result<f64> {
    weight.check_space(space)?;
    space.measure(&[point])?;
    let r_members = space.ball(restriction.0, restriction.1)?.members;
    let mut in_r = vec![false; space.len()];
    for &x in &r_members {
        in_r[x] = true;
    }
    let mut best: Option<f64> = None;
    for i in 0..balls.len() {
        let (c, r) = balls.ball(i);
        if space.distance(c, point) < r {
            let b = space.ball(c, r)?;
            let m = space.measure(&b.members)?;
            let s: f64 = b.members.iter().filter(|&&y| in_r[y]).map(|&y| weight.value(y) * space.mass(y)).sum();
            best = Some(best.map_or(s / m, |v: f64| v.max(s / m)));
        }
    }
    best.ok_or(Error::NoContainingBall(point))
}

/// Fujii–Wilson characteristic `sup_B w(B)^(-1) ∫_B M(1_B w) dμ`, with the
/// maximal function taken over the same ball family.
///
/// Cost grows like `family size × centers × profile length`; meant for spaces
/// of a few hundred points.
pub fn ainfty_fujii_wilson(weight: &Weight, space: &FiniteSpace, balls: &BallFamily) -> Result<CharacteristicReport> {
    let family = Family::Balls(balls);
    check_family(&family, weight, space)?;
    let u = normalized(weight);
    let profiles = center_profiles(space, balls);
    let nr = balls.radii.len();
    let best = (0..balls.centers.len())
        .into_par_iter()
        .map(|ci| {
            let mut best = Best::empty();
            let mut in_b = vec![false; space.len()];
            let mut m_val = vec![0.0; space.len()];
            let entries = &profiles[ci].entries;
            for (ri, &r) in balls.radii.iter().enumerate() {
                let k = entries.partition_point(|e| e.0 < r);
                let members: Vec<PointId> = entries[..k].iter().map(|e| e.1).collect();
                let wb: f64 = members.iter().map(|&x| u[x] * space.mass(x)).sum();
                if !(wb > 0.0) {
                    best.offer(None, ci * nr + ri);
                    continue;
                }
                for &x in &members {
                    in_b[x] = true;
                    m_val[x] = 0.0;
                }
                maximal_on(space, balls, &profiles, &u, &in_b, &mut m_val);
                let integral: f64 = members.iter().map(|&x| m_val[x] * space.mass(x)).sum();
                best.offer(Some(integral / wb), ci * nr + ri);
                for &x in &members {
                    in_b[x] = false;
                }
            }
            best
        })
        .reduce(Best::empty, Best::merge);
    Ok(finish(CharacteristicReport::new(ClassId::AInf, 1.0, family.len()), &family, best))
}

/// `sup w(λB)/w(B)` over a ball family (`λ = factor`, 2 for the usual doubling).
pub fn doubling_ball(
    weight: &Weight,
    space: &FiniteSpace,
    balls: &BallFamily,
    factor: f64,
) -> Result<CharacteristicReport> {
    if !(factor >= 1.0) {
        return Err(Error::arg(format!("doubling factor {factor} below 1")));
    }
    let family = Family::Balls(balls);
    check_family(&family, weight, space)?;
    let cols = Columns(vec![normalized(weight)]);
    let best = sup_over(space, &family, &cols, Some(factor), |inner, outer| {
        let outer = outer?;
        if !(inner[1] > 0.0) {
            return None;
        }
        Some(outer[1] / inner[1])
    });
    Ok(finish(CharacteristicReport::new(ClassId::DbBall, factor, family.len()), &family, best))
}

/// `sup w(Q̂)/w(Q)` over non-root cubes.
pub fn doubling_dyadic(weight: &Weight, space: &FiniteSpace, lattice: &DyadicLattice) -> Result<CharacteristicReport> {
    let cubes: Vec<CubeId> = (0..lattice.len()).filter(|&q| lattice.cube(q).parent.is_some()).collect();
    let family = Family::Cubes { lattice, cubes };
    if family.is_empty() {
        let mut r = CharacteristicReport::new(ClassId::DbDyadic, 1.0, 0);
        r.value = 1.0;
        return Ok(r);
    }
    check_family(&family, weight, space)?;
    let cols = Columns(vec![normalized(weight)]);
    let best = sup_over(space, &family, &cols, None, |inner, parent| {
        let parent = parent?;
        if !(inner[1] > 0.0) {
            return None;
        }
        Some(parent[1] / inner[1])
    });
    Ok(finish(CharacteristicReport::new(ClassId::DbDyadic, 1.0, family.len()), &family, best))
}

/// Both doubling characteristics.
pub fn doubling_constants(
    weight: &Weight,
    space: &FiniteSpace,
    balls: &BallFamily,
    lattice: &DyadicLattice,
) -> Result<(CharacteristicReport, CharacteristicReport)> {
    Ok((doubling_ball(weight, space, balls, 2.0)?, doubling_dyadic(weight, space, lattice)?))
}

/// `C1 := max ⟨Q⟩w / ⟨Q̂⟩w` over non-root cubes.
pub fn c1_parent_condition(
    weight: &Weight,
    space: &FiniteSpace,
    lattice: &DyadicLattice,
) -> Result<CharacteristicReport> {
    let cubes: Vec<CubeId> = (0..lattice.len()).filter(|&q| lattice.cube(q).parent.is_some()).collect();
    let family = Family::Cubes { lattice, cubes };
    if family.is_empty() {
        let mut r = CharacteristicReport::new(ClassId::C1Parent, 1.0, 0);
        r.value = 1.0;
        return Ok(r);
    }
    check_family(&family, weight, space)?;
    let cols = Columns(vec![normalized(weight)]);
    let best = sup_over(space, &family, &cols, None, |inner, parent| {
        let parent = parent?;
        if !(inner[0] > 0.0) || !(parent[1] > 0.0) {
            return None;
        }
        Some((inner[1] / inner[0]) / (parent[1] / parent[0]))
    });
    Ok(finish(CharacteristicReport::new(ClassId::C1Parent, 1.0, family.len()), &family, best))
}

/// Characteristic of `E_d w` (the average of `w` on each level-`d` cube)
/// over all cubes of level at most `d`, for each depth `d` in the lattice.
/// This is the dyadic characteristic of the weight as resolved at depth `d`.
pub fn dyadic_depth_table(
    weight: &Weight,
    space: &FiniteSpace,
    lattice: &DyadicLattice,
    class: ClassId,
    p: f64,
) -> Result<GrowthTable> {
    check_exponent(p)?;
    weight.check_space(space)?;
    let ratio: Box<dyn Fn(f64, f64, f64) -> Option<f64> + Sync> = match class {
        ClassId::RhDyadic => Box::new(move |m, s1, sp| rh_from_sums(m, s1, sp, p)),
        ClassId::Ap => {
            // here sp holds Σ μ (E_d w)^(1-p') with E_d w scaled by its minimum
            Box::new(move |m, s1, sd| Some((s1 / m) * (sd / m).powf(p - 1.0)))
        }
        other => return Err(Error::arg(format!("no depth table for class {other}"))),
    };
    let dual_exp = 1.0 - p / (p - 1.0);
    let u = normalized(weight);
    let n = lattice.len();
    let mut rows = Vec::new();
    for d in lattice.k_min()..=lattice.k_max() {
        let mut m = vec![0.0; n];
        let mut s1 = vec![0.0; n];
        let mut sp = vec![0.0; n];
        let gen = lattice.generation(d);
        let means: Vec<f64> = gen
            .iter()
            .map(|&q| {
                let members = &lattice.cube(q).members;
                let mass: f64 = members.iter().map(|&x| space.mass(x)).sum();
                members.iter().map(|&x| u[x] * space.mass(x)).sum::<f64>() / mass
            })
            .collect();
        let floor = means.iter().copied().filter(|&a| a > 0.0).fold(f64::INFINITY, f64::min);
        for (&q, &a) in gen.iter().zip(&means) {
            m[q] = lattice.cube_mass(q);
            s1[q] = a * m[q];
            sp[q] = match class {
                ClassId::Ap if a > 0.0 => (a / floor).powf(dual_exp) * m[q],
                ClassId::Ap => f64::INFINITY,
                _ => a.powf(p) * m[q],
            };
        }
        for k in (lattice.k_min()..d).rev() {
            for &q in lattice.generation(k) {
                for &c in &lattice.cube(q).children {
                    m[q] += m[c];
                    s1[q] += s1[c];
                    sp[q] += sp[c];
                }
            }
        }
        let mut best = f64::NEG_INFINITY;
        for k in lattice.k_min()..=d {
            for &q in lattice.generation(k) {
                if let Some(v) = ratio(m[q], s1[q], sp[q]) {
                    best = best.max(v);
                }
            }
        }
        if class == ClassId::Ap {
            best /= floor;
        }
        rows.push((d as f64, best));
    }
    Ok(GrowthTable::new(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice_from_centers;
    use crate::space::Metric;

    fn grid(n: usize) -> FiniteSpace {
        let h = 1.0 / n as f64;
        FiniteSpace::new((0..n).map(|i| vec![(i as f64 + 0.5) * h]).collect(), vec![h; n], Metric::Euclidean).unwrap()
    }

    fn dyadic(n: usize) -> (FiniteSpace, DyadicLattice) {
        let space = grid(n);
        let depth = n.trailing_zeros() as i32;
        let centers: Vec<Vec<PointId>> = (0..=depth)
            .map(|k| {
                let m = n >> k;
                (0..1usize << k).map(|i| i * m + (m / 2).max(1) - 1).collect()
            })
            .collect();
        let lattice = build_lattice_from_centers(&space, 0.5, 0, &centers, 0).unwrap();
        (space, lattice)
    }

    fn two_value(space: &FiniteSpace) -> Weight {
        Weight::from_fn(space, |x| if x[0] < 0.25 { 4.0 } else { 1.0 }).unwrap()
    }

    #[test]
    fn means() {
        let s = grid(1024);
        let all: Vec<_> = (0..1024).collect();
        assert_eq!(mean(&Weight::constant(1024, 1.0).unwrap(), &all, &s).unwrap(), 1.0);
        let lin = Weight::from_fn(&s, |x| x[0]).unwrap();
        assert!((mean(&lin, &all, &s).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(mean(&two_value(&s), &all, &s).unwrap(), 1.75);
        assert_eq!(mean(&lin, &[], &s), Err(Error::ZeroMeasure));
    }

    #[test]
    fn weight_validation() {
        assert!(Weight::new(vec![0.0, 0.0]).is_err());
        assert!(Weight::new(vec![1.0, -1.0]).is_err());
        assert!(Weight::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn constant_weight_is_one_everywhere() {
        let (s, lat) = dyadic(64);
        let w = Weight::constant(64, 3.0).unwrap();
        let balls = BallFamily::all(&s).unwrap();
        for fam in [Family::dyadic(&lat), Family::Balls(&balls)] {
            assert_eq!(rh_characteristic(&w, &s, &fam, 2.0).unwrap().value, 1.0);
            assert_eq!(ap_characteristic(&w, &s, &fam, 2.0).unwrap().value, 1.0);
        }
        assert_eq!(weak_rh_characteristic(&w, &s, &balls, 2.0, 2.0).unwrap().value, 1.0);
        assert_eq!(c1_parent_condition(&w, &s, &lat).unwrap().value, 1.0);
        assert_eq!(doubling_dyadic(&w, &s, &lat).unwrap().value, 2.0);
        let small = BallFamily::all(&grid(16)).unwrap();
        let w16 = Weight::constant(16, 1.0).unwrap();
        assert_eq!(ainfty_fujii_wilson(&w16, &grid(16), &small).unwrap().value, 1.0);
    }

    #[test]
    fn rh_of_linear_weight_on_dyadic_intervals() {
        let (s, lat) = dyadic(4096);
        let w = Weight::from_fn(&s, |x| x[0]).unwrap();
        let r = rh_characteristic(&w, &s, &Family::dyadic(&lat), 2.0).unwrap();
        assert!((r.value - 2.0 / 3f64.sqrt()).abs() < 1e-3, "{}", r.value);
        // witness touches 0 and reproduces the value
        let Some(Witness::Cube(q)) = r.witness else { panic!() };
        assert_eq!(lat.cube(q).members[0], 0);
        let again = rh_ratio(&w, &s, &lat.cube(q).members, 2.0).unwrap();
        assert!((again - r.value).abs() <= 1e-12 * r.value);
    }

    #[test]
    fn ap_of_inverse_square_root() {
        let (s, lat) = dyadic(4096);
        let w = Weight::from_fn(&s, |x| x[0].powf(-0.5)).unwrap();
        let r = ap_characteristic(&w, &s, &Family::dyadic(&lat), 2.0).unwrap();
        assert!((r.value - 4.0 / 3.0).abs() < 1e-2, "{}", r.value);
    }

    #[test]
    fn zero_weight_gives_infinite_ap() {
        let s = grid(8);
        let w = Weight::new(vec![0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let balls = BallFamily::all(&s).unwrap();
        let r = ap_characteristic(&w, &s, &Family::Balls(&balls), 2.0).unwrap();
        assert!(r.value.is_infinite());
        let Some(Witness::Ball { center, radius }) = r.witness else { panic!() };
        assert!(s.ball(center, radius).unwrap().members.contains(&0));
    }

    #[test]
    fn exponent_range() {
        let (s, lat) = dyadic(8);
        let w = Weight::constant(8, 1.0).unwrap();
        assert!(rh_characteristic(&w, &s, &Family::dyadic(&lat), 1.0).is_err());
        assert!(rh_characteristic(&w, &s, &Family::dyadic(&lat), 65.0).is_err());
    }

    #[test]
    fn weak_equals_strong_at_unit_dilation() {
        let s = grid(128);
        let w = Weight::from_fn(&s, |x| x[0].powf(-0.3)).unwrap();
        let balls = BallFamily::all(&s).unwrap();
        let strong = rh_characteristic(&w, &s, &Family::Balls(&balls), 2.0).unwrap();
        let weak = weak_rh_characteristic(&w, &s, &balls, 2.0, 1.0).unwrap();
        assert!(weak.value <= strong.value * (1.0 + 1e-12));
        assert!((weak.value - strong.value).abs() < 1e-12 * strong.value);
    }

    #[test]
    fn maximal_function_examples() {
        let s = grid(16);
        let balls = BallFamily::all(&s).unwrap();
        let one = Weight::constant(16, 1.0).unwrap();
        assert_eq!(maximal_function(&one, &s, &balls, 5, (5, 0.3)).unwrap(), 1.0);
        let outside = maximal_function(&one, &s, &balls, 15, (2, 0.1)).unwrap();
        assert!(outside < 1.0 && outside > 0.0);
        let mut spike = vec![1e-9; 16];
        spike[7] = 1.0;
        let spike = Weight::new(spike).unwrap();
        let m = maximal_function(&spike, &s, &balls, 7, (7, 2.0)).unwrap();
        assert!((m - 1.0).abs() < 1e-6);
        let tiny = BallFamily::new(vec![0], vec![0.01]).unwrap();
        assert_eq!(maximal_function(&one, &s, &tiny, 9, (9, 1.0)), Err(Error::NoContainingBall(9)));
    }

    #[test]
    fn c1_of_linear_weight() {
        let (s, lat) = dyadic(256);
        let w = Weight::from_fn(&s, |x| x[0]).unwrap();
        let c1 = c1_parent_condition(&w, &s, &lat).unwrap();
        assert!(c1.value >= 1.5 - 1e-12);
        // exhaustive oracle
        let mut oracle = 0.0f64;
        for q in 0..lat.len() {
            if let Some(p) = lat.cube(q).parent {
                let a = mean(&w, &lat.cube(q).members, &s).unwrap();
                let b = mean(&w, &lat.cube(p).members, &s).unwrap();
                oracle = oracle.max(a / b);
            }
        }
        assert!((c1.value - oracle).abs() < 1e-12);
    }

    #[test]
    fn depth_table_matches_direct_at_finest_depth() {
        let (s, lat) = dyadic(256);
        let w = Weight::from_fn(&s, |x| x[0].powf(-0.4)).unwrap();
        let table = dyadic_depth_table(&w, &s, &lat, ClassId::RhDyadic, 2.0).unwrap();
        let direct = rh_characteristic(&w, &s, &Family::dyadic(&lat), 2.0).unwrap().value;
        let last = table.rows.last().unwrap().1;
        assert!((last - direct).abs() < 1e-12 * direct);
        let ap = dyadic_depth_table(&w, &s, &lat, ClassId::Ap, 2.0).unwrap();
        let ap_direct = ap_characteristic(&w, &s, &Family::dyadic(&lat), 2.0).unwrap().value;
        assert!((ap.rows.last().unwrap().1 - ap_direct).abs() < 1e-9 * ap_direct);
    }

    #[test]
    fn doubling_of_constant_weight_on_balls() {
        let s = grid(64);
        let balls = BallFamily::all(&s).unwrap();
        let r = doubling_ball(&Weight::constant(64, 1.0).unwrap(), &s, &balls, 2.0).unwrap();
        assert!(r.value >= 1.0 && r.value <= 3.0 + 1e-12, "{}", r.value);
    }
}
