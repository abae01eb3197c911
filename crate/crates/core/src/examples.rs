//! Concrete spaces and weights: the unit interval with its standard dyadic
//! intervals, a line carrying Gaussian mass, and the haircomb.
//!
//! The haircomb is the real line with a tooth `W_j = U_j ∪ V_j` attached at
//! `x = 10j` for `j = 1..=J`: a slanted segment `U_j = {(10j + u, u/2)}`,
//! `u ∈ (0, 1]`, topped by a vertical segment `V_j = {(10j + 1, v)}`,
//! `v ∈ [1/2, 1]`. The line `A` is kept on a window around each tooth. The
//! metric is `l∞` on the plane and mass is Euclidean arc length.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::growth::{Classifier, Growth, GrowthTable};
use crate::lattice::{build_lattice_from_centers, CubeId, DyadicLattice};
use crate::space::{geometric_grid, FiniteSpace, Metric, PointId};
use crate::weights::{rh_characteristic, BallFamily, Family, Weight};

/// Length of the slanted part of a tooth.
pub const U_LENGTH: f64 = 1.118_033_988_749_895; // √5/2

/// `n` equal cells of `[0, 1]` represented by their midpoints, with the
/// standard dyadic intervals as lattice (`δ = 1/2`, levels `0..=log2 n`).
pub fn unit_interval_space(n: usize) -> Result<(FiniteSpace, DyadicLattice)> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::arg(format!("interval size {n} is not a power of two")));
    }
    let coords = (0..n).map(|i| vec![(i as f64 + 0.5) / n as f64]).collect();
    let space = FiniteSpace::new(coords, vec![1.0 / n as f64; n], Metric::Euclidean)?;
    let levels = n.trailing_zeros() as usize;
    let centers: Vec<Vec<PointId>> = (0..=levels)
        .map(|k| {
            let m = n >> k;
            (0..1usize << k).map(|i| i * m + (m / 2).max(1) - 1).collect()
        })
        .collect();
    let lattice = build_lattice_from_centers(&space, 0.5, 0, &centers, 0)?;
    Ok((space, lattice))
}

/// Profiles on `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `t^β`, integrable for `β > -1`.
    Power { exponent: f64 },
    /// `h(t) = t^(-α) / log(e/t)`.
    HaircombH { alpha: f64 },
}

impl Profile {
    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent > -1.0 && exponent.is_finite()) {
            return Err(Error::arg(format!("power exponent {exponent} must exceed -1")));
        }
        Ok(Profile::Power { exponent })
    }

    pub fn haircomb_h(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::arg(format!("alpha {alpha} outside (0, 1)")));
        }
        Ok(Profile::HaircombH { alpha })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Profile::Power { exponent } => t.powf(exponent),
            Profile::HaircombH { alpha } => h(alpha, t),
        }
    }

    /// `∫_a^b` of the profile, `0 ≤ a ≤ b ≤ 1`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match *self {
            Profile::Power { exponent } => {
                let e = exponent + 1.0;
                (b.powf(e) - a.powf(e)) / e
            }
            Profile::HaircombH { alpha } => h_integral(alpha, a, b, 256),
        }
    }
}

/// `t^(-α) / log(e/t)`.
pub fn h(alpha: f64, t: f64) -> f64 {
    t.powf(-alpha) / (1.0 - t.ln())
}

/// `∫_a^b h` by Simpson's rule with `panels` panels after substituting
/// `t = e^(-y/(1-α))`, which turns the integrand into the smooth, decaying
/// `e^(-y) / ((1-α) (1 + y/(1-α)))`. The tail past `y = y_b + 50` is dropped.
pub fn h_integral(alpha: f64, a: f64, b: f64, panels: usize) -> f64 {
    let beta = 1.0 - alpha;
    let y_lo = -beta * b.ln();
    let y_hi = if a > 0.0 { -beta * a.ln() } else { f64::INFINITY };
    let y_hi = y_hi.min(y_lo + 50.0);
    let g = |y: f64| (-y).exp() / (beta + y);
    let n = 2 * panels.max(1);
    let step = (y_hi - y_lo) / n as f64;
    let mut sum = g(y_lo) + g(y_hi);
    for i in 1..n {
        sum += g(y_lo + i as f64 * step) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * step / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discretization {
    /// Value at the cell midpoint.
    Pointwise,
    /// Exact average over the cell.
    CellAverage,
}

/// A profile on the `n`-cell unit interval of [`unit_interval_space`].
pub fn power_log_weight(n: usize, profile: Profile, disc: Discretization) -> Result<Weight> {
    if n == 0 {
        return Err(Error::arg("no cells"));
    }
    let w = 1.0 / n as f64;
    let values = (0..n)
        .map(|i| match disc {
            Discretization::Pointwise => profile.eval((i as f64 + 0.5) * w),
            Discretization::CellAverage => profile.integral(i as f64 * w, (i + 1) as f64 * w) / w,
        })
        .collect();
    Weight::new(values)
}

/// Midpoints of `n` equal cells of `[-extent, extent]` with mass equal to the
/// standard normal density times the cell width.
pub fn gaussian_line_space(n: usize, extent: f64) -> Result<FiniteSpace> {
    if n < 2 {
        return Err(Error::arg("need at least two points"));
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(Error::arg(format!("extent {extent}")));
    }
    let width = 2.0 * extent / n as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let xs: Vec<f64> = (0..n).map(|i| -extent + (i as f64 + 0.5) * width).collect();
    let masses = xs.iter().map(|x| norm * (-x * x / 2.0).exp() * width).collect();
    FiniteSpace::new(xs.into_iter().map(|x| vec![x]).collect(), masses, Metric::Euclidean)
}

/// Parameters of a truncated haircomb.
#[derive(Debug, Clone, PartialEq)]
pub struct HaircombSpec {
    pub teeth: usize,
    pub alpha: f64,
    /// `ε_j` for `j = 1..=teeth`.
    pub eps: Vec<f64>,
    /// Target arc-length spacing of sample points.
    pub resolution: f64,
    /// Length of line kept around each tooth: `[10j - 0.4a, 10j + 0.6a]`.
    pub a_extent: f64,
}

impl HaircombSpec {
    /// `ε_j = 2^(-j)` and a line window of length 5.
    pub fn new(teeth: usize, alpha: f64, resolution: f64) -> Result<Self> {
        let spec = HaircombSpec {
            teeth,
            alpha,
            eps: (1..=teeth).map(|j| 0.5f64.powi(j as i32)).collect(),
            resolution,
            a_extent: 5.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.teeth == 0 {
            return Err(Error::arg("haircomb needs a tooth"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::arg(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.eps.len() != self.teeth {
            return Err(Error::arg(format!("{} eps values for {} teeth", self.eps.len(), self.teeth)));
        }
        if self.eps.iter().any(|&e| !(e > 0.0 && e <= 1.0)) || self.eps.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::arg("eps values must be nonincreasing in (0, 1]"));
        }
        if !(self.resolution > 0.0 && self.resolution < 0.05) {
            return Err(Error::arg(format!("resolution {} must lie in (0, 0.05)", self.resolution)));
        }
        if !(self.a_extent > 0.0 && self.a_extent < 10.0) {
            return Err(Error::arg(format!("line window {} must lie in (0, 10)", self.a_extent)));
        }
        Ok(())
    }

    pub fn eps(&self, tooth: usize) -> f64 {
        self.eps[tooth - 1]
    }

    /// The line window `[lo, hi]` around tooth `j`.
    pub fn window(&self, tooth: usize) -> (f64, f64) {
        let x = 10.0 * tooth as f64;
        (x - 0.4 * self.a_extent, x + 0.6 * self.a_extent)
    }

    fn cells(&self, length: f64) -> usize {
        (length / self.resolution).ceil() as usize
    }
}

/// Where a haircomb point sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    A { tooth: usize },
    U { tooth: usize, u: f64 },
    V { tooth: usize, v: f64 },
}

impl Piece {
    pub fn tooth(&self) -> usize {
        match *self {
            Piece::A { tooth } | Piece::U { tooth, .. } | Piece::V { tooth, .. } => tooth,
        }
    }
}

/// Samples every segment at cell midpoints; each point carries its cell's
/// arc length.
pub fn haircomb_space(spec: &HaircombSpec) -> Result<FiniteSpace> {
    spec.validate()?;
    let mut coords = Vec::new();
    let mut masses = Vec::new();
    for j in 1..=spec.teeth {
        let base = 10.0 * j as f64;
        let (lo, hi) = spec.window(j);
        let m = spec.cells(hi - lo);
        for i in 0..m {
            coords.push(vec![lo + (i as f64 + 0.5) * (hi - lo) / m as f64, 0.0]);
            masses.push((hi - lo) / m as f64);
        }
        let m = spec.cells(U_LENGTH);
        for i in 0..m {
            let u = (i as f64 + 0.5) / m as f64;
            coords.push(vec![base + u, u / 2.0]);
            masses.push(U_LENGTH / m as f64);
        }
        let m = spec.cells(0.5);
        for i in 0..m {
            coords.push(vec![base + 1.0, 0.5 + (i as f64 + 0.5) * 0.5 / m as f64]);
            masses.push(0.5 / m as f64);
        }
    }
    FiniteSpace::new(coords, masses, Metric::Linf)
}

/// Locates a plane point on the comb.
pub fn classify_point(spec: &HaircombSpec, xy: &[f64]) -> Result<Piece> {
    let (x, y) = (xy[0], xy[1]);
    let tol = 1e-9;
    let tooth = ((x + 5.0) / 10.0).floor();
    if tooth < 1.0 || tooth as usize > spec.teeth {
        return Err(Error::Internal(format!("point ({x}, {y}) is off the comb")));
    }
    let tooth = tooth as usize;
    let u = x - 10.0 * tooth as f64;
    if y == 0.0 {
        return Ok(Piece::A { tooth });
    }
    if (u - 1.0).abs() < tol && (0.5 - tol..=1.0 + tol).contains(&y) {
        return Ok(Piece::V { tooth, v: y });
    }
    if u > 0.0 && u <= 1.0 + tol && (y - u / 2.0).abs() < tol {
        return Ok(Piece::U { tooth, u });
    }
    Err(Error::Internal(format!("point ({x}, {y}) is off the comb")))
}

/// Pieces of every point of a haircomb space.
pub fn haircomb_layout(space: &FiniteSpace, spec: &HaircombSpec) -> Result<Vec<Piece>> {
    (0..space.len()).map(|i| classify_point(spec, space.coords(i))).collect()
}

/// `f = 1` on the line, `ε_j` on `V_j`, `min(1, ε_j max(h(u), 1))` on `U_j`.
pub fn haircomb_weight(space: &FiniteSpace, spec: &HaircombSpec) -> Result<Weight> {
    let values = haircomb_layout(space, spec)?
        .into_iter()
        .map(|piece| match piece {
            Piece::A { .. } => 1.0,
            Piece::V { tooth, .. } => spec.eps(tooth),
            Piece::U { tooth, u } => (spec.eps(tooth) * h(spec.alpha, u).max(1.0)).min(1.0),
        })
        .collect();
    Weight::new(values)
}

/// Center of the ball `B_j = B((10j + 1, 1/2), 1/2)`.
pub fn tooth_ball_center(tooth: usize) -> [f64; 2] {
    [10.0 * tooth as f64 + 1.0, 0.5]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToothRow {
    pub tooth: usize,
    pub eps: f64,
    /// `w(B_j)`.
    pub w_ball: f64,
    /// `w(2B_j)`.
    pub w_double: f64,
    pub ratio: f64,
}

/// `w(B_j)`, `w(2B_j)` and their ratio for every tooth.
pub fn haircomb_nondoubling_report(space: &FiniteSpace, weight: &Weight, spec: &HaircombSpec) -> Result<Vec<ToothRow>> {
    if spec.teeth < 2 {
        return Err(Error::arg("the report needs at least two teeth"));
    }
    (1..=spec.teeth)
        .map(|j| {
            let c = tooth_ball_center(j);
            let w_ball = weight.integral(space, &space.ball_at(&c, 0.5)?);
            let w_double = weight.integral(space, &space.ball_at(&c, 1.0)?);
            Ok(ToothRow { tooth: j, eps: spec.eps(j), w_ball, w_double, ratio: w_double / w_ball })
        })
        .collect()
}

/// Which balls make up a per-tooth family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToothFamily {
    /// Line points with `x` within this distance of `[10j, 10j + 1]` are all centers.
    pub line_window: f64,
    /// Every `line_stride`-th remaining line point is a center.
    pub line_stride: usize,
    /// Largest radius; the smallest is half the resolution.
    pub r_max: f64,
}

impl Default for ToothFamily {
    fn default() -> Self {
        ToothFamily { line_window: 0.5, line_stride: 8, r_max: 2.0 }
    }
}

/// Points of tooth `j` and its line window.
pub fn tooth_points(space: &FiniteSpace, spec: &HaircombSpec, tooth: usize) -> Result<Vec<PointId>> {
    let layout = haircomb_layout(space, spec)?;
    Ok((0..space.len()).filter(|&i| layout[i].tooth() == tooth).collect())
}

/// Balls centered on tooth `j`: every point of `U_j` and `V_j`, line points
/// near the foot, and a stride of the rest of the line window.
pub fn tooth_family(space: &FiniteSpace, spec: &HaircombSpec, tooth: usize, opts: ToothFamily) -> Result<BallFamily> {
    if tooth == 0 || tooth > spec.teeth {
        return Err(Error::arg(format!("no tooth {tooth}")));
    }
    if opts.line_stride == 0 || !(opts.r_max > 0.0) {
        return Err(Error::arg("tooth family needs a positive stride and radius"));
    }
    let layout = haircomb_layout(space, spec)?;
    let foot = 10.0 * tooth as f64;
    let mut centers = Vec::new();
    let mut seen = 0usize;
    for (i, piece) in layout.iter().enumerate() {
        match *piece {
            Piece::A { tooth: t } if t == tooth => {
                let x = space.coords(i)[0];
                if x >= foot - opts.line_window && x <= foot + 1.0 + opts.line_window {
                    centers.push(i);
                } else {
                    if seen.is_multiple_of(opts.line_stride) {
                        centers.push(i);
                    }
                    seen += 1;
                }
            }
            Piece::U { tooth: t, .. } | Piece::V { tooth: t, .. } if t == tooth => centers.push(i),
            _ => {}
        }
    }
    BallFamily::new(centers, geometric_grid(0.5 * spec.resolution, opts.r_max, std::f64::consts::SQRT_2))
}

/// Evaluates `f` on each tooth's ball family; the table's axis is the tooth index.
pub fn per_tooth_table<F>(space: &FiniteSpace, spec: &HaircombSpec, opts: ToothFamily, f: F) -> Result<GrowthTable>
where
    F: Fn(&BallFamily) -> Result<f64> + Sync,
{
    let rows = (1..=spec.teeth)
        .into_par_iter()
        .map(|j| Ok((j as f64, f(&tooth_family(space, spec, j, opts)?)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GrowthTable::new(rows))
}

/// Cubes lying inside the region of tooth `j`.
pub fn tooth_cubes(
    lattice: &DyadicLattice,
    space: &FiniteSpace,
    spec: &HaircombSpec,
    tooth: usize,
) -> Result<Vec<CubeId>> {
    let layout = haircomb_layout(space, spec)?;
    Ok((0..lattice.len()).filter(|&q| lattice.cube(q).members.iter().all(|&x| layout[x].tooth() == tooth)).collect())
}

/// Dyadic reverse Hölder characteristic over the cubes inside each tooth region.
pub fn per_tooth_dyadic_rh(
    space: &FiniteSpace,
    weight: &Weight,
    spec: &HaircombSpec,
    lattice: &DyadicLattice,
    p: f64,
) -> Result<GrowthTable> {
    let rows = (1..=spec.teeth)
        .map(|j| {
            let cubes = tooth_cubes(lattice, space, spec, j)?;
            if cubes.is_empty() {
                return Err(Error::arg(format!("no cube fits inside tooth {j}")));
            }
            let fam = Family::Cubes { lattice, cubes };
            Ok((j as f64, rh_characteristic(weight, space, &fam, p)?.value))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GrowthTable::new(rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRow {
    pub p: f64,
    pub ball: GrowthTable,
    pub ball_growth: Growth,
    pub dyadic: GrowthTable,
    pub dyadic_growth: Growth,
}

/// Per-tooth ball and dyadic reverse Hölder tables for each exponent. The
/// default classifier looks at the increments of the `p`-th power of the
/// characteristic.
pub fn haircomb_rh_boundary(
    space: &FiniteSpace,
    weight: &Weight,
    spec: &HaircombSpec,
    lattice: &DyadicLattice,
    p_grid: &[f64],
    opts: ToothFamily,
    classifier: Option<Classifier>,
) -> Result<Vec<BoundaryRow>> {
    p_grid
        .iter()
        .map(|&p| {
            let ball = per_tooth_table(space, spec, opts, |fam| {
                Ok(rh_characteristic(weight, space, &Family::Balls(fam), p)?.value)
            })?;
            let dyadic = per_tooth_dyadic_rh(space, weight, spec, lattice, p)?;
            let c = classifier.unwrap_or(Classifier::IncrementTrend { power: p });
            Ok(BoundaryRow { p, ball_growth: c.classify(&ball), ball, dyadic_growth: c.classify(&dyadic), dyadic })
        })
        .collect()
}
