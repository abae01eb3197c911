//! Finite quasi-metric measure spaces.
//!
//! A continuous space of homogeneous type is represented by a finite point
//! cloud: every point carries a positive mass (its quadrature weight) and the
//! distance between points is given by a [`Metric`]. Balls are open, so
//! `B(x, r)` holds exactly the points at distance strictly less than `r`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type PointId = usize;

/// Distance function on the point cloud.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Euclidean,
    /// Max-coordinate (l-infinity) distance; balls are axis-aligned cubes.
    Linf,
    /// Euclidean distance raised to a positive power. Exponents above one
    /// give a quasi-metric with triangle constant `2^(e-1)`.
    Snowflake(f64),
    /// Dense symmetric `n x n` distance matrix, row-major.
    Explicit(Vec<f64>),
}

impl Metric {
    pub fn tag(&self) -> String {
        match self {
            Metric::Euclidean => "euclidean".to_string(),
            Metric::Linf => "linf".to_string(),
            Metric::Snowflake(e) => format!("snowflake:{e}"),
            Metric::Explicit(_) => "explicit-matrix".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FiniteSpace {
    dim: usize,
    coords: Vec<f64>,
    masses: Vec<f64>,
    metric: Metric,
}

impl FiniteSpace {
    /// Builds a space from coordinates (row per point) and masses.
    ///
    /// Fails with [`Error::InvalidSpace`] if a mass is not strictly positive
    /// and finite, if two distinct points sit at distance zero, or if an
    /// explicit matrix is not a symmetric, zero-diagonal distance table.
    pub fn new(coords: Vec<Vec<f64>>, masses: Vec<f64>, metric: Metric) -> Result<Self> {
        let n = masses.len();
        if n == 0 {
            return Err(Error::invalid_space("space has no points"));
        }
        let dim = match &metric {
            Metric::Explicit(_) => coords.first().map_or(0, Vec::len),
            _ => {
                if coords.len() != n {
                    return Err(Error::invalid_space(format!("{} coordinate rows for {} masses", coords.len(), n)));
                }
                coords[0].len()
            }
        };
        if !coords.is_empty() && coords.len() != n {
            return Err(Error::invalid_space(format!("{} coordinate rows for {} masses", coords.len(), n)));
        }
        let mut flat = Vec::with_capacity(n * dim);
        for (i, row) in coords.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::invalid_space(format!("point {i} has {} coordinates, expected {dim}", row.len())));
            }
            if let Some(c) = row.iter().find(|c| !c.is_finite()) {
                return Err(Error::invalid_space(format!("point {i} has coordinate {c}")));
            }
            flat.extend_from_slice(row);
        }
        for (i, &m) in masses.iter().enumerate() {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::invalid_space(format!("point {i} has mass {m}")));
            }
        }
        let space = FiniteSpace { dim, coords: flat, masses, metric };
        space.check_metric()?;
        Ok(space)
    }

    fn check_metric(&self) -> Result<()> {
        let n = self.len();
        match &self.metric {
            Metric::Snowflake(e) if !(*e > 0.0 && e.is_finite()) => {
                Err(Error::invalid_space(format!("snowflake exponent {e} must be positive")))
            }
            Metric::Explicit(m) => {
                if m.len() != n * n {
                    return Err(Error::invalid_space(format!(
                        "distance matrix has {} entries, expected {}",
                        m.len(),
                        n * n
                    )));
                }
                for i in 0..n {
                    if m[i * n + i] != 0.0 {
                        return Err(Error::invalid_space(format!("rho({i},{i}) != 0")));
                    }
                    for j in 0..i {
                        let d = m[i * n + j];
                        if d != m[j * n + i] {
                            return Err(Error::invalid_space(format!("rho({i},{j}) is not symmetric")));
                        }
                        if !(d > 0.0 && d.is_finite()) {
                            return Err(Error::invalid_space(format!(
                                "rho({i},{j}) = {d}; distinct points need positive distance"
                            )));
                        }
                    }
                }
                Ok(())
            }
            _ => {
                // Coordinate metrics vanish only on equal coordinates.
                let mut order: Vec<PointId> = (0..n).collect();
                order.sort_by(|&a, &b| {
                    self.coords(a)
                        .iter()
                        .zip(self.coords(b))
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
                for w in order.windows(2) {
                    if self.coords(w[0]) == self.coords(w[1]) {
                        return Err(Error::invalid_space(format!(
                            "rho({},{}) = 0 for distinct points",
                            w[0].min(w[1]),
                            w[0].max(w[1])
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn coords(&self, i: PointId) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mass(&self, i: PointId) -> f64 {
        self.masses[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn distance(&self, i: PointId, j: PointId) -> f64 {
        match &self.metric {
            Metric::Euclidean => euclid(self.coords(i), self.coords(j)),
            Metric::Linf => self.coords(i).iter().zip(self.coords(j)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            Metric::Snowflake(e) => euclid(self.coords(i), self.coords(j)).powf(*e),
            Metric::Explicit(m) => m[i * self.len() + j],
        }
    }

    /// Half-width of a coordinate box that contains every ball of radius `r`,
    /// or `None` when the metric has no coordinate structure.
    pub(crate) fn box_half_width(&self, r: f64) -> Option<f64> {
        match &self.metric {
            Metric::Euclidean | Metric::Linf => Some(r),
            Metric::Snowflake(e) => Some(r.powf(1.0 / e)),
            Metric::Explicit(_) => None,
        }
    }

    fn check_point(&self, i: PointId) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownPoint(i))
        }
    }

    /// The open ball `B(center, radius)`.
    pub fn ball(&self, center: PointId, radius: f64) -> Result<Ball> {
        self.check_point(center)?;
        if !(radius > 0.0) {
            return Err(Error::arg(format!("ball radius must be positive, got {radius}")));
        }
        let members = (0..self.len()).filter(|&y| self.distance(center, y) < radius).collect();
        Ok(Ball { center, radius, members })
    }

    /// Points within `radius` of an arbitrary location given by coordinates
    /// (coordinate metrics only).
    pub fn ball_at(&self, coords: &[f64], radius: f64) -> Result<Vec<PointId>> {
        if coords.len() != self.dim {
            return Err(Error::arg(format!("location has {} coordinates, space has {}", coords.len(), self.dim)));
        }
        let dist = |p: &[f64]| match &self.metric {
            Metric::Euclidean => Ok(euclid(coords, p)),
            Metric::Linf => Ok(coords.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)),
            Metric::Snowflake(e) => Ok(euclid(coords, p).powf(*e)),
            Metric::Explicit(_) => Err(Error::arg("explicit metrics have no coordinates")),
        };
        let mut out = Vec::new();
        for i in 0..self.len() {
            if dist(self.coords(i))? < radius {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// Sum of masses over `members`; ids must be valid.
    pub fn measure(&self, members: &[PointId]) -> Result<f64> {
        let mut total = 0.0;
        for &i in members {
            self.check_point(i)?;
            total += self.masses[i];
        }
        Ok(total)
    }

    /// Distances from `center` to every point within `max_radius` (all points
    /// when `None`), sorted ascending, ties by point id.
    pub fn sorted_neighbors(&self, center: PointId, max_radius: Option<f64>) -> Vec<(f64, PointId)> {
        let mut out: Vec<(f64, PointId)> = match max_radius {
            Some(r) => (0..self.len()).map(|y| (self.distance(center, y), y)).filter(|(d, _)| *d < r).collect(),
            None => (0..self.len()).map(|y| (self.distance(center, y), y)).collect(),
        };
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out
    }

    /// Distance from every point to its nearest other point (`inf` for a
    /// single-point space).
    pub fn nearest_neighbor_distances(&self) -> Vec<f64> {
        let n = self.len();
        if n < 2 {
            return vec![f64::INFINITY; n];
        }
        if let Some(index) = NeighborIndex::for_space(self, self.typical_spacing()) {
            return (0..n).map(|x| index.nearest_other(self, x)).collect();
        }
        (0..n).map(|x| (0..n).filter(|&y| y != x).map(|y| self.distance(x, y)).fold(f64::INFINITY, f64::min)).collect()
    }

    /// Smallest distance between two distinct points.
    pub fn min_separation(&self) -> f64 {
        self.nearest_neighbor_distances().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Largest pairwise distance. Exact for l-infinity and for spaces up to
    /// 4096 points; larger Euclidean/snowflake spaces return the bounding-box
    /// upper bound.
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        if matches!(self.metric, Metric::Linf) {
            return (0..self.dim)
                .map(|k| {
                    let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                        let c = self.coords(i)[k];
                        (lo.min(c), hi.max(c))
                    });
                    hi - lo
                })
                .fold(0.0, f64::max);
        }
        if n <= 4096 || matches!(self.metric, Metric::Explicit(_)) {
            let mut best = 0.0f64;
            for i in 0..n {
                for j in 0..i {
                    best = best.max(self.distance(i, j));
                }
            }
            return best;
        }
        let mut sq = 0.0;
        for k in 0..self.dim {
            let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                let c = self.coords(i)[k];
                (lo.min(c), hi.max(c))
            });
            sq += (hi - lo) * (hi - lo);
        }
        match self.metric {
            Metric::Snowflake(e) => sq.sqrt().powf(e),
            _ => sq.sqrt(),
        }
    }

    fn typical_spacing(&self) -> f64 {
        let n = self.len() as f64;
        let mut extent = 0.0f64;
        for k in 0..self.dim {
            let (lo, hi) = (0..self.len()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                let c = self.coords(i)[k];
                (lo.min(c), hi.max(c))
            });
            extent = extent.max(hi - lo);
        }
        let spacing = extent / n.powf(1.0 / self.dim.max(1) as f64);
        if spacing > 0.0 {
            spacing
        } else {
            1.0
        }
    }

    /// Geometric radius grid from the minimum separation up to the first
    /// radius strictly above the diameter.
    pub fn radius_grid(&self, factor: f64) -> Result<Vec<f64>> {
        if !(factor > 1.0) {
            return Err(Error::arg(format!("radius grid factor must exceed 1, got {factor}")));
        }
        if self.len() < 2 {
            return Ok(vec![1.0]);
        }
        Ok(geometric_grid(self.min_separation(), self.diameter(), factor))
    }
}

/// Radii `start * factor^i` up to and including the first value strictly
/// greater than `stop`.
pub fn geometric_grid(start: f64, stop: f64, factor: f64) -> Vec<f64> {
    let mut radii = Vec::new();
    let mut r = start;
    loop {
        radii.push(r);
        if r > stop {
            break;
        }
        r *= factor;
    }
    radii
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Open ball with its member list.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: PointId,
    pub radius: f64,
    pub members: Vec<PointId>,
}

/// Measured doubling characteristics of a space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingProfile {
    pub kappa0: f64,
    pub kappa1: f64,
    pub geom_m: usize,
}

impl DoublingProfile {
    /// Exhaustive estimates on small spaces (all triples, all centers).
    pub fn exhaustive(space: &FiniteSpace) -> Result<Self> {
        let centers: Vec<PointId> = (0..space.len()).collect();
        let radii = space.radius_grid(2.0)?;
        Ok(DoublingProfile {
            kappa0: estimate_kappa0(space, Sampling::Exhaustive)?,
            kappa1: kappa1_exhaustive(space, &centers)?.value,
            geom_m: estimate_geometric_doubling(space, &centers, &radii)?,
        })
    }
}

/// How triples (or centers) are drawn for sup estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    Exhaustive,
    Random { samples: usize, seed: u64 },
}

/// Sup of `rho(x,y) / (rho(x,z) + rho(z,y))` over pairwise distinct triples,
/// floored at 1.
pub fn estimate_kappa0(space: &FiniteSpace, sampling: Sampling) -> Result<f64> {
    let n = space.len();
    if n < 3 {
        return Ok(1.0);
    }
    let mut best = 1.0f64;
    let mut visit = |x: PointId, y: PointId, z: PointId| -> Result<()> {
        let denom = space.distance(x, z) + space.distance(z, y);
        if denom <= 0.0 {
            return Err(Error::invalid_space(format!("zero distances around point {z}")));
        }
        best = best.max(space.distance(x, y) / denom);
        Ok(())
    };
    match sampling {
        Sampling::Exhaustive => {
            for x in 0..n {
                for y in (x + 1)..n {
                    for z in 0..n {
                        if z != x && z != y {
                            visit(x, y, z)?;
                        }
                    }
                }
            }
        }
        Sampling::Random { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut drawn = 0;
            while drawn < samples {
                let (x, y, z) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                if x == y || y == z || x == z {
                    continue;
                }
                visit(x, y, z)?;
                drawn += 1;
            }
        }
    }
    Ok(best)
}

/// Result of a doubling-constant sup estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Kappa1Estimate {
    pub value: f64,
    /// `(center, radius)` attaining the max.
    pub witness: Option<(PointId, f64)>,
    /// Pairs skipped because the inner ball had no mass.
    pub skipped: Vec<(PointId, f64)>,
    pub evaluated: usize,
}

/// Max of `mu(B(x,2r)) / mu(B(x,r))` over the given centers and radii.
pub fn estimate_kappa1(space: &FiniteSpace, radius_grid: &[f64], centers: &[PointId]) -> Result<Kappa1Estimate> {
    if radius_grid.is_empty() {
        return Err(Error::arg("radius grid is empty"));
    }
    if let Some(r) = radius_grid.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::arg(format!("radius {r} is not positive")));
    }
    let mut est = Kappa1Estimate { value: 1.0, witness: None, skipped: Vec::new(), evaluated: 0 };
    for &c in centers {
        space.check_point(c)?;
        let profile = MassProfile::new(space, c);
        for &r in radius_grid {
            let inner = profile.mass_below(r);
            if inner <= 0.0 {
                est.skipped.push((c, r));
                continue;
            }
            let ratio = profile.mass_below(2.0 * r) / inner;
            est.evaluated += 1;
            if ratio > est.value || est.witness.is_none() {
                est.value = est.value.max(ratio);
                if ratio >= est.value {
                    est.witness = Some((c, r));
                }
            }
        }
    }
    Ok(est)
}

/// Exact sup over all radii of `mu(B(x,2r)) / mu(B(x,r))` for each center.
///
/// As functions of `r` both masses are step functions whose jumps sit at the
/// distances `d` (inner ball) and `d/2` (outer ball), so the ratio only needs
/// evaluating at those breakpoints.
pub fn kappa1_exhaustive(space: &FiniteSpace, centers: &[PointId]) -> Result<Kappa1Estimate> {
    let mut est = Kappa1Estimate { value: 1.0, witness: None, skipped: Vec::new(), evaluated: 0 };
    for &c in centers {
        space.check_point(c)?;
        let profile = MassProfile::new(space, c);
        for &d in profile.distances.iter().filter(|d| **d > 0.0) {
            for r in [d, d / 2.0] {
                let ratio = profile.mass_below(2.0 * r) / profile.mass_below(r);
                est.evaluated += 1;
                if ratio > est.value {
                    est.value = ratio;
                    est.witness = Some((c, r));
                }
            }
        }
    }
    Ok(est)
}

/// Sorted distances from one center with prefix masses.
pub(crate) struct MassProfile {
    distances: Vec<f64>,
    prefix: Vec<f64>,
}

impl MassProfile {
    pub(crate) fn new(space: &FiniteSpace, center: PointId) -> Self {
        let sorted = space.sorted_neighbors(center, None);
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &(_, y) in &sorted {
            acc += space.mass(y);
            prefix.push(acc);
        }
        MassProfile { distances: sorted.into_iter().map(|(d, _)| d).collect(), prefix }
    }

    pub(crate) fn mass_below(&self, r: f64) -> f64 {
        self.prefix[self.distances.partition_point(|&d| d < r)]
    }
}

/// Greedy count of `r/2`-balls needed to cover each sampled ball; returns the max.
pub fn estimate_geometric_doubling(space: &FiniteSpace, centers: &[PointId], radii: &[f64]) -> Result<usize> {
    let mut best = 1;
    for &c in centers {
        for &r in radii {
            let ball = space.ball(c, r)?;
            let mut uncovered = ball.members.clone();
            let mut count = 0;
            while let Some(&pick) = uncovered.first() {
                count += 1;
                uncovered.retain(|&y| space.distance(pick, y) >= r / 2.0);
            }
            best = best.max(count);
        }
    }
    Ok(best)
}

/// `kappa1^n` with `n` the least integer such that `r * 2^n >= R`: halving `R`
/// that many times lands inside `B(x, r)`.
pub fn general_radii_bound(kappa1: f64, big_r: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) || !(big_r > r) {
        return Err(Error::arg(format!("need R > r > 0, got R = {big_r}, r = {r}")));
    }
    if !(kappa1 >= 1.0) {
        return Err(Error::arg(format!("kappa1 must be >= 1, got {kappa1}")));
    }
    Ok(kappa1.powi(halvings(big_r / r)))
}

/// Bound on `mu(B(y,r)) / mu(B(x,r))` for points at distance `R`, via
/// `B(y,r) ⊆ B(x, kappa0 (R + r))` and [`general_radii_bound`].
pub fn distant_balls_bound(kappa0: f64, kappa1: f64, big_r: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) || !(big_r >= 0.0) {
        return Err(Error::arg(format!("need r > 0 and R >= 0, got R = {big_r}, r = {r}")));
    }
    if !(kappa0 >= 1.0) || !(kappa1 >= 1.0) {
        return Err(Error::arg("kappa0 and kappa1 must be >= 1"));
    }
    let ratio = kappa0 * (big_r + r) / r;
    if ratio <= 1.0 {
        return Ok(1.0);
    }
    Ok(kappa1.powi(halvings(ratio)))
}

/// Least `n >= 0` with `2^n >= t`.
pub(crate) fn halvings(t: f64) -> i32 {
    let mut n = 0;
    let mut cap = 1.0;
    while cap < t {
        cap *= 2.0;
        n += 1;
    }
    n
}

/// Uniform hash grid over point coordinates (dimension <= 3).
pub(crate) struct NeighborIndex {
    cell: f64,
    dim: usize,
    buckets: HashMap<[i64; 3], Vec<PointId>>,
}

impl NeighborIndex {
    pub(crate) fn for_space(space: &FiniteSpace, cell: f64) -> Option<Self> {
        Self::for_points(space, (0..space.len()).collect::<Vec<_>>().as_slice(), cell)
    }

    pub(crate) fn for_points(space: &FiniteSpace, points: &[PointId], cell: f64) -> Option<Self> {
        if matches!(space.metric, Metric::Explicit(_)) || space.dim == 0 || space.dim > 3 || !(cell > 0.0) {
            return None;
        }
        let mut index = NeighborIndex { cell, dim: space.dim, buckets: HashMap::new() };
        for &p in points {
            index.insert(space, p);
        }
        Some(index)
    }

    fn key(&self, c: &[f64]) -> [i64; 3] {
        let mut k = [0i64; 3];
        for (slot, x) in k.iter_mut().zip(c) {
            *slot = (x / self.cell).floor() as i64;
        }
        k
    }

    pub(crate) fn insert(&mut self, space: &FiniteSpace, p: PointId) {
        let key = self.key(space.coords(p));
        self.buckets.entry(key).or_default().push(p);
    }

    /// Calls `f` on every indexed point whose coordinates lie within the box
    /// of half-width `half` around `center` (plus possibly a few more).
    pub(crate) fn for_each_in_box(&self, center: &[f64], half: f64, mut f: impl FnMut(PointId)) {
        let span = (half / self.cell).ceil() as i64;
        let cells = (2 * span + 1).pow(self.dim as u32);
        if cells as usize > self.buckets.len() * 2 {
            for bucket in self.buckets.values() {
                bucket.iter().copied().for_each(&mut f);
            }
            return;
        }
        let base = self.key(center);
        let mut offset = [0i64; 3];
        let ranges: Vec<i64> = (-span..=span).collect();
        let mut idx = vec![0usize; self.dim];
        loop {
            for d in 0..self.dim {
                offset[d] = base[d] + ranges[idx[d]];
            }
            if let Some(bucket) = self.buckets.get(&offset) {
                bucket.iter().copied().for_each(&mut f);
            }
            let mut d = 0;
            loop {
                if d == self.dim {
                    return;
                }
                idx[d] += 1;
                if idx[d] < ranges.len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }

    /// Whether some indexed point lies at distance `< r` from `x`.
    pub(crate) fn any_within(&self, space: &FiniteSpace, x: PointId, r: f64) -> bool {
        let half = space.box_half_width(r).unwrap_or(f64::INFINITY);
        let mut found = false;
        self.for_each_in_box(space.coords(x), half, |y| {
            if !found && space.distance(x, y) < r {
                found = true;
            }
        });
        found
    }

    fn nearest_other(&self, space: &FiniteSpace, x: PointId) -> f64 {
        let mut r = self.cell;
        loop {
            let half = space.box_half_width(r).unwrap_or(f64::INFINITY);
            let mut best = f64::INFINITY;
            self.for_each_in_box(space.coords(x), half, |y| {
                if y != x {
                    best = best.min(space.distance(x, y));
                }
            });
            if best < r || half.is_infinite() {
                return best;
            }
            r *= 2.0;
            if r > 1e300 {
                return best;
            }
        }
    }

    /// Distance from `x` to the nearest indexed point for which `keep` is true,
    /// or `inf` if there is none.
    pub(crate) fn nearest_matching(
        &self,
        space: &FiniteSpace,
        x: PointId,
        start: f64,
        limit: f64,
        keep: impl Fn(PointId) -> bool,
    ) -> f64 {
        let mut r = start.max(f64::MIN_POSITIVE);
        loop {
            let half = space.box_half_width(r).unwrap_or(f64::INFINITY);
            let mut best = f64::INFINITY;
            self.for_each_in_box(space.coords(x), half, |y| {
                if keep(y) {
                    best = best.min(space.distance(x, y));
                }
            });
            if best < r || r > limit || half.is_infinite() {
                return best;
            }
            r *= 2.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FiniteSpace {
        FiniteSpace::new(xs.iter().map(|&x| vec![x]).collect(), vec![1.0; xs.len()], Metric::Euclidean).unwrap()
    }

    fn unit_grid(n: usize) -> FiniteSpace {
        let h = 1.0 / n as f64;
        FiniteSpace::new((0..n).map(|i| vec![(i as f64 + 0.5) * h]).collect(), vec![h; n], Metric::Euclidean).unwrap()
    }

    #[test]
    fn kappa0_of_collinear_points_is_one() {
        assert_eq!(estimate_kappa0(&line(&[0.0, 1.0, 2.0]), Sampling::Exhaustive).unwrap(), 1.0);
    }

    #[test]
    fn kappa0_of_squared_distance_snowflake() {
        let s = FiniteSpace::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![1.0; 3], Metric::Snowflake(2.0)).unwrap();
        // brute-force oracle over all ordered triples
        let mut oracle = 1.0f64;
        for x in 0..3 {
            for y in 0..3 {
                for z in 0..3 {
                    if x != y && y != z && x != z {
                        oracle = oracle.max(s.distance(x, y) / (s.distance(x, z) + s.distance(z, y)));
                    }
                }
            }
        }
        assert_eq!(oracle, 2.0);
        assert_eq!(estimate_kappa0(&s, Sampling::Exhaustive).unwrap(), oracle);
    }

    #[test]
    fn kappa0_small_spaces_default_to_one() {
        assert_eq!(estimate_kappa0(&line(&[0.0, 5.0]), Sampling::Exhaustive).unwrap(), 1.0);
    }

    #[test]
    fn duplicate_points_are_rejected() {
        let err = FiniteSpace::new(vec![vec![0.0], vec![0.0]], vec![1.0, 1.0], Metric::Euclidean).unwrap_err();
        assert!(matches!(err, Error::InvalidSpace { .. }));
    }

    #[test]
    fn nonpositive_mass_is_rejected() {
        let err = FiniteSpace::new(vec![vec![0.0], vec![1.0]], vec![1.0, -1.0], Metric::Euclidean).unwrap_err();
        assert!(err.to_string().contains("point 1"));
    }

    #[test]
    fn explicit_matrix_validation() {
        let ok = FiniteSpace::new(vec![], vec![1.0, 1.0], Metric::Explicit(vec![0.0, 2.0, 2.0, 0.0])).unwrap();
        assert_eq!(ok.distance(0, 1), 2.0);
        let asym = FiniteSpace::new(vec![], vec![1.0, 1.0], Metric::Explicit(vec![0.0, 2.0, 3.0, 0.0]));
        assert!(asym.is_err());
        let zero = FiniteSpace::new(vec![], vec![1.0, 1.0], Metric::Explicit(vec![0.0, 0.0, 0.0, 0.0]));
        assert!(zero.is_err());
    }

    #[test]
    fn open_ball_membership() {
        let s = line(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(s.ball(2, 0.26).unwrap().members, vec![1, 2, 3]);
        assert_eq!(s.ball(2, 0.25).unwrap().members, vec![2]);
        assert_eq!(s.ball(2, 0.1).unwrap().members, vec![2]);
        assert!(s.ball(2, 0.0).is_err());
    }

    #[test]
    fn measure_is_additive_and_checks_ids() {
        let s = unit_grid(8);
        assert_eq!(s.measure(&[]).unwrap(), 0.0);
        assert_eq!(s.measure(&(0..8).collect::<Vec<_>>()).unwrap(), 1.0);
        assert_eq!(s.measure(&[0, 1, 2]).unwrap() + s.measure(&[3, 4]).unwrap(), s.measure(&[0, 1, 2, 3, 4]).unwrap());
        assert_eq!(s.measure(&[9]), Err(Error::UnknownPoint(9)));
    }

    #[test]
    fn kappa1_on_uniform_grid_at_center() {
        let s = unit_grid(1024);
        let center = 512;
        let est = estimate_kappa1(&s, &[0.125], &[center]).unwrap();
        // direct count oracle
        let inner = (0..1024).filter(|&y| s.distance(center, y) < 0.125).count() as f64;
        let outer = (0..1024).filter(|&y| s.distance(center, y) < 0.25).count() as f64;
        assert_eq!(est.value, outer / inner);
        assert!((est.value - 2.0).abs() <= 2.0 / inner);
    }

    #[test]
    fn kappa1_single_point_is_one() {
        let s = line(&[3.0]);
        assert_eq!(estimate_kappa1(&s, &[1.0, 2.0], &[0]).unwrap().value, 1.0);
        assert_eq!(kappa1_exhaustive(&s, &[0]).unwrap().value, 1.0);
    }

    #[test]
    fn kappa1_rejects_bad_grids() {
        let s = line(&[0.0, 1.0]);
        assert!(estimate_kappa1(&s, &[], &[0]).is_err());
        assert!(estimate_kappa1(&s, &[-1.0], &[0]).is_err());
    }

    #[test]
    fn exhaustive_kappa1_dominates_any_grid() {
        let s = FiniteSpace::new(
            (0..40).map(|i| vec![(i as f64).powf(1.3)]).collect(),
            (0..40).map(|i| 1.0 + (i % 3) as f64).collect(),
            Metric::Euclidean,
        )
        .unwrap();
        let centers: Vec<_> = (0..40).collect();
        let exact = kappa1_exhaustive(&s, &centers).unwrap().value;
        let grid = s.radius_grid(1.1).unwrap();
        let sampled = estimate_kappa1(&s, &grid, &centers).unwrap().value;
        assert!(sampled <= exact);
        // and the exhaustive value is attained at some radius
        let (c, r) = kappa1_exhaustive(&s, &centers).unwrap().witness.unwrap();
        let p = MassProfile::new(&s, c);
        assert_eq!(p.mass_below(2.0 * r) / p.mass_below(r), exact);
    }

    #[test]
    fn general_radii_examples() {
        assert_eq!(general_radii_bound(2.0, 4.0, 1.0).unwrap(), 4.0);
        assert_eq!(general_radii_bound(1.0, 17.0, 1.0).unwrap(), 1.0);
        assert_eq!(general_radii_bound(2.0, 3.0, 1.0).unwrap(), 4.0);
        assert!(general_radii_bound(2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn distant_balls_examples() {
        assert_eq!(distant_balls_bound(1.0, 2.0, 1.0, 1.0).unwrap(), 2.0);
        assert_eq!(distant_balls_bound(1.0, 2.0, 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(distant_balls_bound(2.0, 2.0, 1.0, 1.0).unwrap(), 4.0);
        assert!(distant_balls_bound(1.0, 2.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn nearest_neighbors_and_diameter() {
        let s = line(&[0.0, 0.1, 0.5, 2.0]);
        let nn = s.nearest_neighbor_distances();
        let expect = [0.1, 0.1, 0.4, 1.5];
        for (a, b) in nn.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(s.diameter(), 2.0);
        let grid = s.radius_grid(2.0).unwrap();
        assert!(*grid.last().unwrap() > 2.0);
        assert!((grid[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn geometric_doubling_on_a_line() {
        let s = unit_grid(64);
        let m = estimate_geometric_doubling(&s, &[10, 32], &[0.1, 0.3]).unwrap();
        assert!((2..=4).contains(&m), "m = {m}");
    }

    #[test]
    fn index_matches_brute_force_nearest() {
        let pts: Vec<Vec<f64>> =
            (0..200).map(|i| vec![(i as f64 * 0.37).sin() * 3.0, (i as f64 * 0.11).cos()]).collect();
        let s = FiniteSpace::new(pts, vec![1.0; 200], Metric::Linf).unwrap();
        let fast = s.nearest_neighbor_distances();
        for (x, &d) in fast.iter().enumerate() {
            let slow = (0..200).filter(|&y| y != x).map(|y| s.distance(x, y)).fold(f64::INFINITY, f64::min);
            assert_eq!(d, slow);
        }
    }
}
