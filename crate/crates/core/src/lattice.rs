//! Dyadic cube systems.
//!
//! A lattice holds one generation of cubes per level `k_min..=k_max`. Every
//! generation partitions the point set, each cube sits inside exactly one cube
//! of the previous generation, and each cube is squeezed between two balls
//! around its center: `B(z, r0 δ^k) ⊆ Q ⊆ B(z, R0 δ^k)`.
//!
//! Construction uses nested greedy `δ^k`-nets. Points join the nearest child
//! center inside the cube they already belong to, so nesting holds by
//! construction and the sandwich constants are measured afterwards.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::space::{halvings, FiniteSpace, Metric, NeighborIndex, PointId};

pub type CubeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicCube {
    pub level: i32,
    pub center: PointId,
    /// Sorted point ids.
    pub members: Vec<PointId>,
    pub parent: Option<CubeId>,
    pub children: Vec<CubeId>,
}

#[derive(Debug, Clone)]
pub struct DyadicLattice {
    delta: f64,
    k_min: i32,
    seed: u64,
    r0: f64,
    big_r0: f64,
    cubes: Vec<DyadicCube>,
    generations: Vec<Vec<CubeId>>,
    /// `owner[level index][point]`: the cube holding the point at that level.
    owner: Vec<Vec<CubeId>>,
    masses: Vec<f64>,
}

impl DyadicLattice {
    /// Assembles a lattice from explicit cubes. Parent/child links, levels and
    /// sandwich constants are taken as given; nothing is verified here (see
    /// [`verify_lattice`]).
    pub fn from_cubes(
        space: &FiniteSpace,
        delta: f64,
        seed: u64,
        r0: f64,
        big_r0: f64,
        cubes: Vec<DyadicCube>,
    ) -> Result<Self> {
        check_delta(delta)?;
        if cubes.is_empty() {
            return Err(Error::arg("lattice has no cubes"));
        }
        let k_min = cubes.iter().map(|c| c.level).min().unwrap_or(0);
        let k_max = cubes.iter().map(|c| c.level).max().unwrap_or(0);
        let n_levels = (k_max - k_min + 1) as usize;
        let mut generations = vec![Vec::new(); n_levels];
        let mut owner = vec![vec![usize::MAX; space.len()]; n_levels];
        let mut masses = Vec::with_capacity(cubes.len());
        for (id, cube) in cubes.iter().enumerate() {
            let li = (cube.level - k_min) as usize;
            generations[li].push(id);
            let mut m = 0.0;
            for &p in &cube.members {
                if p >= space.len() {
                    return Err(Error::UnknownPoint(p));
                }
                if owner[li][p] == usize::MAX {
                    owner[li][p] = id;
                }
                m += space.mass(p);
            }
            masses.push(m);
            if cube.center >= space.len() {
                return Err(Error::UnknownPoint(cube.center));
            }
            for &c in cube.children.iter().chain(cube.parent.iter()) {
                if c >= cubes.len() {
                    return Err(Error::arg(format!("cube {id} links to missing cube {c}")));
                }
            }
        }
        Ok(DyadicLattice { delta, k_min, seed, r0, big_r0, cubes, generations, owner, masses })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_min + self.generations.len() as i32 - 1
    }

    /// Recorded inner sandwich constant.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Recorded outer sandwich constant.
    pub fn big_r0(&self) -> f64 {
        self.big_r0
    }

    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }

    pub fn cube(&self, id: CubeId) -> &DyadicCube {
        &self.cubes[id]
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Cubes of generation `k`, or an empty slice outside the level range.
    pub fn generation(&self, k: i32) -> &[CubeId] {
        if k < self.k_min || k > self.k_max() {
            return &[];
        }
        &self.generations[(k - self.k_min) as usize]
    }

    /// The cube of generation `k` containing `point`.
    pub fn cube_of(&self, k: i32, point: PointId) -> Option<CubeId> {
        if k < self.k_min || k > self.k_max() {
            return None;
        }
        self.owner[(k - self.k_min) as usize].get(point).copied().filter(|&c| c != usize::MAX)
    }

    /// `μ(Q)`, summed over members in id order.
    pub fn cube_mass(&self, id: CubeId) -> f64 {
        self.masses[id]
    }

    /// Side length `δ^k` of generation `k`.
    pub fn scale(&self, k: i32) -> f64 {
        self.delta.powi(k)
    }

    /// The coarsest generation.
    pub fn roots(&self) -> &[CubeId] {
        &self.generations[0]
    }

    /// True when every cube of the finest generation is a single point.
    pub fn is_atomic(&self) -> bool {
        self.generation(self.k_max()).iter().all(|&c| self.cubes[c].members.len() == 1)
    }

    /// The unique cube one level up containing `id`.
    pub fn parent(&self, id: CubeId) -> Result<CubeId> {
        self.cubes.get(id).ok_or_else(|| Error::arg(format!("unknown cube {id}")))?;
        self.cubes[id].parent.ok_or(Error::NoParent(id))
    }

    /// All cubes contained in `id`, the cube itself first, depth-first.
    pub fn descendants(&self, id: CubeId) -> Vec<CubeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(c) = stack.pop() {
            out.push(c);
            stack.extend(self.cubes[c].children.iter().rev());
        }
        out
    }

    /// Writes new sandwich constants (e.g. after verification).
    pub fn set_sandwich(&mut self, r0: f64, big_r0: f64) {
        self.r0 = r0;
        self.big_r0 = big_r0;
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::arg(format!("delta must lie in (0,1), got {delta}")))
    }
}

/// Level range making the coarsest generation a single cube and the finest
/// generation atomic: `δ^k_min` exceeds the diameter and `δ^k_max` is at most
/// the minimum separation.
pub fn auto_levels(space: &FiniteSpace, delta: f64) -> Result<(i32, i32)> {
    check_delta(delta)?;
    if space.len() < 2 {
        return Ok((0, 0));
    }
    let diam = space.diameter();
    let sep = space.min_separation();
    let mut k_min = 0;
    while delta.powi(k_min) <= diam {
        k_min -= 1;
    }
    while delta.powi(k_min + 1) > diam {
        k_min += 1;
    }
    let mut k_max = k_min;
    while delta.powi(k_max) > sep {
        k_max += 1;
    }
    Ok((k_min, k_max))
}

/// Builds a lattice on the levels chosen by [`auto_levels`].
pub fn build_lattice_auto(space: &FiniteSpace, delta: f64, seed: u64) -> Result<DyadicLattice> {
    let (k_min, k_max) = auto_levels(space, delta)?;
    build_lattice(space, delta, k_min, k_max, seed)
}

/// Builds a lattice from nested greedy nets, scanning points in an order
/// shuffled by `seed`.
pub fn build_lattice(space: &FiniteSpace, delta: f64, k_min: i32, k_max: i32, seed: u64) -> Result<DyadicLattice> {
    check_delta(delta)?;
    if k_min > k_max {
        return Err(Error::arg(format!("k_min {k_min} exceeds k_max {k_max}")));
    }
    let mut order: Vec<PointId> = (0..space.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut centers: Vec<Vec<PointId>> = Vec::new();
    let mut is_center = vec![false; space.len()];
    let mut current: Vec<PointId> = Vec::new();
    for k in k_min..=k_max {
        let r = delta.powi(k);
        let mut net = Net::new(space, r);
        for &c in &current {
            net.insert(c);
        }
        for &x in &order {
            if !is_center[x] && !net.covers(x) {
                net.insert(x);
                is_center[x] = true;
                current.push(x);
            }
        }
        if k == k_min {
            // the coarsest net seeds the flag vector on its own
            for &c in &current {
                is_center[c] = true;
            }
        }
        centers.push(current.clone());
    }
    assemble(space, delta, k_min, &centers, seed)
}

/// Builds a lattice with prescribed centers per level (coarsest first).
///
/// Every cube of a generation must contain at least one center of the next
/// generation. Center sets need not be nested.
pub fn build_lattice_from_centers(
    space: &FiniteSpace,
    delta: f64,
    k_min: i32,
    centers: &[Vec<PointId>],
    seed: u64,
) -> Result<DyadicLattice> {
    check_delta(delta)?;
    if centers.is_empty() {
        return Err(Error::arg("no center levels given"));
    }
    for level in centers {
        if level.is_empty() {
            return Err(Error::arg("a level has no centers"));
        }
        if let Some(&p) = level.iter().find(|&&p| p >= space.len()) {
            return Err(Error::UnknownPoint(p));
        }
    }
    assemble(space, delta, k_min, centers, seed)
}

struct Net<'a> {
    space: &'a FiniteSpace,
    r: f64,
    index: Option<NeighborIndex>,
    list: Vec<PointId>,
}

impl<'a> Net<'a> {
    fn new(space: &'a FiniteSpace, r: f64) -> Self {
        let index = space
            .box_half_width(r)
            .filter(|w| w.is_finite() && *w > 0.0)
            .and_then(|w| NeighborIndex::for_points(space, &[], w));
        Net { space, r, index, list: Vec::new() }
    }

    fn insert(&mut self, p: PointId) {
        match &mut self.index {
            Some(index) => index.insert(self.space, p),
            None => self.list.push(p),
        }
    }

    fn covers(&self, x: PointId) -> bool {
        match &self.index {
            Some(index) => index.any_within(self.space, x, self.r),
            None => self.list.iter().any(|&c| self.space.distance(x, c) < self.r),
        }
    }
}

/// Assigns points level by level to the nearest admissible center.
fn assemble(space: &FiniteSpace, delta: f64, k_min: i32, centers: &[Vec<PointId>], seed: u64) -> Result<DyadicLattice> {
    let n = space.len();
    let mut cubes: Vec<DyadicCube> = Vec::new();
    // parent cube id for each point at the previous level
    let mut prev: Option<Vec<CubeId>> = None;
    for (li, level_centers) in centers.iter().enumerate() {
        let k = k_min + li as i32;
        let mut sorted_centers = level_centers.clone();
        sorted_centers.sort_unstable();
        sorted_centers.dedup();
        // center point -> slot within this level
        let mut assigned: Vec<usize> = vec![usize::MAX; n];
        match &prev {
            None => {
                for (x, slot) in assigned.iter_mut().enumerate() {
                    *slot = nearest(space, x, &sorted_centers);
                }
            }
            Some(parent_of) => {
                let first_new = cubes.len() - count_level(&cubes, k - 1);
                // sorted_centers is sorted, so each bucket is too
                let mut buckets: Vec<Vec<PointId>> = vec![Vec::new(); cubes.len() - first_new];
                for &c in &sorted_centers {
                    buckets[parent_of[c] - first_new].push(c);
                }
                for (pid, cand) in (first_new..cubes.len()).zip(buckets) {
                    if cand.is_empty() {
                        return Err(Error::Internal(format!(
                            "cube {pid} at level {} holds no center of level {k}",
                            k - 1
                        )));
                    }
                    for &x in &cubes[pid].members {
                        assigned[x] = nearest(space, x, &cand);
                    }
                }
            }
        }
        // group by center, ordering cubes by their smallest member
        let mut groups: Vec<(PointId, Vec<PointId>)> = Vec::new();
        let mut slot_of_center: Vec<usize> = vec![usize::MAX; n];
        for (x, &c) in assigned.iter().enumerate() {
            if slot_of_center[c] == usize::MAX {
                slot_of_center[c] = groups.len();
                groups.push((c, Vec::new()));
            }
            groups[slot_of_center[c]].1.push(x);
        }
        let base = cubes.len();
        let mut owner = vec![0; n];
        for (i, (center, members)) in groups.into_iter().enumerate() {
            if !members.contains(&center) {
                return Err(Error::Internal(format!("center {center} left its own cube at level {k}")));
            }
            let parent = prev.as_ref().map(|p| p[center]);
            for &x in &members {
                owner[x] = base + i;
            }
            if let Some(pid) = parent {
                cubes[pid].children.push(base + i);
            }
            cubes.push(DyadicCube { level: k, center, members, parent, children: Vec::new() });
        }
        if let Some(parent_of) = &prev {
            for x in 0..n {
                if cubes[owner[x]].parent != Some(parent_of[x]) {
                    return Err(Error::Internal(format!("point {x} broke nesting at level {k}")));
                }
            }
        }
        prev = Some(owner);
    }
    let mut lattice = DyadicLattice::from_cubes(space, delta, seed, 0.0, 0.0, cubes)?;
    let (r0, big_r0) = measure_sandwich(&lattice, space);
    lattice.set_sandwich(r0, big_r0);
    Ok(lattice)
}

fn count_level(cubes: &[DyadicCube], k: i32) -> usize {
    cubes.iter().rev().take_while(|c| c.level == k).count()
}

/// Nearest candidate to `x`; ties go to the lowest point id. `cand` is sorted.
fn nearest(space: &FiniteSpace, x: PointId, cand: &[PointId]) -> PointId {
    let mut best = cand[0];
    let mut best_d = space.distance(x, best);
    for &c in &cand[1..] {
        let d = space.distance(x, c);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Best sandwich constants: `r0` is the smallest ratio `dist(center,
/// nearest non-member) / δ^k`, `R0` slightly above the largest ratio
/// `dist(center, member) / δ^k`.
fn measure_sandwich(lattice: &DyadicLattice, space: &FiniteSpace) -> (f64, f64) {
    let (inner, outer) = sandwich_ratios(lattice, space);
    let r0 = inner.iter().copied().fold(f64::INFINITY, f64::min);
    let max_out = outer.iter().copied().fold(0.0, f64::max);
    let big_r0 = if max_out > 0.0 { max_out * (1.0 + 1e-9) } else { 1.0 };
    (r0, big_r0)
}

/// Per cube: (nearest non-member ratio, farthest member ratio).
fn sandwich_ratios(lattice: &DyadicLattice, space: &FiniteSpace) -> (Vec<f64>, Vec<f64>) {
    let mut inner = vec![f64::INFINITY; lattice.len()];
    let mut outer = vec![0.0; lattice.len()];
    let diam_cap = space.diameter() * 4.0 + 1.0;
    // index cells finer than the point spacing only add empty buckets
    let spacing = {
        let mut nn = space.nearest_neighbor_distances();
        if nn.is_empty() {
            0.0
        } else {
            let mid = nn.len() / 2;
            let (_, m, _) = nn.select_nth_unstable_by(mid, f64::total_cmp);
            if m.is_finite() {
                *m
            } else {
                0.0
            }
        }
    };
    for k in lattice.k_min()..=lattice.k_max() {
        let s = lattice.scale(k);
        let gen = lattice.generation(k);
        if gen.is_empty() {
            continue;
        }
        let owner = |y: PointId| lattice.cube_of(k, y);
        let index = if gen.len() > 1 && !matches!(space.metric(), Metric::Explicit(_)) {
            space.box_half_width(s.max(spacing)).and_then(|w| NeighborIndex::for_space(space, w))
        } else {
            None
        };
        for &q in gen {
            let cube = &lattice.cubes[q];
            let z = cube.center;
            outer[q] = cube.members.iter().map(|&y| space.distance(z, y) / s).fold(0.0, f64::max);
            if cube.members.len() == space.len() {
                continue;
            }
            let d = match &index {
                Some(index) => index.nearest_matching(space, z, s / 4.0, diam_cap, |y| owner(y) != Some(q)),
                None => (0..space.len())
                    .filter(|&y| owner(y) != Some(q))
                    .map(|y| space.distance(z, y))
                    .fold(f64::INFINITY, f64::min),
            };
            inner[q] = d / s;
        }
    }
    (inner, outer)
}

/// Which lattice property failed and where.
#[derive(Debug, Clone, PartialEq)]
pub enum LatticeViolation {
    /// A point is missing from, or repeated within, a generation.
    Partition {
        level: i32,
        point: PointId,
        occurrences: usize,
    },
    Nesting {
        cube: CubeId,
    },
    CenterOutside {
        cube: CubeId,
    },
    /// The recorded sandwich constants do not hold for this cube.
    Sandwich {
        cube: CubeId,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeReport {
    pub partition_ok: bool,
    pub nesting_ok: bool,
    pub sandwich_ok: bool,
    /// Largest `r0` valid for every cube.
    pub r0: f64,
    /// Smallest tested `R0` valid for every cube.
    pub big_r0: f64,
    /// Largest `|Σ_Q μ(Q) − μ(X)|` over generations (rounding only).
    pub mass_defect: f64,
    pub witness: Option<LatticeViolation>,
}

impl LatticeReport {
    pub fn passed(&self) -> bool {
        self.partition_ok && self.nesting_ok && self.sandwich_ok
    }
}

/// Checks partition, nesting and the recorded sandwich constants, and
/// measures the best constants.
pub fn verify_lattice(lattice: &DyadicLattice, space: &FiniteSpace) -> LatticeReport {
    let mut witness = None;
    let n = space.len();
    let total = space.total_mass();
    let mut partition_ok = true;
    let mut mass_defect = 0.0f64;
    for k in lattice.k_min()..=lattice.k_max() {
        let mut seen = vec![0usize; n];
        let mut sum = 0.0;
        for &q in lattice.generation(k) {
            for &p in &lattice.cubes[q].members {
                seen[p] += 1;
            }
            sum += lattice.cube_mass(q);
        }
        mass_defect = mass_defect.max((sum - total).abs());
        if let Some((point, &occurrences)) = seen.iter().enumerate().find(|(_, &c)| c != 1) {
            partition_ok = false;
            witness.get_or_insert(LatticeViolation::Partition { level: k, point, occurrences });
        }
    }

    let mut nesting_ok = true;
    for (id, cube) in lattice.cubes.iter().enumerate() {
        if !cube.members.contains(&cube.center) {
            nesting_ok = false;
            witness.get_or_insert(LatticeViolation::CenterOutside { cube: id });
            continue;
        }
        let nested = match cube.parent {
            None => cube.level == lattice.k_min(),
            Some(p) => {
                lattice.cubes[p].level == cube.level - 1
                    && lattice.cubes[p].children.contains(&id)
                    && cube.members.iter().all(|&x| lattice.cube_of(cube.level - 1, x) == Some(p))
            }
        };
        if !nested {
            nesting_ok = false;
            witness.get_or_insert(LatticeViolation::Nesting { cube: id });
        }
    }

    let (inner, outer) = sandwich_ratios(lattice, space);
    let r0 = inner.iter().copied().fold(f64::INFINITY, f64::min);
    let max_out = outer.iter().copied().fold(0.0, f64::max);
    let big_r0 = if max_out > 0.0 { max_out * (1.0 + 1e-9) } else { 1.0 };
    let mut sandwich_ok = true;
    for q in 0..lattice.len() {
        if !(inner[q] >= lattice.r0() && outer[q] < lattice.big_r0()) {
            sandwich_ok = false;
            witness.get_or_insert(LatticeViolation::Sandwich { cube: q });
        }
    }
    if !(lattice.r0() > 0.0) {
        sandwich_ok = false;
    }
    LatticeReport { partition_ok, nesting_ok, sandwich_ok, r0, big_r0, mass_defect, witness }
}

/// Whether `B(z, r0 δ^k) ⊆ Q ⊆ B(z, R0 δ^k)` holds for every cube.
pub fn sandwich_holds(lattice: &DyadicLattice, space: &FiniteSpace, r0: f64, big_r0: f64) -> bool {
    let (inner, outer) = sandwich_ratios(lattice, space);
    inner.iter().zip(&outer).all(|(&i, &o)| i >= r0 && o < big_r0)
}

/// `D := max μ(Q̂)/μ(Q)` over non-root cubes, with the cube attaining it.
pub fn parent_doubling_constant(lattice: &DyadicLattice) -> (f64, Option<CubeId>) {
    let mut best = 1.0;
    let mut witness = None;
    for (id, cube) in lattice.cubes.iter().enumerate() {
        if let Some(p) = cube.parent {
            let ratio = lattice.cube_mass(p) / lattice.cube_mass(id);
            if ratio > best {
                best = ratio;
                witness = Some(id);
            }
        }
    }
    (best, witness)
}

/// Upper bound on the parent constant from `κ0`, `κ1`, the sandwich
/// constants and `δ`: compare `Q̂ ⊆ B(ẑ, R0 δ^(k-1))` with
/// `B(z, r0 δ^k) ⊆ Q` through the distant-balls and general-radii bounds.
pub fn appendix_parent_bound(kappa0: f64, kappa1: f64, r0: f64, big_r0: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(r0 > 0.0) || !(big_r0 > 0.0) {
        return Err(Error::arg("sandwich constants must be positive"));
    }
    if !(kappa0 >= 1.0 && kappa1 >= 1.0) {
        return Err(Error::arg("kappa0 and kappa1 must be >= 1"));
    }
    // the ratios are scale-free, so evaluate at k = 0
    let spread = big_r0 / (r0 * delta);
    let distant = kappa0 * (spread + 1.0);
    Ok(kappa1.powi(halvings(distant)) * kappa1.powi(halvings(spread)))
}

/// `count` lattices with independent net orders.
pub fn build_adjacent_lattices(
    space: &FiniteSpace,
    delta: f64,
    count: usize,
    seeds: &[u64],
) -> Result<Vec<DyadicLattice>> {
    if count == 0 {
        return Err(Error::arg("count must be at least 1"));
    }
    if seeds.len() != count {
        return Err(Error::arg(format!("{} seeds for {count} lattices", seeds.len())));
    }
    let (k_min, k_max) = auto_levels(space, delta)?;
    seeds.par_iter().map(|&s| build_lattice(space, delta, k_min, k_max, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn dyadic_centers_give_dyadic_intervals() {
        let (space, lat) = dyadic(64);
        for k in 0..=6 {
            let m = 64 >> k;
            let gen = lat.generation(k);
            assert_eq!(gen.len(), 1 << k);
            for (i, &q) in gen.iter().enumerate() {
                assert_eq!(lat.cube(q).members, (i * m..(i + 1) * m).collect::<Vec<_>>());
            }
        }
        let report = verify_lattice(&lat, &space);
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.r0, 0.5);
        assert!(sandwich_holds(&lat, &space, 0.5, 1.0));
        assert_eq!(parent_doubling_constant(&lat).0, 2.0);
    }

    #[test]
    fn parent_and_descendants() {
        let (_, lat) = dyadic(16);
        let q = lat.generation(2)[0];
        let p = lat.parent(q).unwrap();
        assert_eq!(lat.cube(p).members, (0..8).collect::<Vec<_>>());
        assert_eq!(lat.descendants(q).len(), (1 << (4 - 2 + 1)) - 1);
        let root = lat.roots()[0];
        assert_eq!(lat.parent(root), Err(Error::NoParent(root)));
    }

    #[test]
    fn greedy_lattice_verifies() {
        let space = grid(256);
        for seed in 0..3 {
            let lat = build_lattice_auto(&space, 0.5, seed).unwrap();
            assert!(lat.is_atomic());
            assert_eq!(lat.roots().len(), 1);
            let report = verify_lattice(&lat, &space);
            assert!(report.passed(), "{report:?}");
            assert_eq!(report.r0, lat.r0());
        }
    }

    #[test]
    fn single_point_space() {
        let space = FiniteSpace::new(vec![vec![0.0]], vec![1.0], Metric::Euclidean).unwrap();
        let lat = build_lattice(&space, 0.5, 0, 3, 0).unwrap();
        assert_eq!(lat.len(), 4);
        assert!(lat.cubes().iter().all(|c| c.members == vec![0]));
        assert!(verify_lattice(&lat, &space).passed());
        assert_eq!(parent_doubling_constant(&lat).0, 1.0);
    }

    #[test]
    fn duplicated_point_fails_partition() {
        let (space, lat) = dyadic(8);
        let mut cubes = lat.cubes().to_vec();
        let q = lat.generation(1)[1];
        cubes[q].members.insert(0, 0);
        let broken = DyadicLattice::from_cubes(&space, 0.5, 0, lat.r0(), lat.big_r0(), cubes).unwrap();
        let report = verify_lattice(&broken, &space);
        assert!(!report.partition_ok);
        assert_eq!(report.witness, Some(LatticeViolation::Partition { level: 1, point: 0, occurrences: 2 }));
    }

    #[test]
    fn moving_a_point_between_siblings_shrinks_r0() {
        let (space, lat) = dyadic(16);
        let mut cubes = lat.cubes().to_vec();
        // hand the level-3 cube {2,3} from [0,4) to [4,8) at level 2
        let (a, b) = (lat.generation(2)[0], lat.generation(2)[1]);
        let moved = lat.cube_of(3, 2).unwrap();
        cubes[a].members.retain(|&p| p != 2 && p != 3);
        cubes[a].children.retain(|&c| c != moved);
        cubes[b].members.extend([2, 3]);
        cubes[b].members.sort_unstable();
        cubes[b].children.insert(0, moved);
        cubes[moved].parent = Some(b);
        let broken = DyadicLattice::from_cubes(&space, 0.5, 0, lat.r0(), lat.big_r0(), cubes).unwrap();
        let report = verify_lattice(&broken, &space);
        assert!(report.partition_ok && report.nesting_ok, "{report:?}");
        assert!(report.r0 < 0.5, "r0 = {}", report.r0);
        assert!(!report.sandwich_ok);
    }

    #[test]
    fn parent_bound_dominates_measured_constant() {
        let space = grid(128);
        let lat = build_lattice_auto(&space, 0.5, 7).unwrap();
        let (d, _) = parent_doubling_constant(&lat);
        let k1 = crate::space::kappa1_exhaustive(&space, &(0..128).collect::<Vec<_>>()).unwrap().value;
        let bound = appendix_parent_bound(1.0, k1, lat.r0(), lat.big_r0(), 0.5).unwrap();
        assert!(d < bound, "D = {d}, bound = {bound}");
    }

    #[test]
    fn adjacent_lattices_differ() {
        let space = grid(64);
        assert!(build_adjacent_lattices(&space, 0.5, 0, &[]).is_err());
        let one = build_adjacent_lattices(&space, 0.5, 1, &[5]).unwrap();
        let direct = build_lattice_auto(&space, 0.5, 5).unwrap();
        assert_eq!(one[0].cubes(), direct.cubes());
        let three = build_adjacent_lattices(&space, 0.5, 3, &[1, 2, 3]).unwrap();
        let parts: Vec<Vec<Vec<PointId>>> = three
            .iter()
            .map(|l| l.generation(l.k_min() + 3).iter().map(|&q| l.cube(q).members.clone()).collect())
            .collect();
        assert!(parts[0] != parts[1] || parts[1] != parts[2]);
    }

    #[test]
    fn delta_is_validated() {
        let space = grid(4);
        assert!(build_lattice(&space, 1.0, 0, 2, 0).is_err());
        assert!(build_lattice(&space, 0.0, 0, 2, 0).is_err());
    }
}
