//! The stopping time driven by cube means.
//!
//! A subcube `Q'` of `Q` stops when its mean leaves the band
//! `(λ⁻¹⟨Q⟩w, λ⟨Q⟩w)`; equality counts as leaving. `J(Q)` holds the maximal
//! stopped subcubes, and iterating `J` gives the generations `J_n(Q)`.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{CubeId, DyadicLattice};
use crate::space::{FiniteSpace, PointId};
use crate::weights::Weight;

pub const DEFAULT_MAX_GENERATIONS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopKind {
    /// `⟨Q'⟩w ≥ λ⟨Q⟩w`
    High,
    /// `⟨Q'⟩w ≤ λ⁻¹⟨Q⟩w`
    Low,
}

impl fmt::Display for StopKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopKind::High => "high",
            StopKind::Low => "low",
        })
    }
}

/// Cube masses, `w`-integrals and means for a whole lattice.
#[derive(Debug, Clone)]
pub struct CubeMeans {
    pub mass: Vec<f64>,
    pub integral: Vec<f64>,
    pub mean: Vec<f64>,
}

impl CubeMeans {
    pub fn new(lattice: &DyadicLattice, space: &FiniteSpace, weight: &Weight) -> Result<Self> {
        if weight.len() != space.len() {
            return Err(Error::arg("weight and space sizes differ"));
        }
        let rows: Vec<(f64, f64, f64)> = lattice
            .cubes()
            .par_iter()
            .map(|c| {
                let m = lattice_mass(space, &c.members);
                let s = weight.integral(space, &c.members);
                // a singleton's mean is its value, with no rounding from s/m
                let mean = if c.members.len() == 1 { weight.value(c.members[0]) } else { s / m };
                (m, s, mean)
            })
            .collect();
        if let Some(q) = rows.iter().position(|r| !(r.0 > 0.0)) {
            return Err(Error::Internal(format!("cube {q} has zero measure")));
        }
        Ok(CubeMeans {
            mass: rows.iter().map(|r| r.0).collect(),
            integral: rows.iter().map(|r| r.1).collect(),
            mean: rows.iter().map(|r| r.2).collect(),
        })
    }
}

fn lattice_mass(space: &FiniteSpace, members: &[PointId]) -> f64 {
    members.iter().map(|&x| space.mass(x)).sum()
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 1.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("lambda must exceed 1, got {lambda}")))
    }
}

/// Whether `child` stops relative to the band around `reference`.
pub fn classify(child_mean: f64, reference_mean: f64, lambda: f64) -> Option<StopKind> {
    if child_mean >= lambda * reference_mean {
        Some(StopKind::High)
    } else if child_mean <= reference_mean / lambda {
        Some(StopKind::Low)
    } else {
        None
    }
}

/// `J(Q)` by breadth-first descent through the strict subcubes of `q`,
/// pruning below each stopped cube. Returned in discovery order.
pub fn stopping_children_with(
    lattice: &DyadicLattice,
    means: &CubeMeans,
    q: CubeId,
    lambda: f64,
) -> Vec<(CubeId, StopKind)> {
    let reference = means.mean[q];
    let mut out = Vec::new();
    let mut frontier: Vec<CubeId> = lattice.cube(q).children.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for c in frontier {
            match classify(means.mean[c], reference, lambda) {
                Some(kind) => out.push((c, kind)),
                None => next.extend_from_slice(&lattice.cube(c).children),
            }
        }
        frontier = next;
    }
    out
}

pub fn stopping_children(
    lattice: &DyadicLattice,
    space: &FiniteSpace,
    weight: &Weight,
    q: CubeId,
    lambda: f64,
) -> Result<Vec<(CubeId, StopKind)>> {
    check_lambda(lambda)?;
    let means = CubeMeans::new(lattice, space, weight)?;
    Ok(stopping_children_with(lattice, &means, q, lambda))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingNode {
    pub cube: CubeId,
    /// `None` for the root.
    pub kind: Option<StopKind>,
    pub generation: usize,
    pub parent_node: Option<usize>,
    pub mean: f64,
    /// Node ids of `J(cube)`; empty for uncomputed last-generation nodes.
    pub children: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct StoppingTree {
    pub root: CubeId,
    pub lambda: f64,
    /// Node 0 is the root.
    pub nodes: Vec<StoppingNode>,
    /// `generations[n]` lists the node ids of `J_n`; `generations[0] = [0]`.
    pub generations: Vec<Vec<usize>>,
    /// Set when the generation cap stopped a descent that could continue.
    pub truncated: bool,
}

impl StoppingTree {
    pub fn generation_cubes(&self, n: usize) -> Vec<CubeId> {
        self.generations.get(n).map_or_else(Vec::new, |g| g.iter().map(|&i| self.nodes[i].cube).collect())
    }

    /// Number of nonempty generations after the root.
    pub fn depth(&self) -> usize {
        self.generations.iter().skip(1).filter(|g| !g.is_empty()).count()
    }

    /// `μ(B_n) = Σ_{J_n} μ(Q')` for `n = 0, 1, ...`.
    pub fn generation_masses(&self, means: &CubeMeans) -> Vec<f64> {
        self.generations.iter().map(|g| g.iter().map(|&i| means.mass[self.nodes[i].cube]).sum()).collect()
    }
}

pub fn stopping_tree_with(
    lattice: &DyadicLattice,
    means: &CubeMeans,
    q: CubeId,
    lambda: f64,
    max_generations: usize,
) -> Result<StoppingTree> {
    check_lambda(lambda)?;
    if max_generations == 0 {
        return Err(Error::arg("max_generations must be at least 1"));
    }
    let mut nodes = vec![StoppingNode {
        cube: q,
        kind: None,
        generation: 0,
        parent_node: None,
        mean: means.mean[q],
        children: Vec::new(),
    }];
    let mut generations = vec![vec![0]];
    let mut truncated = false;
    for n in 1..=max_generations {
        let mut current = Vec::new();
        for &parent in &generations[n - 1] {
            for (cube, kind) in stopping_children_with(lattice, means, nodes[parent].cube, lambda) {
                let id = nodes.len();
                nodes.push(StoppingNode {
                    cube,
                    kind: Some(kind),
                    generation: n,
                    parent_node: Some(parent),
                    mean: means.mean[cube],
                    children: Vec::new(),
                });
                nodes[parent].children.push(id);
                current.push(id);
            }
        }
        let done = current.is_empty();
        generations.push(current);
        if done {
            break;
        }
        if n == max_generations {
            truncated = generations[n]
                .iter()
                .any(|&i| !stopping_children_with(lattice, means, nodes[i].cube, lambda).is_empty());
        }
    }
    while generations.len() > 1 && generations.last().is_some_and(|g| g.is_empty()) {
        generations.pop();
    }
    Ok(StoppingTree { root: q, lambda, nodes, generations, truncated })
}

pub fn stopping_tree(
    lattice: &DyadicLattice,
    space: &FiniteSpace,
    weight: &Weight,
    q: CubeId,
    lambda: f64,
    max_generations: usize,
) -> Result<StoppingTree> {
    let means = CubeMeans::new(lattice, space, weight)?;
    stopping_tree_with(lattice, &means, q, lambda, max_generations)
}

/// `max Σ_{J_1(Q)} μ(Q') / μ(Q)` over the nodes of a tree whose children were
/// computed.
pub fn decay_constant(tree: &StoppingTree, means: &CubeMeans) -> f64 {
    let last = tree.generations.len() - 1;
    tree.nodes
        .iter()
        .filter(|nd| nd.generation < last || !tree.truncated)
        .map(|nd| nd.children.iter().fold(0.0, |s, &c| s + means.mass[tree.nodes[c].cube]) / means.mass[nd.cube])
        .fold(0.0, f64::max)
}

/// `max Σ_{J_1(Q)} μ(Q') / μ(Q)` over every cube of the lattice, with the
/// cube attaining it.
pub fn decay_over_lattice(lattice: &DyadicLattice, means: &CubeMeans, lambda: f64) -> Result<(f64, Option<CubeId>)> {
    check_lambda(lambda)?;
    let best = (0..lattice.len())
        .into_par_iter()
        .map(|q| {
            let stopped =
                stopping_children_with(lattice, means, q, lambda).iter().fold(0.0, |s, &(c, _)| s + means.mass[c]);
            (stopped / means.mass[q], q)
        })
        .reduce(|| (0.0, usize::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    Ok((best.0, (best.1 != usize::MAX && best.0 > 0.0).then_some(best.1)))
}

#[derive(Debug, Clone, PartialEq)]
pub enum LemmaViolation {
    /// `⟨Q'⟩ > Dλ⟨J-parent⟩`.
    ParentStep { node: usize },
    /// `⟨Q'⟩ > (Dλ)^n ⟨root⟩`.
    Iterated { node: usize },
    /// A good point outside `[λ⁻¹⟨Q⟩, λ⟨Q⟩]`.
    GoodPoint { node: usize, point: PointId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub parent_step_ok: bool,
    pub iterated_ok: bool,
    pub good_points_ok: bool,
    pub nodes_checked: usize,
    pub points_checked: usize,
    pub witness: Option<LemmaViolation>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.parent_step_ok && self.iterated_ok && self.good_points_ok
    }
}

/// Checks the three mean bounds on a tree: one step, iterated, and the
/// pointwise band on the good set of every expanded node.
pub fn verify_lemma_bounds(tree: &StoppingTree, lattice: &DyadicLattice, weight: &Weight, d: f64) -> LemmaReport {
    let dl = d * tree.lambda;
    let root_mean = tree.nodes[0].mean;
    let mut report = LemmaReport {
        parent_step_ok: true,
        iterated_ok: true,
        good_points_ok: true,
        nodes_checked: 0,
        points_checked: 0,
        witness: None,
    };
    for (id, node) in tree.nodes.iter().enumerate() {
        if let Some(parent) = node.parent_node {
            report.nodes_checked += 1;
            if !(node.mean <= dl * tree.nodes[parent].mean) {
                report.parent_step_ok = false;
                report.witness.get_or_insert(LemmaViolation::ParentStep { node: id });
            }
            if !(node.mean <= dl.powi(node.generation as i32) * root_mean) {
                report.iterated_ok = false;
                report.witness.get_or_insert(LemmaViolation::Iterated { node: id });
            }
        }
    }
    let last = tree.generations.len() - 1;
    for (id, node) in tree.nodes.iter().enumerate() {
        if tree.truncated && node.generation == last {
            continue;
        }
        let (lo, hi) = (node.mean / tree.lambda, tree.lambda * node.mean);
        let stopped = stopped_mask(tree, lattice, id);
        for &x in &lattice.cube(node.cube).members {
            if stopped.binary_search(&x).is_ok() {
                continue;
            }
            report.points_checked += 1;
            let v = weight.value(x);
            if !(lo <= v && v <= hi) {
                report.good_points_ok = false;
                report.witness.get_or_insert(LemmaViolation::GoodPoint { node: id, point: x });
            }
        }
    }
    report
}

/// Sorted points covered by the node's `J_1` cubes.
fn stopped_mask(tree: &StoppingTree, lattice: &DyadicLattice, node: usize) -> Vec<PointId> {
    let mut pts: Vec<PointId> = tree.nodes[node]
        .children
        .iter()
        .flat_map(|&c| lattice.cube(tree.nodes[c].cube).members.iter().copied())
        .collect();
    pts.sort_unstable();
    pts
}

/// `Q = B^λ ⊔ B^{1/λ} ⊔ G` with the masses and `w`-integrals of each part.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub cube: CubeId,
    pub lambda: f64,
    pub high: Vec<CubeId>,
    pub low: Vec<CubeId>,
    pub good: Vec<PointId>,
    pub mass_q: f64,
    pub mass_high: f64,
    pub mass_low: f64,
    pub mass_good: f64,
    pub w_q: f64,
    pub w_high: f64,
    pub w_low: f64,
    pub w_good: f64,
    /// `μ(G) ≤ μ(Q)/(3λ)`.
    pub good_is_small: bool,
    /// `∫_G w ≤ ∫_Q w / 3`; checked whenever `good_is_small`.
    pub good_third: Option<bool>,
    /// `∫_{B^{1/λ}} w < ∫_Q w / 3`; meaningful for `λ > 3`.
    pub low_third: bool,
}

pub fn good_bad_decomposition(
    lattice: &DyadicLattice,
    space: &FiniteSpace,
    weight: &Weight,
    q: CubeId,
    lambda: f64,
) -> Result<Decomposition> {
    check_lambda(lambda)?;
    let means = CubeMeans::new(lattice, space, weight)?;
    let children = stopping_children_with(lattice, &means, q, lambda);
    let high: Vec<CubeId> = children.iter().filter(|c| c.1 == StopKind::High).map(|c| c.0).collect();
    let low: Vec<CubeId> = children.iter().filter(|c| c.1 == StopKind::Low).map(|c| c.0).collect();
    let part =
        |cubes: &[CubeId]| cubes.iter().fold((0.0, 0.0), |(m, s), &c| (m + means.mass[c], s + means.integral[c]));
    let (mass_high, w_high) = part(&high);
    let (mass_low, w_low) = part(&low);
    let mut stopped: Vec<PointId> =
        children.iter().flat_map(|&(c, _)| lattice.cube(c).members.iter().copied()).collect();
    stopped.sort_unstable();
    let good: Vec<PointId> =
        lattice.cube(q).members.iter().copied().filter(|x| stopped.binary_search(x).is_err()).collect();
    let mass_good = lattice_mass(space, &good);
    let w_good = weight.integral(space, &good);
    let (mass_q, w_q) = (means.mass[q], means.integral[q]);
    let good_is_small = mass_good <= mass_q / (3.0 * lambda);
    Ok(Decomposition {
        cube: q,
        lambda,
        high,
        low,
        good,
        mass_q,
        mass_high,
        mass_low,
        mass_good,
        w_q,
        w_high,
        w_low,
        w_good,
        good_is_small,
        good_third: good_is_small.then_some(w_good <= w_q / 3.0),
        low_third: w_low < w_q / 3.0,
    })
}

/// Per-generation pieces of a tree: `μ(B_n)`, `∫_{B_n} w^p` and
/// `∫_{G_n} w^p` with `G_n = B_{n-1} \ B_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRow {
    pub n: usize,
    pub mass_b: f64,
    pub wp_b: f64,
    pub wp_g: f64,
}

pub fn generation_profile(
    tree: &StoppingTree,
    lattice: &DyadicLattice,
    space: &FiniteSpace,
    weight: &Weight,
    p: f64,
) -> Vec<GenerationRow> {
    let wp = |members: &[PointId]| members.iter().map(|&x| weight.value(x).powf(p) * space.mass(x)).sum::<f64>();
    let mut rows = Vec::new();
    for n in 0..tree.generations.len() {
        let cubes = tree.generation_cubes(n);
        let mass_b = cubes.iter().map(|&c| lattice_mass(space, &lattice.cube(c).members)).sum();
        let wp_b = cubes.iter().map(|&c| wp(&lattice.cube(c).members)).sum();
        let wp_g = if n == 0 {
            0.0
        } else {
            // G_n is the union of G_1(Q') over Q' in J_{n-1}
            tree.generations[n - 1]
                .iter()
                .map(|&id| {
                    let stopped = stopped_mask(tree, lattice, id);
                    let good: Vec<PointId> = lattice
                        .cube(tree.nodes[id].cube)
                        .members
                        .iter()
                        .copied()
                        .filter(|x| stopped.binary_search(x).is_err())
                        .collect();
                    wp(&good)
                })
                .sum()
        };
        rows.push(GenerationRow { n, mass_b, wp_b, wp_g });
    }
    if !tree.truncated {
        // everything left in the last generation is good at the next step
        let n = tree.generations.len();
        let last = &tree.generations[n - 1];
        if !last.is_empty() {
            let wp_g = last.iter().map(|&id| wp(&lattice.cube(tree.nodes[id].cube).members)).sum();
            rows.push(GenerationRow { n, mass_b: 0.0, wp_b: 0.0, wp_g });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice_from_centers;
    use crate::space::Metric;

    fn dyadic(n: usize) -> (FiniteSpace, DyadicLattice) {
        let h = 1.0 / n as f64;
        let space =
            FiniteSpace::new((0..n).map(|i| vec![(i as f64 + 0.5) * h]).collect(), vec![h; n], Metric::Euclidean)
                .unwrap();
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

    /// Brute force: every strict subcube that stops with no stopped cube
    /// strictly between it and `q`.
    fn brute_j(lat: &DyadicLattice, means: &CubeMeans, q: CubeId, lambda: f64) -> Vec<(CubeId, StopKind)> {
        let mut out = Vec::new();
        for c in lat.descendants(q).into_iter().skip(1) {
            let Some(kind) = classify(means.mean[c], means.mean[q], lambda) else { continue };
            let mut a = lat.cube(c).parent;
            let mut maximal = true;
            while let Some(p) = a {
                if p == q {
                    break;
                }
                if classify(means.mean[p], means.mean[q], lambda).is_some() {
                    maximal = false;
                }
                a = lat.cube(p).parent;
            }
            if maximal {
                out.push((c, kind));
            }
        }
        out.sort_by_key(|c| c.0);
        out
    }

    #[test]
    fn constant_weight_never_stops() {
        let (s, lat) = dyadic(64);
        let w = Weight::constant(64, 1.0).unwrap();
        let root = lat.roots()[0];
        assert!(stopping_children(&lat, &s, &w, root, 2.0).unwrap().is_empty());
        let tree = stopping_tree(&lat, &s, &w, root, 2.0, 32).unwrap();
        assert_eq!(tree.depth(), 0);
        assert!(!tree.truncated);
        let means = CubeMeans::new(&lat, &s, &w).unwrap();
        assert_eq!(decay_constant(&tree, &means), 0.0);
        assert!(verify_lemma_bounds(&tree, &lat, &w, 2.0).passed());
        let dec = good_bad_decomposition(&lat, &s, &w, root, 4.0).unwrap();
        assert_eq!(dec.good.len(), 64);
        assert!(dec.high.is_empty() && dec.low.is_empty());
        assert_eq!(dec.w_good, dec.w_q);
    }

    #[test]
    fn two_value_weight_at_lambda_two() {
        let (s, lat) = dyadic(64);
        let w = two_value(&s);
        let root = lat.roots()[0];
        let means = CubeMeans::new(&lat, &s, &w).unwrap();
        let j = stopping_children_with(&lat, &means, root, 2.0);
        assert_eq!(j.len(), 1);
        assert_eq!(lat.cube(j[0].0).members, (0..16).collect::<Vec<_>>());
        assert_eq!(j[0].1, StopKind::High);
        assert_eq!(j, brute_j(&lat, &means, root, 2.0));
        let tree = stopping_tree_with(&lat, &means, root, 2.0, 32).unwrap();
        assert_eq!(tree.depth(), 1);
        assert_eq!(decay_constant(&tree, &means), 0.25);
        let report = verify_lemma_bounds(&tree, &lat, &w, 2.0);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn two_value_weight_at_lambda_one_point_two() {
        let (s, lat) = dyadic(64);
        let w = two_value(&s);
        let root = lat.roots()[0];
        let means = CubeMeans::new(&lat, &s, &w).unwrap();
        let j = stopping_children_with(&lat, &means, root, 1.2);
        // [0,1/2) has mean 2.5 >= 2.1; [1/2,1) has mean 1 <= 1.75/1.2
        assert_eq!(j.len(), 2);
        assert_eq!((lat.cube(j[0].0).members.len(), j[0].1), (32, StopKind::High));
        assert_eq!((lat.cube(j[1].0).members.len(), j[1].1), (32, StopKind::Low));
        assert_eq!(j, brute_j(&lat, &means, root, 1.2));
    }

    #[test]
    fn stopping_matches_brute_force_on_every_cube() {
        let (s, lat) = dyadic(128);
        let w = Weight::from_fn(&s, |x| (7.0 * x[0]).sin().abs() + 0.05).unwrap();
        let means = CubeMeans::new(&lat, &s, &w).unwrap();
        for q in 0..lat.len() {
            let mut fast = stopping_children_with(&lat, &means, q, 1.7);
            fast.sort_by_key(|c| c.0);
            assert_eq!(fast, brute_j(&lat, &means, q, 1.7));
        }
    }

    #[test]
    fn decomposition_at_lambda_three_and_a_half() {
        let (s, lat) = dyadic(64);
        let w = two_value(&s);
        let dec = good_bad_decomposition(&lat, &s, &w, lat.roots()[0], 3.5).unwrap();
        assert!(dec.high.is_empty());
        // the low cutoff 0.5 is never reached either
        assert!(dec.low.is_empty());
        assert_eq!(dec.good.len(), 64);
        assert_eq!(dec.mass_good, dec.mass_q);
        assert!(dec.low_third);
    }

    #[test]
    fn small_good_set_implies_one_third_bounds() {
        // mass concentrated on a spike forces everything below the root to stop
        let (s, lat) = dyadic(64);
        let w = Weight::from_fn(&s, |x| if x[0] < 1.0 / 64.0 { 1e6 } else { 1.0 + x[0] }).unwrap();
        let dec = good_bad_decomposition(&lat, &s, &w, lat.roots()[0], 4.0).unwrap();
        assert!(dec.good_is_small, "{dec:?}");
        assert_eq!(dec.good_third, Some(true));
        assert!(dec.low_third);
    }

    #[test]
    fn generation_masses_decay_geometrically() {
        let (s, lat) = dyadic(1024);
        let w = Weight::from_fn(&s, |x| x[0].powf(-0.5)).unwrap();
        let means = CubeMeans::new(&lat, &s, &w).unwrap();
        let root = lat.roots()[0];
        let tree = stopping_tree_with(&lat, &means, root, 4.0, 32).unwrap();
        assert!(tree.depth() >= 2);
        let c = decay_constant(&tree, &means);
        assert!(c < 1.0);
        for (n, m) in tree.generation_masses(&means).iter().enumerate() {
            assert!(*m <= c.powi(n as i32) * means.mass[root] * (1.0 + 1e-12));
        }
        assert!(verify_lemma_bounds(&tree, &lat, &w, 2.0).passed());
        let rows = generation_profile(&tree, &lat, &s, &w, 1.5);
        let total: f64 = rows.iter().map(|r| r.wp_g).sum();
        let direct: f64 = (0..1024).map(|x| w.value(x).powf(1.5) * s.mass(x)).sum();
        assert!((total - direct).abs() < 1e-9 * direct);
    }

    #[test]
    fn decay_over_lattice_is_monotone_in_lambda() {
        let (s, lat) = dyadic(256);
        let w = Weight::from_fn(&s, |x| x[0].powf(-0.5)).unwrap();
        let means = CubeMeans::new(&lat, &s, &w).unwrap();
        let mut prev = f64::INFINITY;
        for lambda in [1.5, 2.0, 3.0, 5.0, 8.0] {
            let (c, _) = decay_over_lattice(&lat, &means, lambda).unwrap();
            assert!(c <= prev);
            prev = c;
        }
        assert!(decay_over_lattice(&lat, &means, 1.0).is_err());
    }

    #[test]
    fn truncation_flag() {
        let (s, lat) = dyadic(1024);
        let w = Weight::from_fn(&s, |x| x[0].powf(-0.5)).unwrap();
        let means = CubeMeans::new(&lat, &s, &w).unwrap();
        let root = lat.roots()[0];
        let full = stopping_tree_with(&lat, &means, root, 1.5, 32).unwrap();
        assert!(!full.truncated);
        let capped = stopping_tree_with(&lat, &means, root, 1.5, 1).unwrap();
        assert_eq!(capped.truncated, full.depth() > 1);
    }
}
