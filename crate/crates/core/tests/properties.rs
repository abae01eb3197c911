use dyadic_gehring::examples::unit_interval_space;
use dyadic_gehring::gehring::{certify, Mode};
use dyadic_gehring::io::{format_lattice, format_space, format_weight, parse_lattice, parse_space, parse_weight};
use dyadic_gehring::lattice::{build_lattice_auto, parent_doubling_constant, verify_lattice};
use dyadic_gehring::space::{estimate_kappa0, FiniteSpace, Metric, Sampling};
use dyadic_gehring::stopping::{
    decay_constant, good_bad_decomposition, stopping_children_with, stopping_tree_with, CubeMeans,
};
use dyadic_gehring::weights::{ap_characteristic, rh_characteristic, BallFamily, Family, Weight};
use dyadic_gehring::Error;
use proptest::prelude::*;

fn points(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::btree_set(prop::collection::vec(0i32..200, dim), 3..40)
        .prop_map(|set| set.into_iter().map(|v| v.into_iter().map(|x| x as f64 / 20.0).collect()).collect())
}

fn space_and_weight(dim: usize) -> impl Strategy<Value = (FiniteSpace, Weight)> {
    points(dim).prop_flat_map(|pts| {
        let n = pts.len();
        (Just(pts), prop::collection::vec(0.1f64..10.0, n), prop::collection::vec(0.01f64..100.0, n)).prop_map(
            |(pts, masses, w)| (FiniteSpace::new(pts, masses, Metric::Euclidean).unwrap(), Weight::new(w).unwrap()),
        )
    })
}

fn interval_weight() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..20.0, 64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn greedy_lattices_satisfy_the_axioms(
        (space, _) in space_and_weight(2),
        seed in any::<u64>(),
        delta in prop::sample::select(vec![0.25, 0.5, 0.7]),
    ) {
        let lattice = build_lattice_auto(&space, delta, seed).unwrap();
        let report = verify_lattice(&lattice, &space);
        prop_assert!(report.passed(), "{:?}", report.witness);
        prop_assert!(report.mass_defect < 1e-9 * space.total_mass());
        prop_assert_eq!(lattice.roots().len(), 1);
        prop_assert!(lattice.is_atomic());
        let (d, _) = parent_doubling_constant(&lattice);
        prop_assert!(d >= 1.0);
    }

    #[test]
    fn euclidean_quasi_triangle_constant_is_one((space, _) in space_and_weight(2)) {
        let k0 = estimate_kappa0(&space, Sampling::Exhaustive).unwrap();
        prop_assert!(k0 <= 1.0 + 1e-12);
    }

    #[test]
    fn squared_distance_constant_is_at_most_two(pts in points(1)) {
        let n = pts.len();
        let space = FiniteSpace::new(pts, vec![1.0; n], Metric::Snowflake(2.0)).unwrap();
        let k0 = estimate_kappa0(&space, Sampling::Exhaustive).unwrap();
        prop_assert!(k0 <= 2.0 + 1e-12);
    }

    #[test]
    fn rh_is_scale_invariant_and_monotone(
        (space, w) in space_and_weight(1),
        scale in 0.01f64..100.0,
        p in 1.1f64..3.0,
    ) {
        let lattice = build_lattice_auto(&space, 0.5, 1).unwrap();
        let balls = BallFamily::all(&space).unwrap();
        for family in [Family::dyadic(&lattice), Family::Balls(&balls)] {
            let base = rh_characteristic(&w, &space, &family, p).unwrap().value;
            let scaled = rh_characteristic(&w.scaled(scale).unwrap(), &space, &family, p).unwrap().value;
            let higher = rh_characteristic(&w, &space, &family, p + 0.5).unwrap().value;
            prop_assert!(base >= 1.0 - 1e-12);
            prop_assert!((base - scaled).abs() <= 1e-9 * base);
            prop_assert!(higher >= base - 1e-9);
            prop_assert!(ap_characteristic(&w, &space, &family, p).unwrap().value >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn stopping_children_are_disjoint_and_classified(w in interval_weight(), lambda in 1.5f64..8.0) {
        let (space, lattice) = unit_interval_space(64).unwrap();
        let w = Weight::new(w).unwrap();
        let means = CubeMeans::new(&lattice, &space, &w).unwrap();
        for q in 0..lattice.len() {
            let children = stopping_children_with(&lattice, &means, q, lambda);
            let mut seen = vec![false; space.len()];
            let mut mass = 0.0;
            for &(c, _) in &children {
                prop_assert!(lattice.cube(c).level > lattice.cube(q).level);
                for &x in &lattice.cube(c).members {
                    prop_assert!(lattice.cube(q).members.contains(&x));
                    prop_assert!(!seen[x]);
                    seen[x] = true;
                }
                mass += means.mass[c];
            }
            prop_assert!(mass <= means.mass[q] * (1.0 + 1e-12));
        }
        let tree = stopping_tree_with(&lattice, &means, lattice.roots()[0], lambda, 32).unwrap();
        let c = decay_constant(&tree, &means);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
    }

    #[test]
    fn decomposition_masses_add_up(w in interval_weight(), lambda in 1.5f64..8.0, cube in 0usize..127) {
        let (space, lattice) = unit_interval_space(64).unwrap();
        let w = Weight::new(w).unwrap();
        let d = good_bad_decomposition(&lattice, &space, &w, cube, lambda).unwrap();
        prop_assert!((d.mass_high + d.mass_low + d.mass_good - d.mass_q).abs() <= 1e-12 * d.mass_q.max(1.0));
        prop_assert!((d.w_high + d.w_low + d.w_good - d.w_q).abs() <= 1e-9 * d.w_q);
    }

    #[test]
    fn certificates_bound_the_measured_characteristic(w in interval_weight(), p in 1.2f64..3.0) {
        let (space, lattice) = unit_interval_space(64).unwrap();
        let w = Weight::new(w).unwrap();
        match certify(&w, &space, &lattice, p, None, Mode::Standard) {
            Ok(run) => {
                prop_assert!(run.sound(), "{:?}", run.certificate);
                prop_assert!(run.certificate.epsilon > 0.0);
                prop_assert!(run.certificate.a < 1.0);
            }
            Err(Error::NoDecay(c)) => prop_assert!(c >= 1.0),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn text_formats_round_trip((space, w) in space_and_weight(2), seed in any::<u64>()) {
        let back = parse_space(&format_space(&space)).unwrap();
        prop_assert_eq!(back.len(), space.len());
        for i in 0..space.len() {
            prop_assert_eq!(back.coords(i), space.coords(i));
            prop_assert_eq!(back.mass(i), space.mass(i));
        }
        let parsed = parse_weight(&format_weight(&w), space.len()).unwrap();
        prop_assert_eq!(parsed.values(), w.values());
        let lattice = build_lattice_auto(&space, 0.5, seed).unwrap();
        let again = parse_lattice(&format_lattice(&lattice), &space).unwrap();
        prop_assert_eq!(format_lattice(&again), format_lattice(&lattice));
    }
}
