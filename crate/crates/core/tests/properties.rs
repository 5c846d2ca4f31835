use fpp_core::geodesic::{brute_force_time, extract_geodesic, restricted_time, shortest_time, ShortestPathTree};
use fpp_core::path::path_time;
use fpp_core::renorm::{are_separated, cube_of, BoxRegion, RegionKind};
use fpp_core::shortcut::{min_k, success_condition_holds};
use fpp_core::{sample_edge_field, DistributionSpec, EdgeField, LatticeBox, PassageTime, Vertex};
use proptest::prelude::*;

fn small_field(seed: u64, side: i64) -> EdgeField {
    let bx = LatticeBox::with_side(2, side).unwrap();
    sample_edge_field(&bx, &DistributionSpec::uniform(0.0, 1.0), seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dijkstra_matches_exhaustive_search(seed in any::<u64>(), a in 0usize..9, b in 0usize..9) {
        let f = small_field(seed, 3);
        let bx = f.lattice_box();
        let (u, v) = (bx.vertex(a), bx.vertex(b));
        let fast = shortest_time(&f, &u, &v).unwrap();
        let slow = brute_force_time(&f, &u, &v, 8, 1_000_000).unwrap().finite().unwrap();
        prop_assert!((fast - slow).abs() < 1e-9);
    }

    #[test]
    fn geodesic_time_equals_passage_time(seed in any::<u64>(), x in -5i64..=5, y in -5i64..=5) {
        let bx = LatticeBox::centered(2, 6).unwrap();
        let f = sample_edge_field(&bx, &DistributionSpec::exponential(1.0), seed).unwrap();
        let o = Vertex::origin(2);
        let t = Vertex::new(&[x, y]);
        let g = extract_geodesic(&f, &o, &t).unwrap();
        prop_assert_eq!(g.path.first(), o);
        prop_assert_eq!(g.path.last(), t);
        prop_assert!((path_time(&f, &g.path).unwrap() - g.time).abs() < 1e-12);
        prop_assert!((shortest_time(&f, &t, &o).unwrap() - g.time).abs() < 1e-9);
    }

    #[test]
    fn restriction_is_monotone(seed in any::<u64>(), x in -6i64..=6, y in -6i64..=6) {
        let bx = LatticeBox::centered(2, 7).unwrap();
        let f = sample_edge_field(&bx, &DistributionSpec::exponential(1.0), seed).unwrap();
        let o = Vertex::origin(2);
        let v = Vertex::new(&[x, y]);
        let t = shortest_time(&f, &o, &v).unwrap();
        let as_num = |p: PassageTime| p.finite().unwrap_or(f64::INFINITY);
        let r = |m: f64| as_num(restricted_time(&f, m, &o, &v).unwrap());
        prop_assert!(t <= r(2.0));
        prop_assert!(r(2.0) <= r(1.0));
        prop_assert!(r(1.0) <= r(0.5));
        prop_assert_eq!(r(f.max_weight()), t);
    }

    #[test]
    fn sampling_ignores_the_enclosing_box(seed in any::<u64>(), shift in 0i64..4) {
        let spec = DistributionSpec::mixture(vec![(0.0, 0.2)], 0.8, DistributionSpec::pareto(2.5, 1.0));
        let a = sample_edge_field(&LatticeBox::new(&[0, 0], &[4, 4]).unwrap(), &spec, seed).unwrap();
        let b = sample_edge_field(&LatticeBox::new(&[-shift, -1], &[6, 4 + shift]).unwrap(), &spec, seed).unwrap();
        for (e, w) in a.iter() {
            prop_assert_eq!(w.to_bits(), b.weight(&e).unwrap().to_bits());
        }
    }

    #[test]
    fn tree_agrees_with_pairwise_queries(seed in any::<u64>(), idx in 0usize..16) {
        let f = small_field(seed, 4);
        let o = Vertex::new(&[2, 2]);
        let tree = ShortestPathTree::new(&f, &o).unwrap();
        let v = f.lattice_box().vertex(idx);
        prop_assert_eq!(tree.time_to(&v).unwrap(), PassageTime::Finite(shortest_time(&f, &o, &v).unwrap()));
    }

    // Inputs are multiples of 1/1024, so the inequality can be checked
    // with integers: 48d(2a + 1024 + b) + 2c < 24 d K c.
    #[test]
    fn min_k_matches_integer_oracle(a in 1i128..10_240, b in 0i128..5_120, c in 1i128..10_240, d in 2i128..=3) {
        let (m, r, delta) = (a as f64 / 1024.0, b as f64 / 1024.0, c as f64 / 1024.0);
        let holds = |k: i128| 48 * d * (2 * a + 1024 + b) + 2 * c < 24 * d * k * c;
        let k = min_k(m, r, delta, d as usize).unwrap() as i128;
        prop_assert!(holds(k));
        prop_assert!(k == 1 || !holds(k - 1));
        prop_assert_eq!(success_condition_holds(m, r, delta, d as usize, k as u64), holds(k));
    }

    #[test]
    fn cube_labels_contain_their_points(x in -200i64..200, y in -200i64..200, n in 1u64..12) {
        let v = Vertex::new(&[x, y]);
        let c = cube_of(&v, n);
        prop_assert!(BoxRegion::new(RegionKind::S, c).contains(&v));
        prop_assert!(BoxRegion::new(RegionKind::T, c).contains(&v));
    }

    #[test]
    fn separation_is_symmetric(a in proptest::array::uniform2(-8i64..8), b in proptest::array::uniform2(-8i64..8)) {
        let (a, b) = (Vertex::new(&a), Vertex::new(&b));
        prop_assert_eq!(are_separated(&a, &b), are_separated(&b, &a));
        prop_assert!(!are_separated(&a, &a));
    }
}
