use cardylab::cardy::embed_with_seed;
use cardylab::lattice::{DomainOptions, LatticeDomain, Shape};
use cardylab::map::{sample_boltzmann, BoltzmannOptions, MarkedTriangulation, Triangulation};
use cardylab::percolation::{coloring_from_loops, crossing_flags, crossing_flags_by_paths, loop_ensemble, sample_percolation, BoundaryCondition, Color, Coloring};
use cardylab::rng::{seed_split, stream};
use proptest::prelude::*;

const BLUE: BoundaryCondition = BoundaryCondition::MonochromaticBlue;

fn small_map(ell: usize, seed: u64) -> Triangulation {
    let mut rng = stream(seed, "invariants/map");
    loop {
        if let Ok(m) = sample_boltzmann(ell, BoltzmannOptions { vertex_budget: 40 }, &mut rng) {
            return m;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn seed_split_is_a_function_of_master_and_id(master in any::<u64>(), a in "[a-z/0-9]{0,12}", b in "[a-z/0-9]{0,12}") {
        prop_assert_eq!(seed_split(master, &a), seed_split(master, &a));
        if a != b {
            prop_assert_ne!(seed_split(master, &a), seed_split(master, &b));
        }
        prop_assert_ne!(seed_split(master, &a), seed_split(master.wrapping_add(1), &a));
    }

    #[test]
    fn map_json_round_trips(ell in 3usize..9, seed in any::<u64>()) {
        let m = small_map(ell, seed);
        let back: Triangulation = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        prop_assert_eq!(serde_json::to_value(&back).unwrap(), serde_json::to_value(&m).unwrap());
        prop_assert_eq!(back.boundary_len(), ell);
    }

    #[test]
    fn coloring_keys_and_flips_round_trip(ell in 3usize..8, seed in any::<u64>(), raw in any::<u64>()) {
        let m = small_map(ell, seed);
        let inner = m.num_inner().min(63);
        let key = raw & ((1u64 << inner) - 1);
        let c = Coloring::from_key(&m, key, BLUE);
        prop_assert_eq!(c.key(), key);
        for v in ell..m.num_vertices() {
            let f = c.flipped(v as u32).unwrap();
            prop_assert_ne!(f.color(v as u32), c.color(v as u32));
            prop_assert_eq!(f.flipped(v as u32).unwrap(), c.clone());
        }
        prop_assert!(c.flipped(0).is_err());
    }

    #[test]
    fn loops_determine_the_coloring(ell in 3usize..10, seed in any::<u64>()) {
        let m = small_map(ell, seed);
        let c = sample_percolation(&m, BLUE, &mut stream(seed, "invariants/coloring"));
        let loops = loop_ensemble(&m, &c).unwrap();
        prop_assert_eq!(coloring_from_loops(&m, &loops, Color::Blue).unwrap(), c);
    }

    #[test]
    fn crossing_regions_grow_with_blue(ell in 3usize..9, seed in any::<u64>()) {
        let m = MarkedTriangulation::spread(small_map(ell, seed));
        let mut c = sample_percolation(&m.map, BLUE, &mut stream(seed, "invariants/coloring"));
        let mut before = crossing_flags(&m, &c);
        for v in ell..m.map.num_vertices() {
            if c.color(v as u32) == Color::Red {
                c.flip_in_place(v as u32);
                let after = crossing_flags(&m, &c);
                for (x, y) in [(&before.ea, &after.ea), (&before.eb, &after.eb), (&before.ec, &after.ec)] {
                    prop_assert!(x.iter().zip(y).all(|(&p, &q)| !p || q));
                }
                before = after;
            }
        }
    }

    #[test]
    fn crossing_regions_match_path_search(ell in 3usize..7, seed in any::<u64>()) {
        let mut rng = stream(seed, "invariants/small");
        let map = loop {
            if let Ok(m) = sample_boltzmann(ell, BoltzmannOptions { vertex_budget: 8 }, &mut rng) {
                break m;
            }
        };
        let m = MarkedTriangulation::spread(map);
        let c = sample_percolation(&m.map, BLUE, &mut rng);
        prop_assert_eq!(crossing_flags(&m, &c), crossing_flags_by_paths(&m, &c));
    }
}

#[test]
fn embedded_coordinates_lie_in_the_triangle() {
    let d = LatticeDomain::build(&Shape::equilateral_triangle(1.0), 0.125, DomainOptions::default()).unwrap();
    let marks = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.8]].map(|p| d.nearest_boundary_position(p));
    let m = MarkedTriangulation::new(d.to_triangulation(), marks[0], marks[1], marks[2]).unwrap();
    let e = embed_with_seed(&m, 500, 1).unwrap();
    for b in &e.coords {
        let [x, y, z] = b.as_array();
        assert!(x >= 0.0 && y >= 0.0 && z >= 0.0);
        assert!((x + y + z - 1.0).abs() < 1e-12);
    }
    assert_eq!(e.coords, embed_with_seed(&m, 500, 1).unwrap().coords);
}
