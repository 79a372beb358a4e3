use aot_core::{is_naturally_filtered, natural_version, FilteredTree};
use aot_coupling::*;
use aot_generators::{random_tree, RandomTreeConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tree(seed: u64, depth: usize, value_levels: Option<usize>) -> FilteredTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = RandomTreeConfig { depth, value_levels, roots: 1 + (seed % 2) as usize, ..Default::default() };
    random_tree(&mut rng, &cfg)
}

fn mixture(a: &Coupling, b: &Coupling, lambda: f64) -> Coupling {
    let w = a.weights().iter().zip(b.weights()).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
    Coupling::new(a.rows(), a.cols(), w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn product_and_identity_are_bicausal(seed in any::<u64>(), depth in 1usize..4) {
        let x = tree(seed, depth, None);
        let y = tree(seed.wrapping_add(1), depth, None);
        prop_assert!(is_eps_bicausal(&x, &y, &Coupling::product(&x, &y), EpsShift::zero()).unwrap().holds);
        prop_assert!(is_eps_bicausal(&x, &x, &Coupling::identity(&x), EpsShift::zero()).unwrap().holds);
    }

    #[test]
    fn glued_bicausal_couplings_stay_bicausal(seed in any::<u64>(), l1 in 0.0f64..1.0, l2 in 0.0f64..1.0) {
        let x = tree(seed, 3, None);
        let pi = mixture(&Coupling::identity(&x), &Coupling::product(&x, &x), l1);
        let rho = mixture(&Coupling::identity(&x), &Coupling::product(&x, &x), l2);
        let g = glue(&pi, &rho, &x).unwrap();
        prop_assert!(g.marginal_error(&x, &x).unwrap() < 1e-12);
        prop_assert!(is_eps_bicausal(&x, &x, &g, EpsShift::zero()).unwrap().holds);
    }

    #[test]
    fn gluing_preserves_the_outer_marginals(seed in any::<u64>()) {
        let (x, y, z) = (tree(seed, 2, None), tree(seed ^ 7, 2, None), tree(seed ^ 11, 2, None));
        let g = glue(&Coupling::product(&x, &y), &Coupling::product(&y, &z), &y).unwrap();
        prop_assert!(g.marginal_error(&x, &z).unwrap() < 1e-12);
    }

    #[test]
    fn path_identity_onto_the_natural_version(seed in any::<u64>(), depth in 1usize..4) {
        let y = tree(seed, depth, Some(2));
        let (s, map) = natural_version(&y);
        let pi = Coupling::from_leaf_map(&y, s.num_leaves(), &map);
        prop_assert!(pi.marginal_error(&y, &s).unwrap() < 1e-12);
        prop_assert!(is_eps_causal(&y, &s, &pi, EpsShift::zero(), Direction::XToY).unwrap().holds);
        let back = is_eps_causal(&y, &s, &pi, EpsShift::zero(), Direction::YToX).unwrap().holds;
        prop_assert_eq!(back, is_naturally_filtered(&y));
    }

    #[test]
    fn reduced_rows_are_a_subset_of_full_rows(seed in any::<u64>(), k in 0usize..4) {
        let (x, y) = (tree(seed, 3, None), tree(seed ^ 3, 3, None));
        let e = EpsShift::steps(k, x.grid());
        for d in [Direction::XToY, Direction::YToX] {
            let full = causality_constraints(&x, &y, e, d).unwrap();
            let red = reduced_causality_constraints(&x, &y, e, d).unwrap();
            prop_assert!(red.len() <= full.len());
            prop_assert!(red.iter().all(|r| full.contains(r)));
            if k >= 3 {
                prop_assert!(full.is_empty());
            }
        }
    }
}

#[test]
fn rows_are_sorted_by_level_atom_and_leaf() {
    let (x, y) = (tree(5, 3, None), tree(6, 3, None));
    let rows = causality_constraints(&x, &y, EpsShift::zero(), Direction::XToY).unwrap();
    assert!(rows.windows(2).all(|w| (w[0].level, w[0].atom, w[0].leaf) < (w[1].level, w[1].atom, w[1].leaf)));
}

#[test]
fn deterministic_pair_has_no_rows() {
    let g = aot_core::TimeGrid::uniform(3);
    let a = FilteredTree::deterministic(g.clone(), &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
    let b = FilteredTree::deterministic(g, &[vec![0.0], vec![0.0], vec![0.0], vec![0.0]]).unwrap();
    for d in [Direction::XToY, Direction::YToX] {
        assert!(causality_constraints(&a, &b, EpsShift::zero(), d).unwrap().is_empty());
    }
}
