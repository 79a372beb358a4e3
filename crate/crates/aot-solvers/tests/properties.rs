use aot_core::{coarsen_filtration, hk_minimize, law, natural_version, FilteredTree, TimeGrid};
use aot_coupling::{is_eps_bicausal, is_eps_causal, transport_cost, Direction, EpsShift, PathMetric};
use aot_generators::{random_tree, RandomTreeConfig};
use aot_solvers::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tree(seed: u64, depth: usize, value_levels: Option<usize>) -> FilteredTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let roots = 1 + (seed % 3 == 0) as usize;
    random_tree(&mut rng, &RandomTreeConfig { depth, roots, value_levels, ..Default::default() })
}

fn o(p: f64) -> SolverOptions {
    SolverOptions::order(p)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, ..ProptestConfig::default() })]

    #[test]
    fn nested_programme_agrees_with_the_bicausal_lp(seed in any::<u64>(), depth in 1usize..4, p in prop::sample::select(vec![1.0, 2.0])) {
        let (x, y) = (tree(seed, depth, None), tree(seed ^ 0xabc, depth, None));
        for metric in [PathMetric::Sup, PathMetric::L1Time] {
            let opts = SolverOptions { metric, ..o(p) };
            let dp = nested_bicausal(&x, &y, &opts).unwrap();
            let lp = aw_strict_lp(&x, &y, &opts).unwrap();
            prop_assert!((dp.value - lp.value).abs() <= 1e-8 * lp.value.max(1.0), "{} vs {}", dp.value, lp.value);
            let w = dp.coupling.unwrap();
            prop_assert!(w.marginal_error(&x, &y).unwrap() < 1e-10);
            prop_assert!(is_eps_bicausal(&x, &y, &w, EpsShift::zero()).unwrap().holds);
            let c = transport_cost(&x, &y, &w, p, metric).unwrap();
            prop_assert!((c - dp.value).abs() < 1e-8);
        }
    }

    #[test]
    fn ordering_chain(seed in any::<u64>(), depth in 1usize..4) {
        let (x, y) = (tree(seed, depth, None), tree(seed ^ 0x55, depth, None));
        let w = wasserstein(&x, &y, &o(1.0)).unwrap().value;
        let c = cw(&x, &y, &o(1.0)).unwrap().value;
        let s = scw(&x, &y, &o(1.0)).unwrap().value;
        let a = aw(&x, &y, &o(1.0)).unwrap().value;
        let n = nested_bicausal(&x, &y, &o(1.0)).unwrap().value;
        let st = strict_scw(&x, &y, &o(1.0)).unwrap().value;
        prop_assert!(w <= c + 1e-9 && c <= s + 1e-9 && s <= a + 1e-9 && a <= n + 1e-9, "{w} {c} {s} {a} {n}");
        prop_assert!(st <= n + 1e-9);
        prop_assert!(s <= st + 1e-9);
    }

    #[test]
    fn inner_values_are_monotone_in_eps(seed in any::<u64>()) {
        let (x, y) = (tree(seed, 3, None), tree(seed ^ 0x99, 3, None));
        let mut prev = f64::INFINITY;
        for k in 0..=3 {
            let e = EpsShift::steps(k, x.grid());
            let r = eps_bicausal_lp(&x, &y, e, &o(1.0)).unwrap();
            prop_assert!(r.value <= prev + 1e-9);
            prop_assert!(r.diagnostics.witness_violation <= 1e-9);
            prev = r.value;
            let c = eps_causal_lp(&x, &y, e, Direction::YToX, &o(1.0)).unwrap();
            prop_assert!(c.value <= r.value + 1e-9);
            prop_assert!(is_eps_causal(&x, &y, c.coupling.as_ref().unwrap(), e, Direction::YToX).unwrap().holds);
        }
        let w = wasserstein(&x, &y, &o(1.0)).unwrap().value;
        prop_assert!((prev - w).abs() < 1e-9);
    }

    #[test]
    fn aw_is_symmetric_and_satisfies_the_triangle_inequality(seed in any::<u64>(), depth in 1usize..3) {
        let (x, y, z) = (tree(seed, depth, None), tree(seed ^ 1, depth, None), tree(seed ^ 2, depth, None));
        let xy = aw(&x, &y, &o(1.0)).unwrap().value;
        let yx = aw(&y, &x, &o(1.0)).unwrap().value;
        let yz = aw(&y, &z, &o(1.0)).unwrap().value;
        let xz = aw(&x, &z, &o(1.0)).unwrap().value;
        prop_assert!((xy - yx).abs() <= 1e-9);
        prop_assert!(xz <= xy + yz + 1e-8);
    }

    #[test]
    fn hk_quotients_are_at_distance_zero(seed in any::<u64>(), depth in 1usize..4) {
        let x = tree(seed, depth, Some(2));
        let h = hk_minimize(&x);
        prop_assert!(aw(&x, &h, &o(1.0)).unwrap().value < 1e-9);
        prop_assert!(nested_bicausal(&x, &h, &o(1.0)).unwrap().value < 1e-9);
        prop_assert!(hellwig(&x, &h, &o(1.0)).unwrap().value < 1e-12);
        let y = tree(seed ^ 3, depth, Some(2));
        let a = wasserstein(&x, &y, &o(2.0)).unwrap().value;
        let b = wasserstein(&h, &hk_minimize(&y), &o(2.0)).unwrap().value;
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn causal_distance_to_the_natural_version_vanishes(seed in any::<u64>(), depth in 1usize..4) {
        let y = tree(seed, depth, Some(2));
        let (s, _) = natural_version(&y);
        prop_assert!(law(&s).approx_eq(&law(&y), 1e-12));
        prop_assert!(cw(&y, &s, &o(1.0)).unwrap().value < 1e-9);
    }

    #[test]
    fn mesh_bound_for_coarsened_filtrations(seed in any::<u64>(), depth in 1usize..4, mask in 0u32..8) {
        let x = tree(seed, depth, None);
        let g = x.grid();
        let mut kept: Vec<f64> = (1..g.len()).filter(|k| mask >> (k - 1) & 1 == 1).map(|k| g.time(k)).collect();
        kept.push(1.0);
        let t = TimeGrid::new(kept).unwrap();
        let c = coarsen_filtration(&x, &t).unwrap();
        prop_assert!(aw(&x, &c, &o(1.0)).unwrap().value <= t.mesh() + 1e-9);
    }

    #[test]
    fn zero_symmetrised_causal_distance_iff_zero_aw(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = tree(seed, 2, Some(2));
        // Either an equivalent copy or an independent tree.
        let y = if rng.random_bool(0.5) { hk_minimize(&x) } else { tree(seed ^ 8, 2, Some(2)) };
        let s = scw(&x, &y, &o(1.0)).unwrap().value;
        let a = aw(&x, &y, &o(1.0)).unwrap().value;
        prop_assert_eq!(s < 1e-9, a < 1e-9);
    }
}

#[test]
fn distance_zero_iff_hk_quotients_are_isomorphic() {
    let mut curated = Vec::new();
    for seed in 0..10u64 {
        let x = tree(seed, 2, Some(2));
        curated.push((x.clone(), hk_minimize(&x), true));
        let y = tree(seed + 100, 2, Some(2));
        let same = hk_minimize(&x).isomorphic(&hk_minimize(&y), 1e-12);
        curated.push((x, y, same));
    }
    for (x, y, expected) in curated {
        let iso = hk_minimize(&x).isomorphic(&hk_minimize(&y), 1e-12);
        assert_eq!(iso, expected);
        assert_eq!(aw(&x, &y, &o(1.0)).unwrap().value < 1e-9, iso);
    }
}

#[test]
fn trees_on_different_grids_are_aligned() {
    let a = FilteredTree::deterministic(TimeGrid::new(vec![0.5, 1.0]).unwrap(), &[vec![0.0], vec![1.0], vec![1.0]]).unwrap();
    let b = FilteredTree::deterministic(TimeGrid::new(vec![0.25, 1.0]).unwrap(), &[vec![0.0], vec![1.0], vec![1.0]]).unwrap();
    // Sup distance of the step paths is 1 on [¼, ½); the L1 distance is ¼.
    assert!((wasserstein(&a, &b, &o(1.0)).unwrap().value - 1.0).abs() < 1e-15);
    let l1 = SolverOptions { metric: PathMetric::L1Time, ..o(1.0) };
    assert!((wasserstein(&a, &b, &l1).unwrap().value - 0.25).abs() < 1e-15);
}
