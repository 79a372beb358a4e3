//! Property tests: Snell recursion against exhaustive enumeration,
//! invariance under minimisation, the transfer identity, the modulus and
//! the stability bounds.

use std::sync::Arc;

use aot_core::{hk_minimize, FilteredTree, TimeGrid};
use aot_coupling::{glue, Coupling, Direction, EpsShift};
use aot_generators::{random_martingale_tree, random_tree, random_walk_tree, RandomTreeConfig};
use aot_solvers::{eps_bicausal_lp, eps_causal_lp, SolverOptions};
use aot_stopping::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_cfg(rng: &mut ChaCha8Rng) -> RandomTreeConfig {
    let depth = rng.random_range(1..=4);
    let max_branching = if depth <= 2 { 3 } else { 2 };
    RandomTreeConfig {
        depth,
        min_branching: 1,
        max_branching,
        roots: rng.random_range(1..=2),
        dim: 1,
        value_levels: if rng.random_bool(0.5) { Some(3) } else { None },
    }
}

fn battery() -> Vec<CostFunction> {
    let mut b = CostFunction::lipschitz_battery();
    b.push(CostFunction::example_e1());
    b.push(CostFunction::terminal(Psi::Abs));
    b.push(CostFunction::custom(
        Arc::new(|p: &[f64], d, i, g: &TimeGrid| (1.0 + g.time(i)) * p[i * d] * p[i * d] - p[0]),
        None,
        false,
    ));
    b
}

fn random_rule(rng: &mut ChaCha8Rng, t: &FilteredTree) -> StoppingRule {
    let stop = (0..t.num_levels())
        .map(|i| (0..t.level_len(i)).map(|_| i == t.depth() || rng.random_bool(0.35)).collect())
        .collect();
    StoppingRule::new(t, stop).unwrap()
}

/// A coupling that is `ε`-causal from `x` to `y`: the product, a glued
/// mixture through `x`, or an LP witness.
fn causal_coupling(rng: &mut ChaCha8Rng, x: &FilteredTree, y: &FilteredTree, eps: EpsShift) -> Coupling {
    match rng.random_range(0..3) {
        0 => Coupling::product(x, y),
        1 => {
            // id_X glued with the product is the product; mix identity and
            // product on X first, then glue with the product to Y.
            let id = Coupling::identity(x);
            let prod = Coupling::product(x, x);
            let mix: Vec<f64> = id.weights().iter().zip(prod.weights()).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
            let mix = Coupling::new(x.num_leaves(), x.num_leaves(), mix).unwrap();
            glue(&mix, &Coupling::product(x, y), x).unwrap()
        }
        _ => {
            let r = eps_causal_lp(x, y, eps, Direction::XToY, &SolverOptions::default()).unwrap();
            r.coupling.unwrap()
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 60, .. ProptestConfig::default() })]

    #[test]
    fn snell_matches_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = small_cfg(&mut rng);
        let t = random_tree(&mut rng, &cfg);
        for phi in battery() {
            for variant in [Variant::Inf, Variant::Sup] {
                let s = snell_os(&t, &phi, variant).unwrap();
                let b = brute_force_os(&t, &phi, variant).unwrap();
                prop_assert!((s.value - b).abs() <= 1e-12, "{phi}: snell {} brute {}", s.value, b);
                if variant == Variant::Inf {
                    let e = expected_cost(&t, &s.rule, &phi).unwrap();
                    prop_assert!((e - s.value).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn os_is_invariant_under_minimisation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = RandomTreeConfig { value_levels: Some(2), ..small_cfg(&mut rng) };
        let t = random_tree(&mut rng, &cfg);
        let m = hk_minimize(&t);
        for phi in battery() {
            let a = snell_os(&t, &phi, Variant::Inf).unwrap().value;
            let b = snell_os(&m, &phi, Variant::Inf).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-12, "{phi}: {a} vs {b}");
        }
    }

    #[test]
    fn transfer_identity_and_chain(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let depth = rng.random_range(1..=3);
        let cfg = RandomTreeConfig { depth, max_branching: 2, roots: rng.random_range(1..=2), ..Default::default() };
        let x = random_tree(&mut rng, &cfg);
        let y = random_tree(&mut rng, &cfg);
        let eps = EpsShift::steps(rng.random_range(0..=depth), x.grid());
        let pi = causal_coupling(&mut rng, &x, &y, eps);
        let tau = random_rule(&mut rng, &y);
        let family = transfer_family(&x, &y, &pi, eps, &tau).unwrap();
        for phi in battery().into_iter().filter(|p| p.lipschitz.is_some()) {
            let lhs = transfer_integral(&x, &family, &phi).unwrap();
            let rhs = shifted_cost(&x, &y, &pi, eps, &tau, &phi).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12, "{phi}: {lhs} vs {rhs}");
            let best = os_from_transfer(&x, &y, &pi, eps, &tau, &phi).unwrap();
            let os = snell_os(&x, &phi, Variant::Inf).unwrap().value;
            prop_assert!(os <= best + 1e-12 && best <= rhs + 1e-12);
        }
    }

    #[test]
    fn modulus_matches_brute_force_and_is_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = small_cfg(&mut rng);
        let t = random_tree(&mut rng, &cfg);
        let n = t.depth();
        let mut prev = 0.0;
        for k in 0..=n {
            let eps = EpsShift::steps(k, t.grid());
            let d = modulus(&t, eps);
            let b = modulus_brute_force(&t, eps).unwrap();
            prop_assert!((d - b).abs() <= 1e-12);
            prop_assert!(d + 1e-15 >= prev);
            prev = d;
        }
        let max_osc = (0..t.num_leaves())
            .map(|l| {
                let v: Vec<f64> = (0..=n).map(|i| t.leaf_value(l, i)[0]).collect();
                v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - v.iter().fold(f64::INFINITY, |a, &b| a.min(b))
            })
            .fold(0.0, f64::max);
        prop_assert!(prev <= max_osc + 1e-12);
    }

    #[test]
    fn stability_bound_holds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let depth = rng.random_range(1..=3);
        let cfg = RandomTreeConfig { depth, max_branching: 2, ..Default::default() };
        let (x, y) = if rng.random_bool(0.5) {
            (random_martingale_tree(&mut rng, &cfg), random_martingale_tree(&mut rng, &cfg))
        } else {
            (random_tree(&mut rng, &cfg), random_tree(&mut rng, &cfg))
        };
        let eps = EpsShift::steps(rng.random_range(0..=depth), x.grid());
        let pi = eps_bicausal_lp(&x, &y, eps, &SolverOptions::default()).unwrap().coupling.unwrap();
        for phi in CostFunction::lipschitz_battery().into_iter().chain([CostFunction::example_e1()]) {
            let l = phi.lipschitz.unwrap();
            let bound = os_stability_bound(&x, &y, &pi, eps, l).unwrap();
            let gap = (snell_os(&x, &phi, Variant::Inf).unwrap().value - snell_os(&y, &phi, Variant::Inf).unwrap().value).abs();
            prop_assert!(gap <= bound + 1e-9, "{phi}: gap {gap} bound {bound}");
        }
    }

    #[test]
    fn closedness_bound_dominates_defect(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let depth = rng.random_range(1..=3);
        let cfg = RandomTreeConfig { depth, max_branching: 2, dim: rng.random_range(1..=2), ..Default::default() };
        let x = random_tree(&mut rng, &cfg);
        let z = random_martingale_tree(&mut rng, &cfg);
        prop_assert!(martingale_defect(&z) <= 1e-12);
        let eps = EpsShift::steps(rng.random_range(0..=depth), x.grid());
        let pi = if rng.random_bool(0.5) {
            Coupling::product(&x, &z)
        } else {
            eps_bicausal_lp(&x, &z, eps, &SolverOptions::default()).unwrap().coupling.unwrap()
        };
        let defect = martingale_defect_levels(&x);
        let terms = closedness_bound(&x, &z, &pi, eps).unwrap();
        for (d, t) in defect.iter().zip(&terms) {
            prop_assert!(*d <= t.total() + 1e-12, "level {}: {d} > {:?}", t.level, t);
        }
    }

    #[test]
    fn randomisation_does_not_change_os(seed in any::<u64>(), m in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = small_cfg(&mut rng);
        let t = random_tree(&mut rng, &cfg);
        let r = with_uniform_randomization(&t, m).unwrap();
        for phi in CostFunction::lipschitz_battery() {
            let a = snell_os(&t, &phi, Variant::Inf).unwrap().value;
            let b = snell_os(&r, &phi, Variant::Inf).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn random_walk_modulus_bound() {
    for n in 2..=10 {
        let t = random_walk_tree(n).unwrap();
        for k in 0..=n {
            let eps = k as f64 / n as f64;
            let d = modulus_steps(&t, k);
            prop_assert_bound(d, 4.0 * (1.0 / n as f64).max(eps).sqrt());
        }
    }
}

fn prop_assert_bound(value: f64, bound: f64) {
    assert!(value <= bound + 1e-12, "{value} > {bound}");
}

#[test]
fn random_walk_is_a_martingale() {
    for n in 1..=8 {
        assert!(martingale_defect(&random_walk_tree(n).unwrap()) < 1e-12);
    }
}
