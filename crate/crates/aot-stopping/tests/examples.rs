//! Frozen values on the example processes.

use aot_coupling::{Coupling, EpsShift};
use aot_generators::{counterexample_pair, figure1_pair, random_walk_tree};
use aot_stopping::*;

#[test]
fn fast_jump_stopping_values() {
    for n in [2usize, 4, 8] {
        let (xn, x) = counterexample_pair(n, 8).unwrap();
        let phi = CostFunction::state(Psi::Identity);
        let inf = snell_os(&xn, &phi, Variant::Inf).unwrap().value;
        assert!((inf - 0.5 * (1.0 / n as f64 - 1.0)).abs() < 1e-12);
        let sup = snell_os(&xn, &phi, Variant::Sup).unwrap().value;
        assert!((sup - 0.5 * (1.0 - 1.0 / n as f64)).abs() < 1e-12);
        // The limit is a martingale started at 0: every rule gives 0.
        assert!(snell_os(&x, &phi, Variant::Sup).unwrap().value.abs() < 1e-12);
        assert!(snell_os(&x, &phi, Variant::Inf).unwrap().value.abs() < 1e-12);
        let f = aldous_functional(&xn);
        assert!((f - (1.0 - 1.0 / n as f64).powi(2)).abs() < 1e-12);
        assert!(aldous_functional(&x) < 1e-15);
    }
}

#[test]
fn fast_jump_optimal_rule_stops_on_the_small_up_jump() {
    let (xn, _) = counterexample_pair(4, 4).unwrap();
    let r = snell_os(&xn, &CostFunction::state(Psi::Identity), Variant::Inf).unwrap();
    for leaf in 0..xn.num_leaves() {
        let j = r.rule.stop_level(&xn, leaf);
        let v = xn.leaf_value(leaf, j)[0];
        assert!(v == 0.25 || v == -1.0, "stopped at value {v}");
    }
}

#[test]
fn two_scenario_pair_bound_dominates_gap() {
    let (p, pe) = figure1_pair(0.1).unwrap();
    // The product coupling is ε-bicausal for every ε; ε = 0 is minimal.
    let pi = Coupling::product(&p, &pe);
    let phi = CostFunction::state(Psi::Identity);
    let gap = (snell_os(&p, &phi, Variant::Inf).unwrap().value - snell_os(&pe, &phi, Variant::Inf).unwrap().value).abs();
    let bound = os_stability_bound(&p, &pe, &pi, EpsShift::zero(), 1.0).unwrap();
    // OS(ℙ) = 1 (martingale); ℙ^e stops at 1 + e on the upper branch and
    // continues to 0 on the lower one: OS(ℙ^e) = ½(1 + e) = 0.55.
    assert!((gap - 0.45).abs() < 1e-12);
    assert!(gap <= bound, "{gap} > {bound}");
    // E sup|X − Y| under the product coupling is (0.1 + 2 + 2 + 0.1)/4;
    // both moduli vanish at ε = 0.
    assert!((bound - 1.05).abs() < 1e-12, "{bound}");
    assert!(matches!(
        os_stability_bound(&p, &pe, &Coupling::identity(&p), EpsShift::zero(), 1.0),
        Err(StoppingError::NotCausal { .. })
    ));
}

#[test]
fn random_walk_values() {
    // Two fair steps of ±1/√2: stopping on the first down-move is optimal
    // for the minimum.
    let t = random_walk_tree(2).unwrap();
    let r = snell_os(&t, &CostFunction::state(Psi::Identity), Variant::Inf).unwrap();
    assert!(r.value.abs() < 1e-15, "martingale: every bounded rule has value 0");
    let r = snell_os(&t, &CostFunction::running_max(Psi::Identity), Variant::Inf).unwrap();
    assert_eq!(r.value, 0.0);
    assert_eq!(martingale_defect(&t), 0.0);
    // One-step modulus of the two-step walk: stop at 0 and the window sees
    // one step, or stop at level 1 and see the last step: 1/√2.
    assert!((modulus_steps(&t, 1) - 0.5f64.sqrt()).abs() < 1e-15);
}
