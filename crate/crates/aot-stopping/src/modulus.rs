//! Modulus of continuity `δ_X(ε) = sup_τ E[sup_{s ∈ [0, ε]} |X_{τ+s} − X_τ|]`.
//!
//! A stopping time may fall anywhere inside the grid interval
//! `[t_j, t_{j+1})` of the node where it stops, so the window `[τ, τ + ε]`
//! reaches every level `l` with `t_l < t_{j+1} + ε`. The reward for stopping
//! at node `v` of level `j` is therefore
//! `g(v) = E[max_{j ≤ l ≤ L(j)} |X_l − X_j| | v]` with
//! `L(j) = max{l : t_l < t_{j+1} + ε}` (and `L(N) = N`), and `δ_X(ε)` is the
//! value of the optimal stopping problem that maximises `E g`.

use aot_core::{FilteredTree, TIME_TOL};
use aot_coupling::EpsShift;

use crate::error::StoppingError;
use crate::snell::{enumerate_costs, snell_on_costs, BRUTE_FORCE_CAP};

/// Last level reached by a window of length `ε` opened in the grid
/// interval of level `j`.
pub fn window_end(tree: &FilteredTree, eps: EpsShift, j: usize) -> usize {
    let grid = tree.grid();
    let n = grid.len();
    if j == n {
        return n;
    }
    let limit = grid.time(j + 1) + eps.epsilon;
    (j..=n).rev().find(|&l| grid.time(l) < limit - TIME_TOL).unwrap_or(j)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// Reward `g(v)` for every node.
pub fn oscillation_rewards(tree: &FilteredTree, eps: EpsShift) -> Vec<Vec<f64>> {
    (0..tree.num_levels())
        .map(|j| {
            let end = window_end(tree, eps, j);
            (0..tree.level_len(j))
                .map(|k| {
                    let here = tree.value(j, k);
                    let mass: f64 = tree
                        .leaves_of(j, k)
                        .map(|leaf| {
                            let osc = (j..=end).map(|l| dist(tree.leaf_value(leaf, l), here)).fold(0.0, f64::max);
                            tree.leaf_prob(leaf) * osc
                        })
                        .sum();
                    mass / tree.abs_prob(j, k)
                })
                .collect()
        })
        .collect()
}

/// `δ_X(ε)` by backward induction on the oscillation rewards.
pub fn modulus(tree: &FilteredTree, eps: EpsShift) -> f64 {
    let neg: Vec<Vec<f64>> = oscillation_rewards(tree, eps).into_iter().map(|l| l.into_iter().map(|g| -g).collect()).collect();
    -snell_on_costs(tree, &neg).0
}

/// `δ_X` for a window of `k` grid steps (`ε = EpsShift::steps(k, grid)`).
pub fn modulus_steps(tree: &FilteredTree, k: usize) -> f64 {
    modulus(tree, EpsShift::steps(k, tree.grid()))
}

/// `δ_X(ε)` by enumerating every stopping time.
pub fn modulus_brute_force(tree: &FilteredTree, eps: EpsShift) -> Result<f64, StoppingError> {
    let neg: Vec<Vec<f64>> = oscillation_rewards(tree, eps).into_iter().map(|l| l.into_iter().map(|g| -g).collect()).collect();
    Ok(-enumerate_costs(tree, &neg, BRUTE_FORCE_CAP)?.into_iter().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use aot_core::{NodeSpec, TimeGrid};

    #[test]
    fn constant_path_has_zero_modulus() {
        let t = FilteredTree::deterministic(TimeGrid::uniform(3), &vec![vec![0.4]; 4]).unwrap();
        for k in 0..=3 {
            assert_eq!(modulus_steps(&t, k), 0.0);
        }
    }

    #[test]
    fn single_jump_of_height_h() {
        let h = 0.7;
        let t = FilteredTree::new(
            TimeGrid::new(vec![0.5, 1.0]).unwrap(),
            1,
            vec![
                vec![NodeSpec::new(None, 1.0, vec![0.0])],
                vec![NodeSpec::new(Some(0), 1.0, vec![0.0])],
                vec![NodeSpec::new(Some(0), 0.5, vec![h]), NodeSpec::new(Some(0), 0.5, vec![-h])],
            ],
        )
        .unwrap();
        assert_eq!(window_end(&t, EpsShift::steps(1, t.grid()), 0), 1);
        assert_eq!(window_end(&t, EpsShift::steps(1, t.grid()), 1), 2);
        assert_eq!(modulus_steps(&t, 1), h);
        assert_eq!(modulus_brute_force(&t, EpsShift::steps(1, t.grid())).unwrap(), h);
        // A window shorter than one step still reaches the next level.
        assert_eq!(modulus(&t, EpsShift::time(0.1).unwrap()), h);
        assert_eq!(modulus(&t, EpsShift::zero()), 0.0);
    }
}
