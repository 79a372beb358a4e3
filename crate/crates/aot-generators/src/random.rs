//! Random trees for property tests.

use aot_core::{FilteredTree, NodeSpec, TimeGrid};
use rand::Rng;

/// Denominator of generated transition probabilities.
pub const PROB_DENOMINATOR: u32 = 64;

/// Shape parameters of [`random_tree`].
#[derive(Debug, Clone, PartialEq)]
pub struct RandomTreeConfig {
    /// Number of grid times `N` (the tree has `N + 1` levels).
    pub depth: usize,
    /// Smallest number of children per node.
    pub min_branching: usize,
    /// Largest number of children per node.
    pub max_branching: usize,
    /// Number of nodes on level 0 (more than one gives a nontrivial `F_0`).
    pub roots: usize,
    /// Spatial dimension.
    pub dim: usize,
    /// When set, values are drawn from `c` equally spaced points of
    /// `[−1, 1]` instead of uniformly, so that coincidences (and hence
    /// non-minimal trees) occur.
    pub value_levels: Option<usize>,
}

impl Default for RandomTreeConfig {
    fn default() -> Self {
        RandomTreeConfig { depth: 2, min_branching: 2, max_branching: 3, roots: 1, dim: 1, value_levels: None }
    }
}

/// Probabilities that are multiples of `1/64`, each at least `1/64`,
/// obtained by rounding a flat Dirichlet sample with the largest-remainder
/// rule.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    assert!(k >= 1 && k as u32 <= PROB_DENOMINATOR);
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    let free = PROB_DENOMINATOR - k as u32;
    let raw: Vec<f64> = e.iter().map(|x| x / s * free as f64).collect();
    let mut units: Vec<u32> = raw.iter().map(|x| x.floor() as u32).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    let missing = free - units.iter().sum::<u32>();
    for &i in order.iter().take(missing as usize) {
        units[i] += 1;
    }
    units.iter().map(|&u| (u + 1) as f64 / PROB_DENOMINATOR as f64).collect()
}

fn draw_value<R: Rng + ?Sized>(rng: &mut R, cfg: &RandomTreeConfig) -> Vec<f64> {
    (0..cfg.dim)
        .map(|_| match cfg.value_levels {
            Some(c) if c >= 2 => -1.0 + 2.0 * rng.random_range(0..c) as f64 / (c - 1) as f64,
            Some(_) => 0.0,
            None => rng.random_range(-1.0..=1.0),
        })
        .collect()
}

/// A random tree on the uniform grid with `cfg.depth` steps.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, cfg: &RandomTreeConfig) -> FilteredTree {
    let grid = TimeGrid::uniform(cfg.depth.max(1));
    let roots = random_simplex(rng, cfg.roots.max(1));
    let mut levels = vec![roots.into_iter().map(|p| NodeSpec::new(None, p, draw_value(rng, cfg))).collect::<Vec<_>>()];
    for _ in 0..grid.len() {
        let prev = levels.last().map_or(0, Vec::len);
        let mut level = Vec::new();
        for parent in 0..prev {
            let k = rng.random_range(cfg.min_branching.max(1)..=cfg.max_branching.max(cfg.min_branching).max(1));
            for p in random_simplex(rng, k) {
                level.push(NodeSpec::new(Some(parent), p, draw_value(rng, cfg)));
            }
        }
        levels.push(level);
    }
    FilteredTree::new(grid, cfg.dim, levels).expect("generated tree is valid")
}

/// A random martingale: like [`random_tree`], but each sibling family's
/// values are shifted so that their conditional mean equals the parent's
/// value. Children values are `parent + d_k` with `d` drawn uniformly from
/// `[−1, 1]` and centred.
pub fn random_martingale_tree<R: Rng + ?Sized>(rng: &mut R, cfg: &RandomTreeConfig) -> FilteredTree {
    let base = random_tree(rng, cfg);
    let dim = cfg.dim;
    let n = base.depth();
    let mut values: Vec<Vec<Vec<f64>>> = vec![(0..base.level_len(0)).map(|k| base.value(0, k).to_vec()).collect()];
    for i in 1..=n {
        let mut level = vec![Vec::new(); base.level_len(i)];
        for parent in 0..base.level_len(i - 1) {
            let kids = base.children(i - 1, parent);
            let d: Vec<Vec<f64>> = kids.clone().map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect();
            for c in 0..dim {
                let mean: f64 = kids.clone().zip(&d).map(|(k, dk)| base.prob(i, k) * dk[c]).sum();
                for (k, dk) in kids.clone().zip(&d) {
                    level[k].push(values[i - 1][parent][c] + dk[c] - mean);
                }
            }
        }
        values.push(level);
    }
    let levels = (0..=n)
        .map(|i| {
            (0..base.level_len(i))
                .map(|k| NodeSpec::new(base.parent(i, k), base.prob(i, k), values[i][k].clone()))
                .collect()
        })
        .collect();
    FilteredTree::new(base.grid().clone(), dim, levels).expect("generated tree is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn simplex_is_exact_on_the_sixty_fourth_lattice() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 1..6 {
            let p = random_simplex(&mut rng, k);
            assert_eq!(p.iter().sum::<f64>(), 1.0);
            assert!(p.iter().all(|&x| x >= 1.0 / 64.0 && (x * 64.0).fract() == 0.0));
        }
    }

    #[test]
    fn generated_trees_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for depth in 1..4 {
            let cfg = RandomTreeConfig { depth, roots: 2, dim: 2, value_levels: Some(3), ..Default::default() };
            let t = random_tree(&mut rng, &cfg);
            assert!(t.validate().is_empty());
            assert_eq!(t.depth(), depth);
            assert_eq!(t.level_len(0), 2);
        }
    }
}
