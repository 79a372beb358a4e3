use crate::error::CoreError;
use crate::grid::TimeGrid;
use crate::tree::FilteredTree;

/// Evaluates a piecewise-constant path given on `source` at the times of
/// `target` (the composition `ι_T ∘ e_T`): level `i` of the result is the
/// source value at `t_i`, level 0 the value at time 0.
///
/// `path[k]` is the value on source level `k` (so `path.len() = N + 1`).
pub fn discretize_path(path: &[Vec<f64>], source: &TimeGrid, target: &TimeGrid) -> Result<Vec<Vec<f64>>, CoreError> {
    if path.len() != source.len() + 1 {
        return Err(CoreError::PathLength { expected: source.len() + 1, got: path.len() });
    }
    (0..=target.len())
        .map(|i| {
            let t = target.time(i);
            source.level_of(t).map(|k| path[k].clone()).ok_or(CoreError::NotSubset(t))
        })
        .collect()
}

/// General re-timing of a tree onto `grid`: new level `i` consists of the
/// original atoms of level `info[i]`, carrying the value of their ancestor
/// on level `value[i] ≤ info[i]`.
///
/// `info` must be nondecreasing and end at the original terminal level so
/// that the result is again a tree with the original leaves.
pub fn retime(tree: &FilteredTree, grid: TimeGrid, info: &[usize], value: &[usize]) -> Result<FilteredTree, CoreError> {
    let n = grid.len();
    let mut problems = Vec::new();
    if info.len() != n + 1 || value.len() != n + 1 {
        problems.push("level maps must have one entry per new level".to_string());
    } else {
        if info.windows(2).any(|w| w[1] < w[0]) {
            problems.push("information levels must be nondecreasing".into());
        }
        if info[n] != tree.depth() {
            problems.push("terminal level must carry full information".into());
        }
        if value.iter().zip(info).any(|(v, i)| v > i) {
            problems.push("values must be measurable w.r.t. the new information".into());
        }
    }
    if !problems.is_empty() {
        return Err(CoreError::InvalidTree(problems));
    }
    let levels = (0..=n)
        .map(|i| {
            let src = info[i];
            (0..tree.level_len(src))
                .map(|k| {
                    let parent = (i > 0).then(|| tree.ancestor_of(src, k, info[i - 1]));
                    let v = tree.value(value[i], tree.ancestor_of(src, k, value[i])).to_vec();
                    (parent, tree.abs_prob(src, k), v)
                })
                .collect()
        })
        .collect();
    FilteredTree::from_masses(grid, tree.dim(), levels)
}

/// Re-times the filtration to `F_{⌈t⌉_T}` for a coarser grid `T` while
/// keeping the original grid and all values: on the interval of level `i`
/// the process already knows everything the original tree knows at the
/// first time of `T` strictly after `t_i`.
///
/// The identity coupling between the input and the output is
/// `mesh(T)`-causal in one direction and causal in the other, so the
/// adapted Wasserstein distance between them is at most `mesh(T)`.
pub fn coarsen_filtration(tree: &FilteredTree, target: &TimeGrid) -> Result<FilteredTree, CoreError> {
    let grid = tree.grid();
    if let Some(&t) = target.times().iter().find(|&&t| grid.level_of(t).is_none()) {
        return Err(CoreError::NotSubset(t));
    }
    let n = grid.len();
    let info: Vec<usize> = (0..=n)
        .map(|i| {
            if i == n {
                n
            } else {
                let s = target.time(target.ceil_level(grid.time(i)));
                grid.level_of(s).expect("target is a subset")
            }
        })
        .collect();
    let value: Vec<usize> = (0..=n).collect();
    retime(tree, grid.clone(), &info, &value)
}

/// Re-grids a tree onto a finer grid: paths and information are extended
/// as step functions (new levels repeat the atom in force at that time).
pub fn refine_to_grid(tree: &FilteredTree, fine: &TimeGrid) -> Result<FilteredTree, CoreError> {
    if let Some(&t) = tree.grid().times().iter().find(|&&t| fine.level_of(t).is_none()) {
        return Err(CoreError::NotSubset(t));
    }
    let map: Vec<usize> = (0..=fine.len()).map(|k| tree.grid().level_at(fine.time(k))).collect();
    retime(tree, fine.clone(), &map, &map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::law;
    use crate::tree::NodeSpec;

    #[test]
    fn ramp_on_half_grid() {
        let fine = TimeGrid::uniform(4);
        let ramp: Vec<Vec<f64>> = (0..=4).map(|k| vec![k as f64 / 4.0]).collect();
        let target = TimeGrid::new(vec![0.5, 1.0]).unwrap();
        let out = discretize_path(&ramp, &fine, &target).unwrap();
        assert_eq!(out, vec![vec![0.0], vec![0.5], vec![1.0]]);
        // idempotent on its own grid
        assert_eq!(discretize_path(&out, &target, &target).unwrap(), out);
    }

    #[test]
    fn rejects_foreign_times() {
        let fine = TimeGrid::uniform(4);
        let ramp: Vec<Vec<f64>> = (0..=4).map(|k| vec![k as f64]).collect();
        let target = TimeGrid::new(vec![0.3, 1.0]).unwrap();
        assert!(matches!(discretize_path(&ramp, &fine, &target), Err(CoreError::NotSubset(_))));
    }

    fn pe(e: f64) -> FilteredTree {
        FilteredTree::new(
            TimeGrid::new(vec![0.5, 1.0]).unwrap(),
            1,
            vec![
                vec![NodeSpec::new(None, 1.0, vec![1.0])],
                vec![NodeSpec::new(Some(0), 0.5, vec![1.0 + e]), NodeSpec::new(Some(0), 0.5, vec![1.0 - e])],
                vec![NodeSpec::new(Some(0), 1.0, vec![2.0]), NodeSpec::new(Some(1), 1.0, vec![0.0])],
            ],
        )
        .unwrap()
    }

    #[test]
    fn coarsening_to_horizon_reveals_everything_at_once() {
        let t = pe(0.1);
        let c = coarsen_filtration(&t, &TimeGrid::new(vec![1.0]).unwrap()).unwrap();
        assert_eq!(c.level_len(0), 2);
        assert!(law(&c).approx_eq(&law(&t), 1e-15));
        assert!(c.validate().is_empty());
    }

    #[test]
    fn refinement_preserves_law_on_the_fine_grid() {
        let t = pe(0.2);
        let fine = TimeGrid::uniform(4);
        let r = refine_to_grid(&t, &fine).unwrap();
        assert_eq!(r.depth(), 4);
        assert_eq!(r.num_leaves(), 2);
        // value at t = 1/4 is the root value, at 3/4 the middle value
        assert_eq!(r.leaf_value(0, 1), &[1.0]);
        assert_eq!(r.leaf_value(0, 3), t.leaf_value(0, 1));
    }
}
