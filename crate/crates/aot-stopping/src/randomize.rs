//! Randomised stopping times via an auxiliary uniform variable in `F_0`.

use aot_core::FilteredTree;

use crate::error::StoppingError;

/// Splits every level-0 atom into `m` equally likely copies, each carrying
/// a full copy of its subtree. Stopping rules of the result are the
/// stopping times of the original process randomised by an independent
/// `F_0`-measurable uniform variable on `m` points; the law of the paths is
/// unchanged.
pub fn with_uniform_randomization(tree: &FilteredTree, m: usize) -> Result<FilteredTree, StoppingError> {
    if m == 0 {
        return Err(StoppingError::BadParameter("randomisation width must be at least 1".into()));
    }
    let levels = (0..tree.num_levels())
        .map(|i| {
            let len = tree.level_len(i);
            (0..m)
                .flat_map(|copy| {
                    (0..len).map(move |k| {
                        let parent = tree.parent(i, k).map(|p| copy * tree.level_len(i - 1) + p);
                        (parent, tree.abs_prob(i, k) / m as f64, tree.value(i, k).to_vec())
                    })
                })
                .collect()
        })
        .collect();
    Ok(FilteredTree::from_masses(tree.grid().clone(), tree.dim(), levels)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use aot_core::{law, TimeGrid};

    #[test]
    fn law_is_preserved() {
        let path: Vec<Vec<f64>> = [0.0, 1.0, 2.0].iter().map(|&v| vec![v]).collect();
        let t = FilteredTree::deterministic(TimeGrid::uniform(2), &path).unwrap();
        let r = with_uniform_randomization(&t, 4).unwrap();
        assert_eq!(r.level_len(0), 4);
        assert_eq!(r.num_leaves(), 4);
        assert!(law(&r).approx_eq(&law(&t), 1e-15));
        assert!(with_uniform_randomization(&t, 0).is_err());
    }
}
