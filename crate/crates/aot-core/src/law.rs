use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::grid::TimeGrid;
use crate::tree::FilteredTree;

/// A path with its probability. `values` is the flat `(N+1)·d` vector of
/// the path's values at levels `0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPath {
    pub weight: f64,
    pub values: Vec<f64>,
}

/// The law of a piecewise-constant path process on a grid: a finite
/// weighted list of paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLaw {
    pub grid: TimeGrid,
    pub dim: usize,
    pub paths: Vec<WeightedPath>,
}

/// Normalises `-0.0` to `0.0` so that bitwise and numeric equality agree.
pub(crate) fn norm0(x: f64) -> f64 {
    x + 0.0
}

fn cmp_values(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match norm0(*x).total_cmp(&norm0(*y)) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

impl PathLaw {
    /// Sorts paths lexicographically and merges identical ones, adding
    /// their weights.
    pub fn canonicalize(mut self) -> Self {
        for p in &mut self.paths {
            p.values.iter_mut().for_each(|x| *x = norm0(*x));
        }
        self.paths.sort_by(|a, b| cmp_values(&a.values, &b.values));
        let mut merged: Vec<WeightedPath> = Vec::with_capacity(self.paths.len());
        for p in self.paths {
            match merged.last_mut() {
                Some(last) if last.values == p.values => last.weight += p.weight,
                _ => merged.push(p),
            }
        }
        self.paths = merged;
        self
    }

    /// Total weight.
    pub fn total_weight(&self) -> f64 {
        self.paths.iter().map(|p| p.weight).sum()
    }

    /// Equality of canonical laws: same support, weights within `tol`.
    pub fn approx_eq(&self, other: &PathLaw, tol: f64) -> bool {
        let a = self.clone().canonicalize();
        let b = other.clone().canonicalize();
        a.grid == b.grid
            && a.dim == b.dim
            && a.paths.len() == b.paths.len()
            && a.paths
                .iter()
                .zip(&b.paths)
                .all(|(p, q)| p.values == q.values && (p.weight - q.weight).abs() <= tol)
    }
}

/// The law of the path process: one path per leaf, canonicalised.
pub fn law(tree: &FilteredTree) -> PathLaw {
    let paths = (0..tree.num_leaves())
        .map(|l| WeightedPath { weight: tree.leaf_prob(l), values: tree.leaf_path(l) })
        .collect();
    PathLaw { grid: tree.grid().clone(), dim: tree.dim(), paths }.canonicalize()
}

/// The standard naturally filtered process of a path law: the atoms at
/// level `i` are the distinct realised histories up to level `i`.
pub fn standard_tree(law: &PathLaw) -> Result<FilteredTree, CoreError> {
    let (tree, _) = standard_tree_with_index(law)?;
    Ok(tree)
}

/// Like [`standard_tree`], also returning for every path of the
/// canonicalised law the index of its leaf.
pub fn standard_tree_with_index(law: &PathLaw) -> Result<(FilteredTree, Vec<usize>), CoreError> {
    let canon = law.clone().canonicalize();
    let d = canon.dim;
    let levels = canon.grid.len() + 1;
    if canon.paths.is_empty() {
        return Err(CoreError::InvalidTree(vec!["law has no paths".into()]));
    }
    if let Some(p) = canon.paths.iter().find(|p| p.values.len() != levels * d) {
        return Err(CoreError::PathLength { expected: levels * d, got: p.values.len() });
    }
    let total = canon.total_weight();
    let mut parent: Vec<Vec<usize>> = Vec::with_capacity(levels);
    let mut prob: Vec<Vec<f64>> = Vec::with_capacity(levels);
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(levels);
    // node index of every path at the previous level
    let mut prev_node: Vec<usize> = vec![usize::MAX; canon.paths.len()];
    let mut prev_mass: Vec<f64> = vec![total];
    for i in 0..levels {
        let mut lp = Vec::new();
        let mut lmass: Vec<f64> = Vec::new();
        let mut lv = Vec::new();
        let mut node_of = vec![0usize; canon.paths.len()];
        for (k, path) in canon.paths.iter().enumerate() {
            let same = k > 0
                && prev_node[k] == prev_node[k - 1]
                && canon.paths[k - 1].values[..(i + 1) * d] == path.values[..(i + 1) * d];
            if !same {
                lp.push(prev_node[k]);
                lmass.push(0.0);
                lv.extend_from_slice(&path.values[i * d..(i + 1) * d]);
            }
            let node = lmass.len() - 1;
            lmass[node] += path.weight;
            node_of[k] = node;
        }
        let lprob: Vec<f64> = lmass
            .iter()
            .zip(&lp)
            .map(|(&m, &p)| if i == 0 { m / total } else { m / prev_mass[p] })
            .collect();
        parent.push(lp);
        prob.push(lprob);
        values.push(lv);
        prev_mass = lmass;
        prev_node = node_of;
    }
    let tree = FilteredTree::assemble(canon.grid.clone(), d, parent, prob, values)?;
    Ok((tree, prev_node))
}

/// The standard naturally filtered version of a tree, together with the
/// map sending every leaf of `tree` to the leaf of the standard tree that
/// carries the same path (the identity-on-paths coupling).
pub fn natural_version(tree: &FilteredTree) -> (FilteredTree, Vec<usize>) {
    let lw = law(tree);
    let (s, _) = standard_tree_with_index(&lw).expect("law of a valid tree is valid");
    // Leaves of the standard tree are in canonical path order.
    let leaf_paths: Vec<Vec<f64>> = (0..s.num_leaves()).map(|l| s.leaf_path(l)).collect();
    let map = (0..tree.num_leaves())
        .map(|l| {
            let p: Vec<f64> = tree.leaf_path(l).into_iter().map(norm0).collect();
            leaf_paths
                .binary_search_by(|q| cmp_values(q, &p))
                .expect("every path of the tree appears in its law")
        })
        .collect();
    (s, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::NodeSpec;

    fn fig1_p() -> FilteredTree {
        FilteredTree::new(
            TimeGrid::new(vec![0.5, 1.0]).unwrap(),
            1,
            vec![
                vec![NodeSpec::new(None, 1.0, vec![1.0])],
                vec![NodeSpec::new(Some(0), 1.0, vec![1.0])],
                vec![NodeSpec::new(Some(0), 0.5, vec![2.0]), NodeSpec::new(Some(0), 0.5, vec![0.0])],
            ],
        )
        .unwrap()
    }

    #[test]
    fn law_of_figure_one_process() {
        let l = law(&fig1_p());
        assert_eq!(l.paths.len(), 2);
        assert_eq!(l.paths[0].values, vec![1.0, 1.0, 0.0]);
        assert_eq!(l.paths[1].values, vec![1.0, 1.0, 2.0]);
        assert!((l.paths[0].weight - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identical_paths_are_merged() {
        let t = FilteredTree::new(
            TimeGrid::new(vec![1.0]).unwrap(),
            1,
            vec![
                vec![NodeSpec::new(None, 1.0, vec![0.0])],
                vec![NodeSpec::new(Some(0), 0.25, vec![3.0]), NodeSpec::new(Some(0), 0.75, vec![3.0])],
            ],
        )
        .unwrap();
        let l = law(&t);
        assert_eq!(l.paths.len(), 1);
        assert!((l.paths[0].weight - 1.0).abs() < 1e-15);
    }

    #[test]
    fn standard_tree_reproduces_law() {
        let t = fig1_p();
        let s = standard_tree(&law(&t)).unwrap();
        assert!(law(&s).approx_eq(&law(&t), 1e-15));
        assert_eq!(s.level_len(1), 1);
        let (s2, map) = natural_version(&t);
        assert_eq!(s2, s);
        for (l, &m) in map.iter().enumerate() {
            assert_eq!(t.leaf_path(l), s.leaf_path(m));
        }
    }
}
