use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::grid::TimeGrid;
use crate::PROB_TOL;

/// One information node as it appears in the JSON tree format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    /// Index of the parent node on the previous level (`None` on level 0).
    pub parent: Option<usize>,
    /// Transition probability from the parent (level 0: probability of the
    /// initial atom).
    pub prob: f64,
    /// Value of the process on this atom (length = `dim`).
    pub value: Vec<f64>,
}

impl NodeSpec {
    /// Convenience constructor.
    pub fn new(parent: Option<usize>, prob: f64, value: Vec<f64>) -> Self {
        NodeSpec { parent, prob, value }
    }
}

/// Unvalidated tree data: `{"dim": d, "grid": [t_1..t_N], "levels": [[node…]…]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    /// Spatial dimension `d ≥ 1`.
    pub dim: usize,
    /// Grid times `t_1 < … < t_N = 1`.
    pub grid: Vec<f64>,
    /// Levels `0..=N`, each a list of nodes.
    pub levels: Vec<Vec<NodeSpec>>,
}

impl TreeSpec {
    /// Lists every violated tree invariant; empty iff the data describes a
    /// valid filtered tree. Never fails.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let grid = match TimeGrid::new(self.grid.clone()) {
            Ok(g) => Some(g),
            Err(e) => {
                v.push(e.to_string());
                None
            }
        };
        if self.dim == 0 {
            v.push("dimension must be at least 1".into());
        }
        if let Some(g) = &grid {
            if self.levels.len() != g.len() + 1 {
                v.push(format!(
                    "tree has {} levels but the grid needs {}",
                    self.levels.len(),
                    g.len() + 1
                ));
            }
        }
        if self.levels.is_empty() {
            v.push("tree has no levels".into());
            return v;
        }
        for (i, level) in self.levels.iter().enumerate() {
            if level.is_empty() {
                v.push(format!("level {i} is empty"));
            }
            for (k, node) in level.iter().enumerate() {
                if node.value.len() != self.dim {
                    v.push(format!("node {k} at level {i} has value of length {}", node.value.len()));
                }
                if node.value.iter().any(|x| !x.is_finite()) {
                    v.push(format!("node {k} at level {i} has a non-finite value"));
                }
                if !node.prob.is_finite() || node.prob < 0.0 || node.prob > 1.0 + PROB_TOL {
                    v.push(format!("node {k} at level {i} has probability {} outside [0, 1]", node.prob));
                }
                match (i, node.parent) {
                    (0, Some(_)) => v.push(format!("level-0 node {k} has a parent")),
                    (0, None) => {}
                    (_, None) => v.push(format!("orphan node {k} at level {i}")),
                    (_, Some(p)) if p >= self.levels[i - 1].len() => {
                        v.push(format!("orphan node {k} at level {i} (parent {p} does not exist)"))
                    }
                    _ => {}
                }
            }
        }
        let s0: f64 = self.levels[0].iter().map(|n| n.prob).sum();
        if (s0 - 1.0).abs() > PROB_TOL {
            v.push(format!("node probabilities sum to {s0} (level-0 atoms)"));
        }
        for i in 1..self.levels.len() {
            let prev = self.levels[i - 1].len();
            let mut sums = vec![0.0; prev];
            let mut counts = vec![0usize; prev];
            for node in &self.levels[i] {
                if let Some(p) = node.parent {
                    if p < prev {
                        sums[p] += node.prob;
                        counts[p] += 1;
                    }
                }
            }
            for p in 0..prev {
                if counts[p] == 0 {
                    v.push(format!("dead-end node {p} at level {} (no children)", i - 1));
                } else if (sums[p] - 1.0).abs() > PROB_TOL {
                    v.push(format!(
                        "node probabilities sum to {} (children of level-{} node {p})",
                        sums[p],
                        i - 1
                    ));
                }
            }
        }
        v
    }
}

/// A validated finite filtered process.
///
/// Nodes of every level are stored grouped by parent, so the children of a
/// node and the leaves below a node are contiguous index ranges. Leaves are
/// the nodes of the terminal level `N`; they are the sample space `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredTree {
    grid: TimeGrid,
    dim: usize,
    parent: Vec<Vec<usize>>,
    prob: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
    abs: Vec<Vec<f64>>,
    child_range: Vec<Vec<(usize, usize)>>,
    leaf_range: Vec<Vec<(usize, usize)>>,
    leaf_anc: Vec<Vec<usize>>,
}

const NO_PARENT: usize = usize::MAX;

impl FilteredTree {
    /// Builds a tree from raw data: validates, prunes zero-probability
    /// branches and reorders nodes by parent.
    pub fn from_spec(spec: &TreeSpec) -> Result<Self, CoreError> {
        let violations = spec.validate();
        if !violations.is_empty() {
            return Err(CoreError::InvalidTree(violations));
        }
        let grid = TimeGrid::new(spec.grid.clone())?;
        let n = grid.len();
        // Drop zero-probability nodes and everything below them, then sort by
        // (new) parent index, keeping the input order among siblings.
        let mut parent = Vec::with_capacity(n + 1);
        let mut prob = Vec::with_capacity(n + 1);
        let mut values = Vec::with_capacity(n + 1);
        let mut remap_prev: Vec<Option<usize>> = Vec::new();
        for (i, level) in spec.levels.iter().enumerate() {
            let mut kept: Vec<(usize, usize)> = Vec::new(); // (new parent, old index)
            for (k, node) in level.iter().enumerate() {
                if node.prob <= 0.0 {
                    continue;
                }
                let np = if i == 0 {
                    NO_PARENT
                } else {
                    match remap_prev[node.parent.expect("validated")] {
                        Some(p) => p,
                        None => continue,
                    }
                };
                kept.push((np, k));
            }
            kept.sort_by_key(|&(p, _)| if p == NO_PARENT { 0 } else { p });
            let mut remap = vec![None; level.len()];
            let mut lp = Vec::with_capacity(kept.len());
            let mut lpr = Vec::with_capacity(kept.len());
            let mut lv = Vec::with_capacity(kept.len() * spec.dim);
            for (new, &(np, old)) in kept.iter().enumerate() {
                remap[old] = Some(new);
                lp.push(np);
                lpr.push(level[old].prob);
                lv.extend_from_slice(&level[old].value);
            }
            parent.push(lp);
            prob.push(lpr);
            values.push(lv);
            remap_prev = remap;
        }
        Self::assemble(grid, spec.dim, parent, prob, values)
    }

    /// Builds a tree directly from levels of [`NodeSpec`]s.
    pub fn new(grid: TimeGrid, dim: usize, levels: Vec<Vec<NodeSpec>>) -> Result<Self, CoreError> {
        Self::from_spec(&TreeSpec { dim, grid: grid.times().to_vec(), levels })
    }

    /// Internal constructor from parent-sorted arrays; renormalises
    /// transition probabilities per sibling family and builds the caches.
    pub(crate) fn assemble(
        grid: TimeGrid,
        dim: usize,
        parent: Vec<Vec<usize>>,
        mut prob: Vec<Vec<f64>>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self, CoreError> {
        let n = grid.len();
        let mut problems = Vec::new();
        if parent.len() != n + 1 {
            return Err(CoreError::InvalidTree(vec![format!(
                "tree has {} levels but the grid needs {}",
                parent.len(),
                n + 1
            )]));
        }
        // Renormalise away rounding left by pruning or by the 1e-12 slack.
        let s0: f64 = prob[0].iter().sum();
        prob[0].iter_mut().for_each(|p| *p /= s0);
        let mut child_range: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n + 1);
        for i in 0..n {
            let mut ranges = vec![(0usize, 0usize); parent[i].len()];
            let next = &parent[i + 1];
            let mut start = 0;
            while start < next.len() {
                let p = next[start];
                let mut end = start;
                while end < next.len() && next[end] == p {
                    end += 1;
                }
                ranges[p] = (start, end);
                let s: f64 = prob[i + 1][start..end].iter().sum();
                prob[i + 1][start..end].iter_mut().for_each(|q| *q /= s);
                start = end;
            }
            for (k, r) in ranges.iter().enumerate() {
                if r.0 == r.1 {
                    problems.push(format!("dead-end node {k} at level {i} (no children)"));
                }
            }
            child_range.push(ranges);
        }
        child_range.push(vec![(0, 0); parent[n].len()]);
        if !problems.is_empty() {
            return Err(CoreError::InvalidTree(problems));
        }
        let mut abs: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        abs.push(prob[0].clone());
        for i in 1..=n {
            let a: Vec<f64> = parent[i]
                .iter()
                .zip(&prob[i])
                .map(|(&p, &q)| abs[i - 1][p] * q)
                .collect();
            abs.push(a);
        }
        let leaves = parent[n].len();
        let mut leaf_range: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n + 1];
        leaf_range[n] = (0..leaves).map(|l| (l, l + 1)).collect();
        for i in (0..n).rev() {
            leaf_range[i] = child_range[i]
                .iter()
                .map(|&(a, b)| (leaf_range[i + 1][a].0, leaf_range[i + 1][b - 1].1))
                .collect();
        }
        let mut leaf_anc = vec![vec![0usize; leaves]; n + 1];
        for (i, ranges) in leaf_range.iter().enumerate() {
            for (k, &(a, b)) in ranges.iter().enumerate() {
                for l in a..b {
                    leaf_anc[i][l] = k;
                }
            }
        }
        Ok(FilteredTree { grid, dim, parent, prob, values, abs, child_range, leaf_range, leaf_anc })
    }

    /// Parses the JSON tree format.
    pub fn from_json(text: &str) -> Result<Self, CoreError> {
        let spec: TreeSpec = serde_json::from_str(text).map_err(|e| CoreError::Json(e.to_string()))?;
        Self::from_spec(&spec)
    }

    /// Serialises to the JSON tree format (floats round-trip exactly).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("tree serialisation cannot fail")
    }

    /// Raw data view of the tree (nodes in storage order).
    pub fn to_spec(&self) -> TreeSpec {
        let levels = (0..self.num_levels())
            .map(|i| {
                (0..self.level_len(i))
                    .map(|k| NodeSpec {
                        parent: self.parent(i, k),
                        prob: self.prob[i][k],
                        value: self.value(i, k).to_vec(),
                    })
                    .collect()
            })
            .collect();
        TreeSpec { dim: self.dim, grid: self.grid.times().to_vec(), levels }
    }

    /// Always empty: a constructed tree satisfies all invariants.
    pub fn validate(&self) -> Vec<String> {
        self.to_spec().validate()
    }

    /// The time grid.
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Spatial dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index `N` of the terminal level.
    pub fn depth(&self) -> usize {
        self.grid.len()
    }

    /// Number of levels `N + 1`.
    pub fn num_levels(&self) -> usize {
        self.grid.len() + 1
    }

    /// Number of nodes on level `i`.
    pub fn level_len(&self, i: usize) -> usize {
        self.parent[i].len()
    }

    /// Number of leaves (scenarios).
    pub fn num_leaves(&self) -> usize {
        self.parent[self.depth()].len()
    }

    /// Total number of nodes.
    pub fn num_nodes(&self) -> usize {
        self.parent.iter().map(Vec::len).sum()
    }

    /// Parent of node `k` on level `i` (`None` on level 0).
    pub fn parent(&self, i: usize, k: usize) -> Option<usize> {
        let p = self.parent[i][k];
        (p != NO_PARENT).then_some(p)
    }

    /// Transition probability into node `(i, k)`.
    pub fn prob(&self, i: usize, k: usize) -> f64 {
        self.prob[i][k]
    }

    /// Unconditional probability of the atom `(i, k)`.
    pub fn abs_prob(&self, i: usize, k: usize) -> f64 {
        self.abs[i][k]
    }

    /// Unconditional probabilities of all atoms of level `i`.
    pub fn abs_probs(&self, i: usize) -> &[f64] {
        &self.abs[i]
    }

    /// Value of the process on atom `(i, k)`.
    pub fn value(&self, i: usize, k: usize) -> &[f64] {
        &self.values[i][k * self.dim..(k + 1) * self.dim]
    }

    /// Children of node `(i, k)` as an index range on level `i + 1`.
    pub fn children(&self, i: usize, k: usize) -> Range<usize> {
        let (a, b) = self.child_range[i][k];
        a..b
    }

    /// Leaves below node `(i, k)` as an index range.
    pub fn leaves_of(&self, i: usize, k: usize) -> Range<usize> {
        let (a, b) = self.leaf_range[i][k];
        a..b
    }

    /// Ancestor of leaf `l` on level `i`.
    pub fn ancestor(&self, leaf: usize, level: usize) -> usize {
        self.leaf_anc[level][leaf]
    }

    /// Ancestor on level `target ≤ i` of node `(i, k)`.
    pub fn ancestor_of(&self, i: usize, k: usize, target: usize) -> usize {
        let leaf = self.leaf_range[i][k].0;
        self.leaf_anc[target][leaf]
    }

    /// Probability of leaf `l`.
    pub fn leaf_prob(&self, leaf: usize) -> f64 {
        self.abs[self.depth()][leaf]
    }

    /// Leaf probabilities.
    pub fn leaf_probs(&self) -> &[f64] {
        &self.abs[self.depth()]
    }

    /// Value at level `i` of the path of leaf `l`.
    pub fn leaf_value(&self, leaf: usize, level: usize) -> &[f64] {
        self.value(level, self.leaf_anc[level][leaf])
    }

    /// Full path of leaf `l` as a flat `(N+1)·d` vector.
    pub fn leaf_path(&self, leaf: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_levels() * self.dim);
        for i in 0..self.num_levels() {
            out.extend_from_slice(self.leaf_value(leaf, i));
        }
        out
    }

    /// Flat `(i+1)·d` vector of values along the root path of node `(i, k)`.
    pub fn prefix(&self, i: usize, k: usize) -> Vec<f64> {
        let leaf = self.leaf_range[i][k].0;
        let mut out = Vec::with_capacity((i + 1) * self.dim);
        for l in 0..=i {
            out.extend_from_slice(self.leaf_value(leaf, l));
        }
        out
    }

    /// A deterministic single-path tree.
    pub fn deterministic(grid: TimeGrid, path: &[Vec<f64>]) -> Result<Self, CoreError> {
        let n = grid.len();
        if path.len() != n + 1 {
            return Err(CoreError::PathLength { expected: n + 1, got: path.len() });
        }
        let dim = path[0].len();
        let levels = path
            .iter()
            .enumerate()
            .map(|(i, v)| vec![NodeSpec::new(if i == 0 { None } else { Some(0) }, 1.0, v.clone())])
            .collect();
        Self::new(grid, dim, levels)
    }

    /// Structural equality up to reordering of siblings (exact values and
    /// probabilities within `tol`).
    pub fn isomorphic(&self, other: &FilteredTree, tol: f64) -> bool {
        if self.grid != other.grid || self.dim != other.dim || self.num_nodes() != other.num_nodes() {
            return false;
        }
        let a = self.canonical_signature(tol);
        let b = other.canonical_signature(tol);
        a == b
    }

    fn canonical_signature(&self, tol: f64) -> Vec<String> {
        // Bottom-up canonical strings; siblings sorted.
        let n = self.depth();
        let q = |x: f64| (x / tol).round() as i64;
        let mut sig: Vec<String> = (0..self.level_len(n))
            .map(|k| format!("{:?}", self.value(n, k).iter().map(|&x| q(x)).collect::<Vec<_>>()))
            .collect();
        for i in (0..n).rev() {
            sig = (0..self.level_len(i))
                .map(|k| {
                    let mut kids: Vec<String> = self
                        .children(i, k)
                        .map(|c| format!("{}*{}", q(self.prob(i + 1, c)), sig[c]))
                        .collect();
                    kids.sort();
                    format!(
                        "{:?}[{}]",
                        self.value(i, k).iter().map(|&x| q(x)).collect::<Vec<_>>(),
                        kids.join(",")
                    )
                })
                .collect();
        }
        let mut top: Vec<String> =
            sig.iter().enumerate().map(|(k, s)| format!("{}*{}", q(self.prob(0, k)), s)).collect();
        top.sort();
        top
    }

    /// Builds a tree from per-level lists of `(parent, unconditional mass,
    /// value)`; nodes may come in any order and masses need not be
    /// normalised. Transition probabilities are `mass / parent mass`.
    pub fn from_masses(
        grid: TimeGrid,
        dim: usize,
        levels: Vec<Vec<(Option<usize>, f64, Vec<f64>)>>,
    ) -> Result<Self, CoreError> {
        let mut parent = Vec::with_capacity(levels.len());
        let mut prob = Vec::with_capacity(levels.len());
        let mut values = Vec::with_capacity(levels.len());
        let mut remap_prev: Vec<usize> = Vec::new();
        let mut mass_prev: Vec<f64> = Vec::new();
        for (i, level) in levels.into_iter().enumerate() {
            let mut order: Vec<usize> = (0..level.len()).collect();
            let key = |k: usize| match level[k].0 {
                Some(p) if i > 0 => remap_prev[p],
                _ => 0,
            };
            order.sort_by_key(|&k| key(k));
            let mut remap = vec![0usize; level.len()];
            let mut lp = Vec::with_capacity(level.len());
            let mut lprob = Vec::with_capacity(level.len());
            let mut lv = Vec::with_capacity(level.len() * dim);
            let mut lmass = Vec::with_capacity(level.len());
            let total: f64 = level.iter().map(|n| n.1).sum();
            for (new, &old) in order.iter().enumerate() {
                remap[old] = new;
                let (p, m, ref v) = level[old];
                if i == 0 {
                    lp.push(NO_PARENT);
                    lprob.push(m / total);
                } else {
                    let np = remap_prev[p.ok_or_else(|| {
                        CoreError::InvalidTree(vec![format!("orphan node {old} at level {i}")])
                    })?];
                    lp.push(np);
                    lprob.push(m / mass_prev[np]);
                }
                if v.len() != dim {
                    return Err(CoreError::InvalidTree(vec![format!(
                        "node {old} at level {i} has value of length {}",
                        v.len()
                    )]));
                }
                lv.extend_from_slice(v);
                lmass.push(m);
            }
            parent.push(lp);
            prob.push(lprob);
            values.push(lv);
            remap_prev = remap;
            mass_prev = lmass;
        }
        Self::assemble(grid, dim, parent, prob, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary() -> TreeSpec {
        TreeSpec {
            dim: 1,
            grid: vec![0.5, 1.0],
            levels: vec![
                vec![NodeSpec::new(None, 1.0, vec![0.0])],
                vec![NodeSpec::new(Some(0), 0.5, vec![1.0]), NodeSpec::new(Some(0), 0.5, vec![-1.0])],
                vec![
                    NodeSpec::new(Some(0), 0.5, vec![2.0]),
                    NodeSpec::new(Some(1), 1.0, vec![-2.0]),
                    NodeSpec::new(Some(0), 0.5, vec![0.0]),
                ],
            ],
        }
    }

    #[test]
    fn well_formed_tree_has_no_violations() {
        assert!(binary().validate().is_empty());
    }

    #[test]
    fn reports_bad_probability_sum() {
        let mut s = binary();
        s.levels[1][1].prob = 0.4;
        let v = s.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].starts_with("node probabilities sum to 0.9"), "{v:?}");
    }

    #[test]
    fn reports_orphans() {
        let mut s = binary();
        s.levels[2][1].parent = None;
        let v = s.validate();
        assert!(v.iter().any(|m| m.starts_with("orphan node")), "{v:?}");
    }

    #[test]
    fn nodes_are_grouped_by_parent() {
        let t = FilteredTree::from_spec(&binary()).unwrap();
        assert_eq!(t.children(1, 0), 0..2);
        assert_eq!(t.children(1, 1), 2..3);
        assert_eq!(t.value(2, 1), &[0.0]);
        assert_eq!(t.leaves_of(0, 0), 0..3);
        assert_eq!(t.ancestor(2, 1), 1);
        assert!((t.leaf_probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_branches_are_pruned() {
        let mut s = binary();
        s.levels[1][0].prob = 1.0;
        s.levels[1][1].prob = 0.0;
        let t = FilteredTree::from_spec(&s).unwrap();
        assert_eq!(t.num_leaves(), 2);
        assert!(t.validate().is_empty());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut s = binary();
        s.levels[2][0].value[0] = 0.1 + 0.2;
        let t = FilteredTree::from_spec(&s).unwrap();
        let back = FilteredTree::from_json(&t.to_json()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn isomorphism_ignores_sibling_order() {
        let t = FilteredTree::from_spec(&binary()).unwrap();
        let mut s = binary();
        s.levels[1].swap(0, 1);
        for node in s.levels[2].iter_mut() {
            node.parent = node.parent.map(|p| 1 - p);
        }
        let u = FilteredTree::from_spec(&s).unwrap();
        assert!(t.isomorphic(&u, 1e-12));
    }
}
