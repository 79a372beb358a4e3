//! Prediction-process labels, Hoover–Keisler minimisation and the natural
//! filtration check.
//!
//! On a finite tree the rank-`r` prediction process at a node is a finite
//! object: the rank-0 process is the path itself, and the rank-`(r+1)`
//! value at node `v` is the conditional law, given the atom `v`, of the
//! whole rank-`r` process (a path of labels). Conditional laws are
//! canonicalised (sorted, merged, weights rounded to `1e-12`) and interned
//! to integers, so two nodes carry the same label exactly when their
//! conditional laws coincide.

use std::collections::HashMap;

use crate::law::norm0;
use crate::tree::FilteredTree;

/// Weight resolution used when canonicalising conditional laws.
pub const LABEL_RESOLUTION: f64 = 1e-12;

/// Per-node labels of one rank: `labels[i][k]` for node `k` on level `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    /// Rank `r` of the prediction process the labels identify.
    pub rank: usize,
    /// Labels per level and node.
    pub labels: Vec<Vec<u32>>,
}

impl Labels {
    /// Label of node `(i, k)`.
    pub fn get(&self, i: usize, k: usize) -> u32 {
        self.labels[i][k]
    }

    /// Number of distinct labels on every level.
    pub fn classes_per_level(&self) -> Vec<usize> {
        self.labels
            .iter()
            .map(|l| {
                let mut v = l.clone();
                v.sort_unstable();
                v.dedup();
                v.len()
            })
            .collect()
    }

    /// True when both label sets induce the same node partition on every
    /// level.
    pub fn same_partition(&self, other: &Labels) -> bool {
        self.labels.iter().zip(&other.labels).all(|(a, b)| {
            let mut fwd: HashMap<u32, u32> = HashMap::new();
            let mut bwd: HashMap<u32, u32> = HashMap::new();
            a.iter().zip(b).all(|(&x, &y)| *fwd.entry(x).or_insert(y) == y && *bwd.entry(y).or_insert(x) == x)
        })
    }
}

fn intern<K: std::hash::Hash + Eq>(table: &mut HashMap<K, u32>, key: K) -> u32 {
    let next = table.len() as u32;
    *table.entry(key).or_insert(next)
}

/// Rank-0 labels: interned node values.
fn value_labels(tree: &FilteredTree) -> Labels {
    let mut table: HashMap<Vec<u64>, u32> = HashMap::new();
    let labels = (0..tree.num_levels())
        .map(|i| {
            (0..tree.level_len(i))
                .map(|k| intern(&mut table, tree.value(i, k).iter().map(|&x| norm0(x).to_bits()).collect()))
                .collect()
        })
        .collect();
    Labels { rank: 0, labels }
}

/// One conditioning step: labels of rank `r+1` from labels of rank `r`.
fn next_rank(tree: &FilteredTree, prev: &Labels) -> Labels {
    let n = tree.depth();
    let mut paths: HashMap<Vec<u32>, u32> = HashMap::new();
    let leaf_path: Vec<u32> = (0..tree.num_leaves())
        .map(|l| intern(&mut paths, (0..=n).map(|i| prev.labels[i][tree.ancestor(l, i)]).collect()))
        .collect();
    let mut laws: HashMap<Vec<(u32, i64)>, u32> = HashMap::new();
    let labels = (0..=n)
        .map(|i| {
            (0..tree.level_len(i))
                .map(|k| {
                    let mass = tree.abs_prob(i, k);
                    let mut items: Vec<(u32, f64)> =
                        tree.leaves_of(i, k).map(|l| (leaf_path[l], tree.leaf_prob(l))).collect();
                    items.sort_by_key(|e| e.0);
                    let mut key: Vec<(u32, i64)> = Vec::with_capacity(items.len());
                    let mut acc: Vec<(u32, f64)> = Vec::with_capacity(items.len());
                    for (p, w) in items {
                        match acc.last_mut() {
                            Some(last) if last.0 == p => last.1 += w,
                            _ => acc.push((p, w)),
                        }
                    }
                    for (p, w) in acc {
                        key.push((p, (w / mass / LABEL_RESOLUTION).round() as i64));
                    }
                    intern(&mut laws, key)
                })
                .collect()
        })
        .collect();
    Labels { rank: prev.rank + 1, labels }
}

/// Labels of the rank-`r` prediction process (`r ≥ 1`). Rank 1 identifies
/// the conditional path law given each atom.
pub fn prediction_labels(tree: &FilteredTree, rank: usize) -> Labels {
    assert!(rank >= 1, "prediction ranks start at 1");
    let mut labels = value_labels(tree);
    for _ in 0..rank {
        labels = next_rank(tree, &labels);
    }
    labels
}

/// Iterates ranks until the induced node partition stops changing and
/// returns the stable labels; `labels.rank` is the first rank `r*` with
/// `partition(r*+1) = partition(r*)`.
pub fn stable_labels(tree: &FilteredTree) -> Labels {
    let mut cur = next_rank(tree, &value_labels(tree));
    // Finite depth: the partition is stable after at most N + 1 ranks; the
    // extra slack only guards against rounding-induced oscillation.
    for _ in 0..(tree.num_levels() + 2) {
        let nxt = next_rank(tree, &cur);
        if nxt.same_partition(&cur) {
            return cur;
        }
        cur = nxt;
    }
    cur
}

/// The Hoover–Keisler quotient: merges sibling nodes with equal stable
/// labels (adding their probabilities) from the root downwards.
pub fn hk_minimize(tree: &FilteredTree) -> FilteredTree {
    let lab = stable_labels(tree);
    let n = tree.depth();
    let mut levels: Vec<Vec<(Option<usize>, f64, Vec<f64>)>> = Vec::with_capacity(n + 1);
    let mut new_of_prev: Vec<usize> = Vec::new();
    for i in 0..=n {
        let mut table: HashMap<(usize, u32), usize> = HashMap::new();
        let mut nodes: Vec<(Option<usize>, f64, Vec<f64>)> = Vec::new();
        let mut new_of = vec![0usize; tree.level_len(i)];
        for k in 0..tree.level_len(i) {
            let np = tree.parent(i, k).map(|p| new_of_prev[p]);
            let key = (np.unwrap_or(usize::MAX), lab.labels[i][k]);
            let idx = *table.entry(key).or_insert_with(|| {
                nodes.push((np, 0.0, tree.value(i, k).to_vec()));
                nodes.len() - 1
            });
            nodes[idx].1 += tree.abs_prob(i, k);
            new_of[k] = idx;
        }
        levels.push(nodes);
        new_of_prev = new_of;
    }
    FilteredTree::from_masses(tree.grid().clone(), tree.dim(), levels).expect("quotient of a valid tree is valid")
}

/// True iff at every level, nodes with identical realised value histories
/// carry identical rank-1 prediction labels (the filtration adds nothing
/// to the path history as far as conditional path laws are concerned).
pub fn is_naturally_filtered(tree: &FilteredTree) -> bool {
    let values = value_labels(tree);
    let pp1 = next_rank(tree, &values);
    let mut hist_prev: Vec<u32> = Vec::new();
    let mut histories: HashMap<(u32, u32), u32> = HashMap::new();
    for i in 0..tree.num_levels() {
        let mut seen: HashMap<u32, u32> = HashMap::new();
        let mut hist = vec![0u32; tree.level_len(i)];
        for k in 0..tree.level_len(i) {
            let parent_hist = tree.parent(i, k).map(|p| hist_prev[p]).unwrap_or(u32::MAX);
            let h = intern(&mut histories, (parent_hist, values.labels[i][k]));
            hist[k] = h;
            if *seen.entry(h).or_insert(pp1.labels[i][k]) != pp1.labels[i][k] {
                return false;
            }
        }
        hist_prev = hist;
    }
    true
}
