//! Snell envelopes, stopping rules and exhaustive enumeration.

use aot_core::FilteredTree;
use serde::{Deserialize, Serialize};

use crate::cost::CostFunction;
use crate::error::StoppingError;

/// Default cap on the number of stopping rules enumerated by the brute
/// force routines.
pub const BRUTE_FORCE_CAP: usize = 2_000_000;

/// Whether the stopping problem is a minimisation (the canonical form) or a
/// maximisation (`sup_τ E φ = −inf_τ E[−φ]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Inf,
    Sup,
}

impl std::str::FromStr for Variant {
    type Err = StoppingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "min" => Ok(Variant::Inf),
            "sup" | "max" => Ok(Variant::Sup),
            other => Err(StoppingError::BadParameter(format!("unknown variant `{other}` (inf, sup)"))),
        }
    }
}

/// A stopping time of the tree's filtration: one stop/continue decision per
/// node. Decisions below a stopping node are irrelevant; every node of the
/// terminal level stops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoppingRule {
    stop: Vec<Vec<bool>>,
}

impl StoppingRule {
    /// Wraps per-level decision vectors after checking them against `tree`.
    pub fn new(tree: &FilteredTree, stop: Vec<Vec<bool>>) -> Result<Self, StoppingError> {
        if stop.len() != tree.num_levels() {
            return Err(StoppingError::InvalidRule(format!(
                "rule has {} levels, tree has {}",
                stop.len(),
                tree.num_levels()
            )));
        }
        for (i, level) in stop.iter().enumerate() {
            if level.len() != tree.level_len(i) {
                return Err(StoppingError::InvalidRule(format!(
                    "level {i} has {} decisions for {} nodes",
                    level.len(),
                    tree.level_len(i)
                )));
            }
        }
        if stop[tree.depth()].iter().any(|&s| !s) {
            return Err(StoppingError::InvalidRule("every terminal node must stop".into()));
        }
        Ok(StoppingRule { stop })
    }

    /// The deterministic time `t_level`.
    pub fn at_level(tree: &FilteredTree, level: usize) -> Result<Self, StoppingError> {
        if level > tree.depth() {
            return Err(StoppingError::InvalidRule(format!("level {level} beyond the horizon {}", tree.depth())));
        }
        let stop = (0..tree.num_levels()).map(|i| vec![i >= level; tree.level_len(i)]).collect();
        Ok(StoppingRule { stop })
    }

    /// Decision at node `(i, k)`.
    pub fn stops(&self, i: usize, k: usize) -> bool {
        self.stop[i][k]
    }

    /// Raw decisions per level.
    pub fn decisions(&self) -> &[Vec<bool>] {
        &self.stop
    }

    /// Stopping level along the path of `leaf`.
    pub fn stop_level(&self, tree: &FilteredTree, leaf: usize) -> usize {
        (0..tree.num_levels()).find(|&i| self.stop[i][tree.ancestor(leaf, i)]).unwrap_or(tree.depth())
    }

    /// Stopping levels of all leaves.
    pub fn stop_levels(&self, tree: &FilteredTree) -> Vec<usize> {
        (0..tree.num_leaves()).map(|l| self.stop_level(tree, l)).collect()
    }
}

/// Result of [`snell_os`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnellResult {
    /// `inf_τ E φ(X, τ)` (or the supremum).
    pub value: f64,
    /// An optimal rule; ties stop.
    pub rule: StoppingRule,
    /// Value process per node, in the sign of the variant.
    pub envelope: Vec<Vec<f64>>,
}

/// `φ` evaluated at every node, in the sign of the minimisation. A raw
/// value of `+∞` marks a node where stopping is not allowed, in either
/// variant.
pub fn node_costs(tree: &FilteredTree, phi: &CostFunction, variant: Variant) -> Result<Vec<Vec<f64>>, StoppingError> {
    let n = tree.depth();
    (0..=n)
        .map(|i| {
            (0..tree.level_len(i))
                .map(|k| {
                    let v = phi.eval(&tree.prefix(i, k), tree.dim(), i, tree.grid());
                    let c = match variant {
                        _ if v == f64::INFINITY => v,
                        Variant::Inf => v,
                        Variant::Sup => -v,
                    };
                    if v.is_nan() || v == f64::NEG_INFINITY || (i == n && v.is_infinite()) {
                        Err(StoppingError::NonFinite { level: i, node: k, value: v })
                    } else {
                        Ok(c)
                    }
                })
                .collect()
        })
        .collect()
}

/// Backward induction for `inf_τ E c(τ)` with node costs `c` (`+∞` marks a
/// node where stopping is not allowed). Returns the value, rule and
/// envelope.
pub fn snell_on_costs(tree: &FilteredTree, costs: &[Vec<f64>]) -> (f64, StoppingRule, Vec<Vec<f64>>) {
    let n = tree.depth();
    let mut env: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
    let mut stop: Vec<Vec<bool>> = vec![Vec::new(); n + 1];
    env[n] = costs[n].clone();
    stop[n] = vec![true; tree.level_len(n)];
    for i in (0..n).rev() {
        let (e, s): (Vec<f64>, Vec<bool>) = (0..tree.level_len(i))
            .map(|k| {
                let cont: f64 = tree.children(i, k).map(|c| tree.prob(i + 1, c) * env[i + 1][c]).sum();
                let here = costs[i][k];
                if here <= cont {
                    (here, true)
                } else {
                    (cont, false)
                }
            })
            .unzip();
        env[i] = e;
        stop[i] = s;
    }
    let value = (0..tree.level_len(0)).map(|k| tree.abs_prob(0, k) * env[0][k]).sum();
    (value, StoppingRule { stop }, env)
}

/// Optimal stopping value `inf_τ E φ(X, τ)` (or `sup` for
/// [`Variant::Sup`]) by backward induction; ties stop early.
pub fn snell_os(tree: &FilteredTree, phi: &CostFunction, variant: Variant) -> Result<SnellResult, StoppingError> {
    let costs = node_costs(tree, phi, variant)?;
    let (value, rule, mut envelope) = snell_on_costs(tree, &costs);
    let sign = match variant {
        Variant::Inf => 1.0,
        Variant::Sup => -1.0,
    };
    for level in &mut envelope {
        for v in level.iter_mut() {
            *v *= sign;
        }
    }
    Ok(SnellResult { value: sign * value, rule, envelope })
}

/// `E φ(X, τ)` for a given rule.
pub fn expected_cost(tree: &FilteredTree, rule: &StoppingRule, phi: &CostFunction) -> Result<f64, StoppingError> {
    let costs = node_costs(tree, phi, Variant::Inf)?;
    Ok(expected_on_costs(tree, rule, &costs))
}

/// `E c(τ)` for node costs `c`.
pub fn expected_on_costs(tree: &FilteredTree, rule: &StoppingRule, costs: &[Vec<f64>]) -> f64 {
    (0..tree.num_leaves())
        .map(|l| {
            let j = rule.stop_level(tree, l);
            tree.leaf_prob(l) * costs[j][tree.ancestor(l, j)]
        })
        .sum()
}

/// Number of distinct stopping times of the tree (saturating).
pub fn count_stopping_times(tree: &FilteredTree) -> usize {
    let n = tree.depth();
    let mut count = vec![1usize; tree.level_len(n)];
    for i in (0..n).rev() {
        count = (0..tree.level_len(i))
            .map(|k| tree.children(i, k).fold(1usize, |acc, c| acc.saturating_mul(count[c])).saturating_add(1))
            .collect();
    }
    count.into_iter().fold(1usize, |a, c| a.saturating_mul(c))
}

/// All values `E c(τ)` over every stopping time, enumerated explicitly
/// (each distinct stopping time contributes one entry). Disallowed stops
/// (`+∞`) are skipped.
pub fn enumerate_costs(tree: &FilteredTree, costs: &[Vec<f64>], cap: usize) -> Result<Vec<f64>, StoppingError> {
    if count_stopping_times(tree) > cap {
        return Err(StoppingError::TooManyRules { cap });
    }
    fn node(tree: &FilteredTree, costs: &[Vec<f64>], i: usize, k: usize) -> Vec<f64> {
        let mut out = Vec::new();
        let here = costs[i][k];
        if here.is_finite() {
            out.push(tree.abs_prob(i, k) * here);
        }
        if i < tree.depth() {
            let mut acc = vec![0.0];
            for c in tree.children(i, k) {
                let sub = node(tree, costs, i + 1, c);
                acc = acc.iter().flat_map(|a| sub.iter().map(move |b| a + b)).collect();
            }
            out.extend(acc);
        }
        out
    }
    let mut acc = vec![0.0];
    for k in 0..tree.level_len(0) {
        let sub = node(tree, costs, 0, k);
        acc = acc.iter().flat_map(|a| sub.iter().map(move |b| a + b)).collect();
    }
    Ok(acc)
}

/// `inf_τ E φ(X, τ)` (or `sup`) by enumerating every stopping time.
pub fn brute_force_os(tree: &FilteredTree, phi: &CostFunction, variant: Variant) -> Result<f64, StoppingError> {
    let costs = node_costs(tree, phi, variant)?;
    let best = enumerate_costs(tree, &costs, BRUTE_FORCE_CAP)?.into_iter().fold(f64::INFINITY, f64::min);
    Ok(match variant {
        Variant::Inf => best,
        Variant::Sup => -best,
    })
}
