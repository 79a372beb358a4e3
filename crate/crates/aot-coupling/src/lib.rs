//! Couplings between finite filtered processes.
//!
//! A [`Coupling`] is a joint law on pairs of leaves `(x, y)` of two trees
//! `X` (left) and `Y` (right), stored densely with variable index
//! `x · |leaves(Y)| + y`.
//!
//! A coupling `π` is `ε`-causal from `X` to `Y` when, for every time `t`,
//! the information of `Y` at `t` is conditionally independent of the whole
//! of `X` given the information of `X` at `t + ε`. On trees this is a
//! finite family of linear equalities
//!
//! ```text
//! E_π[ 1_V · (1_U − P^X(U | F^X_{t+ε})) ] = 0
//! ```
//!
//! for atoms `V` of `F^Y_t` and leaves `U` of `X` ([`causality_constraints`]).
//! Because both filtrations are piecewise constant, it suffices to impose the
//! rows at the grid times `t_0 = 0, t_1, …, t_{N−1}` with the `X`-level
//! `max{j : t_j ≤ t_i + ε}`; the terminal time is vacuous.

use aot_core::{FilteredTree, TimeGrid, TIME_TOL};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Marginal tolerance for couplings.
pub const MARGINAL_TOL: f64 = 1e-10;
/// Tolerance for causality rows.
pub const CAUSALITY_TOL: f64 = 1e-9;

/// Errors raised by coupling operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("trees live on different grids")]
    GridMismatch,
    #[error("trees have different dimensions ({0} vs {1})")]
    DimMismatch(usize, usize),
    #[error("coupling has shape {got:?}, expected {expected:?}")]
    Shape { expected: (usize, usize), got: (usize, usize) },
    #[error("marginal violated by {0:e}")]
    Marginal(f64),
    #[error("negative or non-finite weight {0}")]
    BadWeight(f64),
    #[error("invalid shift: {0}")]
    BadShift(String),
}

/// A joint law on leaf pairs of two trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

impl Coupling {
    /// Wraps a dense row-major weight vector (`rows · cols` entries).
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self, CouplingError> {
        if weights.len() != rows * cols {
            return Err(CouplingError::Shape { expected: (rows, cols), got: (weights.len(), 1) });
        }
        if let Some(&w) = weights.iter().find(|w| !w.is_finite() || **w < -1e-12) {
            return Err(CouplingError::BadWeight(w));
        }
        let weights = weights.into_iter().map(|w| w.max(0.0)).collect();
        Ok(Coupling { rows, cols, weights })
    }

    /// The product coupling `P^X ⊗ P^Y`.
    pub fn product(x: &FilteredTree, y: &FilteredTree) -> Self {
        let (p, q) = (x.leaf_probs(), y.leaf_probs());
        let weights = p.iter().flat_map(|&a| q.iter().map(move |&b| a * b)).collect();
        Coupling { rows: p.len(), cols: q.len(), weights }
    }

    /// The identity coupling of a tree with itself.
    pub fn identity(x: &FilteredTree) -> Self {
        let n = x.num_leaves();
        let mut weights = vec![0.0; n * n];
        for l in 0..n {
            weights[l * n + l] = x.leaf_prob(l);
        }
        Coupling { rows: n, cols: n, weights }
    }

    /// The coupling `(id, f)_# P^X` induced by a leaf map `f: leaves(X) → leaves(Y)`.
    pub fn from_leaf_map(x: &FilteredTree, cols: usize, map: &[usize]) -> Self {
        let rows = x.num_leaves();
        let mut weights = vec![0.0; rows * cols];
        for (l, &m) in map.iter().enumerate() {
            weights[l * cols + m] += x.leaf_prob(l);
        }
        Coupling { rows, cols, weights }
    }

    /// Number of left leaves.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of right leaves.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Weight of the pair `(x, y)`.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.weights[x * self.cols + y]
    }

    /// Dense row-major weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights as nested rows (for JSON output).
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.weights.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// Swaps the roles of left and right.
    pub fn transpose(&self) -> Self {
        let mut weights = vec![0.0; self.weights.len()];
        for x in 0..self.rows {
            for y in 0..self.cols {
                weights[y * self.rows + x] = self.get(x, y);
            }
        }
        Coupling { rows: self.cols, cols: self.rows, weights }
    }

    /// Left marginal.
    pub fn row_sums(&self) -> Vec<f64> {
        self.weights.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    /// Right marginal.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for r in self.weights.chunks(self.cols) {
            for (a, b) in s.iter_mut().zip(r) {
                *a += b;
            }
        }
        s
    }

    /// Largest deviation of the marginals from the leaf laws of `x`, `y`.
    pub fn marginal_error(&self, x: &FilteredTree, y: &FilteredTree) -> Result<f64, CouplingError> {
        self.check_shape(x, y)?;
        let e1 = self.row_sums().iter().zip(x.leaf_probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let e2 = self.col_sums().iter().zip(y.leaf_probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(e1.max(e2))
    }

    /// Checks that the marginals match within [`MARGINAL_TOL`].
    pub fn check_marginals(&self, x: &FilteredTree, y: &FilteredTree) -> Result<(), CouplingError> {
        let e = self.marginal_error(x, y)?;
        if e > MARGINAL_TOL {
            return Err(CouplingError::Marginal(e));
        }
        Ok(())
    }

    fn check_shape(&self, x: &FilteredTree, y: &FilteredTree) -> Result<(), CouplingError> {
        if (self.rows, self.cols) != (x.num_leaves(), y.num_leaves()) {
            return Err(CouplingError::Shape {
                expected: (x.num_leaves(), y.num_leaves()),
                got: (self.rows, self.cols),
            });
        }
        Ok(())
    }
}

/// The product coupling (free-function form).
pub fn product_coupling(x: &FilteredTree, y: &FilteredTree) -> Coupling {
    Coupling::product(x, y)
}

/// The relaxation parameter `ε ≥ 0`, measured in time units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsShift {
    /// The time shift `ε`; also the additive penalty in the distance.
    pub epsilon: f64,
}

impl EpsShift {
    /// `ε = 0` (bicausal).
    pub fn zero() -> Self {
        EpsShift { epsilon: 0.0 }
    }

    /// Shift by an arbitrary time `ε ≥ 0`.
    pub fn time(epsilon: f64) -> Result<Self, CouplingError> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(CouplingError::BadShift(format!("epsilon must be finite and nonnegative, got {epsilon}")));
        }
        Ok(EpsShift { epsilon })
    }

    /// The smallest time shift under which every level `i` may look
    /// `k` levels ahead: `max_i (t_{min(i+k, N)} − t_i)`. On a uniform grid
    /// this is `k / N`.
    pub fn steps(k: usize, grid: &TimeGrid) -> Self {
        let n = grid.len();
        let eps = (0..n).map(|i| grid.time((i + k).min(n)) - grid.time(i)).fold(0.0, f64::max);
        EpsShift { epsilon: eps }
    }

    /// The level of the conditioning σ-algebra for information level `i`:
    /// `max{j : t_j ≤ t_i + ε}` (saturating at `N`).
    pub fn target_level(&self, grid: &TimeGrid, i: usize) -> usize {
        grid.level_at(grid.time(i) + self.epsilon + TIME_TOL).min(grid.len())
    }

    /// Number of uniform grid steps represented by `ε` (rounded down).
    pub fn steps_on_uniform(&self, grid: &TimeGrid) -> usize {
        ((self.epsilon + TIME_TOL) * grid.len() as f64).floor() as usize
    }
}

/// Which causality condition to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// `ε`-causal from the left tree `X` to the right tree `Y`:
    /// `F^Y_t ⫫ F^X_1 | F^X_{t+ε}`.
    XToY,
    /// `ε`-causal from `Y` to `X`: `F^X_t ⫫ F^Y_1 | F^Y_{t+ε}`.
    YToX,
}

/// One causality equality `Σ coef · π(x, y) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintRow {
    /// Information level `i` of the conditioned atom.
    pub level: usize,
    /// Node index of the atom `V` on that level (in the target tree).
    pub atom: usize,
    /// Leaf `U` of the source tree.
    pub leaf: usize,
    /// Sparse coefficients over coupling variables `x · |leaves(Y)| + y`.
    pub entries: Vec<(usize, f64)>,
}

impl ConstraintRow {
    /// Value of the row at a coupling.
    pub fn evaluate(&self, w: &[f64]) -> f64 {
        self.entries.iter().map(|&(j, a)| a * w[j]).sum()
    }
}

fn check_pair(x: &FilteredTree, y: &FilteredTree) -> Result<(), CouplingError> {
    if x.grid() != y.grid() {
        return Err(CouplingError::GridMismatch);
    }
    if x.dim() != y.dim() {
        return Err(CouplingError::DimMismatch(x.dim(), y.dim()));
    }
    Ok(())
}

/// Generates the causality rows in the given direction.
///
/// All rows with non-zero coefficients are returned, sorted by
/// `(level, atom, leaf)`. Rows with identically zero coefficients (source
/// atoms consisting of a single leaf) are omitted.
pub fn causality_constraints(
    x: &FilteredTree,
    y: &FilteredTree,
    eps: EpsShift,
    direction: Direction,
) -> Result<Vec<ConstraintRow>, CouplingError> {
    generate(x, y, eps, direction, false)
}

/// Like [`causality_constraints`] but omits rows that are linear
/// consequences of the remaining rows together with the marginal
/// constraints: for each sibling family of target atoms the last child is
/// omitted (its row is the parent's row minus its siblings'; the parent's
/// row is implied by the parent's coarser-conditioned row, and on level 0 by
/// the marginals), and for each conditioning atom the last leaf is omitted
/// (the rows over one atom sum to zero).
pub fn reduced_causality_constraints(
    x: &FilteredTree,
    y: &FilteredTree,
    eps: EpsShift,
    direction: Direction,
) -> Result<Vec<ConstraintRow>, CouplingError> {
    generate(x, y, eps, direction, true)
}

fn generate(
    x: &FilteredTree,
    y: &FilteredTree,
    eps: EpsShift,
    direction: Direction,
    reduced: bool,
) -> Result<Vec<ConstraintRow>, CouplingError> {
    check_pair(x, y)?;
    let ny = y.num_leaves();
    // (source, target): conditioning happens in the source tree.
    let (src, tgt) = match direction {
        Direction::XToY => (x, y),
        Direction::YToX => (y, x),
    };
    let var = |s: usize, t: usize| match direction {
        Direction::XToY => s * ny + t,
        Direction::YToX => t * ny + s,
    };
    let grid = x.grid();
    let n = grid.len();
    let mut rows = Vec::new();
    for i in 0..n {
        let j = eps.target_level(grid, i);
        if j >= n {
            continue;
        }
        let last_root = tgt.level_len(0) - 1;
        for w in 0..tgt.level_len(i) {
            if reduced {
                let is_last = match tgt.parent(i, w) {
                    None => w == last_root,
                    Some(p) => w + 1 == tgt.children(i - 1, p).end,
                };
                if is_last {
                    continue;
                }
            }
            let tleaves = tgt.leaves_of(i, w);
            for a in 0..src.level_len(j) {
                let sleaves = src.leaves_of(j, a);
                if sleaves.len() < 2 {
                    continue;
                }
                let pa = src.abs_prob(j, a);
                let upto = if reduced { sleaves.end - 1 } else { sleaves.end };
                for u in sleaves.start..upto {
                    let cu = src.leaf_prob(u) / pa;
                    let mut entries = Vec::with_capacity(tleaves.len() * sleaves.len());
                    for s in sleaves.clone() {
                        let c = if s == u { 1.0 - cu } else { -cu };
                        for t in tleaves.clone() {
                            entries.push((var(s, t), c));
                        }
                    }
                    entries.sort_unstable_by_key(|e| e.0);
                    rows.push(ConstraintRow { level: i, atom: w, leaf: u, entries });
                }
            }
        }
    }
    Ok(rows)
}

/// Outcome of a causality check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CausalityCheck {
    pub holds: bool,
    pub max_violation: f64,
}

/// Checks `ε`-causality in one direction (tolerance [`CAUSALITY_TOL`]).
pub fn is_eps_causal(
    x: &FilteredTree,
    y: &FilteredTree,
    pi: &Coupling,
    eps: EpsShift,
    direction: Direction,
) -> Result<CausalityCheck, CouplingError> {
    pi.check_shape(x, y)?;
    let rows = causality_constraints(x, y, eps, direction)?;
    let max_violation = rows.iter().map(|r| r.evaluate(pi.weights()).abs()).fold(0.0, f64::max);
    Ok(CausalityCheck { holds: max_violation <= CAUSALITY_TOL, max_violation })
}

/// Checks `ε`-bicausality (both directions).
pub fn is_eps_bicausal(x: &FilteredTree, y: &FilteredTree, pi: &Coupling, eps: EpsShift) -> Result<CausalityCheck, CouplingError> {
    let a = is_eps_causal(x, y, pi, eps, Direction::XToY)?;
    let b = is_eps_causal(x, y, pi, eps, Direction::YToX)?;
    let max_violation = a.max_violation.max(b.max_violation);
    Ok(CausalityCheck { holds: a.holds && b.holds, max_violation })
}

/// Conditionally independent gluing of `π ∈ Cpl(X, Y)` and `ρ ∈ Cpl(Y, Z)`
/// along the leaves of `Y`: `Π(x, z) = Σ_y π(x, y) ρ(y, z) / P^Y(y)`.
pub fn glue(pi: &Coupling, rho: &Coupling, y: &FilteredTree) -> Result<Coupling, CouplingError> {
    if pi.cols != y.num_leaves() || rho.rows != y.num_leaves() {
        return Err(CouplingError::Shape { expected: (y.num_leaves(), y.num_leaves()), got: (pi.cols, rho.rows) });
    }
    let mut w = vec![0.0; pi.rows * rho.cols];
    for xi in 0..pi.rows {
        for yi in 0..pi.cols {
            let a = pi.get(xi, yi);
            if a == 0.0 {
                continue;
            }
            let f = a / y.leaf_prob(yi);
            for zi in 0..rho.cols {
                w[xi * rho.cols + zi] += f * rho.get(yi, zi);
            }
        }
    }
    Ok(Coupling { rows: pi.rows, cols: rho.cols, weights: w })
}

/// Path metric used in transport costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PathMetric {
    /// `sup_t |f(t) − g(t)|` of the càdlàg embeddings (maximum over levels
    /// of the Euclidean distance).
    #[default]
    Sup,
    /// `∫_0^1 |f(t) − g(t)| dt` of the embeddings.
    L1Time,
}

/// Distance between the paths of leaf `a` of `x` and leaf `b` of `y`.
pub fn path_distance(x: &FilteredTree, a: usize, y: &FilteredTree, b: usize, metric: PathMetric) -> f64 {
    let grid = x.grid();
    let mut acc = 0.0f64;
    for i in 0..x.num_levels() {
        let d = x
            .leaf_value(a, i)
            .iter()
            .zip(y.leaf_value(b, i))
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt();
        match metric {
            PathMetric::Sup => acc = acc.max(d),
            PathMetric::L1Time => acc += grid.duration(i) * d,
        }
    }
    acc
}

/// Dense matrix `d(path_x, path_y)^p`, row-major.
pub fn cost_matrix(x: &FilteredTree, y: &FilteredTree, p: f64, metric: PathMetric) -> Result<Vec<f64>, CouplingError> {
    check_pair(x, y)?;
    let mut c = Vec::with_capacity(x.num_leaves() * y.num_leaves());
    for a in 0..x.num_leaves() {
        for b in 0..y.num_leaves() {
            c.push(path_distance(x, a, y, b, metric).powf(p));
        }
    }
    Ok(c)
}

/// `(Σ π(x, y) d(x, y)^p)^{1/p}`.
pub fn transport_cost(x: &FilteredTree, y: &FilteredTree, pi: &Coupling, p: f64, metric: PathMetric) -> Result<f64, CouplingError> {
    pi.check_shape(x, y)?;
    let c = cost_matrix(x, y, p, metric)?;
    let s: f64 = c.iter().zip(pi.weights()).map(|(a, b)| a * b).sum();
    Ok(s.max(0.0).powf(1.0 / p))
}
