//! Stability of optimal stopping under adapted couplings, the martingale
//! defect and the Aldous functional.

use aot_core::FilteredTree;
use aot_coupling::{is_eps_bicausal, path_distance, Coupling, EpsShift, PathMetric};
use serde::Serialize;

use crate::error::StoppingError;
use crate::modulus::modulus;

/// `L · (E_π ‖X − Y‖_∞ + δ_X(ε) + δ_Y(ε))`, an upper bound on
/// `|OS(X, φ) − OS(Y, φ)|` for every `L`-Lipschitz non-anticipative `φ`
/// when `π` is `ε`-bicausal (checked).
pub fn os_stability_bound(
    x: &FilteredTree,
    y: &FilteredTree,
    pi: &Coupling,
    eps: EpsShift,
    lipschitz: f64,
) -> Result<f64, StoppingError> {
    if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
        return Err(StoppingError::BadParameter(format!("Lipschitz constant must be finite and ≥ 0, got {lipschitz}")));
    }
    pi.check_marginals(x, y)?;
    let c = is_eps_bicausal(x, y, pi, eps)?;
    if !c.holds {
        return Err(StoppingError::NotCausal { what: "ε-bicausal", violation: c.max_violation });
    }
    let dist = expected_sup_distance(x, y, pi);
    Ok(lipschitz * (dist + modulus(x, eps) + modulus(y, eps)))
}

/// `E_π sup_t ‖X_t − Y_t‖`.
pub fn expected_sup_distance(x: &FilteredTree, y: &FilteredTree, pi: &Coupling) -> f64 {
    let mut total = 0.0;
    for a in 0..x.num_leaves() {
        for b in 0..y.num_leaves() {
            let w = pi.get(a, b);
            if w != 0.0 {
                total += w * path_distance(x, a, y, b, PathMetric::Sup);
            }
        }
    }
    total
}

/// `E[X_N | node]` for every node, coordinate `c`.
fn terminal_means(tree: &FilteredTree, c: usize) -> Vec<Vec<f64>> {
    let n = tree.depth();
    (0..=n)
        .map(|i| {
            (0..tree.level_len(i))
                .map(|k| {
                    let m: f64 = tree.leaves_of(i, k).map(|l| tree.leaf_prob(l) * tree.leaf_value(l, n)[c]).sum();
                    m / tree.abs_prob(i, k)
                })
                .collect()
        })
        .collect()
}

/// `max_{i < N} E|E[X_N − X_i | F_i]|`, maximised over coordinates. Zero
/// exactly for martingales.
pub fn martingale_defect(tree: &FilteredTree) -> f64 {
    martingale_defect_levels(tree).into_iter().fold(0.0, f64::max)
}

/// `E|E[X_N − X_i | F_i]|` (maximised over coordinates) for `i = 0..N−1`.
pub fn martingale_defect_levels(tree: &FilteredTree) -> Vec<f64> {
    let n = tree.depth();
    let mut out = vec![0.0f64; n];
    for c in 0..tree.dim() {
        let means = terminal_means(tree, c);
        for (i, slot) in out.iter_mut().enumerate() {
            let e: f64 = (0..tree.level_len(i)).map(|k| tree.abs_prob(i, k) * (means[i][k] - tree.value(i, k)[c]).abs()).sum();
            *slot = slot.max(e);
        }
    }
    out
}

/// The three terms bounding the martingale defect of `X` at one level
/// through a coupling with a second process `Z` (typically a martingale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosednessTerms {
    /// Level `i` of `X` whose defect is bounded.
    pub level: usize,
    /// Level `j = max{l : t_l ≤ t_i + ε}` of `Z` used for the comparison.
    pub shifted_level: usize,
    /// `E_π|E_π[Z_N | Z-node j, X-node i] − Z_j|`; zero when `Z` is a
    /// martingale and `π` is `ε`-causal from `Z` to `X`.
    pub i1: f64,
    /// `E_π[|X_N − Z_N| + |Z_j − X_j|]`.
    pub i2: f64,
    /// `E|X_j − X_i|`.
    pub i3: f64,
}

impl ClosednessTerms {
    pub fn total(&self) -> f64 {
        self.i1 + self.i2 + self.i3
    }
}

/// Per-level bound `E|E[X_N − X_i | F_i]| ≤ I₁ + I₂ + I₃` obtained from
/// `X_N − X_i = (X_N − Z_N) + (Z_N − Z_j) + (Z_j − X_j) + (X_j − X_i)`;
/// valid for every coupling `π` of `X` and `Z`. Returns one entry per level
/// `i < N`, each the maximum over coordinates.
pub fn closedness_bound(
    x: &FilteredTree,
    z: &FilteredTree,
    pi: &Coupling,
    eps: EpsShift,
) -> Result<Vec<ClosednessTerms>, StoppingError> {
    pi.check_marginals(x, z)?;
    if x.grid() != z.grid() {
        return Err(aot_coupling::CouplingError::GridMismatch.into());
    }
    let n = x.depth();
    let (nx, nz) = (x.num_leaves(), z.num_leaves());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let j = eps.target_level(x.grid(), i);
        let mut best = ClosednessTerms { level: i, shifted_level: j, i1: 0.0, i2: 0.0, i3: 0.0 };
        for c in 0..x.dim() {
            // Joint atoms (Z-node j, X-node i): mass and Z_N-moment.
            let zl = z.level_len(j);
            let mut mass = vec![0.0; zl * x.level_len(i)];
            let mut moment = vec![0.0; zl * x.level_len(i)];
            let mut i2 = 0.0;
            for a in 0..nx {
                let xi = x.ancestor(a, i);
                for b in 0..nz {
                    let w = pi.get(a, b);
                    if w == 0.0 {
                        continue;
                    }
                    let key = z.ancestor(b, j) * x.level_len(i) + xi;
                    mass[key] += w;
                    moment[key] += w * z.leaf_value(b, n)[c];
                    i2 += w
                        * ((x.leaf_value(a, n)[c] - z.leaf_value(b, n)[c]).abs()
                            + (z.leaf_value(b, j)[c] - x.leaf_value(a, j)[c]).abs());
                }
            }
            let mut i1 = 0.0;
            for (key, &m) in mass.iter().enumerate() {
                if m > 0.0 {
                    let zj = z.value(j, key / x.level_len(i))[c];
                    i1 += (moment[key] - m * zj).abs();
                }
            }
            let i3: f64 = (0..nx).map(|a| x.leaf_prob(a) * (x.leaf_value(a, j)[c] - x.leaf_value(a, i)[c]).abs()).sum();
            let cand = ClosednessTerms { level: i, shifted_level: j, i1, i2, i3 };
            if cand.total() > best.total() {
                best = cand;
            }
        }
        out.push(best);
    }
    Ok(out)
}

/// Aldous' functional `F(X) = E[max_i (X_i − E[X_N | F_i])²]` on the first
/// coordinate.
pub fn aldous_functional(tree: &FilteredTree) -> f64 {
    let means = terminal_means(tree, 0);
    (0..tree.num_leaves())
        .map(|l| {
            let worst = (0..tree.num_levels())
                .map(|i| {
                    let k = tree.ancestor(l, i);
                    let g = tree.value(i, k)[0] - means[i][k];
                    g * g
                })
                .fold(0.0, f64::max);
            tree.leaf_prob(l) * worst
        })
        .sum()
}
