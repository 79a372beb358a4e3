//! Transfer of stopping times across `ε`-causal couplings.
//!
//! Given a coupling `π` of `X` and `Y` that is `ε`-causal from `X` to `Y`
//! and a stopping time `τ` of `Y`, the family
//! `σ_u = inf{t : π(τ + ε ≤ t | X) ≥ u} ∧ 1`, `u ∈ [0, 1]`, consists of
//! stopping times of `X` with `∫₀¹ E φ(X, σ_u) du = E_π φ(X, τ + ε)`.
//!
//! On a tree, `τ + ε` falls into the grid interval of level
//! `L(y) = max{l : t_l ≤ t_τ(y) + ε}` (saturated at `N`), and `σ_u` stops at
//! node `v` of level `j` as soon as `G_v(j) = π(L ≤ j | v) ≥ u`. The
//! `u`-integral is a finite sum over the plateaus between the distinct
//! values of `G`.

use aot_core::FilteredTree;
use aot_coupling::{is_eps_causal, Coupling, Direction, EpsShift};
use serde::Serialize;

use crate::cost::CostFunction;
use crate::error::StoppingError;
use crate::snell::{expected_on_costs, node_costs, StoppingRule, Variant};

/// Values of `G` closer than this are merged into one breakpoint.
const BREAK_TOL: f64 = 1e-14;

/// One plateau `(lo, hi]` of the transferred family, on which `σ_u` is
/// constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plateau {
    pub lo: f64,
    pub hi: f64,
    pub rule: StoppingRule,
}

/// The transferred family `(σ_u)_{u ∈ (0, 1]}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferFamily {
    /// `G_v(j) = π(L ≤ j | X-node v)` for every node `v` of level `j`.
    pub node_cdf: Vec<Vec<f64>>,
    /// Plateaus covering `(0, 1]` in increasing order.
    pub plateaus: Vec<Plateau>,
    /// Causality residual of `π` (from `X` to `Y` at `ε`).
    pub causality_violation: f64,
}

fn shifted_levels(y: &FilteredTree, tau: &StoppingRule, eps: EpsShift) -> Vec<usize> {
    tau.stop_levels(y).into_iter().map(|j| eps.target_level(y.grid(), j)).collect()
}

fn check(x: &FilteredTree, y: &FilteredTree, pi: &Coupling, eps: EpsShift) -> Result<f64, StoppingError> {
    pi.check_marginals(x, y)?;
    let c = is_eps_causal(x, y, pi, eps, Direction::XToY)?;
    if !c.holds {
        return Err(StoppingError::NotCausal { what: "ε-causal from X to Y", violation: c.max_violation });
    }
    Ok(c.max_violation)
}

fn node_cdf(x: &FilteredTree, pi: &Coupling, shifted: &[usize]) -> Vec<Vec<f64>> {
    let n = x.depth();
    (0..=n)
        .map(|j| {
            (0..x.level_len(j))
                .map(|k| {
                    let mut hit = 0.0;
                    for leaf in x.leaves_of(j, k) {
                        for (yl, &l) in shifted.iter().enumerate() {
                            if l <= j {
                                hit += pi.get(leaf, yl);
                            }
                        }
                    }
                    if j == n {
                        1.0
                    } else {
                        (hit / x.abs_prob(j, k)).min(1.0)
                    }
                })
                .collect()
        })
        .collect()
}

fn rule_at(x: &FilteredTree, cdf: &[Vec<f64>], u: f64) -> StoppingRule {
    let stop = cdf.iter().map(|level| level.iter().map(|&g| g >= u).collect()).collect();
    StoppingRule::new(x, stop).expect("terminal cdf is one")
}

/// The transferred family of stopping times; `π` must be `ε`-causal from
/// `X` to `Y` (checked) and `τ` a stopping rule on `Y`.
pub fn transfer_family(
    x: &FilteredTree,
    y: &FilteredTree,
    pi: &Coupling,
    eps: EpsShift,
    tau: &StoppingRule,
) -> Result<TransferFamily, StoppingError> {
    let causality_violation = check(x, y, pi, eps)?;
    StoppingRule::new(y, tau.decisions().to_vec())?;
    let cdf = node_cdf(x, pi, &shifted_levels(y, tau, eps));
    let mut breaks: Vec<f64> = cdf.iter().flatten().copied().filter(|&g| g > BREAK_TOL).collect();
    breaks.push(1.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= BREAK_TOL);
    let mut plateaus = Vec::with_capacity(breaks.len());
    let mut lo = 0.0;
    for &hi in &breaks {
        plateaus.push(Plateau { lo, hi, rule: rule_at(x, &cdf, hi) });
        lo = hi;
    }
    Ok(TransferFamily { node_cdf: cdf, plateaus, causality_violation })
}

/// The single transferred stopping time `σ_u` for `u ∈ [0, 1]`. As in the
/// defining formula, `σ_0 = 0`; this null set does not affect the
/// `u`-integral.
pub fn transfer_stopping_time(
    x: &FilteredTree,
    y: &FilteredTree,
    pi: &Coupling,
    eps: EpsShift,
    tau: &StoppingRule,
    u: f64,
) -> Result<StoppingRule, StoppingError> {
    if !(0.0..=1.0).contains(&u) {
        return Err(StoppingError::BadParameter(format!("u must lie in [0, 1], got {u}")));
    }
    check(x, y, pi, eps)?;
    StoppingRule::new(y, tau.decisions().to_vec())?;
    let cdf = node_cdf(x, pi, &shifted_levels(y, tau, eps));
    Ok(rule_at(x, &cdf, u))
}

/// `∫₀¹ E φ(X, σ_u) du`, summed over the plateaus of the family.
pub fn transfer_integral(x: &FilteredTree, family: &TransferFamily, phi: &CostFunction) -> Result<f64, StoppingError> {
    let costs = node_costs(x, phi, Variant::Inf)?;
    Ok(family.plateaus.iter().map(|p| (p.hi - p.lo) * expected_on_costs(x, &p.rule, &costs)).sum())
}

/// `E_π φ(X, τ + ε)`, the right-hand side of the transfer identity.
pub fn shifted_cost(
    x: &FilteredTree,
    y: &FilteredTree,
    pi: &Coupling,
    eps: EpsShift,
    tau: &StoppingRule,
    phi: &CostFunction,
) -> Result<f64, StoppingError> {
    pi.check_marginals(x, y)?;
    let costs = node_costs(x, phi, Variant::Inf)?;
    let shifted = shifted_levels(y, tau, eps);
    let mut total = 0.0;
    for xl in 0..x.num_leaves() {
        for (yl, &l) in shifted.iter().enumerate() {
            let w = pi.get(xl, yl);
            if w != 0.0 {
                total += w * costs[l][x.ancestor(xl, l)];
            }
        }
    }
    Ok(total)
}

/// The best member of the transferred family,
/// `min_u E φ(X, σ_u) ≤ E_π φ(X, τ + ε)`.
pub fn os_from_transfer(
    x: &FilteredTree,
    y: &FilteredTree,
    pi: &Coupling,
    eps: EpsShift,
    tau: &StoppingRule,
    phi: &CostFunction,
) -> Result<f64, StoppingError> {
    let family = transfer_family(x, y, pi, eps, tau)?;
    let costs = node_costs(x, phi, Variant::Inf)?;
    Ok(family.plateaus.iter().map(|p| expected_on_costs(x, &p.rule, &costs)).fold(f64::INFINITY, f64::min))
}
