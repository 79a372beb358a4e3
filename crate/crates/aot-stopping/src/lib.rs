//! Optimal stopping on finite filtered processes.
//!
//! * [`snell_os`] computes `OS(X, φ) = inf_τ E φ(X, τ)` by backward induction
//!   over the nodes of a [`FilteredTree`](aot_core::FilteredTree);
//!   [`brute_force_os`] enumerates every stopping time as a cross-check.
//! * [`transfer_family`] moves a stopping time of `Y` to a family of
//!   stopping times of `X` along an `ε`-causal coupling.
//! * [`modulus`] is the modulus of continuity `δ_X(ε)`, itself an optimal
//!   stopping value.
//! * [`os_stability_bound`], [`martingale_defect`], [`closedness_bound`] and
//!   [`aldous_functional`] quantify the stability of stopping problems and
//!   of the martingale property under adapted convergence.

pub mod cost;
pub mod error;
pub mod modulus;
pub mod randomize;
pub mod snell;
pub mod stability;
pub mod transfer;

pub use cost::{CostFn, CostFunction, CostKind, Psi};
pub use error::StoppingError;
pub use modulus::{modulus, modulus_brute_force, modulus_steps, oscillation_rewards, window_end};
pub use randomize::with_uniform_randomization;
pub use snell::{
    brute_force_os, count_stopping_times, enumerate_costs, expected_cost, expected_on_costs, node_costs, snell_on_costs,
    snell_os, SnellResult, StoppingRule, Variant, BRUTE_FORCE_CAP,
};
pub use stability::{
    aldous_functional, closedness_bound, expected_sup_distance, martingale_defect, martingale_defect_levels,
    os_stability_bound, ClosednessTerms,
};
pub use transfer::{
    os_from_transfer, shifted_cost, transfer_family, transfer_integral, transfer_stopping_time, Plateau, TransferFamily,
};
