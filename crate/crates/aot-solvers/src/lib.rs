//! Distances between finite filtered processes.
//!
//! * [`wasserstein`] — `W_p` of the laws;
//! * [`eps_bicausal_lp`], [`eps_causal_lp`] — inner transport problems over
//!   `ε`-bicausal / `ε`-causal couplings at fixed `ε`;
//! * [`aw`], [`cw`], [`scw`], [`strict_scw`] — adapted, causal and
//!   symmetrised causal distances with the outer minimisation over `ε`
//!   (penalised additively by default, see [`Penalty`]);
//! * [`nested_bicausal`] — the strict (`ε = 0`) adapted distance by backward
//!   induction, cross-checked by [`aw_strict_lp`];
//! * [`hellwig`] — Hellwig's information metric.
//!
//! The coupling linear programs are solved by a sparse revised simplex and
//! polished to a basic solution of the original equations; small transport
//! subproblems use the dense simplex in [`lp`] (see [`LpEngine`]). Trees on different grids are first re-gridded
//! onto the union of their grids ([`align`]).

mod adapted;
mod error;
mod hellwig;
pub mod lp;
mod nested;
mod options;
mod report;
mod transport;

pub use adapted::{aw, aw_strict_lp, cw, eps_bicausal_lp, eps_causal_lp, scw, strict_scw};
pub use error::SolverError;
pub use hellwig::hellwig;
pub use nested::nested_bicausal;
pub use lp::{LpEngine, LpOptions};
pub use options::{Penalty, SolverOptions};
pub use report::{Diagnostics, DistanceKind, DistanceReport};
pub use transport::{align, optimal_transport, wasserstein};

use aot_core::FilteredTree;

/// Computes the distance of the given kind (`EpsLp` is evaluated at `ε = 0`).
pub fn distance(kind: DistanceKind, x: &FilteredTree, y: &FilteredTree, opts: &SolverOptions) -> Result<DistanceReport, SolverError> {
    match kind {
        DistanceKind::W => wasserstein(x, y, opts),
        DistanceKind::Cw => cw(x, y, opts),
        DistanceKind::Scw => scw(x, y, opts),
        DistanceKind::ScwStrict => strict_scw(x, y, opts),
        DistanceKind::Aw => aw(x, y, opts),
        DistanceKind::AwStrict => nested_bicausal(x, y, opts),
        DistanceKind::EpsLp => eps_bicausal_lp(x, y, aot_coupling::EpsShift::zero(), opts),
        DistanceKind::Hellwig => hellwig(x, y, opts),
    }
}
