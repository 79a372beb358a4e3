//! Example filtered processes and Monte-Carlo coupling estimators.
//!
//! * [`processes`]: scaled random walks, quantized Brownian motion (also
//!   under deterministic time changes), the two-scenario pair with early
//!   versus late information, the fast-jump counterexample and random walks
//!   on interleaved grids.
//! * [`mc`]: estimators of `E sup_t |B_t − Bⁿ_t|` under a block coupling of
//!   Brownian motion and the random walk, and of the Euler scheme error
//!   under the synchronous coupling, with the coefficient language of
//!   [`expr`].
//! * [`random`]: random trees for property tests.

pub mod error;
pub mod expr;
pub mod mc;
pub mod processes;
pub mod random;

pub use error::GeneratorError;
pub use expr::Expr;
pub use mc::{
    euler_pair_cost, fit_block_constant, loglog_slope, run_sharded, rw_bm_block_coupling_cost, EulerConfig, McEstimate,
    SHARD_SIZE,
};
pub use processes::{
    counterexample_pair, figure1_pair, gaussian_increment_tree, gaussian_quantization, offset_grid_pair,
    quantized_bm_tree, random_walk_tree, time_changed_bm_pair, time_changed_bm_tree, TimeChange, LEAF_CAP,
    RANDOM_WALK_CAP,
};
pub use random::{random_martingale_tree, random_simplex, random_tree, RandomTreeConfig};
