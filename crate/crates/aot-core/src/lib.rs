//! Finite filtered processes on time grids.
//!
//! A filtered process with finitely many scenarios is represented as a
//! [`FilteredTree`]: level `i` of the tree is the information partition
//! available at grid time `t_i` (with `t_0 = 0`), every node carries the value
//! of the process on that atom, and edges carry transition probabilities.
//! Sample paths are càdlàg and piecewise constant: the path of a leaf takes
//! the value of its level-`i` ancestor on `[t_i, t_{i+1})` and the terminal
//! value at `t = 1`.
//!
//! The crate provides
//! - [`TimeGrid`]: grids, `mesh`, the upper rounding `⌈t⌉_T` and level lookup;
//! - [`TreeSpec`] / [`FilteredTree`]: raw and validated trees (JSON I/O);
//! - [`PathLaw`]: the law of the path process;
//! - prediction-process labels, Hoover–Keisler minimisation and the natural
//!   filtration check ([`prediction`]);
//! - path discretisation and filtration re-timing ([`discretize`]).

mod discretize;
mod error;
mod grid;
mod law;
pub mod prediction;
mod tree;

pub use discretize::{coarsen_filtration, discretize_path, refine_to_grid, retime};
pub use error::CoreError;
pub use grid::TimeGrid;
pub use law::{law, natural_version, standard_tree, standard_tree_with_index, PathLaw, WeightedPath};
pub use prediction::{hk_minimize, is_naturally_filtered, prediction_labels, stable_labels, Labels};
pub use tree::{FilteredTree, NodeSpec, TreeSpec};

/// Tolerance for probability bookkeeping (sums of transition probabilities).
pub const PROB_TOL: f64 = 1e-12;

/// Tolerance used when comparing grid times.
pub const TIME_TOL: f64 = 1e-12;
