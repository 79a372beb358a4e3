use std::borrow::Cow;
use std::time::Instant;

use aot_core::{refine_to_grid, FilteredTree};
use aot_coupling::{cost_matrix, Coupling, CouplingError};

use crate::error::SolverError;
use crate::lp::{lp_solve_with, LinearProgram, LpOptions, LpStatus, SparseRow};
use crate::options::SolverOptions;
use crate::report::{Diagnostics, DistanceKind, DistanceReport};

/// Brings two trees onto a common grid (the union of their grids), extending
/// paths and filtrations as step functions. Borrowed when already aligned.
pub fn align<'a>(
    x: &'a FilteredTree,
    y: &'a FilteredTree,
) -> Result<(Cow<'a, FilteredTree>, Cow<'a, FilteredTree>), SolverError> {
    if x.dim() != y.dim() {
        return Err(CouplingError::DimMismatch(x.dim(), y.dim()).into());
    }
    if x.grid() == y.grid() {
        return Ok((Cow::Borrowed(x), Cow::Borrowed(y)));
    }
    let g = x.grid().union(y.grid());
    let rx = if x.grid() == &g { Cow::Borrowed(x) } else { Cow::Owned(refine_to_grid(x, &g)?) };
    let ry = if y.grid() == &g { Cow::Borrowed(y) } else { Cow::Owned(refine_to_grid(y, &g)?) };
    Ok((rx, ry))
}

/// Marginal rows of a transport problem with `a.len() × b.len()` variables
/// (the last column row is omitted: it is implied by the others).
pub(crate) fn marginal_rows(a: &[f64], b: &[f64]) -> Vec<SparseRow> {
    let (n, m) = (a.len(), b.len());
    let mut rows = Vec::with_capacity(n + m);
    for (i, &ai) in a.iter().enumerate() {
        rows.push(SparseRow::new((0..m).map(|j| (i * m + j, 1.0)).collect(), ai));
    }
    for (j, &bj) in b.iter().enumerate().take(m.saturating_sub(1)) {
        rows.push(SparseRow::new((0..n).map(|i| (i * m + j, 1.0)).collect(), bj));
    }
    rows
}

/// Optimal value and plan of a discrete transport problem
/// `min Σ c_ij π_ij` over couplings of `a` and `b`.
pub fn optimal_transport(
    a: &[f64],
    b: &[f64],
    cost: &[f64],
    opts: &LpOptions,
    diag: &mut Diagnostics,
) -> Result<(f64, Vec<f64>), SolverError> {
    let (n, m) = (a.len(), b.len());
    if n == 1 || m == 1 {
        let plan: Vec<f64> = if n == 1 { b.to_vec() } else { a.to_vec() };
        let v = plan.iter().zip(cost).map(|(p, c)| p * c).sum();
        return Ok((v, plan));
    }
    let lp = LinearProgram { num_vars: n * m, objective: cost.to_vec(), rows: marginal_rows(a, b) };
    let sol = lp_solve_with(&lp, opts)?;
    diag.lp_solves += 1;
    diag.lp_iterations += sol.iterations;
    diag.variables = diag.variables.max(n * m);
    match sol.status {
        LpStatus::Optimal => Ok((sol.value, sol.x)),
        s => Err(SolverError::Unexpected(format!("{s:?}"))),
    }
}

/// `W_p` between the laws of `x` and `y`.
pub fn wasserstein(x: &FilteredTree, y: &FilteredTree, opts: &SolverOptions) -> Result<DistanceReport, SolverError> {
    opts.check()?;
    let start = Instant::now();
    let (x, y) = align(x, y)?;
    let pairs = x.num_leaves() * y.num_leaves();
    if pairs > opts.max_lp_pairs {
        return Err(SolverError::TooLarge { pairs, cap: opts.max_lp_pairs });
    }
    let c = cost_matrix(&x, &y, opts.p, opts.metric)?;
    let mut diag = Diagnostics::default();
    let (v, plan) = optimal_transport(x.leaf_probs(), y.leaf_probs(), &c, &opts.lp, &mut diag)?;
    let mut r = DistanceReport::new(DistanceKind::W, opts.p, v.max(0.0).powf(1.0 / opts.p));
    if opts.keep_witness {
        r.coupling = Some(Coupling::new(x.num_leaves(), y.num_leaves(), plan)?);
    }
    diag.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    r.diagnostics = diag;
    Ok(r)
}
