//! Dense two-phase primal simplex for `min cᵀx  s.t.  Ax = b, x ≥ 0`.
//!
//! The tableau is kept explicitly (row-major). Phase 1 starts from an
//! all-artificial basis; artificial columns are never stored because an
//! artificial that leaves the basis can never re-enter. Artificials still
//! basic at level zero after phase 1 are pivoted out, or their row is
//! dropped as redundant (transport-type constraint systems always contain
//! redundant rows).
//!
//! Pricing is Dantzig's largest-coefficient rule with smallest-index
//! tie-breaking; after a run of degenerate pivots the solver switches to
//! Bland's rule (smallest improving index, smallest basic index in the
//! ratio test), which cannot cycle, and returns to Dantzig after the first
//! strictly improving pivot.

use serde::Serialize;
use thiserror::Error;

/// One sparse equality row `Σ coef·x_col = rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseRow {
    pub entries: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl SparseRow {
    /// Row with the given entries and right-hand side.
    pub fn new(entries: Vec<(usize, f64)>, rhs: f64) -> Self {
        SparseRow { entries, rhs }
    }

    /// Evaluates `Σ coef·x_col − rhs`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(j, a)| a * x[j]).sum::<f64>() - self.rhs
    }
}

/// A linear program in standard equality form with `x ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<SparseRow>,
}

/// Termination status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`lp_solve`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value (meaningful only when optimal).
    pub value: f64,
    /// Primal solution (meaningful only when optimal).
    pub x: Vec<f64>,
    /// Number of simplex pivots over both phases.
    pub iterations: usize,
    /// Maximum absolute equality residual of `x`.
    pub residual: f64,
    /// Number of rows dropped as redundant.
    pub dropped_rows: usize,
}

/// Solver failures that are not a property of the LP itself.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed LP: {0}")]
    Malformed(String),
    #[error("numerical failure in phase {phase}: pivot ({row}, {col}) = {value:e}; {detail}")]
    Numerical { phase: u8, row: usize, col: usize, value: f64, detail: String },
    #[error("iteration limit {0} exceeded")]
    IterationLimit(usize),
}

/// Tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: f64,
    /// Reduced-cost optimality tolerance.
    pub opt_tol: f64,
    /// Phase-1 infeasibility tolerance (on the sum of artificials).
    pub feas_tol: f64,
    /// Maximum tolerated final equality residual before refinement fails.
    pub residual_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_switch: usize,
    /// Hard pivot limit.
    pub max_iterations: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            pivot_tol: 1e-9,
            opt_tol: 1e-11,
            feas_tol: 1e-9,
            residual_tol: 1e-10,
            degenerate_switch: 50,
            max_iterations: 1_000_000,
        }
    }
}

/// Solves the LP with default options.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp_solve_with(lp, &LpOptions::default())
}

struct Tableau {
    m: usize,
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    /// Basic variable of each row; values `≥ n` denote the artificial of
    /// row `value − n`.
    basis: Vec<usize>,
    d: Vec<f64>,
    obj: f64,
    iterations: usize,
    scratch: Vec<usize>,
    /// Original LP row of each tableau row.
    row_id: Vec<usize>,
}

impl Tableau {
    fn row(&self, r: usize) -> &[f64] {
        &self.a[r * self.n..(r + 1) * self.n]
    }

    /// Bland order on basic variables: artificials first (they must leave),
    /// then structural variables by index.
    fn bland_key(&self, var: usize) -> (u8, usize) {
        if var >= self.n {
            (0, var - self.n)
        } else {
            (1, var)
        }
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let n = self.n;
        let piv = self.a[p * n + q];
        {
            let row = &mut self.a[p * n..(p + 1) * n];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[q] = 1.0;
        }
        self.b[p] /= piv;
        self.scratch.clear();
        for j in 0..n {
            if self.a[p * n + j] != 0.0 {
                self.scratch.push(j);
            }
        }
        let bp = self.b[p];
        let (before, rest) = self.a.split_at_mut(p * n);
        let (prow, after) = rest.split_at_mut(n);
        let nz = &self.scratch;
        let update = |row: &mut [f64], rhs: &mut f64| {
            let f = row[q];
            if f == 0.0 {
                return;
            }
            for &j in nz {
                let v = row[j] - f * prow[j];
                row[j] = if v.abs() < 1e-15 { 0.0 } else { v };
            }
            row[q] = 0.0;
            *rhs -= f * bp;
            if rhs.abs() < 1e-15 {
                *rhs = 0.0;
            }
        };
        for (r, row) in before.chunks_mut(n).enumerate() {
            update(row, &mut self.b[r]);
        }
        for (r, row) in after.chunks_mut(n).enumerate() {
            update(row, &mut self.b[p + 1 + r]);
        }
        let f = self.d[q];
        if f != 0.0 {
            for &j in nz {
                self.d[j] -= f * prow[j];
            }
            self.d[q] = 0.0;
            self.obj -= f * bp;
        }
        self.basis[p] = q;
        self.iterations += 1;
    }

    fn choose_entering(&self, bland: bool, tol: f64) -> Option<usize> {
        if bland {
            return (0..self.n).find(|&j| self.d[j] < -tol);
        }
        let mut best = None;
        let mut best_val = -tol;
        for j in 0..self.n {
            if self.d[j] < best_val {
                best_val = self.d[j];
                best = Some(j);
            }
        }
        best
    }

    fn choose_leaving(&self, q: usize, tol: f64, bland: bool) -> Option<usize> {
        let mut min_ratio = f64::INFINITY;
        for r in 0..self.m {
            let a = self.a[r * self.n + q];
            if a > tol {
                min_ratio = min_ratio.min(self.b[r] / a);
            }
        }
        if !min_ratio.is_finite() {
            return None;
        }
        let slack = 1e-12 * (1.0 + min_ratio.abs());
        let mut best: Option<usize> = None;
        for r in 0..self.m {
            let a = self.a[r * self.n + q];
            if a > tol && self.b[r] / a <= min_ratio + slack {
                let better = match best {
                    None => true,
                    Some(br) if bland => self.bland_key(self.basis[r]) < self.bland_key(self.basis[br]),
                    Some(br) => {
                        let ab = self.a[br * self.n + q];
                        a > ab || (a == ab && self.bland_key(self.basis[r]) < self.bland_key(self.basis[br]))
                    }
                };
                if better {
                    best = Some(r);
                }
            }
        }
        best
    }

    /// Runs simplex iterations on the current reduced-cost row.
    /// Returns `false` if unbounded.
    fn run(&mut self, opts: &LpOptions, phase: u8) -> Result<bool, LpError> {
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= opts.max_iterations {
                return Err(LpError::IterationLimit(opts.max_iterations));
            }
            // Once switched on, Bland's rule stays on for the rest of the
            // phase, which guarantees termination.
            bland |= degenerate >= opts.degenerate_switch;
            let q = match self.choose_entering(bland, opts.opt_tol) {
                Some(q) => q,
                None => return Ok(true),
            };
            let p = match self.choose_leaving(q, opts.pivot_tol, bland) {
                Some(p) => p,
                None => {
                    if phase == 1 {
                        // Cannot happen: phase 1 is bounded below by 0.
                        return Err(LpError::Numerical {
                            phase,
                            row: usize::MAX,
                            col: q,
                            value: self.d[q],
                            detail: "unbounded direction in phase 1".into(),
                        });
                    }
                    return Ok(false);
                }
            };
            let piv = self.a[p * self.n + q];
            if !piv.is_finite() {
                return Err(LpError::Numerical { phase, row: p, col: q, value: piv, detail: "non-finite pivot".into() });
            }
            if self.b[p] <= 1e-14 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(p, q);
        }
    }

    fn remove_row(&mut self, r: usize) {
        let n = self.n;
        self.a.drain(r * n..(r + 1) * n);
        self.b.remove(r);
        self.basis.remove(r);
        self.row_id.remove(r);
        self.m -= 1;
    }
}

/// Solves `lp` with explicit options.
pub fn lp_solve_with(lp: &LinearProgram, opts: &LpOptions) -> Result<LpSolution, LpError> {
    let n = lp.num_vars;
    if lp.objective.len() != n {
        return Err(LpError::Malformed(format!("objective has {} entries for {} variables", lp.objective.len(), n)));
    }
    let m = lp.rows.len();
    let mut a = vec![0.0; m * n];
    let mut b = vec![0.0; m];
    for (r, row) in lp.rows.iter().enumerate() {
        if !row.rhs.is_finite() {
            return Err(LpError::Malformed(format!("row {r} has non-finite right-hand side")));
        }
        let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
        for &(j, v) in &row.entries {
            if j >= n {
                return Err(LpError::Malformed(format!("row {r} references variable {j} >= {n}")));
            }
            if !v.is_finite() {
                return Err(LpError::Malformed(format!("row {r} has a non-finite coefficient")));
            }
            a[r * n + j] += sign * v;
        }
        b[r] = sign * row.rhs;
    }
    let mut t = Tableau {
        m,
        n,
        a,
        b,
        basis: (0..m).map(|r| n + r).collect(),
        d: vec![0.0; n],
        obj: 0.0,
        iterations: 0,
        scratch: Vec::with_capacity(n),
        row_id: (0..m).collect(),
    };
    // Phase 1: minimise the sum of artificials; d_j = −Σ_r a_rj.
    for r in 0..m {
        let row = &t.a[r * n..(r + 1) * n];
        for (dj, &v) in t.d.iter_mut().zip(row) {
            *dj -= v;
        }
        t.obj -= t.b[r];
    }
    t.run(opts, 1)?;
    let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
    if -t.obj > opts.feas_tol * scale {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            value: f64::NAN,
            x: vec![0.0; n],
            iterations: t.iterations,
            residual: f64::NAN,
            dropped_rows: 0,
        });
    }
    // Drive remaining artificials out of the basis or drop their rows.
    let mut dropped = 0;
    let mut r = 0;
    while r < t.m {
        if t.basis[r] >= n {
            let row = t.row(r);
            let mut best = None;
            let mut best_abs = opts.pivot_tol;
            for (j, &v) in row.iter().enumerate() {
                if v.abs() > best_abs {
                    best_abs = v.abs();
                    best = Some(j);
                }
            }
            match best {
                Some(q) => {
                    t.pivot(r, q);
                    r += 1;
                }
                None => {
                    t.remove_row(r);
                    dropped += 1;
                }
            }
        } else {
            r += 1;
        }
    }
    // Phase 2 reduced costs.
    let c = &lp.objective;
    t.d.copy_from_slice(c);
    t.obj = 0.0;
    for r in 0..t.m {
        let cb = c[t.basis[r]];
        if cb != 0.0 {
            let row = &t.a[r * n..(r + 1) * n];
            for (dj, &v) in t.d.iter_mut().zip(row) {
                *dj -= cb * v;
            }
            t.obj -= cb * t.b[r];
        }
    }
    for r in 0..t.m {
        t.d[t.basis[r]] = 0.0;
    }
    if !t.run(opts, 2)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            value: f64::NEG_INFINITY,
            x: vec![0.0; n],
            iterations: t.iterations,
            residual: f64::NAN,
            dropped_rows: dropped,
        });
    }
    let mut x = vec![0.0; n];
    for r in 0..t.m {
        x[t.basis[r]] = t.b[r].max(0.0);
    }
    let mut residual = max_residual(lp, &x);
    if residual > opts.residual_tol {
        if let Some(refined) = refine_basic_solution(lp, &t.basis, &t.row_id) {
            let res2 = max_residual(lp, &refined);
            if res2 < residual {
                x = refined;
                residual = res2;
            }
        }
        if residual > opts.residual_tol {
            return Err(LpError::Numerical {
                phase: 2,
                row: usize::MAX,
                col: usize::MAX,
                value: residual,
                detail: "final equality residual above tolerance".into(),
            });
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { status: LpStatus::Optimal, value, x, iterations: t.iterations, residual, dropped_rows: dropped })
}

fn max_residual(lp: &LinearProgram, x: &[f64]) -> f64 {
    lp.rows.iter().map(|r| r.residual(x).abs()).fold(0.0, f64::max)
}

/// Recomputes the basic solution from the original data: solves the square
/// system formed by the kept rows and the basic columns (LU with partial
/// pivoting plus one step of iterative refinement). Used only when
/// accumulated rounding in the tableau exceeds the residual tolerance.
fn refine_basic_solution(lp: &LinearProgram, basis: &[usize], row_id: &[usize]) -> Option<Vec<f64>> {
    let k = basis.len();
    let mut col_of = vec![usize::MAX; lp.num_vars];
    for (i, &j) in basis.iter().enumerate() {
        col_of[j] = i;
    }
    let mut mat = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for (i, &r) in row_id.iter().enumerate() {
        for &(j, v) in &lp.rows[r].entries {
            if col_of[j] != usize::MAX {
                mat[i * k + col_of[j]] += v;
            }
        }
        rhs[i] = lp.rows[r].rhs;
    }
    let lu = Lu::factor(mat, k)?;
    let mut y = lu.solve(&rhs);
    // One step of iterative refinement against the original rows.
    let mut res = rhs.clone();
    for (i, &r) in row_id.iter().enumerate() {
        for &(j, v) in &lp.rows[r].entries {
            if col_of[j] != usize::MAX {
                res[i] -= v * y[col_of[j]];
            }
        }
    }
    for (yi, d) in y.iter_mut().zip(lu.solve(&res)) {
        *yi += d;
    }
    let mut x = vec![0.0; lp.num_vars];
    for (i, &j) in basis.iter().enumerate() {
        x[j] = y[i].max(0.0);
    }
    Some(x)
}

struct Lu {
    k: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Vec<f64>, k: usize) -> Option<Lu> {
        let mut perm: Vec<usize> = (0..k).collect();
        for col in 0..k {
            let piv = (col..k).max_by(|&x, &y| a[x * k + col].abs().total_cmp(&a[y * k + col].abs()))?;
            if a[piv * k + col].abs() < 1e-13 {
                return None;
            }
            if piv != col {
                for j in 0..k {
                    a.swap(piv * k + j, col * k + j);
                }
                perm.swap(piv, col);
            }
            let d = a[col * k + col];
            for r in (col + 1)..k {
                let f = a[r * k + col] / d;
                a[r * k + col] = f;
                if f != 0.0 {
                    for j in (col + 1)..k {
                        a[r * k + j] -= f * a[col * k + j];
                    }
                }
            }
        }
        Some(Lu { k, a, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..k {
            let s: f64 = (0..i).map(|j| self.a[i * k + j] * y[j]).sum();
            y[i] -= s;
        }
        for i in (0..k).rev() {
            let s: f64 = ((i + 1)..k).map(|j| self.a[i * k + j] * y[j]).sum();
            y[i] = (y[i] - s) / self.a[i * k + i];
        }
        y
    }
}

/// Which simplex implementation [`lp_solve_engine`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LpEngine {
    /// Sparse revised simplex with LU factorisation (the `microlp` crate),
    /// followed by a basic-solution polish against the original rows.
    #[default]
    Sparse,
    /// The dense tableau simplex of this module.
    Dense,
}

/// Solves `lp` with the chosen engine.
pub fn lp_solve_engine(lp: &LinearProgram, opts: &LpOptions, engine: LpEngine) -> Result<LpSolution, LpError> {
    match engine {
        LpEngine::Dense => lp_solve_with(lp, opts),
        LpEngine::Sparse => lp_solve_sparse(lp, opts),
    }
}

fn lp_solve_sparse(lp: &LinearProgram, opts: &LpOptions) -> Result<LpSolution, LpError> {
    use microlp::{ComparisonOp, Error, OptimizationDirection, Problem};
    let n = lp.num_vars;
    if lp.objective.len() != n {
        return Err(LpError::Malformed(format!("objective has {} entries for {} variables", lp.objective.len(), n)));
    }
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = lp.objective.iter().map(|&c| problem.add_var(c, (0.0, f64::INFINITY))).collect();
    for (r, row) in lp.rows.iter().enumerate() {
        if row.entries.iter().any(|&(j, v)| j >= n || !v.is_finite()) || !row.rhs.is_finite() {
            return Err(LpError::Malformed(format!("row {r} is malformed")));
        }
        let expr: Vec<_> = row.entries.iter().map(|&(j, v)| (vars[j], v)).collect();
        problem.add_constraint(expr.as_slice(), ComparisonOp::Eq, row.rhs);
    }
    let failed = |status| LpSolution {
        status,
        value: f64::NAN,
        x: vec![0.0; n],
        iterations: 0,
        residual: f64::NAN,
        dropped_rows: 0,
    };
    let outcome = match problem.solve() {
        Ok(o) => o,
        Err(Error::Infeasible) => return Ok(failed(LpStatus::Infeasible)),
        Err(Error::Unbounded) => return Ok(failed(LpStatus::Unbounded)),
        Err(e) => {
            return Err(LpError::Numerical { phase: 2, row: usize::MAX, col: usize::MAX, value: f64::NAN, detail: e.to_string() })
        }
    };
    let iterations = outcome.stats().lp_iterations as usize;
    let sol = outcome.into_solution().map_err(|_| LpError::IterationLimit(0))?;
    let mut x: Vec<f64> = vars.iter().map(|&v| sol.var_value_raw(v).max(0.0)).collect();
    let mut residual = max_residual(lp, &x);
    if residual > opts.residual_tol {
        if let Some(p) = polish(lp, &x) {
            let r2 = max_residual(lp, &p);
            if r2 < residual {
                x = p;
                residual = r2;
            }
        }
    }
    if residual > opts.residual_tol {
        return Err(LpError::Numerical {
            phase: 2,
            row: usize::MAX,
            col: usize::MAX,
            value: residual,
            detail: "final equality residual above tolerance".into(),
        });
    }
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { status: LpStatus::Optimal, value, x, iterations, residual, dropped_rows: 0 })
}

/// Recomputes a vertex solution from its support: selects independent rows
/// by Gaussian elimination with row pivoting on the support columns and
/// solves the resulting square system. `None` when the support columns are
/// dependent (not a vertex) or the recomputed values are clearly negative.
fn polish(lp: &LinearProgram, x: &[f64]) -> Option<Vec<f64>> {
    let support: Vec<usize> = (0..lp.num_vars).filter(|&j| x[j] > 1e-12).collect();
    let k = support.len();
    let m = lp.rows.len();
    let mut col_of = vec![usize::MAX; lp.num_vars];
    for (i, &j) in support.iter().enumerate() {
        col_of[j] = i;
    }
    let mut mat = vec![0.0; m * k];
    for (r, row) in lp.rows.iter().enumerate() {
        for &(j, v) in &row.entries {
            if col_of[j] != usize::MAX {
                mat[r * k + col_of[j]] += v;
            }
        }
    }
    // Row selection by elimination on a scratch copy.
    let mut work = mat.clone();
    let mut free: Vec<bool> = vec![true; m];
    let mut chosen = Vec::with_capacity(k);
    for c in 0..k {
        let (best, val) = (0..m).filter(|&r| free[r]).map(|r| (r, work[r * k + c].abs())).max_by(|a, b| a.1.total_cmp(&b.1))?;
        if val < 1e-10 {
            return None;
        }
        free[best] = false;
        chosen.push(best);
        let piv = work[best * k + c];
        let prow: Vec<f64> = work[best * k..(best + 1) * k].to_vec();
        for r in 0..m {
            if free[r] {
                let f = work[r * k + c] / piv;
                if f != 0.0 {
                    for j in c..k {
                        work[r * k + j] -= f * prow[j];
                    }
                }
            }
        }
    }
    let square: Vec<f64> = chosen.iter().flat_map(|&r| mat[r * k..(r + 1) * k].iter().copied()).collect();
    let rhs: Vec<f64> = chosen.iter().map(|&r| lp.rows[r].rhs).collect();
    let lu = Lu::factor(square, k)?;
    let mut y = lu.solve(&rhs);
    let mut res = rhs.clone();
    for (i, &r) in chosen.iter().enumerate() {
        for c in 0..k {
            res[i] -= mat[r * k + c] * y[c];
        }
    }
    for (yi, d) in y.iter_mut().zip(lu.solve(&res)) {
        *yi += d;
    }
    if y.iter().any(|&v| v < -1e-9) {
        return None;
    }
    let mut out = vec![0.0; lp.num_vars];
    for (i, &j) in support.iter().enumerate() {
        out[j] = y[i].max(0.0);
    }
    Some(out)
}
