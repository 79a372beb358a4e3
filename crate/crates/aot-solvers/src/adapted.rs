use std::time::Instant;

use aot_core::{FilteredTree, TIME_TOL};
use aot_coupling::{
    cost_matrix, is_eps_bicausal, is_eps_causal, reduced_causality_constraints, Coupling, Direction, EpsShift,
};

use crate::error::SolverError;
use crate::lp::{lp_solve_engine, LinearProgram, LpStatus, SparseRow};
use crate::options::SolverOptions;
use crate::report::{Diagnostics, DistanceKind, DistanceReport};
use crate::transport::{align, marginal_rows};

/// Which causality rows enter the LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Causality {
    Both,
    One(Direction),
}

struct Inner {
    /// `inf E_π[d^p]`.
    value: f64,
    coupling: Coupling,
    diag: Diagnostics,
}

fn solve_inner(
    x: &FilteredTree,
    y: &FilteredTree,
    eps: EpsShift,
    causality: Causality,
    cost: &[f64],
    opts: &SolverOptions,
) -> Result<Inner, SolverError> {
    let (nx, ny) = (x.num_leaves(), y.num_leaves());
    let mut rows = marginal_rows(x.leaf_probs(), y.leaf_probs());
    let directions: &[Direction] = match causality {
        Causality::Both => &[Direction::XToY, Direction::YToX],
        Causality::One(Direction::XToY) => &[Direction::XToY],
        Causality::One(Direction::YToX) => &[Direction::YToX],
    };
    let mut constraints = 0;
    for &d in directions {
        for r in reduced_causality_constraints(x, y, eps, d)? {
            rows.push(SparseRow::new(r.entries, 0.0));
            constraints += 1;
        }
    }
    let lp = LinearProgram { num_vars: nx * ny, objective: cost.to_vec(), rows };
    let sol = lp_solve_engine(&lp, &opts.lp, opts.engine)?;
    if sol.status != LpStatus::Optimal {
        return Err(SolverError::Unexpected(format!("{:?}", sol.status)));
    }
    let coupling = Coupling::new(nx, ny, sol.x)?;
    let check = match causality {
        Causality::Both => is_eps_bicausal(x, y, &coupling, eps)?,
        Causality::One(d) => is_eps_causal(x, y, &coupling, eps, d)?,
    };
    let diag = Diagnostics {
        lp_solves: 1,
        lp_iterations: sol.iterations,
        constraints,
        variables: nx * ny,
        witness_violation: check.max_violation,
        runtime_ms: 0.0,
    };
    Ok(Inner { value: sol.value.max(0.0), coupling, diag })
}

fn prepare<'a>(
    x: &'a FilteredTree,
    y: &'a FilteredTree,
    opts: &SolverOptions,
) -> Result<(std::borrow::Cow<'a, FilteredTree>, std::borrow::Cow<'a, FilteredTree>, Vec<f64>), SolverError> {
    opts.check()?;
    let (x, y) = align(x, y)?;
    let pairs = x.num_leaves() * y.num_leaves();
    if pairs > opts.max_lp_pairs {
        return Err(SolverError::TooLarge { pairs, cap: opts.max_lp_pairs });
    }
    let c = cost_matrix(&x, &y, opts.p, opts.metric)?;
    Ok((x, y, c))
}

fn fixed_eps(
    x: &FilteredTree,
    y: &FilteredTree,
    eps: EpsShift,
    causality: Causality,
    kind: DistanceKind,
    opts: &SolverOptions,
) -> Result<DistanceReport, SolverError> {
    let start = Instant::now();
    let (x, y, c) = prepare(x, y, opts)?;
    let inner = solve_inner(&x, &y, eps, causality, &c, opts)?;
    let mut r = DistanceReport::new(kind, opts.p, inner.value.powf(1.0 / opts.p));
    r.epsilon = Some(eps.epsilon);
    if let Causality::One(d) = causality {
        r.direction = Some(d);
    }
    if opts.keep_witness {
        r.coupling = Some(inner.coupling);
    }
    r.diagnostics = inner.diag;
    r.diagnostics.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(r)
}

/// Candidate relaxations: `0` and every forward gap `t_j − t_i` of the grid;
/// the constraint sets only change at these values.
fn candidates(x: &FilteredTree) -> Vec<f64> {
    let mut c = vec![0.0];
    c.extend(x.grid().forward_gaps());
    c.sort_by(f64::total_cmp);
    c.dedup_by(|a, b| (*a - *b).abs() <= TIME_TOL);
    c
}

fn outer(
    x: &FilteredTree,
    y: &FilteredTree,
    causality: Causality,
    kind: DistanceKind,
    opts: &SolverOptions,
) -> Result<DistanceReport, SolverError> {
    let start = Instant::now();
    let (x, y, c) = prepare(x, y, opts)?;
    let mut best: Option<(f64, f64, Coupling)> = None;
    let mut scan = Vec::new();
    let mut diag = Diagnostics::default();
    for eps in candidates(&x) {
        let pen = opts.penalty.apply(eps);
        if best.as_ref().is_some_and(|b| pen >= b.0) {
            break;
        }
        let inner = solve_inner(&x, &y, EpsShift { epsilon: eps }, causality, &c, opts)?;
        diag.absorb(&inner.diag);
        let d = inner.value.powf(1.0 / opts.p);
        scan.push((eps, d));
        if best.as_ref().is_none_or(|b| d + pen < b.0) {
            best = Some((d + pen, eps, inner.coupling));
        }
    }
    let (value, eps, coupling) = best.expect("ε = 0 is always evaluated");
    let mut r = DistanceReport::new(kind, opts.p, value);
    r.epsilon = Some(eps);
    r.eps_scan = scan;
    if let Causality::One(d) = causality {
        r.direction = Some(d);
    }
    if opts.keep_witness {
        r.coupling = Some(coupling);
    }
    diag.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    r.diagnostics = diag;
    Ok(r)
}

/// Inner value `inf{E_π[d^p]^{1/p} : π ε-bicausal}` at a fixed `ε` (no
/// penalty).
pub fn eps_bicausal_lp(x: &FilteredTree, y: &FilteredTree, eps: EpsShift, opts: &SolverOptions) -> Result<DistanceReport, SolverError> {
    fixed_eps(x, y, eps, Causality::Both, DistanceKind::EpsLp, opts)
}

/// Inner value over couplings that are `ε`-causal in `direction` (no
/// penalty).
pub fn eps_causal_lp(
    x: &FilteredTree,
    y: &FilteredTree,
    eps: EpsShift,
    direction: Direction,
    opts: &SolverOptions,
) -> Result<DistanceReport, SolverError> {
    fixed_eps(x, y, eps, Causality::One(direction), DistanceKind::EpsLp, opts)
}

/// Strict adapted distance computed by the global bicausal LP at `ε = 0`
/// (cross-check for [`crate::nested_bicausal`]).
pub fn aw_strict_lp(x: &FilteredTree, y: &FilteredTree, opts: &SolverOptions) -> Result<DistanceReport, SolverError> {
    fixed_eps(x, y, EpsShift::zero(), Causality::Both, DistanceKind::AwStrict, opts)
}

/// Adapted Wasserstein distance
/// `inf_ε (inf{E_π[d^p]^{1/p} : π ε-bicausal} + penalty(ε))`.
pub fn aw(x: &FilteredTree, y: &FilteredTree, opts: &SolverOptions) -> Result<DistanceReport, SolverError> {
    outer(x, y, Causality::Both, DistanceKind::Aw, opts)
}

/// Causal distance from `x` to `y`: like [`aw`] but over couplings that are
/// only `ε`-causal from `x` to `y`.
pub fn cw(x: &FilteredTree, y: &FilteredTree, opts: &SolverOptions) -> Result<DistanceReport, SolverError> {
    outer(x, y, Causality::One(Direction::XToY), DistanceKind::Cw, opts)
}

fn symmetrise(a: DistanceReport, b: DistanceReport, kind: DistanceKind) -> DistanceReport {
    let mut diag = a.diagnostics.clone();
    diag.absorb(&b.diagnostics);
    diag.runtime_ms = a.diagnostics.runtime_ms + b.diagnostics.runtime_ms;
    let mut r = if b.value > a.value { b } else { a };
    r.kind = kind;
    r.diagnostics = diag;
    r
}

/// `max{CW(x, y), CW(y, x)}`; both computed with `x` as the left tree.
pub fn scw(x: &FilteredTree, y: &FilteredTree, opts: &SolverOptions) -> Result<DistanceReport, SolverError> {
    let a = outer(x, y, Causality::One(Direction::XToY), DistanceKind::Cw, opts)?;
    let b = outer(x, y, Causality::One(Direction::YToX), DistanceKind::Cw, opts)?;
    Ok(symmetrise(a, b, DistanceKind::Scw))
}

/// Symmetrised causal distance with the relaxation fixed at `ε = 0`.
pub fn strict_scw(x: &FilteredTree, y: &FilteredTree, opts: &SolverOptions) -> Result<DistanceReport, SolverError> {
    let a = fixed_eps(x, y, EpsShift::zero(), Causality::One(Direction::XToY), DistanceKind::Cw, opts)?;
    let b = fixed_eps(x, y, EpsShift::zero(), Causality::One(Direction::YToX), DistanceKind::Cw, opts)?;
    Ok(symmetrise(a, b, DistanceKind::ScwStrict))
}
