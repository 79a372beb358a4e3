use std::time::Instant;

use aot_core::FilteredTree;
use aot_coupling::path_distance;

use crate::error::SolverError;
use crate::options::SolverOptions;
use crate::report::{Diagnostics, DistanceKind, DistanceReport};
use crate::transport::{align, optimal_transport};

/// Truncated `W_1` distance between the conditional path laws of node
/// `(i, v)` of `x` and node `(i, w)` of `y`, with ground metric `d ∧ 1`.
fn conditional_distance(
    x: &FilteredTree,
    v: usize,
    y: &FilteredTree,
    w: usize,
    i: usize,
    opts: &SolverOptions,
    diag: &mut Diagnostics,
) -> Result<f64, SolverError> {
    let (lv, lw) = (x.leaves_of(i, v), y.leaves_of(i, w));
    let (pv, pw) = (x.abs_prob(i, v), y.abs_prob(i, w));
    let a: Vec<f64> = lv.clone().map(|l| x.leaf_prob(l) / pv).collect();
    let b: Vec<f64> = lw.clone().map(|l| y.leaf_prob(l) / pw).collect();
    let cost: Vec<f64> = lv
        .flat_map(|l| lw.clone().map(move |m| (l, m)))
        .map(|(l, m)| path_distance(x, l, y, m, opts.metric).min(1.0))
        .collect();
    Ok(optimal_transport(&a, &b, &cost, &opts.lp, diag)?.0.min(1.0))
}

/// Hellwig's information metric
/// `∫_0^1 d_w(L(pp¹_t(X)), L(pp¹_t(Y))) dt + d_w(L(pp¹_1(X)), L(pp¹_1(Y)))`,
/// where `pp¹_t` is the conditional law of the whole path given the
/// information at `t` and `d_w` is `W_1` over such laws with ground metric
/// the truncated `W_1` between path laws (itself over the truncated path
/// metric). On a grid the integrand is constant on `[t_i, t_{i+1})`.
pub fn hellwig(x: &FilteredTree, y: &FilteredTree, opts: &SolverOptions) -> Result<DistanceReport, SolverError> {
    let start = Instant::now();
    let (x, y) = align(x, y)?;
    let grid = x.grid();
    let n = x.depth();
    let mut diag = Diagnostics::default();
    let mut per_level = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let (nv, nw) = (x.level_len(i), y.level_len(i));
        let mut ground = Vec::with_capacity(nv * nw);
        for v in 0..nv {
            for w in 0..nw {
                ground.push(conditional_distance(&x, v, &y, w, i, opts, &mut diag)?);
            }
        }
        let (d, _) = optimal_transport(x.abs_probs(i), y.abs_probs(i), &ground, &opts.lp, &mut diag)?;
        per_level.push(d.max(0.0));
    }
    let integral: f64 = (0..n).map(|i| (grid.time(i + 1) - grid.time(i)) * per_level[i]).sum();
    let mut r = DistanceReport::new(DistanceKind::Hellwig, 1.0, integral + per_level[n]);
    diag.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    r.diagnostics = diag;
    Ok(r)
}
