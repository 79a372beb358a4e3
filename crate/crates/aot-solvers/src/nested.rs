use std::time::Instant;

use aot_core::FilteredTree;
use aot_coupling::{Coupling, PathMetric};

use crate::error::SolverError;
use crate::options::SolverOptions;
use crate::report::{Diagnostics, DistanceKind, DistanceReport};
use crate::transport::{align, optimal_transport};

fn node_distance(x: &FilteredTree, v: usize, y: &FilteredTree, w: usize, i: usize) -> f64 {
    x.value(i, v).iter().zip(y.value(i, w)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Strict adapted (nested) distance by backward induction over node pairs.
///
/// For both path metrics the accumulated cost up to level `i` (running
/// maximum, or time-weighted sum) is a function of the node pair, so the
/// state of the recursion is just the pair: the terminal value is the
/// accumulated cost to the power `p`, and the value of a pair is the optimal
/// transport between the children distributions with the children pairs'
/// values as cost. Level 0 is coupled the same way.
pub fn nested_bicausal(x: &FilteredTree, y: &FilteredTree, opts: &SolverOptions) -> Result<DistanceReport, SolverError> {
    opts.check()?;
    let start = Instant::now();
    let (x, y) = align(x, y)?;
    let n = x.depth();
    let pairs: usize = (0..=n).map(|i| x.level_len(i) * y.level_len(i)).sum();
    if pairs > opts.max_dp_pairs {
        return Err(SolverError::TooLarge { pairs, cap: opts.max_dp_pairs });
    }
    let grid = x.grid();
    // Accumulated cost per node pair, level by level.
    let mut acc: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let (nv, nw) = (x.level_len(i), y.level_len(i));
        let mut a = Vec::with_capacity(nv * nw);
        for v in 0..nv {
            for w in 0..nw {
                let d = node_distance(&x, v, &y, w, i);
                let prev = if i == 0 {
                    0.0
                } else {
                    let (pv, pw) = (x.parent(i, v).expect("non-root"), y.parent(i, w).expect("non-root"));
                    acc[i - 1][pv * y.level_len(i - 1) + pw]
                };
                a.push(match opts.metric {
                    PathMetric::Sup => prev.max(d),
                    PathMetric::L1Time => prev + grid.duration(i) * d,
                });
            }
        }
        acc.push(a);
    }
    let mut diag = Diagnostics::default();
    let mut value: Vec<f64> = acc[n].iter().map(|c| c.powf(opts.p)).collect();
    let mut plans: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n];
    for i in (0..n).rev() {
        let (nv, nw) = (x.level_len(i), y.level_len(i));
        let nw1 = y.level_len(i + 1);
        let mut next = Vec::with_capacity(nv * nw);
        let mut level_plans = Vec::with_capacity(if opts.keep_witness { nv * nw } else { 0 });
        for v in 0..nv {
            let cv = x.children(i, v);
            let a: Vec<f64> = cv.clone().map(|c| x.prob(i + 1, c)).collect();
            for w in 0..nw {
                let cw = y.children(i, w);
                let b: Vec<f64> = cw.clone().map(|c| y.prob(i + 1, c)).collect();
                let cost: Vec<f64> =
                    cv.clone().flat_map(|c| cw.clone().map(move |d| (c, d))).map(|(c, d)| value[c * nw1 + d]).collect();
                let (val, plan) = optimal_transport(&a, &b, &cost, &opts.lp, &mut diag)?;
                next.push(val);
                if opts.keep_witness {
                    level_plans.push(plan);
                }
            }
        }
        value = next;
        plans[i] = level_plans;
    }
    let (root_val, root_plan) = optimal_transport(x.abs_probs(0), y.abs_probs(0), &value, &opts.lp, &mut diag)?;
    let mut r = DistanceReport::new(DistanceKind::AwStrict, opts.p, root_val.max(0.0).powf(1.0 / opts.p));
    r.epsilon = Some(0.0);
    if opts.keep_witness {
        let mut mass = root_plan;
        for (i, level_plans) in plans.iter().enumerate() {
            let nw = y.level_len(i);
            let nw1 = y.level_len(i + 1);
            let mut next = vec![0.0; x.level_len(i + 1) * nw1];
            for (pair, &m) in mass.iter().enumerate() {
                if m <= 0.0 {
                    continue;
                }
                let (v, w) = (pair / nw, pair % nw);
                let (cv, cw) = (x.children(i, v), y.children(i, w));
                let k = cw.len();
                for (idx, &q) in level_plans[pair].iter().enumerate() {
                    let (c, d) = (cv.start + idx / k, cw.start + idx % k);
                    next[c * nw1 + d] += m * q;
                }
            }
            mass = next;
        }
        r.coupling = Some(Coupling::new(x.num_leaves(), y.num_leaves(), mass)?);
    }
    diag.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    r.diagnostics = diag;
    Ok(r)
}
