//! Monte-Carlo estimators of coupling costs between Brownian motion and
//! its discretisations.
//!
//! Samples are split into shards of [`SHARD_SIZE`]; shard `i` draws from a
//! ChaCha8 stream seeded with `seed + i·2³²`, and shard sums are merged in
//! shard order, so results depend only on `(parameters, samples, seed)` and
//! not on the number of worker threads.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::factorial::ln_binomial;

use crate::error::GeneratorError;
use crate::expr::Expr;

/// Samples per shard.
pub const SHARD_SIZE: usize = 1000;

/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation divided by `√samples`.
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Runs `f` once per sample on sharded, deterministically seeded streams.
pub fn run_sharded<F>(samples: usize, seed: u64, f: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let shards = samples.div_ceil(SHARD_SIZE);
    let parts: Vec<(f64, f64)> = (0..shards)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((i as u64) << 32));
            let count = SHARD_SIZE.min(samples - i * SHARD_SIZE);
            let (mut s, mut q) = (0.0, 0.0);
            for _ in 0..count {
                let v = f(&mut rng);
                s += v;
                q += v * v;
            }
            (s, q)
        })
        .collect();
    let (s, q) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = if samples > 0 { s / n } else { f64::NAN };
    let var = if samples > 1 { ((q - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    McEstimate { mean, std_error: (var / n).sqrt(), samples, seed }
}

fn open01(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(Open01)
}

/// Inverse CDF of the hypergeometric law (`draws` out of a population of
/// `total` with `good` successes) at `u ∈ (0, 1)`.
fn hypergeometric_quantile(total: u64, good: u64, draws: u64, u: f64) -> u64 {
    let kmin = (draws + good).saturating_sub(total);
    let kmax = draws.min(good);
    if kmin == kmax {
        return kmin;
    }
    let (n, k, d) = (total as f64, good as f64, draws as f64);
    let mean = d * k / n;
    let sd = (d * (k / n) * ((n - k) / n) * ((n - d) / (n - 1.0).max(1.0))).sqrt();
    // The mass below `start` is below e^{-400}.
    let start = ((mean - 30.0 * sd - 1.0).floor().max(kmin as f64) as u64).max(kmin);
    let log_p = |j: u64| ln_binomial(good, j) + ln_binomial(total - good, draws - j) - ln_binomial(total, draws);
    let mut p = log_p(start).exp();
    let mut cdf = p;
    let mut j = start;
    while cdf < u && j < kmax {
        p *= ((good - j) as f64 * (draws - j) as f64) / ((j + 1) as f64 * (total + j + 1 - good - draws) as f64);
        j += 1;
        cdf += p;
    }
    j
}

/// CDF table of `Binomial(r, ½)`.
fn binomial_cdf(r: u64) -> Vec<f64> {
    let mut acc = 0.0;
    (0..=r)
        .map(|k| {
            acc += (ln_binomial(r, k) - r as f64 * std::f64::consts::LN_2).exp();
            acc
        })
        .collect()
}

fn check_block(n: usize, eps: f64) -> Result<(usize, usize), GeneratorError> {
    if n == 0 || !(eps > 0.0 && eps <= 1.0) {
        return Err(GeneratorError::BadParameter(format!("need n ≥ 1 and ε ∈ (0, 1], got n = {n}, ε = {eps}")));
    }
    let blocks = (1.0 / eps).round() as usize;
    if ((blocks as f64) * eps - 1.0).abs() > 1e-9 || !n.is_multiple_of(blocks) {
        return Err(GeneratorError::BadParameter(format!(
            "1/ε must be an integer dividing n (n = {n}, ε = {eps})"
        )));
    }
    Ok((blocks, n / blocks))
}

/// One draw of `sup_t |B_t − Bⁿ_t|` under the block coupling; `cdf` is the
/// `Binomial(r, ½)` table of the block length `r`.
fn donsker_sample(rng: &mut ChaCha8Rng, n: usize, blocks: usize, r: usize, cdf: &[f64], normal: &Normal) -> f64 {
    let dt = 1.0 / n as f64;
    let scale = dt.sqrt();
    let mut ups = vec![0u64; n + 1]; // ups[k] = number of up-steps among the first k
    let mut b = vec![0.0f64; n + 1];
    let mut stack: Vec<(usize, usize)> = Vec::with_capacity(64);
    for blk in 0..blocks {
        let (lo, hi) = (blk * r, (blk + 1) * r);
        // Block terminal values, comonotone in a common uniform.
        let u = open01(rng);
        let h = cdf.partition_point(|&c| c < u).min(r) as u64;
        ups[hi] = ups[lo] + h;
        b[hi] = b[lo] + (r as f64 * dt).sqrt() * normal.inverse_cdf(u);
        // Dyadic refinement: ups in the left half given the total are
        // hypergeometric; the Brownian midpoint given the endpoints is
        // Gaussian. Both use the same uniform.
        stack.push((lo, hi));
        while let Some((a, c)) = stack.pop() {
            if c - a < 2 {
                continue;
            }
            let m = a + (c - a) / 2;
            let total_ups = ups[c] - ups[a];
            let u = open01(rng);
            let left = hypergeometric_quantile((c - a) as u64, total_ups, (m - a) as u64, u);
            ups[m] = ups[a] + left;
            let (t1, t2) = ((m - a) as f64 * dt, (c - m) as f64 * dt);
            let mean = b[a] + (b[c] - b[a]) * t1 / (t1 + t2);
            b[m] = mean + (t1 * t2 / (t1 + t2)).sqrt() * normal.inverse_cdf(u);
            stack.push((a, m));
            stack.push((m, c));
        }
    }
    // Between grid points Bⁿ is constant while B is a Brownian bridge; its
    // running maximum and minimum over each step are drawn exactly (from
    // their marginal laws).
    let mut worst = 0.0f64;
    for k in 0..n {
        let c = (2.0 * ups[k] as f64 - k as f64) * scale;
        let (a, e) = (b[k], b[k + 1]);
        let d2 = (e - a) * (e - a);
        let hi = 0.5 * (a + e + (d2 - 2.0 * dt * open01(rng).ln()).sqrt());
        let lo = 0.5 * (a + e - (d2 - 2.0 * dt * open01(rng).ln()).sqrt());
        worst = worst.max(hi - c).max(c - lo);
    }
    let c = (2.0 * ups[n] as f64 - n as f64) * scale;
    worst.max((b[n] - c).abs())
}

/// Monte-Carlo estimate of `E sup_{t ∈ [0,1]} |B_t − Bⁿ_t|` under the
/// pasted block coupling of Brownian motion `B` and the scaled random walk
/// `Bⁿ`.
///
/// `[0, 1]` is cut into `1/ε` independent blocks of `εn` steps. Inside a
/// block the walk and the Brownian motion are coupled by a dyadic quantile
/// scheme: the block increments are comonotone, then recursively the number
/// of up-steps in the left half (hypergeometric given the total) and the
/// Brownian midpoint (Gaussian given the endpoints) are comonotone. Only the
/// future of the current block is used, so the coupling is `ε`-bicausal and
/// `ε + estimate` bounds the adapted distance from above.
pub fn rw_bm_block_coupling_cost(n: usize, eps: f64, samples: usize, seed: u64) -> Result<McEstimate, GeneratorError> {
    let (blocks, r) = check_block(n, eps)?;
    let cdf = binomial_cdf(r as u64);
    let normal = Normal::standard();
    Ok(run_sharded(samples, seed, |rng| donsker_sample(rng, n, blocks, r, &cdf, &normal)))
}

/// Parameters of [`euler_pair_cost`].
#[derive(Debug, Clone, PartialEq)]
pub struct EulerConfig {
    pub mu: Expr,
    pub sigma: Expr,
    pub x0: f64,
    /// Reference steps per coarse step.
    pub fine_factor: usize,
}

impl EulerConfig {
    pub fn new(mu: Expr, sigma: Expr, x0: f64) -> Self {
        EulerConfig { mu, sigma, x0, fine_factor: 64 }
    }
}

fn euler_sample(rng: &mut ChaCha8Rng, cfg: &EulerConfig, n: usize) -> f64 {
    let f = cfg.fine_factor;
    let m = n * f;
    let dt = 1.0 / m as f64;
    let sdt = dt.sqrt();
    let coarse_dt = 1.0 / n as f64;
    let (mut x, mut xn) = (cfg.x0, cfg.x0);
    let mut worst = 0.0f64;
    for j in 0..n {
        let s = j as f64 * coarse_dt;
        let (drift, vol) = (cfg.mu.eval(s, xn), cfg.sigma.eval(s, xn));
        let mut dw = 0.0;
        for k in 0..f {
            let t = (j * f + k) as f64 * dt;
            let z: f64 = rng.sample(StandardNormal);
            let inc = sdt * z;
            x += cfg.mu.eval(t, x) * dt + cfg.sigma.eval(t, x) * inc;
            dw += inc;
            if k + 1 < f {
                worst = worst.max((x - xn).abs());
            }
        }
        xn += drift * coarse_dt + vol * dw;
        worst = worst.max((x - xn).abs());
    }
    worst
}

/// Monte-Carlo estimate of `E sup_t |X_t − Xⁿ_t|` where `X` is the Euler
/// scheme with `n · fine_factor` steps (the reference solution) and `Xⁿ`
/// the Euler scheme with `n` steps driven by the same Brownian increments,
/// embedded as a step function.
pub fn euler_pair_cost(cfg: &EulerConfig, n: usize, samples: usize, seed: u64) -> Result<McEstimate, GeneratorError> {
    if n == 0 || cfg.fine_factor == 0 {
        return Err(GeneratorError::BadParameter("need n ≥ 1 and fine_factor ≥ 1".into()));
    }
    if !cfg.x0.is_finite() {
        return Err(GeneratorError::BadParameter("x0 must be finite".into()));
    }
    for (name, e) in [("mu", &cfg.mu), ("sigma", &cfg.sigma)] {
        for (t, x) in [(0.0, cfg.x0), (0.5, cfg.x0), (1.0, cfg.x0)] {
            if !e.eval(t, x).is_finite() {
                return Err(GeneratorError::Expression(format!("{name} = `{e}` is not finite at t = {t}, x = {x}")));
            }
        }
    }
    Ok(run_sharded(samples, seed, |rng| euler_sample(rng, cfg, n)))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Smallest `C` with `estimate ≤ C · ln(n) / √(n ε)` for all rows
/// `(n, ε, estimate)`.
pub fn fit_block_constant(rows: &[(usize, f64, f64)]) -> f64 {
    rows.iter().map(|&(n, eps, v)| v * (n as f64 * eps).sqrt() / (n as f64).ln()).fold(0.0, f64::max)
}
