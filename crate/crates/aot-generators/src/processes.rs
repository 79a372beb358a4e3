//! The example processes: scaled random walks, quantized Brownian motion
//! (also under a deterministic time change), the two-scenario pair with
//! early versus late information, the fast-jump counterexample and a pair
//! of random walks on interleaved grids.

use aot_core::{standard_tree, FilteredTree, NodeSpec, PathLaw, TimeGrid, WeightedPath};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::GeneratorError;

/// Largest number of steps accepted by [`random_walk_tree`].
pub const RANDOM_WALK_CAP: usize = 14;

/// Largest number of leaves of generated Gaussian trees.
pub const LEAF_CAP: usize = 1 << 16;

/// The scaled random walk `Bⁿ_t = n^{-1/2} Σ_{i ≤ ⌊nt⌋} U_i` with fair `±1`
/// steps on the grid `{1/n, …, 1}`, as a full binary tree (the filtration
/// is the coin history).
pub fn random_walk_tree(n: usize) -> Result<FilteredTree, GeneratorError> {
    if n == 0 {
        return Err(GeneratorError::BadParameter("random walk needs at least one step".into()));
    }
    if n > RANDOM_WALK_CAP {
        return Err(GeneratorError::TooLarge { leaves: 2f64.powi(n as i32), cap: 1 << RANDOM_WALK_CAP });
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut levels = vec![vec![NodeSpec::new(None, 1.0, vec![0.0])]];
    // Track the integer partial sum of each node so that values are exact
    // multiples of the scale (symmetric up to sign).
    let mut sums = vec![0i64];
    for _ in 0..n {
        let mut level = Vec::with_capacity(sums.len() * 2);
        let mut next = Vec::with_capacity(sums.len() * 2);
        for (p, &s) in sums.iter().enumerate() {
            for step in [1i64, -1] {
                next.push(s + step);
                level.push(NodeSpec::new(Some(p), 0.5, vec![(s + step) as f64 * scale]));
            }
        }
        levels.push(level);
        sums = next;
    }
    Ok(FilteredTree::new(TimeGrid::uniform(n), 1, levels)?)
}

/// Symmetric `m`-point quantization of `N(0, 1)`: the conditional means of
/// the `m` equiprobable quantile intervals `(a_k, a_{k+1})`,
/// `m (φ(a_k) − φ(a_{k+1}))`, in increasing order.
pub fn gaussian_quantization(m: usize) -> Result<Vec<f64>, GeneratorError> {
    if m == 0 {
        return Err(GeneratorError::BadParameter("quantization needs at least one point".into()));
    }
    let normal = Normal::standard();
    let density = |k: usize| {
        if k == 0 || k == m {
            0.0
        } else {
            normal.pdf(normal.inverse_cdf(k as f64 / m as f64))
        }
    };
    let raw: Vec<f64> = (0..m).map(|k| m as f64 * (density(k) - density(k + 1))).collect();
    // Enforce exact antisymmetry z_k = −z_{m−1−k}.
    Ok((0..m).map(|k| 0.5 * (raw[k] - raw[m - 1 - k])).collect())
}

/// A tree with independent Gaussian increments of the given variances
/// (one per grid step), each quantized to `m` equiprobable points, started
/// at 0.
pub fn gaussian_increment_tree(grid: TimeGrid, variances: &[f64], m: usize) -> Result<FilteredTree, GeneratorError> {
    let n = grid.len();
    if variances.len() != n {
        return Err(GeneratorError::BadParameter(format!("{} variances for {n} steps", variances.len())));
    }
    if let Some(v) = variances.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(GeneratorError::BadParameter(format!("variance {v} is not a finite nonnegative number")));
    }
    let leaves = (m as f64).powi(n as i32);
    if leaves > LEAF_CAP as f64 {
        return Err(GeneratorError::TooLarge { leaves, cap: LEAF_CAP });
    }
    let z = gaussian_quantization(m)?;
    let p = 1.0 / m as f64;
    let mut levels = vec![vec![NodeSpec::new(None, 1.0, vec![0.0])]];
    for var in variances {
        let sd = var.sqrt();
        let prev = levels.last().expect("root level");
        let level: Vec<NodeSpec> = (0..prev.len())
            .flat_map(|parent| {
                let base = prev[parent].value[0];
                z.iter().map(move |&zk| NodeSpec::new(Some(parent), p, vec![base + sd * zk]))
            })
            .collect();
        levels.push(level);
    }
    Ok(FilteredTree::new(grid, 1, levels)?)
}

/// Brownian motion on the uniform grid with `n` steps, increments of
/// variance `1/n` quantized to `m` points.
pub fn quantized_bm_tree(n: usize, m: usize) -> Result<FilteredTree, GeneratorError> {
    if n == 0 {
        return Err(GeneratorError::BadParameter("need at least one step".into()));
    }
    gaussian_increment_tree(TimeGrid::uniform(n), &vec![1.0 / n as f64; n], m)
}

/// The two-scenario pair on the grid `{½, 1}`: `ℙ` moves `1 → 1 → {2, 0}`
/// and learns its branch only at the horizon; `ℙ^e` moves
/// `1 → {1 + e, 1 − e} → {2, 0}` and learns the branch at `½`.
pub fn figure1_pair(e: f64) -> Result<(FilteredTree, FilteredTree), GeneratorError> {
    if !(e > 0.0 && e < 1.0) {
        return Err(GeneratorError::BadParameter(format!("gap must lie in (0, 1), got {e}")));
    }
    let grid = TimeGrid::new(vec![0.5, 1.0])?;
    let p = FilteredTree::new(
        grid.clone(),
        1,
        vec![
            vec![NodeSpec::new(None, 1.0, vec![1.0])],
            vec![NodeSpec::new(Some(0), 1.0, vec![1.0])],
            vec![NodeSpec::new(Some(0), 0.5, vec![2.0]), NodeSpec::new(Some(0), 0.5, vec![0.0])],
        ],
    )?;
    let pe = FilteredTree::new(
        grid,
        1,
        vec![
            vec![NodeSpec::new(None, 1.0, vec![1.0])],
            vec![NodeSpec::new(Some(0), 0.5, vec![1.0 + e]), NodeSpec::new(Some(0), 0.5, vec![1.0 - e])],
            vec![NodeSpec::new(Some(0), 1.0, vec![2.0]), NodeSpec::new(Some(1), 1.0, vec![0.0])],
        ],
    )?;
    Ok((p, pe))
}

/// The fast-jump counterexample on the grid `{k/(m+1) : k = 1..m+1}`.
///
/// The jump slot `U` is uniform on the interior levels `1..m` and the sign
/// `V = ±1` is fair and independent. The limit `X` jumps from 0 to `V` at
/// `U`; `Xⁿ` first jumps to `V/n` at `U` and reaches `V` one grid step
/// later. Both carry their natural filtrations. Returns `(Xⁿ, X)`.
pub fn counterexample_pair(n: usize, m: usize) -> Result<(FilteredTree, FilteredTree), GeneratorError> {
    if n == 0 || m < 2 {
        return Err(GeneratorError::BadParameter(format!("need n ≥ 1 and m ≥ 2, got n = {n}, m = {m}")));
    }
    let grid = TimeGrid::new((1..=m + 1).map(|k| k as f64 / (m + 1) as f64).collect())?;
    let w = 1.0 / (2 * m) as f64;
    let mut fast = Vec::with_capacity(2 * m);
    let mut limit = Vec::with_capacity(2 * m);
    for s in 1..=m {
        for v in [1.0, -1.0] {
            let x: Vec<f64> = (0..=m + 1).map(|l| if l >= s { v } else { 0.0 }).collect();
            let xn: Vec<f64> = (0..=m + 1)
                .map(|l| {
                    if l > s {
                        v
                    } else if l == s {
                        v / n as f64
                    } else {
                        0.0
                    }
                })
                .collect();
            limit.push(WeightedPath { weight: w, values: x });
            fast.push(WeightedPath { weight: w, values: xn });
        }
    }
    let build = |paths: Vec<WeightedPath>| -> Result<FilteredTree, GeneratorError> {
        Ok(standard_tree(&PathLaw { grid: grid.clone(), dim: 1, paths }.canonicalize())?)
    };
    Ok((build(fast)?, build(limit)?))
}

/// A deterministic increasing bijection `φ` of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeChange {
    /// `φ(t) = t`.
    Identity,
    /// Piecewise linear through `(0, 0)`, the given interior knots and
    /// `(1, 1)`.
    Knots(Vec<(f64, f64)>),
    /// `φ(t) = t + s·sin(πt)`, increasing for `|s| < 1/π`.
    Shift(f64),
}

impl TimeChange {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        match self {
            TimeChange::Identity => Ok(()),
            TimeChange::Shift(s) => {
                if s.is_finite() && s.abs() * std::f64::consts::PI < 1.0 {
                    Ok(())
                } else {
                    Err(GeneratorError::BadParameter(format!("shift {s} does not give an increasing time change")))
                }
            }
            TimeChange::Knots(k) => {
                let mut pts = vec![(0.0, 0.0)];
                pts.extend(k.iter().copied());
                pts.push((1.0, 1.0));
                if pts.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                    Ok(())
                } else {
                    Err(GeneratorError::BadParameter("knots must be strictly increasing inside (0, 1)²".into()))
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeChange::Identity => t,
            TimeChange::Shift(s) => t + s * (std::f64::consts::PI * t).sin(),
            TimeChange::Knots(k) => {
                let mut prev = (0.0, 0.0);
                for &pt in k.iter().chain(std::iter::once(&(1.0, 1.0))) {
                    if t <= pt.0 {
                        return prev.1 + (pt.1 - prev.1) * (t - prev.0) / (pt.0 - prev.0);
                    }
                    prev = pt;
                }
                1.0
            }
        }
    }
}

/// Quantized `B_{φ(t)}`: independent Gaussian increments of variance
/// `φ(t_i) − φ(t_{i−1})` on the uniform grid with `n` steps, `m` points per
/// increment.
pub fn time_changed_bm_tree(phi: &TimeChange, n: usize, m: usize) -> Result<FilteredTree, GeneratorError> {
    phi.validate()?;
    if n == 0 {
        return Err(GeneratorError::BadParameter("need at least one step".into()));
    }
    let grid = TimeGrid::uniform(n);
    let var: Vec<f64> = (1..=n).map(|i| phi.eval(grid.time(i)) - phi.eval(grid.time(i - 1))).collect();
    gaussian_increment_tree(grid, &var, m)
}

/// The pair `(B_{φ₁}, B_{φ₂})` of [`time_changed_bm_tree`]s.
pub fn time_changed_bm_pair(
    phi1: &TimeChange,
    phi2: &TimeChange,
    n: usize,
    m: usize,
) -> Result<(FilteredTree, FilteredTree), GeneratorError> {
    Ok((time_changed_bm_tree(phi1, n, m)?, time_changed_bm_tree(phi2, n, m)?))
}

/// Two fair `±1` walks with two steps each on the grid
/// `{¼, ½, ¾, 1}`: `X` moves at `¼` and `¾`, `Y` at `½` and `1`. Values are
/// held between moves and information arrives with the moves.
pub fn offset_grid_pair() -> Result<(FilteredTree, FilteredTree), GeneratorError> {
    let grid = TimeGrid::uniform(4);
    let walk = |moves: [usize; 2]| -> Result<FilteredTree, GeneratorError> {
        let mut paths = Vec::new();
        for a in [1.0, -1.0] {
            for b in [1.0, -1.0] {
                let values = (0..=4)
                    .map(|l| {
                        let mut v = 0.0;
                        if l >= moves[0] {
                            v += a;
                        }
                        if l >= moves[1] {
                            v += b;
                        }
                        v
                    })
                    .collect();
                paths.push(WeightedPath { weight: 0.25, values });
            }
        }
        // The paths carry the move signs, so the natural filtration is
        // the intended one.
        Ok(standard_tree(&PathLaw { grid: grid.clone(), dim: 1, paths }.canonicalize())?)
    };
    Ok((walk([1, 3])?, walk([2, 4])?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_walk_small_cases() {
        let t = random_walk_tree(1).unwrap();
        assert_eq!(t.num_leaves(), 2);
        assert_eq!(t.leaf_value(0, 1), &[1.0]);
        assert_eq!(t.leaf_value(1, 1), &[-1.0]);
        let t = random_walk_tree(2).unwrap();
        let mut terminal: Vec<f64> = (0..4).map(|l| t.leaf_value(l, 2)[0]).collect();
        terminal.sort_by(f64::total_cmp);
        let r = std::f64::consts::SQRT_2;
        assert_eq!(terminal, vec![-2.0 / r, 0.0, 0.0, 2.0 / r]);
        assert!(random_walk_tree(15).is_err());
        assert!(random_walk_tree(0).is_err());
    }

    #[test]
    fn binary_quantization_is_half_normal_mean() {
        let z = gaussian_quantization(2).unwrap();
        let h = (2.0 / std::f64::consts::PI).sqrt();
        assert!((z[0] + h).abs() < 1e-12 && (z[1] - h).abs() < 1e-12);
        let t = quantized_bm_tree(4, 2).unwrap();
        assert!((t.leaf_value(0, 1)[0] + h / 2.0).abs() < 1e-12);
    }

    #[test]
    fn three_point_quantization() {
        // Conditional mean of N(0,1) above its 2/3 quantile is 3 φ(q).
        let z = gaussian_quantization(3).unwrap();
        let q: f64 = 0.430_727_299_295_457_5;
        let expect = 3.0 * (-q * q / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((z[2] - expect).abs() < 1e-9, "{z:?}");
        assert_eq!(z[1], 0.0);
    }

    #[test]
    fn quantization_variance_increases_to_one() {
        let var = |m: usize| gaussian_quantization(m).unwrap().iter().map(|z| z * z).sum::<f64>() / m as f64;
        let vs: Vec<f64> = [2, 3, 5, 9, 17].iter().map(|&m| var(m)).collect();
        assert!(vs.windows(2).all(|w| w[0] < w[1]) && vs[4] < 1.0 && vs[4] > 0.95, "{vs:?}");
    }

    #[test]
    fn figure1_trees() {
        let (p, pe) = figure1_pair(0.1).unwrap();
        assert_eq!(p.level_len(1), 1);
        assert_eq!(pe.level_len(1), 2);
        assert!(figure1_pair(1.0).is_err());
    }

    #[test]
    fn counterexample_structure() {
        let (xn, x) = counterexample_pair(4, 8).unwrap();
        assert_eq!(xn.num_leaves(), 16);
        assert_eq!(x.num_leaves(), 16);
        assert_eq!(x.depth(), 9);
        assert!(xn.validate().is_empty() && x.validate().is_empty());
    }

    #[test]
    fn time_changes() {
        assert!(TimeChange::Shift(0.05).validate().is_ok());
        assert!(TimeChange::Shift(0.4).validate().is_err());
        let k = TimeChange::Knots(vec![(0.5, 0.25)]);
        assert!(k.validate().is_ok());
        assert_eq!(k.eval(0.25), 0.125);
        assert_eq!(k.eval(0.75), 0.625);
        assert!(TimeChange::Knots(vec![(0.5, 1.2)]).validate().is_err());
        let (a, b) = time_changed_bm_pair(&TimeChange::Identity, &TimeChange::Identity, 3, 2).unwrap();
        assert!(a.isomorphic(&b, 0.0));
    }

    #[test]
    fn offset_grids() {
        let (x, y) = offset_grid_pair().unwrap();
        assert_eq!(x.level_len(1), 2);
        assert_eq!(x.level_len(2), 2);
        assert_eq!(y.level_len(1), 1);
        assert_eq!(y.level_len(2), 2);
        assert_eq!(y.level_len(3), 2);
        assert_eq!(y.level_len(4), 4);
    }
}
