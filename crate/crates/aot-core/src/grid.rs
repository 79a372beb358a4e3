use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::TIME_TOL;

/// A finite time grid `T = {t_1 < … < t_N = 1} ⊂ (0, 1]`.
///
/// The root time `t_0 = 0` is not a member of the grid but is addressable as
/// level 0 through [`TimeGrid::time`]. Level `i` stands for the interval
/// `[t_i, t_{i+1})`, level `N` for the single time `1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = CoreError;
    fn try_from(times: Vec<f64>) -> Result<Self, CoreError> {
        TimeGrid::new(times)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(g: TimeGrid) -> Vec<f64> {
        g.times
    }
}

impl TimeGrid {
    /// Builds a grid, checking that times are strictly increasing, lie in
    /// `(0, 1]` and end at `1`.
    pub fn new(times: Vec<f64>) -> Result<Self, CoreError> {
        if times.is_empty() {
            return Err(CoreError::InvalidGrid("grid is empty".into()));
        }
        if times.iter().any(|t| !t.is_finite() || *t <= 0.0 || *t > 1.0) {
            return Err(CoreError::InvalidGrid("times must lie in (0, 1]".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::InvalidGrid("times must be strictly increasing".into()));
        }
        if (times[times.len() - 1] - 1.0).abs() > TIME_TOL {
            return Err(CoreError::InvalidGrid("last time must equal 1".into()));
        }
        let mut times = times;
        let last = times.len() - 1;
        times[last] = 1.0;
        Ok(TimeGrid { times })
    }

    /// The uniform grid `{1/n, 2/n, …, 1}`.
    pub fn uniform(n: usize) -> Self {
        assert!(n >= 1, "uniform grid needs at least one step");
        let times = (1..=n).map(|k| if k == n { 1.0 } else { k as f64 / n as f64 }).collect();
        TimeGrid { times }
    }

    /// Number of grid times `N` (the tree has `N + 1` levels).
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// Always false: a grid contains at least the time 1.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// The grid times `t_1, …, t_N`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Time of level `i` (`t_0 = 0`).
    pub fn time(&self, level: usize) -> f64 {
        if level == 0 {
            0.0
        } else {
            self.times[level - 1]
        }
    }

    /// Length of the interval `[t_i, t_{i+1})` attached to level `i`
    /// (zero for the terminal level).
    pub fn duration(&self, level: usize) -> f64 {
        if level >= self.len() {
            0.0
        } else {
            self.time(level + 1) - self.time(level)
        }
    }

    /// Largest gap between consecutive times, including `t_1 − 0`.
    pub fn mesh(&self) -> f64 {
        (0..self.len()).map(|i| self.duration(i)).fold(0.0, f64::max)
    }

    /// The level whose interval contains `t`: `max{i : t_i ≤ t}`, saturating
    /// at `N` for `t ≥ 1` (paths are frozen after the horizon).
    pub fn level_at(&self, t: f64) -> usize {
        // times are sorted; count members t_i ≤ t (up to tolerance).
        self.times.partition_point(|&s| s <= t + TIME_TOL)
    }

    /// The upper rounding `⌈t⌉_T = min{s ∈ T : s > t}` returned as a level
    /// index; for `t ≥ 1` the terminal level is returned.
    pub fn ceil_level(&self, t: f64) -> usize {
        let idx = self.times.partition_point(|&s| s <= t + TIME_TOL);
        (idx + 1).min(self.len())
    }

    /// Level index of an exact grid member (or `0` for time `0`).
    pub fn level_of(&self, t: f64) -> Option<usize> {
        if t.abs() <= TIME_TOL {
            return Some(0);
        }
        self.times.iter().position(|&s| (s - t).abs() <= TIME_TOL).map(|i| i + 1)
    }

    /// True when every time of `self` is a time of `other`.
    pub fn is_subset_of(&self, other: &TimeGrid) -> bool {
        self.times.iter().all(|&t| other.level_of(t).is_some())
    }

    /// The common refinement `self ∪ other`.
    pub fn union(&self, other: &TimeGrid) -> TimeGrid {
        let mut all: Vec<f64> = self.times.iter().chain(other.times.iter()).copied().collect();
        all.sort_by(f64::total_cmp);
        all.dedup_by(|a, b| (*a - *b).abs() <= TIME_TOL);
        TimeGrid { times: all }
    }

    /// All distinct positive forward shifts `t_j − t_i` (`0 ≤ i < j ≤ N`),
    /// sorted ascending. These are exactly the values of `ε` at which the
    /// map `i ↦ level_at(t_i + ε)` changes.
    pub fn forward_gaps(&self) -> Vec<f64> {
        let n = self.len();
        let mut gaps = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in (i + 1)..=n {
                gaps.push(self.time(j) - self.time(i));
            }
        }
        gaps.sort_by(f64::total_cmp);
        gaps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        gaps
    }
}
