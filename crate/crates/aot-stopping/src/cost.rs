//! Non-anticipative cost functions `φ(path prefix, level)`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use aot_core::TimeGrid;

use crate::error::StoppingError;

/// Scalar transformation applied to the first coordinate of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psi {
    /// `ψ(x) = x`.
    Identity,
    /// `ψ(x) = |x|`.
    Abs,
    /// `ψ(x) = (x − K)⁺`.
    Call(f64),
    /// `ψ(x) = (K − x)⁺`.
    Put(f64),
}

impl Psi {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Psi::Identity => x,
            Psi::Abs => x.abs(),
            Psi::Call(k) => (x - k).max(0.0),
            Psi::Put(k) => (k - x).max(0.0),
        }
    }
}

impl fmt::Display for Psi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psi::Identity => write!(f, "identity"),
            Psi::Abs => write!(f, "abs"),
            Psi::Call(k) => write!(f, "call({k})"),
            Psi::Put(k) => write!(f, "put({k})"),
        }
    }
}

impl FromStr for Psi {
    type Err = StoppingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let strike = |body: &str| -> Result<f64, StoppingError> {
            let inner = body
                .strip_prefix('(')
                .and_then(|b| b.strip_suffix(')'))
                .ok_or_else(|| StoppingError::BadParameter(format!("expected a parenthesised strike in `{s}`")))?;
            let k: f64 =
                inner.trim().parse().map_err(|_| StoppingError::BadParameter(format!("bad strike in `{s}`")))?;
            if k.is_finite() {
                Ok(k)
            } else {
                Err(StoppingError::BadParameter(format!("strike must be finite in `{s}`")))
            }
        };
        match s {
            "identity" | "id" => Ok(Psi::Identity),
            "abs" => Ok(Psi::Abs),
            _ if s.starts_with("call") => Ok(Psi::Call(strike(&s[4..])?)),
            _ if s.starts_with("put") => Ok(Psi::Put(strike(&s[3..])?)),
            _ => Err(StoppingError::BadParameter(format!("unknown ψ `{s}` (identity, abs, call(K), put(K))"))),
        }
    }
}

/// User-supplied evaluator: `(flat prefix of (i+1)·d values, d, level i,
/// grid) → cost`. Only the prefix is passed, so non-anticipativity holds
/// by construction.
pub type CostFn = dyn Fn(&[f64], usize, usize, &TimeGrid) -> f64 + Send + Sync;

/// The shape of a cost function.
#[derive(Clone)]
pub enum CostKind {
    /// `ψ(f(t))` may only be collected at the horizon; stopping earlier is
    /// not allowed (cost `+∞`), so every rule yields `E ψ(X₁)`.
    Terminal(Psi),
    /// `ψ(f(t))`.
    State(Psi),
    /// `ψ(max_{s ≤ t} f(s))`.
    RunningMax(Psi),
    /// `f(t) − f(0)`, the gain of the jump example.
    ExampleE1,
    /// Arbitrary non-anticipative evaluator.
    Custom(Arc<CostFn>),
}

impl fmt::Debug for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostKind::Terminal(p) => write!(f, "Terminal({p})"),
            CostKind::State(p) => write!(f, "State({p})"),
            CostKind::RunningMax(p) => write!(f, "RunningMax({p})"),
            CostKind::ExampleE1 => write!(f, "ExampleE1"),
            CostKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// A non-anticipative cost `φ(f, t)` together with its regularity flags.
///
/// A value of `+∞` at a non-terminal node means "stopping is not allowed
/// here"; NaN and `−∞` are errors.
#[derive(Debug, Clone)]
pub struct CostFunction {
    pub kind: CostKind,
    /// Lipschitz constant with respect to the sup norm of paths and to the
    /// oscillation after the stopping time, when known.
    pub lipschitz: Option<f64>,
    /// Whether `φ` is bounded.
    pub bounded: bool,
}

impl CostFunction {
    pub fn terminal(psi: Psi) -> Self {
        CostFunction { kind: CostKind::Terminal(psi), lipschitz: None, bounded: false }
    }

    pub fn state(psi: Psi) -> Self {
        CostFunction { kind: CostKind::State(psi), lipschitz: Some(1.0), bounded: false }
    }

    pub fn running_max(psi: Psi) -> Self {
        CostFunction { kind: CostKind::RunningMax(psi), lipschitz: Some(1.0), bounded: false }
    }

    pub fn example_e1() -> Self {
        CostFunction { kind: CostKind::ExampleE1, lipschitz: Some(2.0), bounded: false }
    }

    pub fn custom(f: Arc<CostFn>, lipschitz: Option<f64>, bounded: bool) -> Self {
        CostFunction { kind: CostKind::Custom(f), lipschitz, bounded }
    }

    /// Evaluates `φ` on a flat prefix of `level + 1` values of dimension `dim`.
    pub fn eval(&self, prefix: &[f64], dim: usize, level: usize, grid: &TimeGrid) -> f64 {
        debug_assert_eq!(prefix.len(), (level + 1) * dim);
        let x0 = |i: usize| prefix[i * dim];
        match &self.kind {
            CostKind::Terminal(psi) => {
                if level == grid.len() {
                    psi.apply(x0(level))
                } else {
                    f64::INFINITY
                }
            }
            CostKind::State(psi) => psi.apply(x0(level)),
            CostKind::RunningMax(psi) => psi.apply((0..=level).map(x0).fold(f64::NEG_INFINITY, f64::max)),
            CostKind::ExampleE1 => x0(level) - x0(0),
            CostKind::Custom(f) => f(prefix, dim, level, grid),
        }
    }

    /// The Lipschitz battery used in the stability tests: `ψ(f(t))` and
    /// `ψ(max_{s≤t} f(s))` for each `ψ` with strikes `0` and `½`.
    pub fn lipschitz_battery() -> Vec<CostFunction> {
        let psis = [Psi::Identity, Psi::Abs, Psi::Call(0.0), Psi::Put(0.0), Psi::Call(0.5), Psi::Put(-0.5)];
        psis.iter().flat_map(|&p| [CostFunction::state(p), CostFunction::running_max(p)]).collect()
    }
}

impl fmt::Display for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            CostKind::Terminal(p) => write!(f, "terminal:{p}"),
            CostKind::State(p) => write!(f, "state:{p}"),
            CostKind::RunningMax(p) => write!(f, "running-max:{p}"),
            CostKind::ExampleE1 => write!(f, "example-E1"),
            CostKind::Custom(_) => write!(f, "custom"),
        }
    }
}

/// Parses `terminal:ψ`, `state:ψ`, `running-max:ψ` or `example-E1`.
impl FromStr for CostFunction {
    type Err = StoppingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("example-e1") {
            return Ok(CostFunction::example_e1());
        }
        let (head, psi) = s
            .split_once(':')
            .ok_or_else(|| StoppingError::BadParameter(format!("cost spec `{s}` must look like `state:identity`")))?;
        let psi: Psi = psi.parse()?;
        match head.trim() {
            "terminal" => Ok(CostFunction::terminal(psi)),
            "state" => Ok(CostFunction::state(psi)),
            "running-max" | "runmax" => Ok(CostFunction::running_max(psi)),
            other => Err(StoppingError::BadParameter(format!(
                "unknown cost family `{other}` (terminal, state, running-max, example-E1)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for s in ["state:identity", "running-max:abs", "terminal:call(1.5)", "state:put(-0.5)", "example-E1"] {
            let c: CostFunction = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert!("state:cube".parse::<CostFunction>().is_err());
        assert!("forward:identity".parse::<CostFunction>().is_err());
        assert!("state:call(x)".parse::<CostFunction>().is_err());
    }

    #[test]
    fn evaluators() {
        let g = TimeGrid::uniform(2);
        let prefix = [0.0, 2.0, -1.0];
        assert_eq!(CostFunction::state(Psi::Identity).eval(&prefix, 1, 2, &g), -1.0);
        assert_eq!(CostFunction::running_max(Psi::Identity).eval(&prefix, 1, 2, &g), 2.0);
        assert_eq!(CostFunction::state(Psi::Put(0.5)).eval(&prefix, 1, 2, &g), 1.5);
        assert_eq!(CostFunction::terminal(Psi::Abs).eval(&prefix[..2], 1, 1, &g), f64::INFINITY);
        assert_eq!(CostFunction::terminal(Psi::Abs).eval(&prefix, 1, 2, &g), 1.0);
        assert_eq!(CostFunction::example_e1().eval(&[1.0, 3.0], 1, 1, &g), 2.0);
    }
}
