//! The generator mini-language.
//!
//! A tree argument is either a generator spec `name:params` or the path of
//! a JSON tree file:
//!
//! | spec | tree |
//! |------|------|
//! | `rw:n=8` | scaled random walk with 8 steps |
//! | `bm:n=6,m=3` | Brownian motion, 6 steps, 3-point increments |
//! | `fig1:P`, `fig1:Pe(0.1)` | the two-scenario pair |
//! | `counterexample:n=4,m=8` | fast-jump process `Xⁿ` |
//! | `counterexample-limit:m=8` | its limit `X` |
//! | `tcbm:phi=shift(0.05),n=3,m=2` | time-changed Brownian motion |
//! | `offset:X`, `offset:Y` | random walks on interleaved grids |
//!
//! Time changes: `identity`, `shift(s)` (`t + s·sin(πt)`) and
//! `knots(t1:v1|t2:v2|…)` (piecewise linear).

use std::collections::BTreeMap;

use aot_core::FilteredTree;
use aot_generators::{
    counterexample_pair, figure1_pair, offset_grid_pair, quantized_bm_tree, random_walk_tree, time_changed_bm_tree,
    TimeChange,
};

use crate::error::CliError;

const GENERATORS: [&str; 7] = ["rw", "bm", "fig1", "counterexample", "counterexample-limit", "tcbm", "offset"];

/// Parsed `key=value` and bare parameters of a spec.
struct Params<'a> {
    spec: &'a str,
    keyed: BTreeMap<&'a str, &'a str>,
    bare: Vec<&'a str>,
}

impl<'a> Params<'a> {
    fn parse(spec: &'a str, body: &'a str) -> Self {
        let mut keyed = BTreeMap::new();
        let mut bare = Vec::new();
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                Some((k, v)) => {
                    keyed.insert(k.trim(), v.trim());
                }
                None => bare.push(part),
            }
        }
        Params { spec, keyed, bare }
    }

    fn usize(&self, key: &str, default: Option<usize>) -> Result<usize, CliError> {
        match self.keyed.get(key) {
            Some(v) => v.parse().map_err(|_| CliError::invalid(format!("`{key}` in `{}` must be an integer", self.spec))),
            None => default.ok_or_else(|| CliError::invalid(format!("`{}` needs `{key}=…`", self.spec))),
        }
    }
}

/// Parses a time change `identity`, `shift(s)` or `knots(t:v|…)`.
pub fn parse_time_change(s: &str) -> Result<TimeChange, CliError> {
    let s = s.trim();
    let inner = |prefix: &str| s.strip_prefix(prefix).and_then(|r| r.strip_prefix('(')).and_then(|r| r.strip_suffix(')'));
    let number = |v: &str| v.trim().parse::<f64>().map_err(|_| CliError::invalid(format!("bad number `{v}` in `{s}`")));
    let tc = if s == "identity" {
        TimeChange::Identity
    } else if let Some(v) = inner("shift") {
        TimeChange::Shift(number(v)?)
    } else if let Some(v) = inner("knots") {
        let knots = v
            .split('|')
            .map(|kv| {
                let (a, b) = kv.split_once(':').ok_or_else(|| CliError::invalid(format!("knot `{kv}` must be `t:v`")))?;
                Ok((number(a)?, number(b)?))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        TimeChange::Knots(knots)
    } else {
        return Err(CliError::invalid(format!("unknown time change `{s}` (identity, shift(s), knots(t:v|…))")));
    };
    tc.validate()?;
    Ok(tc)
}

/// `true` when `arg` names a generator rather than a file.
pub fn is_generator_spec(arg: &str) -> bool {
    arg.split_once(':').is_some_and(|(name, _)| GENERATORS.contains(&name.trim()))
}

/// Builds the tree described by a generator spec or loads a JSON tree file.
pub fn parse_tree(arg: &str) -> Result<FilteredTree, CliError> {
    let Some((name, body)) = arg.split_once(':').filter(|(n, _)| GENERATORS.contains(&n.trim())) else {
        let text = std::fs::read_to_string(arg).map_err(|e| CliError::Io(format!("{arg}: {e}")))?;
        return Ok(FilteredTree::from_json(&text)?);
    };
    let p = Params::parse(arg, body);
    match name.trim() {
        "rw" => Ok(random_walk_tree(p.usize("n", None)?)?),
        "bm" => Ok(quantized_bm_tree(p.usize("n", None)?, p.usize("m", Some(2))?)?),
        "fig1" => {
            let which = body.trim();
            if which == "P" {
                Ok(figure1_pair(0.5)?.0)
            } else if let Some(e) = which.strip_prefix("Pe(").and_then(|r| r.strip_suffix(')')) {
                let e: f64 = e.trim().parse().map_err(|_| CliError::invalid(format!("bad gap in `{arg}`")))?;
                Ok(figure1_pair(e)?.1)
            } else {
                Err(CliError::invalid(format!("`{arg}`: expected fig1:P or fig1:Pe(e)")))
            }
        }
        "counterexample" => Ok(counterexample_pair(p.usize("n", None)?, p.usize("m", Some(8))?)?.0),
        "counterexample-limit" => Ok(counterexample_pair(1, p.usize("m", Some(8))?)?.1),
        "tcbm" => {
            let phi = parse_time_change(p.keyed.get("phi").copied().unwrap_or("identity"))?;
            Ok(time_changed_bm_tree(&phi, p.usize("n", Some(3))?, p.usize("m", Some(2))?)?)
        }
        "offset" => {
            let (x, y) = offset_grid_pair()?;
            match p.bare.first().copied() {
                Some("X") => Ok(x),
                Some("Y") => Ok(y),
                _ => Err(CliError::invalid(format!("`{arg}`: expected offset:X or offset:Y"))),
            }
        }
        _ => unreachable!("name checked against the generator list"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_specs() {
        assert_eq!(parse_tree("rw:n=3").unwrap().num_leaves(), 8);
        assert_eq!(parse_tree("bm:n=2,m=3").unwrap().num_leaves(), 9);
        assert_eq!(parse_tree("fig1:P").unwrap().level_len(1), 1);
        assert_eq!(parse_tree("fig1:Pe(0.1)").unwrap().level_len(1), 2);
        assert_eq!(parse_tree("counterexample:n=4,m=8").unwrap().num_leaves(), 16);
        assert_eq!(parse_tree("counterexample-limit:m=4").unwrap().depth(), 5);
        assert_eq!(parse_tree("tcbm:phi=shift(0.05),n=2,m=2").unwrap().num_leaves(), 4);
        assert_eq!(parse_tree("tcbm:phi=knots(0.5:0.25),n=2,m=2").unwrap().num_leaves(), 4);
        assert_eq!(parse_tree("offset:Y").unwrap().level_len(1), 1);
    }

    #[test]
    fn bad_specs() {
        for bad in ["rw:", "rw:n=x", "fig1:Q", "tcbm:phi=shift(0.9)", "offset:Z", "bm:n=2,m=0"] {
            assert!(matches!(parse_tree(bad), Err(CliError::Validation(_))), "{bad}");
        }
        assert!(matches!(parse_tree("/nonexistent/tree.json"), Err(CliError::Io(_))));
        assert!(!is_generator_spec("trees/x.json"));
        assert!(is_generator_spec("rw:n=2"));
    }
}
