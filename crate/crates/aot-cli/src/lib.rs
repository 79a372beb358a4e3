//! Command-line front end for the `adapted-ot` binary.
//!
//! Subcommands:
//!
//! * `dist` — a distance between two trees, as a JSON [`DistanceReport`];
//! * `os` — optimal stopping value (and optionally the rule) as JSON;
//! * `donsker` — Monte-Carlo ladder for the random-walk/Brownian coupling;
//! * `euler` — Monte-Carlo ladder for the Euler scheme;
//! * `topology-table` — every distance and stopping gap along a ladder of
//!   pairs;
//! * `generate` — the JSON tree of a generator spec.
//!
//! Trees are given as JSON files or generator specs (see [`spec`]). CSV
//! output starts with the comment line `# adapted-ot v<version> schema 1`.
//! `--record <path>` additionally writes an [`ExperimentRecord`].

pub mod error;
pub mod spec;

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use aot_core::FilteredTree;
use aot_coupling::{Direction, EpsShift, PathMetric};
use aot_generators::{
    counterexample_pair, euler_pair_cost, figure1_pair, fit_block_constant, loglog_slope, offset_grid_pair,
    rw_bm_block_coupling_cost, time_changed_bm_pair, EulerConfig, Expr, McEstimate, TimeChange,
};
use aot_solvers::{
    aw, cw, distance, eps_bicausal_lp, eps_causal_lp, hellwig, nested_bicausal, scw, wasserstein, DistanceKind,
    DistanceReport, Penalty, SolverOptions,
};
use aot_stopping::{aldous_functional, snell_os, CostFunction, Variant};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

pub use error::CliError;
pub use spec::{parse_time_change, parse_tree};

/// Version string written into CSV headers and records.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// First line of every CSV output.
pub fn csv_header_comment() -> String {
    format!("# adapted-ot v{VERSION} schema 1")
}

/// Adapted optimal transport: distances, optimal stopping and rate
/// experiments on finite filtered processes.
#[derive(Debug, Parser)]
#[command(name = "adapted-ot", version)]
pub struct Cli {
    /// Seed for all Monte-Carlo experiments.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Largest accepted equality residual of the LP solutions.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Also write an experiment record (JSON) to this path.
    #[arg(long, global = true)]
    pub record: Option<std::path::PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance between two trees (JSON report on stdout).
    Dist(DistArgs),
    /// Optimal stopping value of a tree (JSON on stdout).
    Os(OsArgs),
    /// Random-walk/Brownian coupling ladder (CSV on stdout).
    Donsker(DonskerArgs),
    /// Euler scheme ladder (CSV on stdout).
    Euler(EulerArgs),
    /// All distances and stopping gaps along a ladder of pairs (CSV).
    TopologyTable(TableArgs),
    /// Prints the JSON tree of a generator spec (or re-validates a file).
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator spec or JSON file.
    pub spec: String,
}

/// Distance kinds accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum KindArg {
    W,
    Cw,
    Scw,
    ScwStrict,
    Aw,
    AwStrict,
    EpsLp,
    Hellwig,
}

impl From<KindArg> for DistanceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::W => DistanceKind::W,
            KindArg::Cw => DistanceKind::Cw,
            KindArg::Scw => DistanceKind::Scw,
            KindArg::ScwStrict => DistanceKind::ScwStrict,
            KindArg::Aw => DistanceKind::Aw,
            KindArg::AwStrict => DistanceKind::AwStrict,
            KindArg::EpsLp => DistanceKind::EpsLp,
            KindArg::Hellwig => DistanceKind::Hellwig,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    /// Maximum over time of the Euclidean distance.
    Sup,
    /// Time integral of the Euclidean distance.
    L1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PenaltyArg {
    Linear,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    /// Causal from the left tree to the right tree.
    Xy,
    /// Causal from the right tree to the left tree.
    Yx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Inf,
    Sup,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Inf => Variant::Inf,
            VariantArg::Sup => Variant::Sup,
        }
    }
}

#[derive(Debug, Args)]
pub struct DistArgs {
    /// Left tree: JSON file or generator spec.
    #[arg(long)]
    pub left: String,
    /// Right tree: JSON file or generator spec.
    #[arg(long)]
    pub right: String,
    #[arg(long, value_enum, default_value_t = KindArg::Aw)]
    pub kind: KindArg,
    /// Order of the transport cost.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = MetricArg::Sup)]
    pub metric: MetricArg,
    /// Relaxation (time shift) for `eps_lp`.
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    /// For `eps_lp`: only one causality direction.
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
    #[arg(long, value_enum, default_value_t = PenaltyArg::Linear)]
    pub penalty: PenaltyArg,
    /// Include the optimal coupling in the report.
    #[arg(long)]
    pub emit_witness: bool,
}

#[derive(Debug, Args)]
pub struct OsArgs {
    /// Tree: JSON file or generator spec.
    #[arg(long)]
    pub tree: String,
    /// Cost: `terminal:ψ`, `state:ψ`, `running-max:ψ` or `example-E1`.
    #[arg(long, default_value = "state:identity")]
    pub phi: String,
    #[arg(long, value_enum, default_value_t = VariantArg::Inf)]
    pub variant: VariantArg,
    /// Include the optimal rule (stop flags per node and level).
    #[arg(long)]
    pub emit_rule: bool,
}

#[derive(Debug, Args)]
pub struct DonskerArgs {
    /// Random-walk steps.
    #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256, 512, 1024, 2048, 4096])]
    pub n: Vec<usize>,
    /// Block lengths (reciprocals of integers dividing every `n`).
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.5, 0.25, 0.125])]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct EulerArgs {
    /// Drift `mu(t, x)`.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub mu: String,
    /// Volatility `sigma(t, x)`.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub sigma: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x0: f64,
    /// Coarse Euler steps.
    #[arg(long, value_delimiter = ',', default_values_t = [16usize, 32, 64, 128, 256, 512, 1024])]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Reference steps per coarse step.
    #[arg(long, default_value_t = 64)]
    pub fine_factor: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairArg {
    /// Two-scenario pair; ladder = gap `e`.
    Fig1,
    /// Fast-jump process against its limit; ladder = speed `n`.
    Counterexample,
    /// Brownian motion against a shifted time change; ladder = shift `s`.
    Tcbm,
    /// Random walks on interleaved grids (single row).
    Offset,
    /// A tree against itself (single row).
    #[value(name = "self")]
    SelfPair,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, value_enum)]
    pub pair: PairArg,
    /// Ladder of the pair parameter.
    #[arg(long, value_delimiter = ',')]
    pub ladder: Vec<f64>,
    /// Jump slots (counterexample) or branching (tcbm).
    #[arg(long)]
    pub m: Option<usize>,
    /// Levels of the time-changed trees.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Tree for `--pair self`.
    #[arg(long)]
    pub tree: Option<String>,
    /// Costs for the stopping gaps (repeatable).
    #[arg(long, default_values_t = ["state:identity".to_string(), "running-max:identity".to_string()])]
    pub phi: Vec<String>,
    #[arg(long, value_enum, default_value_t = VariantArg::Sup)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
}

/// Reproducibility record of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub parameters: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, f64>,
    pub seed: u64,
    pub wall_time_ms: f64,
    pub version: String,
}

/// Stopping result printed by `os`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OsReport {
    pub phi: String,
    pub variant: Variant,
    pub value: f64,
    /// Stop flags per level and node (present with `--emit-rule`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<Vec<Vec<bool>>>,
}

/// One row of the topology table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub param: f64,
    pub w: f64,
    pub cw_xy: f64,
    pub cw_yx: f64,
    pub scw: f64,
    pub aw: f64,
    pub aw_strict: f64,
    pub hellwig: f64,
    pub os_gaps: Vec<f64>,
    pub aldous_gap: f64,
}

/// Parses the command line and runs it, writing the result to `out`.
pub fn run_from_args<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, out),
        // `--help` and `--version` are reported through the error channel.
        Err(e) if !e.use_stderr() => {
            write!(out, "{e}")?;
            Ok(())
        }
        Err(e) => Err(CliError::invalid(e.to_string())),
    }
}

/// Runs a parsed command line.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::invalid("--threads must be positive"));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| CliError::invalid(e.to_string()))?;
    let start = Instant::now();
    let mut buffer = Vec::new();
    let mut record = pool.install(|| dispatch(cli, &mut buffer))?;
    out.write_all(&buffer)?;
    record.seed = cli.seed;
    record.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    if let Some(path) = &cli.record {
        let text = serde_json::to_string_pretty(&record).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<ExperimentRecord, CliError> {
    let mut opts = SolverOptions::default();
    if let Some(tol) = cli.tolerance {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::invalid("--tolerance must be positive"));
        }
        opts.lp.residual_tol = tol;
    }
    match &cli.command {
        Command::Dist(a) => cmd_dist(a, opts, out),
        Command::Os(a) => cmd_os(a, out),
        Command::Donsker(a) => cmd_donsker(a, cli.seed, out),
        Command::Euler(a) => cmd_euler(a, cli.seed, out),
        Command::TopologyTable(a) => cmd_topology_table(a, opts, out),
        Command::Generate(a) => {
            let tree = parse_tree(&a.spec)?;
            writeln!(out, "{}", tree.to_json())?;
            let outputs = BTreeMap::from([("leaves".to_string(), tree.num_leaves() as f64)]);
            Ok(record("generate", &[("spec", a.spec.clone())], outputs))
        }
    }
}

fn record(experiment: &str, parameters: &[(&str, String)], outputs: BTreeMap<String, f64>) -> ExperimentRecord {
    ExperimentRecord {
        experiment: experiment.to_string(),
        parameters: parameters.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        outputs,
        seed: 0,
        wall_time_ms: 0.0,
        version: VERSION.to_string(),
    }
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

/// Computes the requested distance report.
pub fn compute_distance(a: &DistArgs, mut opts: SolverOptions) -> Result<DistanceReport, CliError> {
    let x = parse_tree(&a.left)?;
    let y = parse_tree(&a.right)?;
    opts.p = a.p;
    opts.metric = match a.metric {
        MetricArg::Sup => PathMetric::Sup,
        MetricArg::L1 => PathMetric::L1Time,
    };
    opts.penalty = match a.penalty {
        PenaltyArg::Linear => Penalty::Linear,
        PenaltyArg::Sqrt => Penalty::Sqrt,
    };
    opts.keep_witness = a.emit_witness;
    if a.kind == KindArg::EpsLp {
        let eps = EpsShift::time(a.eps).map_err(|e| CliError::invalid(e.to_string()))?;
        let r = match a.direction {
            None => eps_bicausal_lp(&x, &y, eps, &opts)?,
            Some(DirectionArg::Xy) => eps_causal_lp(&x, &y, eps, Direction::XToY, &opts)?,
            Some(DirectionArg::Yx) => eps_causal_lp(&x, &y, eps, Direction::YToX, &opts)?,
        };
        return Ok(r);
    }
    if a.direction.is_some() || a.eps != 0.0 {
        return Err(CliError::invalid("--eps and --direction only apply to --kind eps_lp"));
    }
    Ok(distance(a.kind.into(), &x, &y, &opts)?)
}

fn cmd_dist(a: &DistArgs, opts: SolverOptions, out: &mut dyn Write) -> Result<ExperimentRecord, CliError> {
    let r = compute_distance(a, opts)?;
    write_json(out, &r)?;
    let mut outputs = BTreeMap::from([("value".to_string(), r.value)]);
    if let Some(e) = r.epsilon {
        outputs.insert("epsilon".into(), e);
    }
    let kind = serde_json::to_value(r.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    Ok(record(
        "dist",
        &[("left", a.left.clone()), ("right", a.right.clone()), ("kind", kind), ("p", a.p.to_string())],
        outputs,
    ))
}

/// Computes the stopping report printed by `os`.
pub fn compute_os(a: &OsArgs) -> Result<OsReport, CliError> {
    let tree = parse_tree(&a.tree)?;
    let phi: CostFunction = a.phi.parse()?;
    let variant: Variant = a.variant.into();
    let r = snell_os(&tree, &phi, variant)?;
    Ok(OsReport {
        phi: phi.to_string(),
        variant,
        value: r.value,
        rule: a.emit_rule.then(|| r.rule.decisions().to_vec()),
    })
}

fn cmd_os(a: &OsArgs, out: &mut dyn Write) -> Result<ExperimentRecord, CliError> {
    let r = compute_os(a)?;
    write_json(out, &r)?;
    Ok(record(
        "os",
        &[("tree", a.tree.clone()), ("phi", r.phi.clone()), ("variant", format!("{:?}", r.variant).to_lowercase())],
        BTreeMap::from([("value".to_string(), r.value)]),
    ))
}

/// One CSV row of the Monte-Carlo experiments; empty cells are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub record: &'static str,
    pub n: Option<usize>,
    pub eps: Option<f64>,
    pub value: f64,
    pub std_error: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

impl McRow {
    fn estimate(n: usize, eps: Option<f64>, e: &McEstimate) -> Self {
        McRow {
            record: "estimate",
            n: Some(n),
            eps,
            value: e.mean,
            std_error: Some(e.std_error),
            samples: Some(e.samples),
            seed: Some(e.seed),
        }
    }

    fn summary(record: &'static str, value: f64) -> Self {
        McRow { record, n: None, eps: None, value, std_error: None, samples: None, seed: None }
    }
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn write_mc_csv(out: &mut dyn Write, with_eps: bool, rows: &[McRow]) -> Result<(), CliError> {
    writeln!(out, "{}", csv_header_comment())?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["record", "n"];
    if with_eps {
        header.push("eps");
    }
    header.extend(["value", "std_error", "samples", "seed"]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.record.to_string(), cell(r.n)];
        if with_eps {
            rec.push(cell(r.eps));
        }
        rec.extend([r.value.to_string(), cell(r.std_error), cell(r.samples), cell(r.seed)]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the random-walk/Brownian ladder: one `estimate` row per `(n, ε)`,
/// one `proxy` row per `n` (the minimum over `ε` of estimate + `ε`, with the
/// minimiser in the `eps` column), then the fitted constant `C` of
/// `estimate ≤ C·ln(n)/√(nε)` and the log-log slope of the proxy in `n`.
pub fn donsker_rows(a: &DonskerArgs, seed: u64) -> Result<Vec<McRow>, CliError> {
    if a.n.is_empty() || a.eps.is_empty() {
        return Err(CliError::invalid("the n and eps ladders must be nonempty"));
    }
    let points: Vec<(usize, f64)> = a.n.iter().flat_map(|&n| a.eps.iter().map(move |&e| (n, e))).collect();
    let estimates = points
        .par_iter()
        .map(|&(n, eps)| rw_bm_block_coupling_cost(n, eps, a.samples, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows: Vec<McRow> = points.iter().zip(&estimates).map(|(&(n, e), est)| McRow::estimate(n, Some(e), est)).collect();
    let mut proxies = Vec::new();
    for &n in &a.n {
        let (eps, value) = points
            .iter()
            .zip(&estimates)
            .filter(|((m, _), _)| *m == n)
            .map(|(&(_, e), est)| (e, est.mean + e))
            .fold((f64::NAN, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        proxies.push((n as f64, value));
        rows.push(McRow { record: "proxy", n: Some(n), eps: Some(eps), value, std_error: None, samples: None, seed: None });
    }
    let fit: Vec<(usize, f64, f64)> = points.iter().zip(&estimates).map(|(&(n, e), est)| (n, e, est.mean)).collect();
    rows.push(McRow::summary("fit_constant", fit_block_constant(&fit)));
    let mut unique = a.n.clone();
    unique.sort_unstable();
    unique.dedup();
    if unique.len() >= 2 {
        rows.push(McRow::summary("proxy_slope", loglog_slope(&proxies)));
    }
    Ok(rows)
}

fn mc_outputs(rows: &[McRow]) -> BTreeMap<String, f64> {
    rows.iter()
        .map(|r| {
            let mut key = r.record.to_string();
            if let Some(n) = r.n {
                key.push_str(&format!(":n={n}"));
            }
            if let (Some(e), "estimate") = (r.eps, r.record) {
                key.push_str(&format!(",eps={e}"));
            }
            (key, r.value)
        })
        .collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn cmd_donsker(a: &DonskerArgs, seed: u64, out: &mut dyn Write) -> Result<ExperimentRecord, CliError> {
    let rows = donsker_rows(a, seed)?;
    write_mc_csv(out, true, &rows)?;
    Ok(record(
        "donsker",
        &[("n", join(&a.n)), ("eps", join(&a.eps)), ("samples", a.samples.to_string())],
        mc_outputs(&rows),
    ))
}

/// Runs the Euler ladder: one `estimate` row per `n` and the log-log slope.
pub fn euler_rows(a: &EulerArgs, seed: u64) -> Result<Vec<McRow>, CliError> {
    if a.n.is_empty() {
        return Err(CliError::invalid("the n ladder must be nonempty"));
    }
    let mu: Expr = a.mu.parse()?;
    let sigma: Expr = a.sigma.parse()?;
    let mut cfg = EulerConfig::new(mu, sigma, a.x0);
    cfg.fine_factor = a.fine_factor;
    let estimates = a.n.par_iter().map(|&n| euler_pair_cost(&cfg, n, a.samples, seed)).collect::<Result<Vec<_>, _>>()?;
    let mut rows: Vec<McRow> = a.n.iter().zip(&estimates).map(|(&n, e)| McRow::estimate(n, None, e)).collect();
    let mut unique = a.n.clone();
    unique.sort_unstable();
    unique.dedup();
    if unique.len() >= 2 {
        let pts: Vec<(f64, f64)> = a.n.iter().zip(&estimates).map(|(&n, e)| (n as f64, e.mean)).collect();
        rows.push(McRow::summary("slope", loglog_slope(&pts)));
    }
    Ok(rows)
}

fn cmd_euler(a: &EulerArgs, seed: u64, out: &mut dyn Write) -> Result<ExperimentRecord, CliError> {
    let rows = euler_rows(a, seed)?;
    write_mc_csv(out, false, &rows)?;
    Ok(record(
        "euler",
        &[
            ("mu", a.mu.clone()),
            ("sigma", a.sigma.clone()),
            ("x0", a.x0.to_string()),
            ("n", join(&a.n)),
            ("samples", a.samples.to_string()),
            ("fine_factor", a.fine_factor.to_string()),
        ],
        mc_outputs(&rows),
    ))
}

fn ladder_integer(v: f64) -> Result<usize, CliError> {
    if v >= 1.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(CliError::invalid(format!("ladder value {v} must be a positive integer")))
    }
}

/// The pair of trees for one ladder point.
pub fn table_pair(a: &TableArgs, param: f64) -> Result<(FilteredTree, FilteredTree), CliError> {
    Ok(match a.pair {
        PairArg::Fig1 => figure1_pair(param)?,
        PairArg::Counterexample => counterexample_pair(ladder_integer(param)?, a.m.unwrap_or(8))?,
        PairArg::Tcbm => time_changed_bm_pair(&TimeChange::Identity, &TimeChange::Shift(param), a.n, a.m.unwrap_or(2))?,
        PairArg::Offset => offset_grid_pair()?,
        PairArg::SelfPair => {
            let spec = a.tree.as_deref().ok_or_else(|| CliError::invalid("--pair self needs --tree"))?;
            let t = parse_tree(spec)?;
            (t.clone(), t)
        }
    })
}

/// Computes one row of the topology table.
pub fn table_row(
    x: &FilteredTree,
    y: &FilteredTree,
    param: f64,
    phis: &[CostFunction],
    variant: Variant,
    opts: &SolverOptions,
) -> Result<TableRow, CliError> {
    let mut os_gaps = Vec::with_capacity(phis.len());
    for phi in phis {
        let a = snell_os(x, phi, variant)?.value;
        let b = snell_os(y, phi, variant)?.value;
        os_gaps.push((a - b).abs());
    }
    Ok(TableRow {
        param,
        w: wasserstein(x, y, opts)?.value,
        cw_xy: cw(x, y, opts)?.value,
        cw_yx: cw(y, x, opts)?.value,
        scw: scw(x, y, opts)?.value,
        aw: aw(x, y, opts)?.value,
        aw_strict: nested_bicausal(x, y, opts)?.value,
        hellwig: hellwig(x, y, opts)?.value,
        os_gaps,
        aldous_gap: (aldous_functional(x) - aldous_functional(y)).abs(),
    })
}

/// Computes all rows of the topology table in ladder order.
pub fn topology_rows(a: &TableArgs, mut opts: SolverOptions) -> Result<Vec<TableRow>, CliError> {
    opts.p = a.p;
    opts.keep_witness = false;
    let phis = a.phi.iter().map(|s| s.parse::<CostFunction>()).collect::<Result<Vec<_>, _>>()?;
    let ladder = match a.pair {
        PairArg::Offset | PairArg::SelfPair => vec![0.0],
        _ if a.ladder.is_empty() => return Err(CliError::invalid("--ladder is required for this pair")),
        _ => a.ladder.clone(),
    };
    ladder
        .par_iter()
        .map(|&param| {
            let (x, y) = table_pair(a, param)?;
            table_row(&x, &y, param, &phis, a.variant.into(), &opts)
        })
        .collect()
}

fn cmd_topology_table(a: &TableArgs, opts: SolverOptions, out: &mut dyn Write) -> Result<ExperimentRecord, CliError> {
    let rows = topology_rows(a, opts)?;
    let phi_names: Vec<String> = a.phi.iter().map(|s| s.parse::<CostFunction>().map(|c| c.to_string())).collect::<Result<_, _>>()?;
    writeln!(out, "{}", csv_header_comment())?;
    let mut w = csv::Writer::from_writer(&mut *out);
    let mut header: Vec<String> =
        ["param", "w", "cw_xy", "cw_yx", "scw", "aw", "aw_strict", "hellwig"].iter().map(|s| s.to_string()).collect();
    header.extend(phi_names.iter().map(|p| format!("os_gap:{p}")));
    header.push("aldous_gap".into());
    w.write_record(&header)?;
    let mut outputs = BTreeMap::new();
    for r in &rows {
        let mut cells = vec![r.param, r.w, r.cw_xy, r.cw_yx, r.scw, r.aw, r.aw_strict, r.hellwig];
        cells.extend(&r.os_gaps);
        cells.push(r.aldous_gap);
        for (name, v) in header.iter().zip(&cells).skip(1) {
            outputs.insert(format!("{name}@{}", r.param), *v);
        }
        w.write_record(cells.iter().map(f64::to_string))?;
    }
    w.flush()?;
    let pair = a.pair.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    Ok(record("topology-table", &[("pair", pair), ("ladder", join(&a.ladder)), ("phi", a.phi.join(";"))], outputs))
}
