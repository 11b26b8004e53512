//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage error, 3 runtime error.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use stubline::alt_rules::{run_example_51, run_example_52};
use stubline::arw::{arw_pair, ArwError, RunStatus};
use stubline::degree::{empirical_pmf, sample_degrees, tv_to_distribution};
use stubline::experiment::{run_to_dir, ExperimentConfig, ExperimentError, PolicyKind};
use stubline::io;
use stubline::meshalkin::{
    decode_window, format_symbols, meshalkin_decode, meshalkin_encode, parse_symbols, random_source, CodedSymbol,
    SourceSymbol,
};
use stubline::oracle::{enumerate_pairings, run_sweep, sweep_family};
use stubline::sprd::EdgeConfiguration;
use stubline::suite::{run_suite, SUITE_SEED};
use stubline::walks::{exact_passage_pmf, IncrementKind, PassageDirection, PassageSampler};
use stubline::{ArrowConfiguration, BigRational, Coin, DegreeDistribution, Scalar, SeedTree};

#[derive(Parser)]
#[command(name = "stubline", version, about = "Stub pairings of stationary random graphs on the integer line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample i.i.d. degrees.
    Degrees(DegreesArgs),
    /// Stepwise pairing of one random arrow configuration.
    Sprd(SprdArgs),
    /// Annihilating-random-walk pairing on a cycle.
    Arw(ArwArgs),
    /// First-passage times of the increment walks.
    Walk(WalkArgs),
    /// Exhaustive small-instance oracle.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Four-to-five symbol recoding through the pairing.
    #[command(subcommand)]
    Meshalkin(MeshalkinCommand),
    /// Uniform even degrees with balanced directions.
    Example51(Example51Args),
    /// Degree one with a single coin fixing all directions.
    Example52(Example52Args),
    /// Replicated experiment from a JSON config, or the acceptance suite.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    /// Output directory; without it the main result goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct DegreesArgs {
    #[arg(long)]
    dist: String,
    #[arg(long)]
    window: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Iid,
    Balanced,
    Delta1Coin,
}

impl From<Policy> for PolicyKind {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Iid => PolicyKind::Iid,
            Policy::Balanced => PolicyKind::Balanced,
            Policy::Delta1Coin => PolicyKind::Delta1Coin,
        }
    }
}

#[derive(Args)]
struct SprdArgs {
    #[arg(long)]
    dist: String,
    #[arg(long, value_enum, default_value = "iid")]
    policy: Policy,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long)]
    window: usize,
    /// Defaults to window / 4.
    #[arg(long)]
    max_step: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ArwArgs {
    #[arg(long, default_value = "1:1")]
    dist: String,
    #[arg(long)]
    window: usize,
    /// Defaults to 10 * window^2.
    #[arg(long)]
    max_sweeps: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum Increments {
    Delta,
    X,
}

#[derive(Clone, Copy, ValueEnum)]
enum Towards {
    Up,
    Down,
}

#[derive(Args)]
struct WalkArgs {
    #[arg(long, default_value = "1:1")]
    dist: String,
    /// Probability of a right arrow, decimal or fraction.
    #[arg(long, default_value = "1/2")]
    p: String,
    #[arg(long, value_enum, default_value = "x")]
    increments: Increments,
    #[arg(long, default_value_t = 1)]
    level: i64,
    #[arg(long, value_enum, default_value = "up")]
    direction: Towards,
    /// Longest passage time resolved; larger ones are censored.
    #[arg(long, default_value_t = 1000)]
    horizon: usize,
    /// Number of passage times to sample.
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Spacing between sampled offsets; defaults to horizon + 1 (independent).
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the exact law up to `horizon` (at most 14) in exact arithmetic.
    #[arg(long)]
    exact: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Check every balanced, feasible small configuration.
    Sweep {
        #[arg(long, default_value_t = 6)]
        max_vertices: usize,
        #[arg(long, default_value_t = 2)]
        max_stubs: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List all perfect matchings of one configuration, e.g. `--counts 0:2,1:0,1:0`.
    Enumerate {
        /// `L:R` per vertex, comma-separated.
        #[arg(long)]
        counts: String,
    },
}

#[derive(Subcommand)]
enum MeshalkinCommand {
    /// Encode source symbols (`ra rb la lb`) read from a file or stdin.
    Encode {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Decode coded symbols (`r laa lab lba lbb ?`).
    Decode {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Accept `?` and leave those positions as `?`.
        #[arg(long)]
        partial: bool,
    },
    /// Print a random source word.
    Random {
        #[arg(long)]
        len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Example51Args {
    #[arg(long, default_value_t = 2)]
    n: u32,
    #[arg(long)]
    window: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Example52Args {
    #[arg(long)]
    window: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run a named suite instead (`acceptance`).
    #[arg(long)]
    suite: Option<String>,
    /// With --suite, only criteria whose name contains this.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    dist: Option<String>,
    #[arg(long, value_enum)]
    policy: Option<Policy>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    max_step: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated truncation levels.
    #[arg(long, value_delimiter = ',')]
    cutoffs: Option<Vec<u64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for replications.
    #[arg(long)]
    jobs: Option<usize>,
}

/// Bad input from the caller; exits with code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn parse_dist<T: Scalar>(literal: &str) -> Result<DegreeDistribution<T>> {
    literal.parse().map_err(|e| usage(format!("--dist: {e}")))
}

enum Outcome {
    Ok,
    CheckFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let is_usage = e.downcast_ref::<UsageError>().is_some()
                || e.downcast_ref::<ExperimentError>().is_some_and(ExperimentError::is_usage);
            ExitCode::from(if is_usage { 2 } else { 3 })
        }
    }
}

fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::Degrees(a) => degrees(a),
        Command::Sprd(a) => sprd(a),
        Command::Arw(a) => arw(a),
        Command::Walk(a) => walk(a),
        Command::Oracle(c) => oracle(c),
        Command::Meshalkin(c) => meshalkin(c),
        Command::Example51(a) => example51(a),
        Command::Example52(a) => example52(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn emit_json<S: Serialize>(out: Option<&Path>, file: &str, value: &S) -> Result<()> {
    match out {
        Some(dir) => io::write_json(io::create(&dir.join(file))?, value)?,
        None => io::write_json(std::io::stdout().lock(), value)?,
    }
    Ok(())
}

/// Writes `edges.csv`, `censored.csv` and `summary.json` into `--out`, or the
/// edges (csv) or summary (json) to stdout.
fn emit_pairing<S: Serialize>(
    output: &Output,
    edges: &EdgeConfiguration,
    status: Option<RunStatus>,
    summary: &S,
) -> Result<()> {
    match (&output.out, output.format) {
        (Some(dir), _) => {
            io::write_edges(io::create(&dir.join("edges.csv"))?, edges, status)?;
            io::write_censored(io::create(&dir.join("censored.csv"))?, edges)?;
            io::write_json(io::create(&dir.join("summary.json"))?, summary)?;
        }
        (None, Format::Csv) => io::write_edges(std::io::stdout().lock(), edges, status)?,
        (None, Format::Json) => io::write_json(std::io::stdout().lock(), summary)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct DegreesSummary {
    dist: String,
    window: usize,
    seed: u64,
    mean: f64,
    empirical_pmf: Vec<(u32, f64)>,
    tv_to_law: f64,
}

fn degrees(a: DegreesArgs) -> Result<Outcome> {
    let dist = parse_dist::<f64>(&a.dist)?;
    let degrees = sample_degrees(&dist, a.window, &mut SeedTree::new(a.seed).stream("degrees"));
    let summary = DegreesSummary {
        dist: dist.to_string(),
        window: a.window,
        seed: a.seed,
        mean: degrees.iter().map(|&d| f64::from(d)).sum::<f64>() / a.window.max(1) as f64,
        empirical_pmf: empirical_pmf::<f64>(&degrees).into_iter().collect(),
        tv_to_law: tv_to_distribution(&degrees, &dist),
    };
    let write_csv = |w: &mut dyn Write| -> Result<()> {
        writeln!(w, "vertex,degree")?;
        for (v, d) in degrees.iter().enumerate() {
            writeln!(w, "{v},{d}")?;
        }
        Ok(w.flush()?)
    };
    match (&a.output.out, a.output.format) {
        (Some(dir), _) => {
            write_csv(&mut io::create(&dir.join("degrees.csv"))?)?;
            emit_json(Some(dir), "summary.json", &summary)?;
        }
        (None, Format::Csv) => write_csv(&mut std::io::stdout().lock())?,
        (None, Format::Json) => emit_json(None, "", &summary)?,
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct PairingSummary {
    window: usize,
    max_step: u64,
    seed: u64,
    coin: Option<Coin>,
    edges: usize,
    censored: usize,
    exact_window: Option<(i64, i64)>,
    censored_in_exact_window: usize,
    longest_edge: u64,
}

fn pairing_summary(edges: &EdgeConfiguration, seed: u64, coin: Option<Coin>) -> PairingSummary {
    let exact = edges.exact_vertices().ok();
    PairingSummary {
        window: edges.window_len(),
        max_step: edges.max_step(),
        seed,
        coin,
        edges: edges.edges().len(),
        censored: edges.censored().len(),
        exact_window: exact.as_ref().map(|r| (r.start, r.end)),
        censored_in_exact_window: exact.map_or(0, |r| edges.censored().iter().filter(|c| r.contains(&c.vertex)).count()),
        longest_edge: edges.edges().iter().map(|e| edges.edge_length(e)).max().unwrap_or(0),
    }
}

fn sprd(a: SprdArgs) -> Result<Outcome> {
    let mut config = ExperimentConfig::new(&a.dist, a.window, a.seed);
    config.policy = a.policy.into();
    config.p = a.p;
    config.max_step = a.max_step;
    config.validate()?;
    let dist = config.distribution()?;
    let rep = stubline::experiment::run_replication(&config, &dist, &SeedTree::new(a.seed), 0)?;
    let summary = pairing_summary(&rep.edges, a.seed, rep.coin);
    emit_pairing(&a.output, &rep.edges, None, &summary)?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct ArwSummary {
    window: usize,
    seed: u64,
    status: RunStatus,
    sweeps: Option<u64>,
    edges: usize,
    detail: Option<String>,
}

fn arw(a: ArwArgs) -> Result<Outcome> {
    let dist = parse_dist::<f64>(&a.dist)?;
    let max_sweeps = a.max_sweeps.unwrap_or(10 * (a.window as u64).pow(2));
    let mut rng = SeedTree::new(a.seed).stream("arw");
    let degrees = sample_degrees(&dist, a.window, &mut rng);
    let result = arw_pair(&degrees, &mut rng, max_sweeps);
    let status = match RunStatus::of(&result) {
        Some(s) => s,
        None => {
            let e = result.expect_err("only errors lack a status");
            return Err(match e {
                ArwError::OddTotal(_) | ArwError::ZeroSweeps => usage(e.to_string()),
                other => other.into(),
            });
        }
    };
    let empty = EdgeConfiguration::new(0, a.window, stubline::sprd::Topology::Cycle, max_sweeps, vec![], vec![]);
    let (edges, sweeps, detail) = match &result {
        Ok(run) => (&run.edges, Some(run.sweeps), None),
        Err(e) => (&empty, None, Some(e.to_string())),
    };
    let summary = ArwSummary {
        window: a.window,
        seed: a.seed,
        status,
        sweeps,
        edges: edges.edges().len(),
        detail,
    };
    emit_pairing(&a.output, edges, Some(status), &summary)?;
    Ok(if status == RunStatus::Ok { Outcome::Ok } else { Outcome::CheckFailed })
}

#[derive(Serialize)]
struct ExactPmfOut {
    dist: String,
    p: String,
    increments: &'static str,
    level: i64,
    direction: &'static str,
    n_max: usize,
    atoms: Vec<f64>,
    atoms_exact: Vec<String>,
    censored: f64,
    censored_exact: String,
}

fn walk(a: WalkArgs) -> Result<Outcome> {
    let kind = match a.increments {
        Increments::Delta => IncrementKind::Delta,
        Increments::X => IncrementKind::X,
    };
    let direction = match a.direction {
        Towards::Up => PassageDirection::Up,
        Towards::Down => PassageDirection::Down,
    };
    if a.exact {
        let dist = parse_dist::<BigRational>(&a.dist)?;
        let p = BigRational::parse_literal(&a.p).ok_or_else(|| usage(format!("--p: cannot parse {:?}", a.p)))?;
        let level = BigRational::from_integer(a.level.into());
        let pmf = exact_passage_pmf(&dist, &p, kind, &level, direction, a.horizon).map_err(|e| usage(e.to_string()))?;
        let out = ExactPmfOut {
            dist: dist.to_string(),
            p: p.to_string(),
            increments: if kind == IncrementKind::Delta { "delta" } else { "x" },
            level: a.level,
            direction: if direction == PassageDirection::Up { "up" } else { "down" },
            n_max: a.horizon,
            atoms: pmf.atoms.iter().map(Scalar::as_f64).collect(),
            atoms_exact: pmf.atoms.iter().map(ToString::to_string).collect(),
            censored: pmf.censored.as_f64(),
            censored_exact: pmf.censored.to_string(),
        };
        emit_json(a.output.out.as_deref(), "pmf.json", &out)?;
        return Ok(Outcome::Ok);
    }
    let dist = parse_dist::<f64>(&a.dist)?;
    let p = f64::parse_literal(&a.p).ok_or_else(|| usage(format!("--p: cannot parse {:?}", a.p)))?;
    let sampler = PassageSampler {
        p,
        kind,
        level: a.level as f64,
        direction,
        horizon: a.horizon,
        stride: a.stride.unwrap_or(a.horizon + 1),
    };
    let taus = sampler
        .sample(&dist, a.reps, &mut SeedTree::new(a.seed).stream("walk"))
        .map_err(|e| usage(e.to_string()))?;
    let rows: Vec<_> = taus.into_iter().enumerate().collect();
    match &a.output.out {
        Some(dir) => io::write_taus(io::create(&dir.join("taus.csv"))?, &rows)?,
        None => io::write_taus(std::io::stdout().lock(), &rows)?,
    }
    Ok(Outcome::Ok)
}

fn oracle(c: OracleCommand) -> Result<Outcome> {
    match c {
        OracleCommand::Sweep { max_vertices, max_stubs, out } => {
            let family = sweep_family(max_vertices, max_stubs);
            let summary = run_sweep(&family).map_err(|e| usage(e.to_string()))?;
            emit_json(out.as_deref(), "sweep.json", &summary)?;
            Ok(if summary.passed() { Outcome::Ok } else { Outcome::CheckFailed })
        }
        OracleCommand::Enumerate { counts } => {
            let mut left = Vec::new();
            let mut right = Vec::new();
            for part in counts.split(',') {
                let (l, r) = part
                    .split_once(':')
                    .ok_or_else(|| usage(format!("--counts: expected L:R, got {part:?}")))?;
                left.push(l.trim().parse().map_err(|_| usage(format!("bad count {l:?}")))?);
                right.push(r.trim().parse().map_err(|_| usage(format!("bad count {r:?}")))?);
            }
            let cfg = ArrowConfiguration::from_counts(0, left, right)?;
            let en = enumerate_pairings(&cfg).map_err(|e| usage(e.to_string()))?;
            #[derive(Serialize)]
            struct Listing {
                matchings: Vec<Vec<(i64, i64)>>,
                nested_index: Option<usize>,
            }
            let listing = Listing {
                matchings: en.matchings().iter().map(EdgeConfiguration::endpoint_multiset).collect(),
                nested_index: en.nested_index(),
            };
            emit_json(None, "", &listing)?;
            Ok(Outcome::Ok)
        }
    }
}

fn read_input(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn meshalkin(c: MeshalkinCommand) -> Result<Outcome> {
    let mut stdout = std::io::stdout().lock();
    match c {
        MeshalkinCommand::Encode { input, format } => {
            let src: Vec<SourceSymbol> = parse_symbols(&read_input(input.as_deref())?).map_err(|e| usage(e.to_string()))?;
            let enc = meshalkin_encode(&src);
            match format {
                Format::Csv => writeln!(stdout, "{}", format_symbols(&enc.coded))?,
                Format::Json => {
                    #[derive(Serialize)]
                    struct Encoded {
                        coded: String,
                        radii: Vec<String>,
                    }
                    let out = Encoded {
                        coded: format_symbols(&enc.coded),
                        radii: enc.radii.iter().map(ToString::to_string).collect(),
                    };
                    io::write_json(&mut stdout, &out)?;
                }
            }
        }
        MeshalkinCommand::Decode { input, partial } => {
            let coded: Vec<CodedSymbol> = parse_symbols(&read_input(input.as_deref())?).map_err(|e| usage(e.to_string()))?;
            let text = if partial {
                let decoded = decode_window(&coded).map_err(|e| usage(e.to_string()))?;
                decoded
                    .iter()
                    .map(|s| s.map_or_else(|| "?".to_string(), |s| s.to_string()))
                    .collect::<Vec<_>>()
                    .join(" ")
            } else {
                format_symbols(&meshalkin_decode(&coded).map_err(|e| usage(e.to_string()))?)
            };
            writeln!(stdout, "{text}")?;
        }
        MeshalkinCommand::Random { len, seed } => {
            let src = random_source(len, &mut SeedTree::new(seed).stream("meshalkin/source"));
            writeln!(stdout, "{}", format_symbols(&src))?;
        }
    }
    Ok(Outcome::Ok)
}

fn example51(a: Example51Args) -> Result<Outcome> {
    let run = run_example_51(a.n, a.window, a.seed).map_err(|e| usage(e.to_string()))?;
    emit_pairing(&a.output, &run.edges, None, &run.summary)?;
    Ok(Outcome::Ok)
}

fn example52(a: Example52Args) -> Result<Outcome> {
    let run = run_example_52(a.window, a.seed).map_err(|e| usage(e.to_string()))?;
    let summary = pairing_summary(&run.edges, a.seed, Some(run.coin));
    emit_pairing(&a.output, &run.edges, None, &summary)?;
    let unit = run.edges.censored().is_empty() && summary.longest_edge <= 1;
    Ok(if unit { Outcome::Ok } else { Outcome::CheckFailed })
}

fn experiment(a: ExperimentArgs) -> Result<Outcome> {
    if let Some(suite) = &a.suite {
        if suite != "acceptance" {
            return Err(usage(format!("unknown suite {suite:?}; the only suite is \"acceptance\"")));
        }
        let report = run_suite(a.seed.unwrap_or(SUITE_SEED), a.filter.as_deref(), |r| eprintln!("{r}"));
        if report.criteria.is_empty() {
            return Err(usage("no criterion matches --filter"));
        }
        emit_json(a.out.as_deref(), "suite.json", &report)?;
        return Ok(if report.pass { Outcome::Ok } else { Outcome::CheckFailed });
    }
    let mut config: ExperimentConfig = match &a.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None => ExperimentConfig::new(
            a.dist.as_deref().ok_or_else(|| usage("--dist or --config is required"))?,
            a.window.ok_or_else(|| usage("--window or --config is required"))?,
            0,
        ),
    };
    if let Some(v) = a.dist {
        config.dist = v;
    }
    if let Some(v) = a.policy {
        config.policy = v.into();
    }
    if let Some(v) = a.p {
        config.p = v;
    }
    if let Some(v) = a.window {
        config.window = v;
    }
    if a.max_step.is_some() {
        config.max_step = a.max_step;
    }
    if let Some(v) = a.reps {
        config.reps = v;
    }
    if let Some(v) = a.seed {
        config.seed = v;
    }
    if a.cutoffs.is_some() {
        config.cutoffs = a.cutoffs;
    }
    if a.out.is_some() {
        config.out = a.out;
    }
    let out = config.out.clone().ok_or_else(|| usage("--out (or \"out\" in the config) is required"))?;
    let report = run_to_dir(&config, &out, a.jobs)?;
    for c in &report.checks {
        eprintln!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if report.pass { Outcome::Ok } else { Outcome::CheckFailed })
}
