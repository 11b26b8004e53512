//! Seeded, replicated pairing experiments with JSON reports and CSV dumps.
//!
//! Replication `k` draws its degrees from `degrees/rep_k`, its directions from
//! `directions/rep_k` and, for the single-coin policy, its coin from
//! `coin/rep_k`. Per-vertex metrics are collected on the exact sub-window and
//! merged in replication order, so the report does not depend on scheduling.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::arrows::{assign_directions_balanced, assign_directions_delta1, assign_directions_iid, ArrowConfiguration, ArrowError, Coin};
use crate::degree::{sample_degrees, DegreeDistribution, DegreeError};
use crate::io::{self, IoError};
use crate::oracle::is_nested;
use crate::rng::{SeedTree, RNG_IDENTITY};
use crate::sprd::{sprd_pair, EdgeConfiguration, EdgeMetrics, SprdError};
use crate::stats::{survival_curve, tail_exponent, truncated_mean_curve, Observation, StatsError, SurvivalCurve};
use crate::Direction;

pub const SCHEMA_VERSION: u32 = 1;

/// Dyadic grid bounds used for tail fits in reports.
pub const TAIL_GRID: (u64, u64) = (32, 1024);

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Degree(#[from] DegreeError),
    #[error(transparent)]
    Arrows(#[from] ArrowError),
    #[error(transparent)]
    Sprd(#[from] SprdError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl ExperimentError {
    /// `true` for errors caused by the caller's input rather than the run.
    pub fn is_usage(&self) -> bool {
        matches!(self, ExperimentError::Config(_) | ExperimentError::Degree(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Iid,
    Balanced,
    Delta1Coin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Degree law literal, e.g. `"0:0.5,1:0.25,3:0.25"`.
    pub dist: String,
    #[serde(default = "default_policy")]
    pub policy: PolicyKind,
    #[serde(default = "default_p")]
    pub p: f64,
    pub window: usize,
    /// Defaults to `window / 4`.
    #[serde(default)]
    pub max_step: Option<u64>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    /// Truncation levels; defaults to the powers of ten up to `max_step`.
    #[serde(default)]
    pub cutoffs: Option<Vec<u64>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_policy() -> PolicyKind {
    PolicyKind::Iid
}

fn default_p() -> f64 {
    0.5
}

fn default_reps() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(dist: &str, window: usize, seed: u64) -> Self {
        Self {
            dist: dist.to_string(),
            policy: PolicyKind::Iid,
            p: 0.5,
            window,
            max_step: None,
            reps: 1,
            seed,
            cutoffs: None,
            out: None,
        }
    }

    pub fn max_step(&self) -> u64 {
        self.max_step.unwrap_or(self.window as u64 / 4)
    }

    pub fn cutoffs(&self) -> Vec<u64> {
        self.cutoffs.clone().unwrap_or_else(|| {
            std::iter::successors(Some(10u64), |c| c.checked_mul(10))
                .take_while(|&c| c <= self.max_step())
                .collect()
        })
    }

    pub fn distribution(&self) -> Result<DegreeDistribution<f64>, ExperimentError> {
        Ok(self.dist.parse()?)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        let dist = self.distribution()?;
        if self.window == 0 {
            return bad("window must be positive".into());
        }
        let m = self.max_step();
        if m == 0 || m > self.window as u64 / 2 {
            return bad(format!("max_step {m} must lie in [1, window / 2 = {}]", self.window / 2));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p = {} outside [0, 1]", self.p));
        }
        let cutoffs = self.cutoffs();
        if cutoffs.windows(2).any(|w| w[0] >= w[1]) {
            return bad("cutoffs must be strictly increasing".into());
        }
        if let Some(&c) = cutoffs.iter().find(|&&c| c == 0 || c > m) {
            return bad(format!("cutoff {c} must lie in [1, max_step = {m}]"));
        }
        match self.policy {
            PolicyKind::Balanced if !dist.supported_on_even() => {
                bad("balanced directions need a law supported on even degrees".into())
            }
            PolicyKind::Delta1Coin if dist.atoms() != [(1, 1.0)] => {
                bad("the single-coin policy needs dist = \"1:1\"".into())
            }
            _ => Ok(()),
        }
    }

    /// SHA-256 of the compact JSON form with `out` cleared.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFitSummary {
    pub n_lo: u64,
    pub n_hi: u64,
    pub slope: f64,
    pub slope_lo: f64,
    pub slope_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    /// Exact-window vertices where the metric is defined.
    pub samples: usize,
    pub censored: usize,
    pub censored_fraction: f64,
    pub cutoffs: Vec<u64>,
    pub truncated_means: Vec<f64>,
    /// Absent when too few grid points have positive survival.
    pub tail_fit: Option<TailFitSummary>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CensoringSummary {
    pub right_stubs: u64,
    pub right_censored: u64,
    pub right_fraction: f64,
    pub left_stubs: u64,
    pub left_censored: u64,
    pub left_fraction: f64,
    /// Fraction of all exact-window stubs that are censored.
    pub fraction: f64,
    /// Fraction of stubs anywhere in the window left unmatched.
    pub window_unmatched_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngInfo {
    pub generator: String,
    pub root_seed: u64,
    pub substreams: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub rng: RngInfo,
    /// `[start, end)` of the exact sub-window.
    pub exact_window: (i64, i64),
    pub vertices: usize,
    pub degree_tv: f64,
    pub coins: Vec<Coin>,
    pub censoring: CensoringSummary,
    pub metrics: BTreeMap<String, MetricSummary>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

pub const METRIC_NAMES: [&str; 6] = [
    "shortest_right",
    "shortest_left",
    "longest_right",
    "longest_left",
    "longest",
    "total_length",
];

fn metric_fields(m: &EdgeMetrics) -> [Option<Observation>; 6] {
    [
        m.shortest_right,
        m.shortest_left,
        m.longest_right,
        m.longest_left,
        m.longest,
        m.total_length,
    ]
}

/// One replication: its arrows, pairing and coin (single-coin policy only).
pub struct Replication {
    pub index: usize,
    pub degrees: Vec<u32>,
    pub arrows: ArrowConfiguration,
    pub edges: EdgeConfiguration,
    pub coin: Option<Coin>,
}

pub fn run_replication(
    config: &ExperimentConfig,
    dist: &DegreeDistribution<f64>,
    seeds: &SeedTree,
    k: usize,
) -> Result<Replication, ExperimentError> {
    let degrees = sample_degrees(dist, config.window, &mut seeds.rep_stream("degrees", k));
    let mut coin = None;
    let arrows = match config.policy {
        PolicyKind::Iid => assign_directions_iid(&degrees, 0, config.p, &mut seeds.rep_stream("directions", k))?,
        PolicyKind::Balanced => assign_directions_balanced(&degrees, 0)?,
        PolicyKind::Delta1Coin => {
            let c = if seeds.rep_stream("coin", k).gen_bool(0.5) { Coin::Heads } else { Coin::Tails };
            coin = Some(c);
            assign_directions_delta1(config.window, 0, c)
        }
    };
    let edges = sprd_pair(&arrows, config.max_step());
    Ok(Replication {
        index: k,
        degrees,
        arrows,
        edges,
        coin,
    })
}

/// Everything a replication contributes to the merged report.
struct RepStats {
    metrics: [Vec<Observation>; 6],
    censoring: CensoringSummary,
    window_stubs: u64,
    window_unmatched: u64,
    degree_ok: bool,
    ordering_ok: bool,
    nested_ok: bool,
    coin: Option<Coin>,
    degrees: Vec<u32>,
}

fn rep_stats(rep: &Replication) -> Result<RepStats, ExperimentError> {
    let edges = &rep.edges;
    let exact = edges.exact_vertices()?;
    let all = edges.all_metrics();
    let lo = (exact.start - edges.first_vertex()) as usize;
    let hi = (exact.end - edges.first_vertex()) as usize;
    let mut metrics: [Vec<Observation>; 6] = Default::default();
    let mut ordering_ok = true;
    for m in &all[lo..hi] {
        for (slot, value) in metrics.iter_mut().zip(metric_fields(m)) {
            slot.extend(value);
        }
        if let (Some(Observation::Exact(t)), Some(Observation::Exact(n)), Some(Observation::Exact(n1))) =
            (m.total_length, m.longest, m.shortest_right)
        {
            ordering_ok &= t >= n && n >= n1;
        }
    }
    let mut c = CensoringSummary::default();
    for (o, (&l, &r)) in rep.arrows.left_counts().iter().zip(rep.arrows.right_counts()).enumerate() {
        if (lo..hi).contains(&o) {
            c.left_stubs += u64::from(l);
            c.right_stubs += u64::from(r);
        }
    }
    for s in edges.censored().iter().filter(|s| exact.contains(&s.vertex)) {
        match s.direction {
            Direction::Right => c.right_censored += 1,
            Direction::Left => c.left_censored += 1,
        }
    }
    let mut matched = edges.matched_degrees();
    for s in edges.censored() {
        matched[(s.vertex - edges.first_vertex()) as usize] += 1;
    }
    Ok(RepStats {
        metrics,
        censoring: c,
        window_stubs: edges.stub_count() as u64,
        window_unmatched: edges.censored().len() as u64,
        degree_ok: matched == rep.degrees,
        ordering_ok,
        nested_ok: is_nested(edges.edges()),
        coin: rep.coin,
        degrees: rep.degrees[lo..hi].to_vec(),
    })
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn summarize_metric(samples: &[Observation], cutoffs: &[u64]) -> Result<MetricSummary, ExperimentError> {
    let censored = samples.iter().filter(|o| o.is_censored()).count();
    let truncated_means = if samples.is_empty() {
        vec![0.0; cutoffs.len()]
    } else {
        truncated_mean_curve(samples, cutoffs)?
    };
    let tail_fit = survival_curve::<f64>(samples)
        .ok()
        .and_then(|curve| tail_exponent(&curve, TAIL_GRID.0, TAIL_GRID.1).ok())
        .map(|fit| TailFitSummary {
            n_lo: TAIL_GRID.0,
            n_hi: TAIL_GRID.1,
            slope: fit.slope,
            slope_lo: fit.slope_lo,
            slope_hi: fit.slope_hi,
        });
    Ok(MetricSummary {
        samples: samples.len(),
        censored,
        censored_fraction: ratio(censored as u64, samples.len() as u64),
        cutoffs: cutoffs.to_vec(),
        truncated_means,
        tail_fit,
    })
}

/// Report plus the per-metric samples and the first replication, for dumps.
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub samples: BTreeMap<String, Vec<Observation>>,
    pub first: Replication,
}

/// Run every replication (on `jobs` threads when given) and merge.
pub fn run(config: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentOutcome, ExperimentError> {
    config.validate()?;
    let dist = config.distribution()?;
    let seeds = SeedTree::new(config.seed);
    let work = || -> Result<Vec<RepStats>, ExperimentError> {
        (0..config.reps)
            .into_par_iter()
            .map(|k| run_replication(config, &dist, &seeds, k).and_then(|r| rep_stats(&r)))
            .collect()
    };
    let reps = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| ExperimentError::Config(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let first = run_replication(config, &dist, &seeds, 0)?;
    let exact = first.edges.exact_vertices()?;

    let cutoffs = config.cutoffs();
    let mut merged: [Vec<Observation>; 6] = Default::default();
    let mut c = CensoringSummary::default();
    let (mut window_stubs, mut window_unmatched) = (0u64, 0u64);
    let (mut degree_ok, mut ordering_ok, mut nested_ok) = (true, true, true);
    let mut coins = Vec::new();
    let mut degrees = Vec::new();
    for r in reps {
        for (dst, src) in merged.iter_mut().zip(r.metrics) {
            dst.extend(src);
        }
        c.right_stubs += r.censoring.right_stubs;
        c.right_censored += r.censoring.right_censored;
        c.left_stubs += r.censoring.left_stubs;
        c.left_censored += r.censoring.left_censored;
        window_stubs += r.window_stubs;
        window_unmatched += r.window_unmatched;
        degree_ok &= r.degree_ok;
        ordering_ok &= r.ordering_ok;
        nested_ok &= r.nested_ok;
        coins.extend(r.coin);
        degrees.extend(r.degrees);
    }
    c.right_fraction = ratio(c.right_censored, c.right_stubs);
    c.left_fraction = ratio(c.left_censored, c.left_stubs);
    c.fraction = ratio(c.right_censored + c.left_censored, c.right_stubs + c.left_stubs);
    c.window_unmatched_fraction = ratio(window_unmatched, window_stubs);

    let mut metrics = BTreeMap::new();
    let mut samples = BTreeMap::new();
    for (name, obs) in METRIC_NAMES.iter().zip(merged) {
        metrics.insert(name.to_string(), summarize_metric(&obs, &cutoffs)?);
        samples.insert(name.to_string(), obs);
    }
    let checks = vec![
        Check {
            name: "degree_preservation".into(),
            pass: degree_ok,
            detail: "matched plus censored stubs equal the sampled degree at every vertex".into(),
        },
        Check {
            name: "crossing_free".into(),
            pass: nested_ok,
            detail: "no two edges cross".into(),
        },
        Check {
            name: "metric_ordering".into(),
            pass: ordering_ok,
            detail: "T >= N >= N_1^(r) wherever all three are resolved".into(),
        },
    ];
    let report = ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        config_hash: config.hash(),
        rng: RngInfo {
            generator: RNG_IDENTITY.to_string(),
            root_seed: config.seed,
            substreams: vec!["degrees/rep_k".into(), "directions/rep_k".into(), "coin/rep_k".into()],
        },
        exact_window: (exact.start, exact.end),
        vertices: degrees.len(),
        degree_tv: crate::degree::tv_to_distribution(&degrees, &dist),
        coins,
        censoring: c,
        pass: checks.iter().all(|c| c.pass),
        metrics,
        checks,
    };
    Ok(ExperimentOutcome { report, samples, first })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_seconds: f64,
    pub jobs: Option<usize>,
}

/// Run and write `report.json`, `timing.json`, `edges.csv` and `censored.csv`
/// (first replication), `truncated_means.csv` and `survival_<metric>.csv` into
/// `out`.
pub fn run_to_dir(config: &ExperimentConfig, out: &Path, jobs: Option<usize>) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let outcome = run(config, jobs)?;
    write_outputs(&outcome, out)?;
    let timing = Timing {
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        jobs,
    };
    io::write_json(io::create(&out.join("timing.json"))?, &timing)?;
    Ok(outcome.report)
}

pub fn write_outputs(outcome: &ExperimentOutcome, out: &Path) -> Result<(), ExperimentError> {
    io::write_json(io::create(&out.join("report.json"))?, &outcome.report)?;
    io::write_edges(io::create(&out.join("edges.csv"))?, &outcome.first.edges, None)?;
    io::write_censored(io::create(&out.join("censored.csv"))?, &outcome.first.edges)?;
    let mut rows = Vec::new();
    for (name, summary) in &outcome.report.metrics {
        for (c, m) in summary.cutoffs.iter().zip(&summary.truncated_means) {
            rows.push((name.clone(), *c, *m));
        }
        if let Ok(curve) = survival_curve::<f64>(&outcome.samples[name]) {
            let curve: SurvivalCurve<f64> = curve;
            io::write_survival(io::create(&out.join(format!("survival_{name}.csv")))?, &curve)?;
        }
    }
    io::write_truncated_means(io::create(&out.join("truncated_means.csv"))?, &rows)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let mut c = ExperimentConfig::new("0:0.3333,2:0.3333,4:0.3334", 1000, 7);
        c.cutoffs = Some(vec![10, 100]);
        c.out = Some(PathBuf::from("runs/a"));
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), c);
        let minimal: ExperimentConfig = serde_json::from_str(r#"{"dist": "1:1", "window": 100}"#).unwrap();
        assert_eq!(minimal.max_step(), 25);
        assert_eq!(minimal.cutoffs(), vec![10]);
        assert_eq!(minimal.reps, 1);
    }

    #[test]
    fn validation() {
        let ok = ExperimentConfig::new("1:1", 100, 0);
        assert!(ok.validate().is_ok());
        let mut c = ok.clone();
        c.max_step = Some(51);
        assert!(matches!(c.validate(), Err(ExperimentError::Config(_))));
        let mut c = ok.clone();
        c.reps = 0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.cutoffs = Some(vec![10, 5]);
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.policy = PolicyKind::Balanced;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.dist = "1:0.5,x".into();
        assert!(c.validate().unwrap_err().is_usage());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"dist": "1:1", "window": 100, "typo": 1}"#).is_err());
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = ExperimentConfig::new("1:1", 100, 0);
        let mut b = a.clone();
        b.out = Some(PathBuf::from("elsewhere"));
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.seed = 1;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn deterministic_and_schedule_independent() {
        let mut c = ExperimentConfig::new("1:1", 1000, 11);
        c.reps = 4;
        let a = run(&c, Some(1)).unwrap().report;
        let b = run(&c, Some(3)).unwrap().report;
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.pass);
        assert_eq!(a.vertices, 4 * 500);
    }

    #[test]
    fn all_right_arrows_are_censored() {
        let mut c = ExperimentConfig::new("1:1", 1000, 3);
        c.p = 1.0;
        let r = run(&c, None).unwrap().report;
        assert_eq!(r.censoring.right_fraction, 1.0);
        assert_eq!(r.censoring.left_stubs, 0);
        assert_eq!(r.metrics["shortest_right"].censored_fraction, 1.0);
    }

    #[test]
    fn single_coin_policy() {
        let mut c = ExperimentConfig::new("1:1", 1000, 5);
        c.policy = PolicyKind::Delta1Coin;
        c.reps = 3;
        let r = run(&c, None).unwrap().report;
        assert_eq!(r.coins.len(), 3);
        // an unaligned window leaves at most the two end stubs unmatched
        assert_eq!(r.censoring.fraction, 0.0);
        assert_eq!(r.metrics["total_length"].truncated_means, vec![1.0, 1.0]);
    }
}
