//! Two constructions with dependent directions whose edges have finite mean
//! length: balanced directions on even degrees, and the single-coin parity rule
//! for degree one.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arrows::{assign_directions_balanced, assign_directions_delta1, ArrowConfiguration, ArrowError, Coin};
use crate::degree::{sample_degrees, DegreeDistribution};
use crate::rng::SeedTree;
use crate::sprd::{sprd_pair, EdgeConfiguration, SprdError};
use crate::stats::{truncated_mean_curve, Observation, StatsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AltRuleError {
    #[error("n must be at least 1")]
    ZeroN,
    #[error("window length {0} must be even")]
    OddWindow(usize),
    #[error(transparent)]
    Arrows(#[from] ArrowError),
    #[error(transparent)]
    Sprd(#[from] SprdError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Cutoffs for the total-length truncated means.
pub const PLATEAU_CUTOFFS: [u64; 2] = [100, 1000];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example51Summary {
    pub n: u32,
    pub window: usize,
    pub max_step: u64,
    /// Vertices in the exact sub-window that the summary averages over.
    pub vertices: usize,
    /// Mean longest right edge, counting vertices without right arrows as 0.
    pub mean_longest_right: f64,
    /// Same mean over vertices that carry at least one right arrow.
    pub mean_longest_right_given_any: f64,
    /// Stubs in the exact sub-window left unmatched after `max_step`.
    pub censored_stubs: usize,
    pub cutoffs: Vec<u64>,
    /// `E[min(T, M)]` for the per-vertex total edge length `T` (0 at isolated
    /// vertices).
    pub total_length_truncated_means: Vec<f64>,
    /// `(tm[last] - tm[0]) / tm[0]`.
    pub plateau_relative_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example51Run {
    pub arrows: ArrowConfiguration,
    pub edges: EdgeConfiguration,
    pub summary: Example51Summary,
}

/// Degrees uniform on `{0, 2, ..., 2n}`, balanced directions, stepwise pairing
/// with `max_step = window / 4`.
pub fn run_example_51(n: u32, window: usize, seed: u64) -> Result<Example51Run, AltRuleError> {
    if n == 0 {
        return Err(AltRuleError::ZeroN);
    }
    let dist = DegreeDistribution::<f64>::uniform_even(n);
    let degrees = sample_degrees(&dist, window, &mut SeedTree::new(seed).stream("degrees"));
    let arrows = assign_directions_balanced(&degrees, 0)?;
    let max_step = (window / 4) as u64;
    let edges = sprd_pair(&arrows, max_step);
    let summary = summarize_51(n, &edges)?;
    Ok(Example51Run { arrows, edges, summary })
}

fn summarize_51(n: u32, edges: &EdgeConfiguration) -> Result<Example51Summary, AltRuleError> {
    let exact = edges.exact_vertices()?;
    let metrics = edges.all_metrics();
    let inside = &metrics[(exact.start - edges.first_vertex()) as usize..(exact.end - edges.first_vertex()) as usize];
    let censored_stubs = edges.censored().iter().filter(|c| exact.contains(&c.vertex)).count();
    let longest: Vec<u64> = inside
        .iter()
        .map(|m| m.longest_right.map_or(0, |o| o.lower_bound()))
        .collect();
    let with_right: Vec<u64> = inside
        .iter()
        .filter_map(|m| m.longest_right.map(|o| o.lower_bound()))
        .collect();
    let totals: Vec<Observation> = inside
        .iter()
        .map(|m| m.total_length.unwrap_or(Observation::Exact(0)))
        .collect();
    let tm: Vec<f64> = truncated_mean_curve(&totals, &PLATEAU_CUTOFFS)?;
    let mean = |v: &[u64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<u64>() as f64 / v.len() as f64
        }
    };
    let plateau_relative_change = if tm[0] > 0.0 { (tm[1] - tm[0]) / tm[0] } else { 0.0 };
    Ok(Example51Summary {
        n,
        window: edges.window_len(),
        max_step: edges.max_step(),
        vertices: inside.len(),
        mean_longest_right: mean(&longest),
        mean_longest_right_given_any: mean(&with_right),
        censored_stubs,
        cutoffs: PLATEAU_CUTOFFS.to_vec(),
        total_length_truncated_means: tm,
        plateau_relative_change,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example52Run {
    pub coin: Coin,
    pub arrows: ArrowConfiguration,
    pub edges: EdgeConfiguration,
}

/// Draw the coin from the `coin` substream of `seed`.
pub fn coin_from_seed(seed: u64) -> Coin {
    if SeedTree::new(seed).stream("coin").gen_bool(0.5) {
        Coin::Heads
    } else {
        Coin::Tails
    }
}

/// Degree-one configuration directed by a single coin and paired stepwise.
/// The window starts on a right-pointing vertex so it tiles into unit edges.
pub fn run_example_52(window: usize, seed: u64) -> Result<Example52Run, AltRuleError> {
    run_example_52_with(window, coin_from_seed(seed))
}

pub fn run_example_52_with(window: usize, coin: Coin) -> Result<Example52Run, AltRuleError> {
    if window % 2 == 1 {
        return Err(AltRuleError::OddWindow(window));
    }
    let first_vertex = match coin {
        Coin::Heads => 1,
        Coin::Tails => 0,
    };
    let arrows = assign_directions_delta1(window, first_vertex, coin);
    let edges = sprd_pair(&arrows, (window as u64 / 4).max(1));
    Ok(Example52Run { coin, arrows, edges })
}
