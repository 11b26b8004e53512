//! Stepwise pairing: right-arrows at `i` are joined to left-arrows at `i + n`
//! for `n = 1, 2, ...`, always consuming the lowest free rank first.
//!
//! [`sprd_pair`] computes the outcome with a single left-to-right stack sweep:
//! the stepwise rule produces the unique crossing-free matching, and an edge of
//! length `n` from vertex `i` depends only on the arrows in `[i, i + n]`, so the
//! stack matching filtered to lengths `<= max_step` is exactly the state after
//! step `max_step`. [`stepwise_reference`] runs the literal step loop and is kept
//! as an independent route for tests.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arrows::{ArrowConfiguration, Direction};
use crate::stats::Observation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SprdError {
    #[error("exact sub-window is empty: 2 * max_step ({max_step}) >= window length ({window_len})")]
    EmptyRange { window_len: usize, max_step: u64 },
    #[error("vertex {0} is outside the window")]
    OutsideWindow(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    /// Vertex carrying the right-arrow.
    pub left: i64,
    /// Vertex carrying the left-arrow.
    pub right: i64,
    /// Step at which the edge was created (pairing step, or sweep for ARW).
    pub step: u64,
    pub right_rank: u32,
    pub left_rank: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CensoredStub {
    pub vertex: i64,
    pub direction: Direction,
    pub rank: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// A window of the integer line; no wrap-around.
    Line,
    /// A cycle of the window length; edge lengths are cyclic distances.
    Cycle,
}

/// A partial matching of right-arrows to left-arrows over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeConfiguration {
    pub(crate) first_vertex: i64,
    pub(crate) window_len: usize,
    pub(crate) topology: Topology,
    pub(crate) max_step: u64,
    pub(crate) edges: Vec<Edge>,
    pub(crate) censored: Vec<CensoredStub>,
}

impl EdgeConfiguration {
    pub fn new(
        first_vertex: i64,
        window_len: usize,
        topology: Topology,
        max_step: u64,
        mut edges: Vec<Edge>,
        mut censored: Vec<CensoredStub>,
    ) -> Self {
        edges.sort_unstable();
        censored.sort_unstable();
        Self {
            first_vertex,
            window_len,
            topology,
            max_step,
            edges,
            censored,
        }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn censored(&self) -> &[CensoredStub] {
        &self.censored
    }

    pub fn first_vertex(&self) -> i64 {
        self.first_vertex
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn max_step(&self) -> u64 {
        self.max_step
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn edge_length(&self, e: &Edge) -> u64 {
        let d = e.right.abs_diff(e.left);
        match self.topology {
            Topology::Line => d,
            Topology::Cycle => d.min(self.window_len as u64 - d),
        }
    }

    /// Sorted endpoint pairs, the identity of the graph ignoring stub labels.
    pub fn endpoint_multiset(&self) -> Vec<(i64, i64)> {
        let mut pairs: Vec<(i64, i64)> = self.edges.iter().map(|e| (e.left, e.right)).collect();
        pairs.sort_unstable();
        pairs
    }

    /// Total stubs (matched and censored).
    pub fn stub_count(&self) -> usize {
        2 * self.edges.len() + self.censored.len()
    }

    /// Absolute vertices whose pairing up to `max_step` agrees with the
    /// infinite-lattice outcome.
    pub fn exact_vertices(&self) -> Result<Range<i64>, SprdError> {
        let offsets = exactness_radius(self.window_len, self.max_step)?;
        Ok(self.first_vertex + offsets.start as i64..self.first_vertex + offsets.end as i64)
    }

    pub fn is_boundary_affected(&self, vertex: i64) -> bool {
        self.exact_vertices()
            .map(|r| !r.contains(&vertex))
            .unwrap_or(true)
    }

    /// Per-vertex degree of the matched graph, indexed by window offset.
    pub fn matched_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.window_len];
        for e in &self.edges {
            deg[(e.left - self.first_vertex) as usize] += 1;
            deg[(e.right - self.first_vertex) as usize] += 1;
        }
        deg
    }

    pub fn edge_metrics(&self, vertex: i64) -> Result<EdgeMetrics, SprdError> {
        if !(self.first_vertex..self.first_vertex + self.window_len as i64).contains(&vertex) {
            return Err(SprdError::OutsideWindow(vertex));
        }
        let mut acc = MetricsAccumulator::default();
        for e in self.edges.iter().filter(|e| e.left == vertex || e.right == vertex) {
            self.accumulate_edge(&mut acc, e, vertex);
        }
        for c in self.censored.iter().filter(|c| c.vertex == vertex) {
            acc.censored(c.direction, c.rank);
        }
        Ok(acc.finish(self.max_step))
    }

    /// Metrics for every vertex of the window, indexed by offset.
    pub fn all_metrics(&self) -> Vec<EdgeMetrics> {
        let mut accs = vec![MetricsAccumulator::default(); self.window_len];
        for e in &self.edges {
            for v in [e.left, e.right] {
                let o = (v - self.first_vertex) as usize;
                self.accumulate_edge(&mut accs[o], e, v);
            }
        }
        for c in &self.censored {
            accs[(c.vertex - self.first_vertex) as usize].censored(c.direction, c.rank);
        }
        accs.into_iter().map(|a| a.finish(self.max_step)).collect()
    }

    fn accumulate_edge(&self, acc: &mut MetricsAccumulator, e: &Edge, vertex: i64) {
        let len = self.edge_length(e);
        if e.left == vertex {
            acc.matched(Direction::Right, e.right_rank, len);
        }
        if e.right == vertex {
            acc.matched(Direction::Left, e.left_rank, len);
        }
    }
}

/// Edge-length summaries at one vertex. `None` means the vertex has no stub of
/// the relevant kind; censored values are lower bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EdgeMetrics {
    pub shortest_right: Option<Observation>,
    pub shortest_left: Option<Observation>,
    pub longest_right: Option<Observation>,
    pub longest_left: Option<Observation>,
    pub longest: Option<Observation>,
    pub total_length: Option<Observation>,
}

#[derive(Debug, Clone, Copy, Default)]
struct MetricsAccumulator {
    first_right: Option<Option<u64>>,
    first_left: Option<Option<u64>>,
    max_right: Option<Option<u64>>,
    max_left: Option<Option<u64>>,
    known_total: u64,
    censored_count: u64,
    stubs: u64,
}

fn fold_max(slot: &mut Option<Option<u64>>, value: Option<u64>) {
    *slot = Some(match (*slot, value) {
        (None, v) => v,
        (Some(None), _) | (_, None) => None,
        (Some(Some(a)), Some(b)) => Some(a.max(b)),
    });
}

impl MetricsAccumulator {
    fn matched(&mut self, dir: Direction, rank: u32, len: u64) {
        self.stubs += 1;
        self.known_total += len;
        self.record(dir, rank, Some(len));
    }

    fn censored(&mut self, dir: Direction, rank: u32) {
        self.stubs += 1;
        self.censored_count += 1;
        self.record(dir, rank, None);
    }

    fn record(&mut self, dir: Direction, rank: u32, len: Option<u64>) {
        let (first, max) = match dir {
            Direction::Right => (&mut self.first_right, &mut self.max_right),
            Direction::Left => (&mut self.first_left, &mut self.max_left),
        };
        if rank == 1 {
            *first = Some(len);
        }
        fold_max(max, len);
    }

    fn finish(self, max_step: u64) -> EdgeMetrics {
        let obs = |v: Option<Option<u64>>| {
            v.map(|inner| match inner {
                Some(len) => Observation::Exact(len),
                None => Observation::Censored { above: max_step },
            })
        };
        let mut longest = self.max_right;
        if let Some(l) = self.max_left {
            fold_max(&mut longest, l);
        }
        let total_length = (self.stubs > 0).then(|| {
            if self.censored_count == 0 {
                Observation::Exact(self.known_total)
            } else {
                Observation::Censored {
                    above: self.known_total + self.censored_count * max_step,
                }
            }
        });
        EdgeMetrics {
            shortest_right: obs(self.first_right),
            shortest_left: obs(self.first_left),
            longest_right: obs(self.max_right),
            longest_left: obs(self.max_left),
            longest: obs(longest),
            total_length,
        }
    }
}

/// Offsets `[max_step, len - max_step)` of vertices far enough from both ends
/// that every edge of length `<= max_step` touching them is decided inside the
/// window.
pub fn exactness_radius(window_len: usize, max_step: u64) -> Result<Range<usize>, SprdError> {
    if 2 * max_step >= window_len as u64 {
        return Err(SprdError::EmptyRange { window_len, max_step });
    }
    let m = max_step as usize;
    Ok(m..window_len - m)
}

/// Stepwise pairing up to `max_step`; stubs still free afterwards are censored.
pub fn sprd_pair(cfg: &ArrowConfiguration, max_step: u64) -> EdgeConfiguration {
    let left = cfg.left_counts();
    let right = cfg.right_counts();
    let base = cfg.first_vertex();
    // (offset, rank) of free right-arrows; the nearest vertex, lowest rank is on top
    let mut stack: Vec<(usize, u32)> = Vec::new();
    let mut edges = Vec::with_capacity(cfg.total_left().min(cfg.total_right()) as usize);
    let mut censored = Vec::new();

    for o in 0..cfg.len() {
        for left_rank in 1..=left[o] {
            match stack.pop() {
                Some((i, right_rank)) if ((o - i) as u64) <= max_step => edges.push(Edge {
                    left: base + i as i64,
                    right: base + o as i64,
                    step: (o - i) as u64,
                    right_rank,
                    left_rank,
                }),
                Some((i, right_rank)) => {
                    censored.push(CensoredStub {
                        vertex: base + i as i64,
                        direction: Direction::Right,
                        rank: right_rank,
                    });
                    censored.push(CensoredStub {
                        vertex: base + o as i64,
                        direction: Direction::Left,
                        rank: left_rank,
                    });
                }
                None => censored.push(CensoredStub {
                    vertex: base + o as i64,
                    direction: Direction::Left,
                    rank: left_rank,
                }),
            }
        }
        stack.extend((1..=right[o]).rev().map(|rank| (o, rank)));
    }
    censored.extend(stack.into_iter().map(|(i, rank)| CensoredStub {
        vertex: base + i as i64,
        direction: Direction::Right,
        rank,
    }));
    EdgeConfiguration::new(base, cfg.len(), Topology::Line, max_step, edges, censored)
}

/// Literal step loop: for `n = 1..=max_step`, join `min(free R_i, free L_{i+n})`
/// arrows for every pair, lowest ranks first. `O(len * max_step)`.
pub fn stepwise_reference(cfg: &ArrowConfiguration, max_step: u64) -> EdgeConfiguration {
    stepwise_with_order(cfg, max_step, |_: &mut Vec<usize>| {})
}

/// The step loop with the pairs of each step visited in a random order.
pub fn stepwise_shuffled<R: Rng + ?Sized>(
    cfg: &ArrowConfiguration,
    max_step: u64,
    rng: &mut R,
) -> EdgeConfiguration {
    stepwise_with_order(cfg, max_step, |order: &mut Vec<usize>| order.shuffle(rng))
}

fn stepwise_with_order(
    cfg: &ArrowConfiguration,
    max_step: u64,
    mut reorder: impl FnMut(&mut Vec<usize>),
) -> EdgeConfiguration {
    let len = cfg.len();
    let base = cfg.first_vertex();
    let (left, right) = (cfg.left_counts(), cfg.right_counts());
    let mut used_left = vec![0u32; len];
    let mut used_right = vec![0u32; len];
    let mut edges = Vec::new();
    let steps = max_step.min(len.saturating_sub(1) as u64) as usize;
    for n in 1..=steps {
        let mut order: Vec<usize> = (0..len - n).collect();
        reorder(&mut order);
        for i in order {
            let j = i + n;
            let k = (right[i] - used_right[i]).min(left[j] - used_left[j]);
            for _ in 0..k {
                used_right[i] += 1;
                used_left[j] += 1;
                edges.push(Edge {
                    left: base + i as i64,
                    right: base + j as i64,
                    step: n as u64,
                    right_rank: used_right[i],
                    left_rank: used_left[j],
                });
            }
        }
    }
    let mut censored = Vec::new();
    for o in 0..len {
        let v = base + o as i64;
        censored.extend((used_right[o] + 1..=right[o]).map(|rank| CensoredStub {
            vertex: v,
            direction: Direction::Right,
            rank,
        }));
        censored.extend((used_left[o] + 1..=left[o]).map(|rank| CensoredStub {
            vertex: v,
            direction: Direction::Left,
            rank,
        }));
    }
    EdgeConfiguration::new(base, len, Topology::Line, max_step, edges, censored)
}
