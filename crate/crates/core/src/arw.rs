//! Annihilating-random-walk pairing on a cycle.
//!
//! Every stub releases a particle at its vertex. Particles perform lazy walks
//! (`±1` with probability 1/4 each, hold otherwise) in synchronous sweeps. After
//! each sweep, every site holding two or more live particles repeatedly picks a
//! uniformly random pair with distinct origins and annihilates it, recording an
//! edge between the two origin vertices. Particles from the same vertex never
//! annihilate.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::degree::{sample_degrees, DegreeDistribution};
use crate::rng::SeedTree;
use crate::scalar::Scalar;
use crate::sprd::{Edge, EdgeConfiguration, Topology};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArwError {
    #[error("total stub count {0} is odd")]
    OddTotal(u64),
    #[error("max_sweeps must be at least 1")]
    ZeroSweeps,
    #[error("stalemate after {sweeps} sweeps: {survivors} particles left, all from vertex {origin}")]
    Stalemate { sweeps: u64, survivors: usize, origin: i64 },
    #[error("{survivors} particles still alive after {max_sweeps} sweeps")]
    Timeout { max_sweeps: u64, survivors: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RunStatus {
    Ok,
    Stalemate,
    Timeout,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Ok => "OK",
            RunStatus::Stalemate => "STALEMATE",
            RunStatus::Timeout => "TIMEOUT",
        }
    }

    pub fn of(result: &Result<ArwRun, ArwError>) -> Option<Self> {
        match result {
            Ok(_) => Some(RunStatus::Ok),
            Err(ArwError::Stalemate { .. }) => Some(RunStatus::Stalemate),
            Err(ArwError::Timeout { .. }) => Some(RunStatus::Timeout),
            Err(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticleState {
    pub id: u32,
    pub origin_vertex: i64,
    pub origin_rank: u32,
    /// Site on the cycle, in `[0, W)`.
    pub position: u32,
    pub alive: bool,
    /// Id of the particle this one annihilated with.
    pub partner: Option<u32>,
    /// Sweeps survived.
    pub clock: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArwRun {
    pub edges: EdgeConfiguration,
    pub particles: Vec<ParticleState>,
    pub sweeps: u64,
}

/// Two random bits per particle move, drawn 64 at a time.
struct BitPool {
    word: u64,
    left: u32,
}

impl BitPool {
    fn take2<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> u64 {
        if self.left == 0 {
            self.word = rng.next_u64();
            self.left = 32;
        }
        let bits = self.word & 3;
        self.word >>= 2;
        self.left -= 1;
        bits
    }
}

/// Pair the stubs of `degrees` (vertices `0..W` on a cycle of size `W`).
pub fn arw_pair<R: Rng + ?Sized>(degrees: &[u32], rng: &mut R, max_sweeps: u64) -> Result<ArwRun, ArwError> {
    let total: u64 = degrees.iter().map(|&d| u64::from(d)).sum();
    if total % 2 == 1 {
        return Err(ArwError::OddTotal(total));
    }
    if max_sweeps == 0 {
        return Err(ArwError::ZeroSweeps);
    }
    let w = degrees.len();
    let mut particles = Vec::with_capacity(total as usize);
    for (v, &d) in degrees.iter().enumerate() {
        for rank in 1..=d {
            particles.push(ParticleState {
                id: particles.len() as u32,
                origin_vertex: v as i64,
                origin_rank: rank,
                position: v as u32,
                alive: true,
                partner: None,
                clock: 0,
            });
        }
    }
    let mut alive: Vec<u32> = (0..particles.len() as u32).collect();
    let mut edges = Vec::with_capacity(alive.len() / 2);
    // per-site linked lists, rebuilt every sweep; `stamp` avoids clearing
    let mut head = vec![u32::MAX; w];
    let mut stamp = vec![0u64; w];
    let mut crowded_stamp = vec![0u64; w];
    let mut next = vec![u32::MAX; particles.len()];
    let mut crowded: Vec<u32> = Vec::new();
    let mut group: Vec<u32> = Vec::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut bits = BitPool { word: 0, left: 0 };
    let wrap = w as u32;

    let mut sweep = 0u64;
    let mut survivors_changed = true;
    while !alive.is_empty() {
        if survivors_changed {
            check_stalemate(&particles, &alive, sweep)?;
        }
        if sweep == max_sweeps {
            return Err(ArwError::Timeout {
                max_sweeps,
                survivors: alive.len(),
            });
        }
        sweep += 1;
        crowded.clear();
        for &id in &alive {
            let p = &mut particles[id as usize];
            p.position = match bits.take2(rng) {
                0 => (p.position + 1) % wrap,
                1 => (p.position + wrap - 1) % wrap,
                _ => p.position,
            };
            p.clock = sweep;
            let site = p.position as usize;
            if stamp[site] != sweep {
                stamp[site] = sweep;
                head[site] = u32::MAX;
            } else if crowded_stamp[site] != sweep {
                crowded_stamp[site] = sweep;
                crowded.push(site as u32);
            }
            next[id as usize] = head[site];
            head[site] = id;
        }
        survivors_changed = false;
        for &site in &crowded {
            group.clear();
            let mut cur = head[site as usize];
            while cur != u32::MAX {
                group.push(cur);
                cur = next[cur as usize];
            }
            loop {
                pairs.clear();
                for i in 0..group.len() {
                    for j in i + 1..group.len() {
                        let (a, b) = (&particles[group[i] as usize], &particles[group[j] as usize]);
                        if a.origin_vertex != b.origin_vertex {
                            pairs.push((i, j));
                        }
                    }
                }
                if pairs.is_empty() {
                    break;
                }
                let (i, j) = pairs[rng.gen_range(0..pairs.len())];
                let (a, b) = (group[i], group[j]);
                edges.push(make_edge(&particles[a as usize], &particles[b as usize], sweep));
                for (x, y) in [(a, b), (b, a)] {
                    let p = &mut particles[x as usize];
                    p.alive = false;
                    p.partner = Some(y);
                }
                group.swap_remove(j);
                group.swap_remove(i);
                survivors_changed = true;
            }
        }
        if survivors_changed {
            alive.retain(|&id| particles[id as usize].alive);
        }
    }
    Ok(ArwRun {
        edges: EdgeConfiguration::new(0, w, Topology::Cycle, max_sweeps, edges, Vec::new()),
        particles,
        sweeps: sweep,
    })
}

fn check_stalemate(particles: &[ParticleState], alive: &[u32], sweeps: u64) -> Result<(), ArwError> {
    let origin = particles[alive[0] as usize].origin_vertex;
    if alive.iter().all(|&id| particles[id as usize].origin_vertex == origin) {
        return Err(ArwError::Stalemate {
            sweeps,
            survivors: alive.len(),
            origin,
        });
    }
    Ok(())
}

fn make_edge(a: &ParticleState, b: &ParticleState, sweep: u64) -> Edge {
    let (lo, hi) = if a.origin_vertex < b.origin_vertex { (a, b) } else { (b, a) };
    Edge {
        left: lo.origin_vertex,
        right: hi.origin_vertex,
        step: sweep,
        right_rank: lo.origin_rank,
        left_rank: hi.origin_rank,
    }
}

/// Outcome of a batch of ARW runs with resampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ArwBatch {
    /// One entry per requested run, `Ok` or timed out.
    pub runs: Vec<Result<ArwRun, ArwError>>,
    /// Degree sequences discarded for an odd stub total.
    pub parity_rejections: u64,
    /// Degree sequences discarded after a stalemate.
    pub stalemates: u64,
    /// Total attempted simulations (including stalemates).
    pub attempts: u64,
}

impl ArwBatch {
    pub fn stalemate_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.stalemates as f64 / self.attempts as f64
        }
    }
}

/// Run `runs` independent simulations on `W`-cycles, resampling degrees until
/// the total is even and rejecting stalemates. Runs execute in parallel; each
/// uses the substreams `arw/run_k/draw_j`.
pub fn arw_batch<T: Scalar>(
    dist: &DegreeDistribution<T>,
    window: usize,
    runs: usize,
    seeds: &SeedTree,
    max_sweeps: u64,
    max_attempts: u64,
) -> ArwBatch {
    use rayon::prelude::*;
    let per_run: Vec<(Result<ArwRun, ArwError>, u64, u64, u64)> = (0..runs)
        .into_par_iter()
        .map(|k| {
            let (mut parity, mut stalemates, mut attempts) = (0u64, 0u64, 0u64);
            for draw in 0u64.. {
                let mut rng = seeds.stream(&format!("arw/run_{k}/draw_{draw}"));
                let degrees = sample_degrees(dist, window, &mut rng);
                if degrees.iter().map(|&d| u64::from(d)).sum::<u64>() % 2 == 1 {
                    parity += 1;
                    continue;
                }
                attempts += 1;
                let result = arw_pair(&degrees, &mut rng, max_sweeps);
                if matches!(result, Err(ArwError::Stalemate { .. })) {
                    stalemates += 1;
                    if attempts < max_attempts {
                        continue;
                    }
                }
                return (result, parity, stalemates, attempts);
            }
            unreachable!()
        })
        .collect();
    let mut batch = ArwBatch {
        runs: Vec::with_capacity(runs),
        parity_rejections: 0,
        stalemates: 0,
        attempts: 0,
    };
    for (run, parity, stalemates, attempts) in per_run {
        batch.runs.push(run);
        batch.parity_rejections += parity;
        batch.stalemates += stalemates;
        batch.attempts += attempts;
    }
    batch
}

/// Checks that a run is a perfect, degree-preserving, cross-origin matching.
pub fn is_perfect_matching(run: &ArwRun, degrees: &[u32]) -> bool {
    let edges = &run.edges;
    edges.censored().is_empty()
        && edges.matched_degrees() == degrees
        && edges.edges().iter().all(|e| e.left != e.right)
        && run.particles.iter().all(|p| {
            !p.alive
                && p.partner.is_some_and(|q| {
                    let q = &run.particles[q as usize];
                    q.partner == Some(p.id) && q.origin_vertex != p.origin_vertex
                })
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{truncated_mean_curve, Observation};

    fn rng(seed: u64) -> crate::rng::StreamRng {
        SeedTree::new(seed).stream("arw")
    }

    #[test]
    fn two_cycle() {
        let run = arw_pair(&[1, 1], &mut rng(1), 1000).unwrap();
        assert_eq!(run.edges.endpoint_multiset(), vec![(0, 1)]);
        assert_eq!(run.edges.edge_length(&run.edges.edges()[0]), 1);
        assert!(is_perfect_matching(&run, &[1, 1]));
    }

    #[test]
    fn empty_degrees() {
        let run = arw_pair(&[0, 0, 0], &mut rng(2), 10).unwrap();
        assert!(run.edges.edges().is_empty());
        assert_eq!(run.sweeps, 0);
    }

    #[test]
    fn errors() {
        assert_eq!(arw_pair(&[1, 0, 0], &mut rng(3), 10).unwrap_err(), ArwError::OddTotal(1));
        assert_eq!(arw_pair(&[1, 1], &mut rng(3), 0).unwrap_err(), ArwError::ZeroSweeps);
        assert!(matches!(
            arw_pair(&[0, 2, 0], &mut rng(3), 10).unwrap_err(),
            ArwError::Stalemate { survivors: 2, origin: 1, .. }
        ));
        let far = [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0];
        assert!(matches!(
            arw_pair(&far, &mut rng(3), 2).unwrap_err(),
            ArwError::Timeout { max_sweeps: 2, survivors: 2 }
        ));
    }

    #[test]
    fn stalemate_after_partial_annihilation() {
        // one stub at 0 can only ever remove one of the three stubs at 2
        let result = arw_pair(&[1, 0, 3, 0], &mut rng(4), 1_000_000);
        assert!(matches!(result, Err(ArwError::Stalemate { survivors: 2, origin: 2, .. })));
    }

    #[test]
    fn multi_stub_vertices_match_perfectly() {
        let degrees = [2, 0, 1, 3, 0, 2, 1, 1, 0, 2];
        let run = arw_pair(&degrees, &mut rng(5), 10_000_000).unwrap();
        assert!(is_perfect_matching(&run, &degrees));
    }

    #[test]
    fn deterministic_given_seed() {
        let degrees = vec![1; 200];
        let a = arw_pair(&degrees, &mut rng(6), 10_000_000).unwrap();
        let b = arw_pair(&degrees, &mut rng(6), 10_000_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn delta1_batch() {
        let dist = DegreeDistribution::<f64>::point_mass(1);
        let batch = arw_batch(&dist, 500, 4, &SeedTree::new(7), 100 * 500 * 500, 10);
        assert_eq!(batch.stalemates, 0);
        for run in &batch.runs {
            let run = run.as_ref().unwrap();
            assert!(is_perfect_matching(run, &[1; 500]));
            let lengths: Vec<Observation> = run
                .edges
                .all_metrics()
                .iter()
                .map(|m| m.total_length.unwrap())
                .collect();
            assert!(lengths.iter().all(|l| l.exact().is_some_and(|x| (1..=250).contains(&x))));
            let tm: Vec<f64> = truncated_mean_curve(&lengths, &[10, 100]).unwrap();
            assert!(tm[1] > tm[0]);
        }
    }

    #[test]
    fn parity_resampling() {
        let dist: DegreeDistribution<f64> = "1:0.5,2:0.5".parse().unwrap();
        let batch = arw_batch(&dist, 41, 6, &SeedTree::new(8), 10_000_000, 50);
        assert!(batch.parity_rejections > 0);
        for run in batch.runs.iter().filter_map(|r| r.as_ref().ok()) {
            assert_eq!(run.edges.matched_degrees().iter().sum::<u32>() % 2, 0);
        }
    }
}
