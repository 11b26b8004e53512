//! Random-walk skeleton of an arrow configuration.
//!
//! Two increment sequences are read off the counts:
//! `Δ_i = L_i - R_i` (i.i.d. under random directions) and
//! `X_i = L_i - R_{i-1}` (neighbouring vertices, so `X_i` and `X_{i+1}` share
//! vertex `i`). `S_n^(m) = X_{m+1} + ... + X_{m+n}`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arrows::{assign_directions_iid, ArrowConfiguration, ArrowError};
use crate::degree::{sample_degrees, DegreeDistribution};
use crate::scalar::{binomial, powi, Scalar};
use crate::stats::Observation;

/// Largest horizon accepted by [`exact_passage_pmf`].
pub const EXACT_MAX_STEPS: usize = 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("offset {offset} leaves no increments inside [{first}, {end})")]
    OffsetOutOfWindow { offset: i64, first: i64, end: i64 },
    #[error("horizon {horizon} exceeds the {available} increments available after offset {offset}")]
    HorizonBeyondWindow { offset: i64, horizon: usize, available: usize },
    #[error("exact passage pmf limited to n_max <= {EXACT_MAX_STEPS}, got {0}")]
    TooLarge(usize),
    #[error("direction probability outside [0, 1]")]
    POutOfRange,
    #[error(transparent)]
    Arrows(#[from] ArrowError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncrementKind {
    /// `Δ_i = L_i - R_i`
    Delta,
    /// `X_i = L_i - R_{i-1}`
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PassageDirection {
    /// first `n` with `S_n >= level`
    Up,
    /// first `n` with `S_n <= level`
    Down,
}

impl PassageDirection {
    fn hit<T: Scalar>(self, sum: i64, level: &T) -> bool {
        let s = T::from_int(sum);
        match self {
            PassageDirection::Up => s >= *level,
            PassageDirection::Down => s <= *level,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkRealization {
    first_vertex: i64,
    left: Vec<u32>,
    delta: Vec<i64>,
    /// `x[k] = X_{first_vertex + 1 + k}`
    x: Vec<i64>,
    prefix_delta: Vec<i64>,
    prefix_x: Vec<i64>,
    paths: BTreeMap<i64, Vec<i64>>,
}

/// Compute `Δ`, `X`, their prefix sums, and `S^(m)` for each requested offset.
pub fn build_walk(cfg: &ArrowConfiguration, offsets: &[i64]) -> Result<WalkRealization, WalkError> {
    let (left, right) = (cfg.left_counts(), cfg.right_counts());
    let delta: Vec<i64> = left
        .iter()
        .zip(right)
        .map(|(l, r)| i64::from(*l) - i64::from(*r))
        .collect();
    let x: Vec<i64> = (1..cfg.len())
        .map(|o| i64::from(left[o]) - i64::from(right[o - 1]))
        .collect();
    let prefix = |v: &[i64]| {
        std::iter::once(0)
            .chain(v.iter().scan(0i64, |acc, d| {
                *acc += d;
                Some(*acc)
            }))
            .collect::<Vec<i64>>()
    };
    let mut walk = WalkRealization {
        first_vertex: cfg.first_vertex(),
        left: left.to_vec(),
        prefix_delta: prefix(&delta),
        prefix_x: prefix(&x),
        delta,
        x,
        paths: BTreeMap::new(),
    };
    for &m in offsets {
        let available = walk.available(m)?;
        let path = (1..=available).map(|n| walk.s(m, n)).collect();
        walk.paths.insert(m, path);
    }
    Ok(walk)
}

impl WalkRealization {
    pub fn first_vertex(&self) -> i64 {
        self.first_vertex
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    /// Number of increments after offset `m` that lie in the window.
    pub fn available(&self, m: i64) -> Result<usize, WalkError> {
        let end = self.first_vertex + self.len() as i64;
        if m < self.first_vertex || m + 1 >= end {
            return Err(WalkError::OffsetOutOfWindow {
                offset: m,
                first: self.first_vertex,
                end,
            });
        }
        Ok((end - 1 - m) as usize)
    }

    fn off(&self, v: i64) -> usize {
        (v - self.first_vertex) as usize
    }

    /// `Δ_v`.
    pub fn delta(&self, v: i64) -> i64 {
        self.delta[self.off(v)]
    }

    /// `X_v`, defined for `v > first_vertex`.
    pub fn x(&self, v: i64) -> i64 {
        self.x[self.off(v) - 1]
    }

    pub fn x_increments(&self) -> &[i64] {
        &self.x
    }

    pub fn delta_increments(&self) -> &[i64] {
        &self.delta
    }

    /// `S_n^(m) = Σ_{i=m+1}^{m+n} X_i`.
    pub fn s(&self, m: i64, n: usize) -> i64 {
        let o = self.off(m);
        self.prefix_x[o + n] - self.prefix_x[o]
    }

    /// `Σ_{i=m+1}^{m+n} Δ_i`.
    pub fn delta_sum(&self, m: i64, n: usize) -> i64 {
        let o = self.off(m) + 1;
        self.prefix_delta[o + n] - self.prefix_delta[o]
    }

    /// `S'_n = Σ_{i=m+1}^{m+n-1} Δ_i + L_{m+n}`, the count that decides whether
    /// the first right-arrow at `m` is matched by vertex `m + n`.
    pub fn s_prime(&self, m: i64, n: usize) -> i64 {
        self.delta_sum(m, n - 1) + i64::from(self.left[self.off(m) + n])
    }

    /// Stored `S^(m)` path, `S_1^(m), S_2^(m), ...`, if `m` was requested.
    pub fn path(&self, m: i64) -> Option<&[i64]> {
        self.paths.get(&m).map(Vec::as_slice)
    }

    pub fn sum(&self, kind: IncrementKind, m: i64, n: usize) -> i64 {
        match kind {
            IncrementKind::Delta => self.delta_sum(m, n),
            IncrementKind::X => self.s(m, n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstPassage<T> {
    pub offset: i64,
    pub level: T,
    pub direction: PassageDirection,
    /// `Exact(tau)` or censored above the horizon.
    pub tau: Observation,
}

/// First `n <= horizon` at which the walk from `m` reaches `level`.
pub fn first_passage<T: Scalar>(
    walk: &WalkRealization,
    m: i64,
    level: T,
    direction: PassageDirection,
    kind: IncrementKind,
    horizon: usize,
) -> Result<FirstPassage<T>, WalkError> {
    let available = walk.available(m)?;
    if horizon > available {
        return Err(WalkError::HorizonBeyondWindow {
            offset: m,
            horizon,
            available,
        });
    }
    let tau = (1..=horizon)
        .find(|&n| direction.hit(walk.sum(kind, m, n), &level))
        .map_or(Observation::Censored { above: horizon as u64 }, |n| {
            Observation::Exact(n as u64)
        });
    Ok(FirstPassage {
        offset: m,
        level,
        direction,
        tau,
    })
}

/// Law of `(L, R)` at one vertex: degree from `dist`, each stub right w.p. `p`.
pub fn vertex_law<T: Scalar>(dist: &DegreeDistribution<T>, p: &T) -> Vec<((u32, u32), T)> {
    let q = T::one() - p.clone();
    let mut out = Vec::new();
    for (d, f) in dist.atoms() {
        for r in 0..=*d {
            let w = f.clone() * binomial::<T>(*d, r) * powi(p, r) * powi(&q, d - r);
            if w != T::zero() {
                out.push(((d - r, r), w));
            }
        }
    }
    out
}

/// Exact law of a first-passage time, `P(tau = n)` for `n = 1..=n_max` plus the
/// mass not absorbed by `n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassagePmf<T> {
    pub atoms: Vec<T>,
    pub censored: T,
}

impl<T: Scalar> PassagePmf<T> {
    pub fn at(&self, n: usize) -> T {
        self.atoms.get(n.wrapping_sub(1)).cloned().unwrap_or_else(T::zero)
    }

    /// `P(tau > n)` for `n <= n_max`.
    pub fn survival(&self, n: usize) -> T {
        self.atoms
            .iter()
            .skip(n)
            .fold(self.censored.clone(), |acc, a| acc + a.clone())
    }
}

/// Exact passage-time law by dynamic programming.
///
/// For `Δ` increments the state is the running sum. For `X` increments it is
/// `(running sum, R at the latest vertex)`, which carries the whole dependence
/// between consecutive increments; the offset vertex `m` starts with its
/// unconditional `R` law.
pub fn exact_passage_pmf<T: Scalar>(
    dist: &DegreeDistribution<T>,
    p: &T,
    kind: IncrementKind,
    level: &T,
    direction: PassageDirection,
    n_max: usize,
) -> Result<PassagePmf<T>, WalkError> {
    if n_max > EXACT_MAX_STEPS {
        return Err(WalkError::TooLarge(n_max));
    }
    if *p < T::zero() || *p > T::one() {
        return Err(WalkError::POutOfRange);
    }
    let law = vertex_law(dist, p);
    let mut state: BTreeMap<(i64, u32), T> = BTreeMap::new();
    match kind {
        IncrementKind::Delta => {
            state.insert((0, 0), T::one());
        }
        IncrementKind::X => {
            for ((_, r), w) in &law {
                add(&mut state, (0, *r), w.clone());
            }
        }
    }
    let mut atoms = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        let mut next: BTreeMap<(i64, u32), T> = BTreeMap::new();
        let mut absorbed = T::zero();
        for ((sum, r_prev), mass) in &state {
            for ((l, r), w) in &law {
                let (step, key_r) = match kind {
                    IncrementKind::Delta => (i64::from(*l) - i64::from(*r), 0),
                    IncrementKind::X => (i64::from(*l) - i64::from(*r_prev), *r),
                };
                let s = sum + step;
                let m = mass.clone() * w.clone();
                if direction.hit(s, level) {
                    absorbed = absorbed + m;
                } else {
                    add(&mut next, (s, key_r), m);
                }
            }
        }
        atoms.push(absorbed);
        state = next;
    }
    let censored = state.into_values().fold(T::zero(), |acc, m| acc + m);
    Ok(PassagePmf { atoms, censored })
}

fn add<T: Scalar>(map: &mut BTreeMap<(i64, u32), T>, key: (i64, u32), mass: T) {
    let slot = map.entry(key).or_insert_with(T::zero);
    *slot = slot.clone() + mass;
}

/// Monte Carlo passage times from simulated configurations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageSampler {
    pub p: f64,
    pub kind: IncrementKind,
    pub level: f64,
    pub direction: PassageDirection,
    pub horizon: usize,
    /// Distance between consecutive offsets. `stride > horizon` gives
    /// independent samples; smaller strides reuse the same configuration.
    pub stride: usize,
}

impl PassageSampler {
    /// Draw one configuration long enough for `count` offsets and return the
    /// passage time from each.
    pub fn sample<T: Scalar, R: Rng + ?Sized>(
        &self,
        dist: &DegreeDistribution<T>,
        count: usize,
        rng: &mut R,
    ) -> Result<Vec<Observation>, WalkError> {
        let stride = self.stride.max(1);
        let len = (count.saturating_sub(1)) * stride + self.horizon + 2;
        let degrees = sample_degrees(dist, len, rng);
        let cfg = assign_directions_iid(&degrees, 0, self.p, rng)?;
        let walk = build_walk(&cfg, &[])?;
        (0..count)
            .map(|k| {
                first_passage(
                    &walk,
                    (k * stride) as i64,
                    self.level,
                    self.direction,
                    self.kind,
                    self.horizon,
                )
                .map(|fp| fp.tau)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn cfg(left: &[u32], right: &[u32]) -> ArrowConfiguration {
        ArrowConfiguration::from_counts(0, left.to_vec(), right.to_vec()).unwrap()
    }

    #[test]
    fn increments_from_counts() {
        let w = build_walk(&cfg(&[0, 2], &[1, 0]), &[0]).unwrap();
        assert_eq!(w.x(1), 1);
        assert_eq!(w.delta(0), -1);
        assert_eq!(w.delta(1), 2);
        assert_eq!(w.path(0), Some(&[1][..]));
    }

    #[test]
    fn empty_configuration_is_flat() {
        let w = build_walk(&cfg(&[0; 6], &[0; 6]), &[0, 2]).unwrap();
        assert!(w.x_increments().iter().all(|&x| x == 0));
        assert!(w.path(2).unwrap().iter().all(|&s| s == 0));
    }

    #[test]
    fn offset_checks() {
        let c = cfg(&[0; 4], &[0; 4]);
        assert!(matches!(build_walk(&c, &[3]), Err(WalkError::OffsetOutOfWindow { .. })));
        assert!(matches!(build_walk(&c, &[-1]), Err(WalkError::OffsetOutOfWindow { .. })));
        let w = build_walk(&c, &[]).unwrap();
        assert!(matches!(
            first_passage(&w, 0, 1.0, PassageDirection::Up, IncrementKind::X, 4),
            Err(WalkError::HorizonBeyondWindow { available: 3, .. })
        ));
    }

    #[test]
    fn passage_uses_greater_or_equal() {
        // X = (-1, 1, 1): S = (-1, 0, 1)
        let w = build_walk(&cfg(&[0, 0, 1, 1], &[1, 0, 0, 0]), &[0]).unwrap();
        assert_eq!(w.path(0), Some(&[-1, 0, 1][..]));
        let up = |level: f64| first_passage(&w, 0, level, PassageDirection::Up, IncrementKind::X, 3).unwrap().tau;
        assert_eq!(up(0.0), Observation::Exact(2));
        assert_eq!(up(-1.0), Observation::Exact(1));
        assert_eq!(up(2.0), Observation::Censored { above: 3 });
        let down = first_passage(&w, 0, -1.0, PassageDirection::Down, IncrementKind::X, 3).unwrap();
        assert_eq!(down.tau, Observation::Exact(1));
    }

    #[test]
    fn s_prime_definition() {
        // offset 0; vertices 1..3 with (L, R) = (0,1), (1,0), (2,0)
        let w = build_walk(&cfg(&[0, 0, 1, 2], &[1, 1, 0, 0]), &[]).unwrap();
        assert_eq!(w.s_prime(0, 1), 0); // L_1
        assert_eq!(w.s_prime(0, 2), -1 + 1); // Δ_1 + L_2
        assert_eq!(w.s_prime(0, 3), -1 + 1 + 2);
    }

    /// Brute force over sign paths of the ±1 walk (delta_1, p = 1/2).
    fn brute_delta_passage(n_max: usize, level: i64) -> Vec<BigRational> {
        let mut counts = vec![0i64; n_max];
        for word in 0u32..(1 << n_max) {
            let mut s = 0i64;
            for n in 0..n_max {
                s += if (word >> n) & 1 == 1 { 1 } else { -1 };
                if s >= level {
                    counts[n] += 1;
                    break;
                }
            }
        }
        counts.into_iter().map(|c| q(c, 1 << n_max)).collect()
    }

    /// Brute force over direction words on `n_max + 1` vertices for X increments.
    fn brute_x_passage(n_max: usize, level: i64) -> Vec<BigRational> {
        let v = n_max + 1;
        let mut counts = vec![0i64; n_max];
        for word in 0u32..(1 << v) {
            let right: Vec<i64> = (0..v).map(|b| i64::from((word >> b) & 1)).collect();
            let mut s = 0i64;
            for n in 1..=n_max {
                s += (1 - right[n]) - right[n - 1];
                if s >= level {
                    counts[n - 1] += 1;
                    break;
                }
            }
        }
        counts.into_iter().map(|c| q(c, 1 << v)).collect()
    }

    #[test]
    fn delta_walk_exact_atoms() {
        let dist = DegreeDistribution::<BigRational>::point_mass(1);
        let pmf = exact_passage_pmf(&dist, &q(1, 2), IncrementKind::Delta, &q(1, 1), PassageDirection::Up, 5).unwrap();
        assert_eq!(pmf.atoms, vec![q(1, 2), q(0, 1), q(1, 8), q(0, 1), q(1, 16)]);
        assert_eq!(pmf.censored, q(5, 16));
        assert_eq!(pmf.atoms, brute_delta_passage(5, 1));
        let longer = exact_passage_pmf(&dist, &q(1, 2), IncrementKind::Delta, &q(1, 1), PassageDirection::Up, 9).unwrap();
        assert_eq!(longer.atoms, brute_delta_passage(9, 1));
    }

    #[test]
    fn x_walk_matches_direction_word_enumeration() {
        let dist = DegreeDistribution::<BigRational>::point_mass(1);
        for level in [0, 1, 2] {
            let pmf = exact_passage_pmf(&dist, &q(1, 2), IncrementKind::X, &q(level, 1), PassageDirection::Up, 6).unwrap();
            assert_eq!(pmf.atoms, brute_x_passage(6, level), "level {level}");
        }
    }

    #[test]
    fn one_step_law() {
        let dist: DegreeDistribution<BigRational> = "0:1/2,1:1/4,3:1/4".parse().unwrap();
        let p = q(1, 3);
        let pmf = exact_passage_pmf(&dist, &p, IncrementKind::Delta, &q(0, 1), PassageDirection::Up, 1).unwrap();
        let nonneg = vertex_law(&dist, &p)
            .into_iter()
            .filter(|((l, r), _)| l >= r)
            .fold(q(0, 1), |a, (_, w)| a + w);
        assert_eq!(pmf.atoms[0], nonneg);
        assert_eq!(pmf.atoms[0].clone() + pmf.censored, q(1, 1));
    }

    #[test]
    fn exact_guards() {
        let dist = DegreeDistribution::<f64>::point_mass(1);
        assert_eq!(
            exact_passage_pmf(&dist, &0.5, IncrementKind::X, &0.0, PassageDirection::Up, 15),
            Err(WalkError::TooLarge(15))
        );
        assert_eq!(
            exact_passage_pmf(&dist, &1.5, IncrementKind::X, &0.0, PassageDirection::Up, 3),
            Err(WalkError::POutOfRange)
        );
    }

    #[test]
    fn pmf_mass_is_conserved() {
        let dist: DegreeDistribution<BigRational> = "0:1/3,2:1/3,4:1/3".parse().unwrap();
        let pmf = exact_passage_pmf(&dist, &q(1, 2), IncrementKind::X, &q(4, 1), PassageDirection::Up, 8).unwrap();
        let total = pmf.atoms.iter().fold(pmf.censored.clone(), |a, b| a + b.clone());
        assert_eq!(total, q(1, 1));
        assert_eq!(pmf.survival(0), q(1, 1));
        // swapping directions negates every Δ at p = 1/2
        let up = exact_passage_pmf(&dist, &q(1, 2), IncrementKind::Delta, &q(4, 1), PassageDirection::Up, 8).unwrap();
        let down = exact_passage_pmf(&dist, &q(1, 2), IncrementKind::Delta, &q(-4, 1), PassageDirection::Down, 8).unwrap();
        assert_eq!(down, up);
    }

    #[test]
    fn monte_carlo_matches_exact_delta_law() {
        let dist = DegreeDistribution::<f64>::point_mass(1);
        let sampler = PassageSampler {
            p: 0.5,
            kind: IncrementKind::Delta,
            level: 1.0,
            direction: PassageDirection::Up,
            horizon: 9,
            stride: 10,
        };
        let taus = sampler.sample(&dist, 200_000, &mut SeedTree::new(12).stream("walk")).unwrap();
        let exact = exact_passage_pmf(&dist, &0.5, IncrementKind::Delta, &1.0, PassageDirection::Up, 9).unwrap();
        for n in 1..=9 {
            let frac = taus.iter().filter(|t| **t == Observation::Exact(n as u64)).count() as f64 / taus.len() as f64;
            assert!((frac - exact.at(n)).abs() < 0.005, "n={n}: {frac} vs {}", exact.at(n));
        }
    }

    #[test]
    fn drift_of_s_prime_at_biased_directions() {
        let dist = DegreeDistribution::<f64>::point_mass(1);
        let tree = SeedTree::new(13);
        let degrees = sample_degrees(&dist, 100_002, &mut tree.stream("degrees"));
        let c = assign_directions_iid(&degrees, 0, 0.6, &mut tree.stream("directions")).unwrap();
        let w = build_walk(&c, &[]).unwrap();
        let n = 100_000;
        let slope = w.s_prime(0, n) as f64 / n as f64;
        assert!((slope - (-0.2)).abs() < 0.02, "{slope}");
    }

    #[test]
    fn fair_delta_is_symmetric() {
        let dist: DegreeDistribution<f64> = "0:0.5,1:0.25,3:0.25".parse().unwrap();
        let tree = SeedTree::new(14);
        let degrees = sample_degrees(&dist, 200_000, &mut tree.stream("degrees"));
        let c = assign_directions_iid(&degrees, 0, 0.5, &mut tree.stream("directions")).unwrap();
        let w = build_walk(&c, &[]).unwrap();
        let pos = w.delta_increments().iter().filter(|&&d| d > 0).count() as f64;
        let neg = w.delta_increments().iter().filter(|&&d| d < 0).count() as f64;
        assert!((pos - neg).abs() / 200_000.0 < 0.01);
    }

    #[test]
    fn telescoping() {
        let dist: DegreeDistribution<f64> = "0:0.5,1:0.25,3:0.25".parse().unwrap();
        let tree = SeedTree::new(15);
        let degrees = sample_degrees(&dist, 500, &mut tree.stream("degrees"));
        let c = assign_directions_iid(&degrees, 0, 0.5, &mut tree.stream("directions")).unwrap();
        let w = build_walk(&c, &[0, 17]).unwrap();
        for m in [0i64, 17] {
            let path = w.path(m).unwrap();
            for n in 2..path.len() {
                assert_eq!(path[n - 1] - path[n - 2], w.x(m + n as i64));
            }
            assert_eq!(path[0], w.x(m + 1));
        }
    }
}
