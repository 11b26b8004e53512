//! Arrow configurations: stubs with a direction attached, stored as per-vertex
//! counts `(L_i, R_i)` over a window `[first_vertex, first_vertex + len)`.
//!
//! Stubs of the same direction at a vertex are exchangeable, so counts are a
//! sufficient representation as long as downstream code consumes them in rank
//! order (`r_{i,1}` before `r_{i,2}`, and so on).

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArrowError {
    #[error("direction probability {0} outside [0, 1]")]
    POutOfRange(f64),
    #[error("vertex {vertex} has odd degree {degree}; balanced directions need even degrees")]
    OddDegree { vertex: i64, degree: u32 },
    #[error("left and right count vectors differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coin {
    Heads,
    Tails,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum DirectionPolicy {
    /// Each stub independently points right with probability `p`.
    Iid { p: f64 },
    /// `k` arrows each way at a vertex of degree `2k`.
    Balanced,
    /// One stub per vertex, direction fixed by parity and a single coin.
    Delta1Coin { coin: Coin },
    /// Counts supplied directly.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrowConfiguration {
    first_vertex: i64,
    left: Vec<u32>,
    right: Vec<u32>,
    policy: DirectionPolicy,
}

impl ArrowConfiguration {
    pub fn from_counts(first_vertex: i64, left: Vec<u32>, right: Vec<u32>) -> Result<Self, ArrowError> {
        if left.len() != right.len() {
            return Err(ArrowError::LengthMismatch {
                left: left.len(),
                right: right.len(),
            });
        }
        Ok(Self {
            first_vertex,
            left,
            right,
            policy: DirectionPolicy::Explicit,
        })
    }

    pub fn first_vertex(&self) -> i64 {
        self.first_vertex
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    /// One past the last absolute vertex.
    pub fn end_vertex(&self) -> i64 {
        self.first_vertex + self.len() as i64
    }

    pub fn policy(&self) -> DirectionPolicy {
        self.policy
    }

    pub fn left_counts(&self) -> &[u32] {
        &self.left
    }

    pub fn right_counts(&self) -> &[u32] {
        &self.right
    }

    /// Window offset of absolute vertex `v`, if inside.
    pub fn offset_of(&self, v: i64) -> Option<usize> {
        let off = v - self.first_vertex;
        (0..self.len() as i64).contains(&off).then_some(off as usize)
    }

    pub fn left_at(&self, v: i64) -> u32 {
        self.offset_of(v).map_or(0, |o| self.left[o])
    }

    pub fn right_at(&self, v: i64) -> u32 {
        self.offset_of(v).map_or(0, |o| self.right[o])
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.left.iter().zip(&self.right).map(|(l, r)| l + r).collect()
    }

    pub fn total_left(&self) -> u64 {
        self.left.iter().map(|&x| u64::from(x)).sum()
    }

    pub fn total_right(&self) -> u64 {
        self.right.iter().map(|&x| u64::from(x)).sum()
    }

    /// Exchange `L_i` and `R_i` at every vertex.
    pub fn swap_directions(&self) -> Self {
        Self {
            first_vertex: self.first_vertex,
            left: self.right.clone(),
            right: self.left.clone(),
            policy: self.policy,
        }
    }
}

/// Point each stub right independently with probability `p`.
pub fn assign_directions_iid<R: Rng + ?Sized>(
    degrees: &[u32],
    first_vertex: i64,
    p: f64,
    rng: &mut R,
) -> Result<ArrowConfiguration, ArrowError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ArrowError::POutOfRange(p));
    }
    let mut left = Vec::with_capacity(degrees.len());
    let mut right = Vec::with_capacity(degrees.len());
    for &d in degrees {
        let r = (0..d).filter(|_| rng.gen_bool(p)).count() as u32;
        right.push(r);
        left.push(d - r);
    }
    Ok(ArrowConfiguration {
        first_vertex,
        left,
        right,
        policy: DirectionPolicy::Iid { p },
    })
}

pub fn assign_directions_balanced(
    degrees: &[u32],
    first_vertex: i64,
) -> Result<ArrowConfiguration, ArrowError> {
    if let Some((i, &d)) = degrees.iter().enumerate().find(|(_, d)| *d % 2 == 1) {
        return Err(ArrowError::OddDegree {
            vertex: first_vertex + i as i64,
            degree: d,
        });
    }
    let half: Vec<u32> = degrees.iter().map(|d| d / 2).collect();
    Ok(ArrowConfiguration {
        first_vertex,
        left: half.clone(),
        right: half,
        policy: DirectionPolicy::Balanced,
    })
}

/// Degree-one configuration: on heads odd vertices point right and even ones
/// left, on tails the reverse. Parity is taken on the absolute coordinate.
pub fn assign_directions_delta1(window_len: usize, first_vertex: i64, coin: Coin) -> ArrowConfiguration {
    let right_parity = match coin {
        Coin::Heads => 1,
        Coin::Tails => 0,
    };
    let right: Vec<u32> = (0..window_len as i64)
        .map(|o| u32::from((first_vertex + o).rem_euclid(2) == right_parity))
        .collect();
    let left = right.iter().map(|r| 1 - r).collect();
    ArrowConfiguration {
        first_vertex,
        left,
        right,
        policy: DirectionPolicy::Delta1Coin { coin },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;
    use proptest::prelude::*;

    #[test]
    fn degenerate_probabilities() {
        let degrees = [0, 3, 1, 2];
        let mut rng = SeedTree::new(1).stream("directions");
        let all_right = assign_directions_iid(&degrees, 0, 1.0, &mut rng).unwrap();
        assert_eq!(all_right.right_counts(), &degrees);
        assert_eq!(all_right.left_counts(), &[0, 0, 0, 0]);
        let all_left = assign_directions_iid(&degrees, 0, 0.0, &mut rng).unwrap();
        assert_eq!(all_left.left_counts(), &degrees);
        assert_eq!(
            assign_directions_iid(&degrees, 0, 1.5, &mut rng),
            Err(ArrowError::POutOfRange(1.5))
        );
    }

    #[test]
    fn fair_directions_split_evenly() {
        let degrees = vec![1; 100_000];
        let mut rng = SeedTree::new(2).stream("directions");
        let cfg = assign_directions_iid(&degrees, 0, 0.5, &mut rng).unwrap();
        let frac = cfg.total_right() as f64 / 100_000.0;
        assert!((frac - 0.5).abs() < 0.005, "right fraction {frac}");
    }

    #[test]
    fn balanced_rule() {
        let cfg = assign_directions_balanced(&[4, 0, 2], 0).unwrap();
        assert_eq!(cfg.left_counts(), &[2, 0, 1]);
        assert_eq!(cfg.right_counts(), &[2, 0, 1]);
        assert_eq!(
            assign_directions_balanced(&[2, 3], 10),
            Err(ArrowError::OddDegree { vertex: 11, degree: 3 })
        );
    }

    #[test]
    fn delta1_coin_rule() {
        let heads = assign_directions_delta1(4, 0, Coin::Heads);
        assert_eq!(heads.right_counts(), &[0, 1, 0, 1]);
        assert_eq!(heads.left_counts(), &[1, 0, 1, 0]);
        let tails = assign_directions_delta1(4, 0, Coin::Tails);
        assert_eq!(tails.right_counts(), &[1, 0, 1, 0]);
        // absolute parity, including negative coordinates
        let shifted = assign_directions_delta1(3, -3, Coin::Heads);
        assert_eq!(shifted.right_counts(), &[1, 0, 1]);
        let single = assign_directions_delta1(1, 7, Coin::Heads);
        assert_eq!(single.right_counts(), &[1]);
    }

    #[test]
    fn windows_of_one_realization_agree() {
        let wide = assign_directions_delta1(10, 0, Coin::Tails);
        let narrow = assign_directions_delta1(4, 3, Coin::Tails);
        for v in 3..7 {
            assert_eq!(wide.right_at(v), narrow.right_at(v));
        }
    }

    #[test]
    fn swap_is_an_involution() {
        let cfg = ArrowConfiguration::from_counts(0, vec![1, 0, 2], vec![0, 3, 1]).unwrap();
        let swapped = cfg.swap_directions();
        assert_eq!(swapped.left_counts(), &[0, 3, 1]);
        assert_eq!(swapped.swap_directions(), cfg);
        assert_eq!(swapped.degrees(), cfg.degrees());
    }

    #[test]
    fn swapped_fair_configuration_has_same_law() {
        // At p = 1/2 the swap (L, R) -> (R, L) preserves the law; compare the
        // histogram of R over a swapped sample with a fresh sample.
        let degrees = vec![3; 200_000];
        let tree = SeedTree::new(5);
        let a = assign_directions_iid(&degrees, 0, 0.5, &mut tree.stream("a")).unwrap();
        let b = assign_directions_iid(&degrees, 0, 0.5, &mut tree.stream("b")).unwrap();
        let swapped = a.swap_directions();
        let hist = |c: &ArrowConfiguration| {
            let mut h = [0f64; 4];
            for &r in c.right_counts() {
                h[r as usize] += 1.0 / 200_000.0;
            }
            h
        };
        let (hs, hb) = (hist(&swapped), hist(&b));
        let tv: f64 = hs.iter().zip(&hb).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.01, "tv {tv}");
    }

    proptest! {
        #[test]
        fn directions_preserve_degrees(
            degrees in proptest::collection::vec(0u32..6, 0..50),
            p in 0.0f64..=1.0,
            seed in any::<u64>(),
        ) {
            let cfg = assign_directions_iid(&degrees, -4, p, &mut SeedTree::new(seed).stream("d")).unwrap();
            prop_assert_eq!(cfg.degrees(), degrees);
        }
    }
}
