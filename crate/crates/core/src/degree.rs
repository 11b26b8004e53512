//! The prescribed degree distribution `F` and i.i.d. degree sampling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DegreeError {
    #[error("distribution has no atoms")]
    Empty,
    #[error("negative probability {probability} at degree {degree}")]
    NegativeProb { degree: u32, probability: f64 },
    #[error("probabilities sum to {sum}, not 1")]
    SumNotOne { sum: f64 },
    #[error("degree {0} listed more than once")]
    DuplicateDegree(u32),
    #[error("cannot parse distribution literal: {0}")]
    Parse(String),
}

/// A finite-support pmf on the non-negative integers.
///
/// Atoms are kept sorted by degree with strictly increasing degrees; the
/// probabilities are normalized so they sum to exactly one in the scalar type.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution<T> {
    atoms: Vec<(u32, T)>,
    mean: T,
}

impl<T: Scalar> DegreeDistribution<T> {
    /// Validate and normalize `atoms`.
    ///
    /// The sum must be within [`Scalar::sum_tolerance`] of one; the residual is
    /// divided out so that downstream exact computations see a true pmf.
    pub fn new(atoms: impl IntoIterator<Item = (u32, T)>) -> Result<Self, DegreeError> {
        let mut sorted: BTreeMap<u32, T> = BTreeMap::new();
        for (degree, probability) in atoms {
            if probability < T::zero() {
                return Err(DegreeError::NegativeProb {
                    degree,
                    probability: probability.as_f64(),
                });
            }
            if sorted.insert(degree, probability).is_some() {
                return Err(DegreeError::DuplicateDegree(degree));
            }
        }
        if sorted.is_empty() {
            return Err(DegreeError::Empty);
        }
        let sum = sorted.values().fold(T::zero(), |acc, p| acc + p.clone());
        if (sum.clone() - T::one()).abs() > T::sum_tolerance() {
            return Err(DegreeError::SumNotOne { sum: sum.as_f64() });
        }
        let atoms: Vec<(u32, T)> = sorted
            .into_iter()
            .map(|(d, p)| (d, p / sum.clone()))
            .collect();
        let mean = atoms.iter().fold(T::zero(), |acc, (d, p)| {
            acc + T::from_int(i64::from(*d)) * p.clone()
        });
        Ok(Self { atoms, mean })
    }

    /// Point mass at `degree`.
    pub fn point_mass(degree: u32) -> Self {
        Self::new([(degree, T::one())]).expect("point mass is valid")
    }

    /// Uniform law on `{0, 2, ..., 2n}`.
    pub fn uniform_even(n: u32) -> Self {
        let w = T::one() / T::from_int(i64::from(n) + 1);
        Self::new((0..=n).map(|j| (2 * j, w.clone()))).expect("uniform law is valid")
    }

    pub fn atoms(&self) -> &[(u32, T)] {
        &self.atoms
    }

    pub fn mean(&self) -> &T {
        &self.mean
    }

    pub fn max_degree(&self) -> u32 {
        self.atoms.last().map(|(d, _)| *d).unwrap_or(0)
    }

    /// `P(D = degree)`.
    pub fn pmf(&self, degree: u32) -> T {
        self.atoms
            .binary_search_by_key(&degree, |(d, _)| *d)
            .map(|i| self.atoms[i].1.clone())
            .unwrap_or_else(|_| T::zero())
    }

    /// `true` when every atom with positive mass sits on an even degree.
    pub fn supported_on_even(&self) -> bool {
        self.atoms
            .iter()
            .all(|(d, p)| d % 2 == 0 || *p == T::zero())
    }

    /// Build an inverse-CDF sampler. Atoms with zero mass are never drawn.
    pub fn sampler(&self) -> DegreeSampler {
        let weights: Vec<f64> = self.atoms.iter().map(|(_, p)| p.as_f64()).collect();
        DegreeSampler {
            degrees: self.atoms.iter().map(|(d, _)| *d).collect(),
            index: WeightedIndex::new(weights).expect("validated pmf has positive mass"),
        }
    }

    /// Same distribution with `f64` probabilities.
    pub fn to_f64(&self) -> DegreeDistribution<f64> {
        DegreeDistribution {
            atoms: self.atoms.iter().map(|(d, p)| (*d, p.as_f64())).collect(),
            mean: self.mean.as_f64(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DegreeSampler {
    degrees: Vec<u32>,
    index: WeightedIndex<f64>,
}

impl Distribution<u32> for DegreeSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.degrees[self.index.sample(rng)]
    }
}

/// Draw `window_len` i.i.d. degrees from `dist`.
pub fn sample_degrees<T: Scalar, R: Rng + ?Sized>(
    dist: &DegreeDistribution<T>,
    window_len: usize,
    rng: &mut R,
) -> Vec<u32> {
    let sampler = dist.sampler();
    (0..window_len).map(|_| sampler.sample(rng)).collect()
}

/// Empirical pmf of a degree sample, as `degree -> frequency`.
pub fn empirical_pmf<T: Scalar>(degrees: &[u32]) -> BTreeMap<u32, T> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &d in degrees {
        *counts.entry(d).or_default() += 1;
    }
    let n = T::from_count(degrees.len().max(1));
    counts
        .into_iter()
        .map(|(d, c)| (d, T::from_count(c) / n.clone()))
        .collect()
}

/// Total variation distance between the empirical pmf of `degrees` and `dist`.
pub fn tv_to_distribution<T: Scalar>(degrees: &[u32], dist: &DegreeDistribution<T>) -> T {
    let empirical = empirical_pmf::<T>(degrees);
    let mut support: Vec<u32> = empirical.keys().copied().collect();
    support.extend(dist.atoms().iter().map(|(d, _)| *d));
    support.sort_unstable();
    support.dedup();
    let total = support.iter().fold(T::zero(), |acc, d| {
        let e = empirical.get(d).cloned().unwrap_or_else(T::zero);
        acc + (e - dist.pmf(*d)).abs()
    });
    total / T::from_int(2)
}

impl<T: Scalar> FromStr for DegreeDistribution<T> {
    type Err = DegreeError;

    /// Parses `"0:0.3333,2:0.3333,4:0.3334"`. Probabilities use the scalar's
    /// own syntax, so rationals accept `"1:1/2,3:1/2"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut atoms = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (degree, prob) = part
                .split_once(':')
                .ok_or_else(|| DegreeError::Parse(format!("missing ':' in {part:?}")))?;
            let degree: u32 = degree
                .trim()
                .parse()
                .map_err(|_| DegreeError::Parse(format!("bad degree {degree:?}")))?;
            let prob = T::parse_literal(prob)
                .ok_or_else(|| DegreeError::Parse(format!("bad probability {prob:?}")))?;
            atoms.push((degree, prob));
        }
        Self::new(atoms)
    }
}

impl<T: Scalar + fmt::Display> fmt::Display for DegreeDistribution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (d, p)) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}:{p}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn point_mass_has_unit_mean() {
        let dist = DegreeDistribution::<f64>::new([(1, 1.0)]).unwrap();
        assert_eq!(*dist.mean(), 1.0);
        let mut rng = SeedTree::new(3).stream("degrees");
        assert_eq!(sample_degrees(&dist, 5, &mut rng), vec![1; 5]);
        let zero = DegreeDistribution::<f64>::point_mass(0);
        assert_eq!(sample_degrees(&zero, 3, &mut rng), vec![0; 3]);
    }

    #[test]
    fn uniform_even_family_exact_mean() {
        let third = q(1, 3);
        let dist =
            DegreeDistribution::new([(0, third.clone()), (2, third.clone()), (4, third)]).unwrap();
        assert_eq!(*dist.mean(), q(2, 1));
        assert_eq!(dist, DegreeDistribution::<BigRational>::uniform_even(2));
        assert!(dist.supported_on_even());
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            DegreeDistribution::<f64>::new([(0, 0.5), (3, 0.6)]),
            Err(DegreeError::SumNotOne { .. })
        ));
        assert!(matches!(
            DegreeDistribution::<f64>::new([(0, -0.5), (3, 1.5)]),
            Err(DegreeError::NegativeProb { degree: 0, .. })
        ));
        assert_eq!(
            DegreeDistribution::<f64>::new([(2, 0.5), (2, 0.5)]),
            Err(DegreeError::DuplicateDegree(2))
        );
        assert_eq!(DegreeDistribution::<f64>::new([]), Err(DegreeError::Empty));
    }

    #[test]
    fn atoms_sorted_on_construction() {
        let dist = DegreeDistribution::<f64>::new([(4, 0.25), (0, 0.5), (1, 0.25)]).unwrap();
        let degrees: Vec<u32> = dist.atoms().iter().map(|(d, _)| *d).collect();
        assert_eq!(degrees, vec![0, 1, 4]);
        assert_eq!(dist.pmf(1), 0.25);
        assert_eq!(dist.pmf(2), 0.0);
    }

    #[test]
    fn parse_literal() {
        let dist: DegreeDistribution<f64> = "0:0.3333,2:0.3333,4:0.3334".parse().unwrap();
        assert_eq!(dist.atoms().len(), 3);
        assert!((dist.mean() - 2.0002).abs() < 1e-12);
        let exact: DegreeDistribution<BigRational> = "1:1/2, 3:1/2".parse().unwrap();
        assert_eq!(*exact.mean(), q(2, 1));
        let decimal: DegreeDistribution<BigRational> = "0:0.3333,2:0.3333,4:0.3334".parse().unwrap();
        assert_eq!(*decimal.mean(), q(20002, 10000));
        assert!(matches!(
            "0:0.3333,2:0.3333,4:0.3333".parse::<DegreeDistribution<f64>>(),
            Err(DegreeError::SumNotOne { .. })
        ));
        assert!(matches!(
            "0-1".parse::<DegreeDistribution<f64>>(),
            Err(DegreeError::Parse(_))
        ));
    }

    #[test]
    fn display_roundtrips() {
        let dist: DegreeDistribution<f64> = "0:0.5,1:0.25,3:0.25".parse().unwrap();
        let again: DegreeDistribution<f64> = dist.to_string().parse().unwrap();
        assert_eq!(dist, again);
    }

    #[test]
    fn empirical_tv_small_for_large_sample() {
        let dist = DegreeDistribution::<f64>::uniform_even(2);
        let mut rng = SeedTree::new(11).stream("degrees");
        let sample = sample_degrees(&dist, 100_000, &mut rng);
        assert!(tv_to_distribution(&sample, &dist) < 0.01);
    }

    #[test]
    fn tv_counts_missing_atoms() {
        let dist = DegreeDistribution::<f64>::new([(0, 0.5), (2, 0.5)]).unwrap();
        assert_eq!(tv_to_distribution(&[0, 0, 0, 0], &dist), 0.5);
        assert_eq!(tv_to_distribution(&[5, 5], &dist), 1.0);
    }

    proptest! {
        #[test]
        fn same_seed_same_degrees(seed in any::<u64>(), len in 1usize..200) {
            let dist = DegreeDistribution::<f64>::new([(0, 0.5), (1, 0.25), (3, 0.25)]).unwrap();
            let a = sample_degrees(&dist, len, &mut SeedTree::new(seed).stream("d"));
            let b = sample_degrees(&dist, len, &mut SeedTree::new(seed).stream("d"));
            prop_assert_eq!(&a, &b);
            prop_assert!(a.iter().all(|d| [0, 1, 3].contains(d)));
        }
    }
}
