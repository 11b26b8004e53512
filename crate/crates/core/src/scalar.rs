//! Scalar abstraction shared by probability-valued computations.
//!
//! Everything that carries a probability (degree pmfs, exact passage
//! distributions, survival estimates, TV distances) is generic over
//! [`Scalar`], so the same code runs in `f64` for simulation and in
//! [`BigRational`](num_rational::BigRational) when an exact answer is wanted.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar:
    Num + Signed + FromPrimitive + ToPrimitive + Clone + PartialOrd + Debug + Send + Sync + 'static
{
    /// Slack allowed when checking that probabilities sum to one.
    fn sum_tolerance() -> Self;

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar")
    }

    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer representable in scalar")
    }

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Parse a probability written as a decimal (`0.25`) or a fraction (`1/4`).
    fn parse_literal(s: &str) -> Option<Self>;
}

impl Scalar for f64 {
    fn sum_tolerance() -> Self {
        1e-12
    }

    fn parse_literal(s: &str) -> Option<Self> {
        match s.split_once('/') {
            Some((n, d)) => Some(n.trim().parse::<f64>().ok()? / d.trim().parse::<f64>().ok()?),
            None => s.trim().parse().ok(),
        }
    }
}

impl Scalar for f32 {
    fn sum_tolerance() -> Self {
        1e-6
    }

    fn parse_literal(s: &str) -> Option<Self> {
        f64::parse_literal(s).map(|x| x as f32)
    }
}

impl Scalar for BigRational {
    fn sum_tolerance() -> Self {
        Ratio::from_integer(BigInt::from(0))
    }

    /// Decimals are read exactly: `0.3333` is `3333/10000`.
    fn parse_literal(s: &str) -> Option<Self> {
        let s = s.trim();
        if s.contains('/') {
            return s.parse().ok();
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.starts_with(['+', '-']) || (int.is_empty() && frac.is_empty()) {
            return None;
        }
        let digits: BigInt = format!("{int}{frac}").parse().ok()?;
        let scale = BigInt::from(10).pow(frac.len() as u32);
        Some(Ratio::new(digits, scale))
    }
}

/// Binomial coefficient as a scalar, computed by the multiplicative formula.
pub(crate) fn binomial<T: Scalar>(n: u32, k: u32) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    let mut acc = T::one();
    for i in 0..k {
        acc = acc * T::from_int(i64::from(n - i)) / T::from_int(i64::from(i + 1));
    }
    acc
}

pub(crate) fn powi<T: Scalar>(base: &T, exp: u32) -> T {
    (0..exp).fold(T::one(), |acc, _| acc * base.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_rows() {
        let row: Vec<f64> = (0..=5).map(|k| binomial(5, k)).collect();
        assert_eq!(row, vec![1.0, 5.0, 10.0, 10.0, 5.0, 1.0]);
        assert_eq!(binomial::<f64>(3, 4), 0.0);
        let exact: BigRational = binomial(10, 3);
        assert_eq!(exact, BigRational::from_integer(120.into()));
    }

    #[test]
    fn literals() {
        let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(BigRational::parse_literal("0.3333"), Some(q(3333, 10000)));
        assert_eq!(BigRational::parse_literal("1/4"), Some(q(1, 4)));
        assert_eq!(BigRational::parse_literal("1"), Some(q(1, 1)));
        assert_eq!(BigRational::parse_literal(".5"), Some(q(1, 2)));
        assert_eq!(BigRational::parse_literal("x"), None);
        assert_eq!(BigRational::parse_literal("."), None);
        assert_eq!(f64::parse_literal("1/4"), Some(0.25));
        assert_eq!(f64::parse_literal("0.5"), Some(0.5));
    }

    #[test]
    fn rational_tolerance_is_exact() {
        assert!(BigRational::sum_tolerance() == BigRational::from_integer(0.into()));
    }
}
