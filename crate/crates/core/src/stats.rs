//! Estimators shared by the experiments: product-limit survival curves with
//! right censoring, truncated means, log-log tail slopes, and binned TV
//! distances for two-sample comparisons.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("no samples")]
    Empty,
    #[error("every sample is censored")]
    AllCensored,
    #[error("tail fit needs n_lo < n_hi and at least 5 dyadic points with positive survival (got {points})")]
    InsufficientRange { points: usize },
    #[error("cutoff {cutoff} exceeds the censoring horizon {horizon}")]
    CutoffBeyondHorizon { cutoff: u64, horizon: u64 },
    #[error("cutoffs must be strictly increasing")]
    CutoffsNotIncreasing,
}

/// A non-negative integer measurement, possibly right-censored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    Exact(u64),
    /// The true value is strictly greater than `above`.
    Censored { above: u64 },
}

impl Observation {
    pub fn is_censored(&self) -> bool {
        matches!(self, Observation::Censored { .. })
    }

    pub fn exact(&self) -> Option<u64> {
        match *self {
            Observation::Exact(v) => Some(v),
            Observation::Censored { .. } => None,
        }
    }

    /// Largest value known to be `<=` the truth.
    pub fn lower_bound(&self) -> u64 {
        match *self {
            Observation::Exact(v) => v,
            Observation::Censored { above } => above,
        }
    }

    /// `min(X, cutoff)` when it is determined, `None` otherwise.
    pub fn truncated(&self, cutoff: u64) -> Option<u64> {
        match *self {
            Observation::Exact(v) => Some(v.min(cutoff)),
            Observation::Censored { above } if above + 1 >= cutoff => Some(cutoff),
            Observation::Censored { .. } => None,
        }
    }
}

impl fmt::Display for Observation {
    /// `17` for exact values, `>17` for censored ones.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::Exact(v) => write!(f, "{v}"),
            Observation::Censored { above } => write!(f, ">{above}"),
        }
    }
}

/// Step function `n -> P(X > n)`, constant between event times.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve<T> {
    points: Vec<(u64, T)>,
}

impl<T: Scalar> SurvivalCurve<T> {
    /// Build a curve from `(n, P(X > n))` points, sorted by `n`.
    pub fn from_points(mut points: Vec<(u64, T)>) -> Self {
        points.sort_by_key(|(n, _)| *n);
        Self { points }
    }

    pub fn points(&self) -> &[(u64, T)] {
        &self.points
    }

    /// `P(X > n)`.
    pub fn at(&self, n: u64) -> T {
        match self.points.partition_point(|(t, _)| *t <= n) {
            0 => T::one(),
            i => self.points[i - 1].1.clone(),
        }
    }
}

/// Product-limit (Kaplan-Meier) estimate of `P(X > n)`.
///
/// A sample censored with `above = c` is in the risk set of every event time
/// `t <= c`.
pub fn survival_curve<T: Scalar>(samples: &[Observation]) -> Result<SurvivalCurve<T>, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut events: Vec<u64> = samples.iter().filter_map(Observation::exact).collect();
    if events.is_empty() {
        return Err(StatsError::AllCensored);
    }
    events.sort_unstable();
    let mut censored: Vec<u64> = samples
        .iter()
        .filter(|o| o.is_censored())
        .map(Observation::lower_bound)
        .collect();
    censored.sort_unstable();

    let mut survival = T::one();
    let mut points = Vec::new();
    let mut i = 0;
    while i < events.len() {
        let t = events[i];
        let ties = events[i..].partition_point(|&x| x == t);
        let exact_at_risk = events.len() - i;
        let censored_at_risk = censored.len() - censored.partition_point(|&c| c < t);
        let at_risk = T::from_count(exact_at_risk + censored_at_risk);
        survival = survival.clone() * (T::one() - T::from_count(ties) / at_risk);
        points.push((t, survival.clone()));
        i += ties;
    }
    Ok(SurvivalCurve { points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit<T> {
    pub slope: T,
    pub intercept: T,
    /// 95% band on the slope from the least-squares standard error.
    pub slope_lo: T,
    pub slope_hi: T,
    pub grid: Vec<(u64, T)>,
}

/// Least-squares slope of `ln P(X > n)` against `ln n` over the dyadic grid
/// `n_lo, 2 n_lo, 4 n_lo, ... <= n_hi`.
pub fn tail_exponent<T: Scalar + Float>(
    curve: &SurvivalCurve<T>,
    n_lo: u64,
    n_hi: u64,
) -> Result<TailFit<T>, StatsError> {
    if n_lo == 0 || n_lo >= n_hi {
        return Err(StatsError::InsufficientRange { points: 0 });
    }
    let grid: Vec<(u64, T)> = std::iter::successors(Some(n_lo), |n| n.checked_mul(2))
        .take_while(|n| *n <= n_hi)
        .map(|n| (n, curve.at(n)))
        .filter(|(_, s)| *s > T::zero())
        .collect();
    if grid.len() < 5 {
        return Err(StatsError::InsufficientRange { points: grid.len() });
    }
    let xs: Vec<T> = grid.iter().map(|(n, _)| T::from_u64(*n).unwrap().ln()).collect();
    let ys: Vec<T> = grid.iter().map(|(_, s)| s.ln()).collect();
    let k = T::from_count(grid.len());
    let mean = |v: &[T]| v.iter().fold(T::zero(), |a, b| a + *b) / k;
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxx = xs.iter().fold(T::zero(), |a, x| a + (*x - mx) * (*x - mx));
    let sxy = xs
        .iter()
        .zip(&ys)
        .fold(T::zero(), |a, (x, y)| a + (*x - mx) * (*y - my));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr = xs.iter().zip(&ys).fold(T::zero(), |a, (x, y)| {
        let r = *y - (intercept + slope * *x);
        a + r * r
    });
    let se = (ssr / (k - T::from_int(2)) / sxx).sqrt();
    let z = T::from_f64(1.96).unwrap();
    Ok(TailFit {
        slope,
        intercept,
        slope_lo: slope - z * se,
        slope_hi: slope + z * se,
        grid,
    })
}

/// `E[min(X, M)]` for each cutoff `M`.
pub fn truncated_mean_curve<T: Scalar>(
    samples: &[Observation],
    cutoffs: &[u64],
) -> Result<Vec<T>, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    if cutoffs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(StatsError::CutoffsNotIncreasing);
    }
    let n = T::from_count(samples.len());
    cutoffs
        .iter()
        .map(|&m| {
            let mut sum: u128 = 0;
            for s in samples {
                let v = s.truncated(m).ok_or(StatsError::CutoffBeyondHorizon {
                    cutoff: m,
                    horizon: s.lower_bound() + 1,
                })?;
                sum += u128::from(v);
            }
            let sum = T::from_u128(sum).expect("sum representable");
            Ok(sum / n.clone())
        })
        .collect()
}

/// `true` when every consecutive pair strictly increases.
pub fn strictly_increasing<T: PartialOrd>(values: &[T]) -> bool {
    values.windows(2).all(|w| w[0] < w[1])
}

/// Ratios `values[i + 1] / values[i]`.
pub fn growth_factors<T: Scalar>(values: &[T]) -> Vec<T> {
    values
        .windows(2)
        .map(|w| w[1].clone() / w[0].clone())
        .collect()
}

/// Total variation distance between the empirical laws of two samples, with
/// one bin per distinct value.
pub fn tv_distance<K: Ord, T: Scalar>(a: &[K], b: &[K]) -> T {
    let mut bins: BTreeMap<&K, (usize, usize)> = BTreeMap::new();
    for k in a {
        bins.entry(k).or_default().0 += 1;
    }
    for k in b {
        bins.entry(k).or_default().1 += 1;
    }
    let (na, nb) = (T::from_count(a.len().max(1)), T::from_count(b.len().max(1)));
    let total = bins.values().fold(T::zero(), |acc, (ca, cb)| {
        acc + (T::from_count(*ca) / na.clone() - T::from_count(*cb) / nb.clone()).abs()
    });
    total / T::from_int(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityCheck<T> {
    pub distance: T,
    pub tolerance: T,
    pub pass: bool,
}

/// Two-sample TV comparison of (already truncated) metric samples taken at two
/// vertices.
pub fn stationarity_check<K: Ord, T: Scalar>(at_u: &[K], at_v: &[K], tolerance: T) -> StationarityCheck<T> {
    let distance: T = tv_distance(at_u, at_v);
    let pass = distance < tolerance;
    StationarityCheck {
        distance,
        tolerance,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;
    use Observation::{Censored, Exact};

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn survival_by_counting() {
        let curve = survival_curve::<BigRational>(&[Exact(1), Exact(1), Exact(2)]).unwrap();
        assert_eq!(curve.at(0), q(1, 1));
        assert_eq!(curve.at(1), q(1, 3));
        assert_eq!(curve.at(2), q(0, 1));
        assert_eq!(curve.at(50), q(0, 1));
    }

    #[test]
    fn censored_samples_only_join_risk_sets() {
        // classic hand example: 1, 2+, 3, 3, 4+
        let samples = [Exact(1), Censored { above: 2 }, Exact(3), Exact(3), Censored { above: 4 }];
        let curve = survival_curve::<BigRational>(&samples).unwrap();
        assert_eq!(curve.at(1), q(4, 5));
        assert_eq!(curve.at(2), q(4, 5));
        // at t = 3 the risk set is {3, 3, 4+}
        assert_eq!(curve.at(3), q(4, 5) * q(1, 3));
    }

    #[test]
    fn survival_errors() {
        assert_eq!(survival_curve::<f64>(&[]), Err(StatsError::Empty));
        assert_eq!(
            survival_curve::<f64>(&[Censored { above: 5 }; 4]),
            Err(StatsError::AllCensored)
        );
    }

    #[test]
    fn exact_power_laws_fit_their_exponent() {
        for alpha in [0.5f64, 2.0] {
            let points = (0..8).map(|k| {
                let n = 32u64 << k;
                (n, (n as f64).powf(-alpha))
            });
            let curve = SurvivalCurve::from_points(points.collect());
            let fit = tail_exponent(&curve, 32, 4096).unwrap();
            assert!((fit.slope + alpha).abs() < 1e-6, "{alpha}: {}", fit.slope);
            assert!(fit.slope_hi - fit.slope_lo < 1e-6);
        }
    }

    #[test]
    fn tail_fit_needs_five_points() {
        let curve = SurvivalCurve::from_points(vec![(1u64, 0.5f64)]);
        assert!(matches!(
            tail_exponent(&curve, 32, 256),
            Err(StatsError::InsufficientRange { points: 4 })
        ));
        assert!(tail_exponent(&curve, 64, 32).is_err());
        let zero = SurvivalCurve::from_points(vec![(1u64, 0.0f64)]);
        assert!(tail_exponent(&zero, 32, 1024).is_err());
    }

    #[test]
    fn truncated_means() {
        let m = truncated_mean_curve::<f64>(&[Exact(3); 4], &[1, 2, 4]).unwrap();
        assert_eq!(m, vec![1.0, 2.0, 3.0]);
        let ones = truncated_mean_curve::<f64>(&[Exact(1); 10], &[1, 10, 100]).unwrap();
        assert_eq!(ones, vec![1.0; 3]);
        let cens = [Exact(2), Censored { above: 10 }];
        assert_eq!(truncated_mean_curve::<f64>(&cens, &[11]).unwrap(), vec![6.5]);
        assert_eq!(
            truncated_mean_curve::<f64>(&cens, &[12]),
            Err(StatsError::CutoffBeyondHorizon { cutoff: 12, horizon: 11 })
        );
        assert_eq!(
            truncated_mean_curve::<f64>(&cens, &[5, 5]),
            Err(StatsError::CutoffsNotIncreasing)
        );
    }

    #[test]
    fn tv_and_stationarity() {
        let a = [1u32, 2, 2, 3];
        let d: f64 = tv_distance(&a, &a);
        assert_eq!(d, 0.0);
        let exact: BigRational = tv_distance(&[1u32, 1], &[1u32, 2]);
        assert_eq!(exact, q(1, 2));
        let check = stationarity_check(&a, &[7u32, 8], 0.02);
        assert_eq!(check.distance, 1.0);
        assert!(!check.pass);
    }

    #[test]
    fn same_law_samples_are_close() {
        use crate::rng::SeedTree;
        use rand::Rng;
        let tree = SeedTree::new(9);
        let draw = |name: &str| {
            let mut rng = tree.stream(name);
            (0..100_000).map(|_| rng.gen_range(0..20u32)).collect::<Vec<_>>()
        };
        let d: f64 = tv_distance(&draw("u"), &draw("v"));
        assert!(d < 0.02, "{d}");
    }

    #[test]
    fn observation_display() {
        assert_eq!(Exact(4).to_string(), "4");
        assert_eq!(Censored { above: 9 }.to_string(), ">9");
    }

    proptest! {
        #[test]
        fn uncensored_km_is_empirical_survival(values in proptest::collection::vec(0u64..30, 1..60)) {
            let samples: Vec<Observation> = values.iter().map(|&v| Exact(v)).collect();
            let curve = survival_curve::<BigRational>(&samples).unwrap();
            for n in 0..32u64 {
                let above = values.iter().filter(|&&v| v > n).count();
                prop_assert_eq!(curve.at(n), q(above as i64, values.len() as i64));
            }
        }

        #[test]
        fn truncated_mean_monotone_in_cutoff(values in proptest::collection::vec(0u64..100, 1..60)) {
            let samples: Vec<Observation> = values.iter().map(|&v| Exact(v)).collect();
            let m = truncated_mean_curve::<f64>(&samples, &[1, 5, 25, 125]).unwrap();
            prop_assert!(m.windows(2).all(|w| w[0] <= w[1]));
            let mean = values.iter().sum::<u64>() as f64 / values.len() as f64;
            prop_assert!((m[3] - mean).abs() < 1e-9);
        }
    }
}
