//! Stationary random graphs on the integer line with i.i.d. prescribed degrees.
//!
//! Stubs are attached to vertices with degrees drawn from a finite-support law,
//! given directions, and paired. The crate provides the stepwise pairing, an
//! annihilating-random-walk pairing, the deterministic-direction constructions
//! that achieve finite mean edge length, the associated random walks and their
//! exact first-passage laws, a small-instance exhaustive oracle, a Bernoulli
//! shift recoding built on the pairing, and the estimators used to read heavy
//! tails off finite windows.

pub mod alt_rules;
pub mod arrows;
pub mod arw;
pub mod degree;
pub mod experiment;
pub mod io;
pub mod meshalkin;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod sprd;
pub mod stats;
pub mod suite;
pub mod walks;

pub use num_rational::BigRational;

pub use arrows::{ArrowConfiguration, Coin, Direction, DirectionPolicy};
pub use degree::DegreeDistribution;
pub use rng::SeedTree;
pub use scalar::Scalar;
pub use sprd::{Edge, EdgeConfiguration, EdgeMetrics};
pub use stats::{Observation, SurvivalCurve};
pub use walks::{IncrementKind, PassageDirection, PassagePmf, WalkRealization};

/// Degree law with floating-point probabilities.
pub type DegreeDistributionF64 = DegreeDistribution<f64>;
/// Degree law with exact rational probabilities.
pub type ExactDegreeDistribution = DegreeDistribution<BigRational>;
pub type SurvivalCurveF64 = SurvivalCurve<f64>;
pub type ExactSurvivalCurve = SurvivalCurve<BigRational>;
pub type PassagePmfF64 = PassagePmf<f64>;
pub type ExactPassagePmf = PassagePmf<BigRational>;
