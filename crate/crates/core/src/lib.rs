//! Organized complexity of finite distributions.
//!
//! Oc-circuits are stochastic finite-state machines built from an
//! AND/OR/NOT circuit. This crate encodes them canonically, runs them
//! exactly, searches for the shortest one within a statistical distance of
//! a target, compiles epsilon-machines into them, and evaluates semantic
//! measures defined through them.
//!
//! Probabilities are generic over [`scalar::Scalar`]; complexity decisions
//! use the exact [`Rational`] instantiation.
//!
//! ```
//! use orgcx::search::{oc_search, SearchBudget, SearchStatus};
//! use orgcx::{Distribution, Rational};
//!
//! let x = Distribution::from_json(r#"{"n": 1, "probs": {"0": "3/4", "1": "1/4"}}"#).unwrap();
//! let r = oc_search(&x, &Rational::from_integer(0.into()), &SearchBudget::with_max_bits(32)).unwrap();
//! assert_eq!((r.status, r.oc_bits), (SearchStatus::ExactMinimum, 31));
//! ```

pub mod bitio;
pub mod circuit;
pub mod dist;
pub mod epsmachine;
pub mod ocmachine;
pub mod scalar;
pub mod search;
pub mod semantics;

pub use bitio::codec::CODEC_VERSION;
pub use bitio::BitString;

/// Exact probability.
pub type Rational = num_rational::BigRational;
/// Exact distribution; the object whose complexity is measured.
pub type Distribution = dist::FiniteDistribution<Rational>;
pub type FloatDistribution = dist::FiniteDistribution<f64>;
pub type F32Distribution = dist::FiniteDistribution<f32>;
