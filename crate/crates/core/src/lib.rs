//! Genetic-programming binary classifier for class-imbalanced tabular data.
//!
//! An evolved [`ExprTree`] maps a feature vector to a real output; a
//! non-negative output predicts the minority class. Four fitness functions
//! ([`FitnessKind`]) trade off per-class accuracy against the magnitude of
//! incorrect outputs. The [`eval`] module runs the multi-run experiment
//! protocol and the population-size sweep on top of [`engine::evolve`].
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below pin the `f64` instantiation used by the command-line harness.

pub mod dataset;
pub mod engine;
pub mod error;
pub mod eval;
pub mod fitness;
pub mod params;
pub mod scalar;
pub mod sexpr;
pub mod tree;

pub use dataset::{Class, Dataset, NormStats, Profile, SplitSpec};
pub use engine::{evolve, Individual, RunOutcome};
pub use error::{Error, Result};
pub use eval::{ExperimentSummary, Metrics, RunRecord};
pub use fitness::{ConfusionCounts, ErrorSamples, FitnessKind};
pub use params::EvolutionParams;
pub use scalar::Scalar;
pub use tree::{ExprTree, Node, Op};

/// Deterministic generator used for every random decision in a run.
pub type GpRng = rand_chacha::ChaCha8Rng;

pub type Tree = ExprTree<f64>;
pub type Tree32 = ExprTree<f32>;
pub type Data = Dataset<f64>;
pub type Data32 = Dataset<f32>;
pub type Samples = ErrorSamples<f64>;
pub type Record = RunRecord<f64>;
pub type Summary = ExperimentSummary<f64>;
