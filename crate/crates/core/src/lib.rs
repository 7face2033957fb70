//! Multi-objective genetic programming for imbalanced binary classification.
//!
//! Programs are arithmetic expression trees evolved under MOEA/D with two
//! maximization objectives (true positive rate and true negative rate). The
//! engine supports the canonical neighborhood update as well as a
//! semantically ordered update, where the neighborhood is visited from the
//! most to the least semantically dissimilar member relative to a pivot drawn
//! from the sparsest region of the external archive, and at most one
//! neighbor is replaced per offspring.
//!
//! Modules:
//! - [`dataset`]: CSV loading, stratified splitting and the benchmark registry
//! - [`gp`]: expression trees, initialization, variation, evaluation
//! - [`objectives`]: zero-threshold classification and TPR/TNR
//! - [`decomp`]: weight vectors, neighborhoods, scalarizing functions
//! - [`engine`]: the MOEA/D generation loop
//! - [`metrics`]: dominance, hypervolume, crowding distance, rank-sum test

pub mod dataset;
pub mod decomp;
pub mod engine;
pub mod gp;
pub mod metrics;
pub mod objectives;

pub use dataset::{Class, Dataset, SplitDataset};
pub use decomp::{IdealPoint, NeighborhoodTable, Scalarizer, WeightVector};
pub use engine::{run, EngineConfig, Individual, RunResult};
pub use gp::{GpParams, ProgramTree};
pub use objectives::{ConfusionCounts, ObjectiveVector};
