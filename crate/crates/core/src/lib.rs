//! rbnlab: a simulation and evolutionary-optimization laboratory for random
//! Boolean networks.
//!
//! The crate builds seeded ensembles of random Boolean networks, evolves
//! their wiring and lookup tables against Boolean target tasks with a
//! genetic algorithm, and aggregates run outcomes into learning and
//! generalization measures, functional-entropy landscapes, and power-law
//! scaling fits. Everything is driven by explicit seeds: the same
//! configuration always reproduces the same bytes.

pub mod bits;
pub mod entropy;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod metrics;
pub mod network;
pub mod task;

pub use bits::{hamming_distance, Bits};
pub use error::{Error, Result};
pub use network::{
    BooleanNetwork, EvalPolicy, FunctionFingerprint, NetworkSpec, NodeRole, StateVector,
    WiringMode,
};
pub use task::{PatternSet, SampleSpec, TaskKind, TaskSpec};
