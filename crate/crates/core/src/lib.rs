//! Bounding engine for discrete optimization built on decision diagrams.
//!
//! Exact, relaxed (width-capped merging) and restricted (width-capped
//! deletion) diagrams are compiled layer by layer for the maximum
//! independent set problem and the maximum cut problem. The variable
//! ordering is pluggable: classic heuristics live in [`ordering`], and a
//! neural fitted Q-learning agent ([`trainer`], [`qnet`]) learns orderings
//! that tighten relaxed upper bounds or restricted lower bounds.

pub mod dd;
pub mod error;
pub mod evaluator;
pub mod graph;
pub mod models;
pub mod ordering;
pub mod problem;
pub mod qnet;
pub mod rlenv;
pub mod trainer;

pub use dd::{compile, compile_with_policy, DecisionDiagram, Mode};
pub use error::{Error, Result};
pub use graph::{generate_ba, generate_ba_batch, load_instance, save_instance, BaConfig, Edge, Graph};
pub use models::{DpModel, Mcp, McpState, Misp, MispState};
pub use ordering::OrderingSpec;
pub use problem::{Problem, Sense};
pub use qnet::{ModelFile, QParams};
pub use rlenv::{AnyEnv, Env};
pub use trainer::{train, TrainConfig};

/// Seeded generator used everywhere randomness is needed.
pub type Rng = rand_chacha::ChaCha8Rng;
