//! Markovian opinion dynamics with attraction inside groups and repulsion
//! between groups.
//!
//! Each agent switches between a shared set of decision states as a
//! continuous-time Markov chain. Group-mates add rate toward the states they
//! occupy; repulsing groups add rate toward the states they do *not* occupy.
//! The crate offers three routes to the resulting probabilities:
//!
//! * [`network`]: the exact chain over all `M^N` configurations,
//! * [`marginal`]: the equivalent `NM`-dimensional affine system,
//! * [`sim`]: event-driven Monte Carlo.
//!
//! ```
//! use opinion_core::{intersection, marginal, Model};
//!
//! let model = Model::new(intersection::intersection_example()).unwrap();
//! let system = marginal::assemble_marginal_system(&model);
//! let stationary = marginal::marginal_stationary(&system).unwrap();
//! assert_eq!(stationary.probabilities.len(), 14);
//! ```

pub mod agent;
pub mod error;
pub mod file;
pub mod intersection;
pub mod linalg;
pub mod marginal;
pub mod model;
pub mod network;
pub mod ode;
pub mod random;
pub mod scenario;
pub mod sim;
pub mod sparse;
pub mod trajectory;

pub use error::{Error, Result};
pub use model::{Model, ModelVariant};
pub use scenario::{
    validate_scenario, AgentSpec, Group, NetworkConfig, RepulsionEdge, Scenario, StateSpace,
    ValidationReport, Violation, ViolationKind,
};
pub use trajectory::TrajectoryTable;
