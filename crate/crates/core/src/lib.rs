//! Bayesian mixture RL agent for lane following, with a deterministic 2D
//! driving simulator and an evaluation/experiment harness.
//!
//! The crate is organized around the data flow of a training run:
//!
//! - [`simworld`] steps a kinematic vehicle over simple track scenarios and
//!   renders a forward-facing semantic ground view.
//! - [`perception`] turns a semantic map into the 30-dimensional state
//!   vector, optionally through a parametric corruption model emulating an
//!   estimated (noisy) segmentation.
//! - [`mixture`] and [`agent`] hold the learner: an adaptive Gaussian
//!   mixture over states and a growing Q-table tied to its components.
//! - [`evalkit`] aggregates episode records into metrics and file exports.
//! - [`harness`] and [`checkpoint`] drive training/evaluation runs
//!   deterministically from a master seed and make them resumable.

pub mod agent;
pub mod checkpoint;
pub mod config;
pub mod evalkit;
pub mod harness;
pub mod mixture;
pub mod perception;
pub mod simworld;
pub mod state;

pub use agent::{ActionDistribution, BayesianAgent, QTable, ScheduleValues, StepDiagnostics, WeightCase};
pub use config::{decay_step, load_config, AgentConfig, Schedule, ScheduleState};
pub use mixture::{Component, ComponentId, Mixture, MixturePrior};
pub use perception::{NoiseConfig, SemanticClass, SemanticMap};
pub use simworld::{Measures, RewardConfig, Scenario, TrackSpec, WorldState};
pub use state::{Action, StateVector, NUM_ACTIONS, STATE_DIM};
