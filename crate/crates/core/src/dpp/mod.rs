//! Online drift-plus-penalty game manager.
//!
//! Each slot the manager observes the event, picks auxiliary variables and a
//! suggested joint action by greedily minimizing a drift-plus-penalty bound,
//! and updates virtual queues whose stability enforces the equilibrium
//! constraints in time average.

mod bounds;
mod decisions;
mod engine;
mod queues;

use thiserror::Error;

pub use bounds::{bounds_for, drift_constant, offline_phi_star, theorem_bounds, BoundReport, OFFLINE_SIZE_CAP};
pub use decisions::{
    choose_actions, choose_gamma, choose_theta, dpp_bound_rhs, observed_cells, Candidate, ACTION_SPACE_CAP,
};
pub use engine::{
    extract_empirical_policy, run, run_seeds, Engine, EngineConfig, RecordPlan, Totals, Trace, TraceRecord,
};
pub use queues::{update_queues, EngineKind, QueueState, SlotDecision};

use crate::fairness::FairnessError;
use crate::game::GameError;
use crate::stochastic::StochasticError;

#[derive(Debug, Error)]
pub enum DppError {
    #[error("joint action space has {size} actions, above the exhaustive-search cap {cap}")]
    ActionSpaceTooLarge { size: usize, cap: usize },
    #[error("V must be finite and nonnegative, got {0}")]
    BadV(f64),
    #[error("the special-case engine needs every player event alphabet to be a singleton")]
    SpecialNeedsUninformedPlayers,
    #[error("trace has no slots")]
    EmptyTrace,
    #[error(transparent)]
    Fairness(#[from] FairnessError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
}
