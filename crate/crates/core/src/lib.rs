//! Joint semantic transmission, early-exit inference and resource
//! allocation for multi-cell mobile edge computing.
//!
//! Modules, bottom up: [`nn_cost`] counts CNN FLOPs, [`scenario`] builds
//! seeded problem instances, [`channel`] and [`perf`] evaluate rates,
//! delays and rewards, [`matching`] and [`allocation`] solve the blocks
//! that [`bcd`] alternates, and [`experiments`] drives sweeps.

pub mod allocation;
pub mod bcd;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiments;
pub mod matching;
pub mod nn_cost;
pub mod perf;
pub mod scenario;
pub mod state;

#[cfg(test)]
pub(crate) mod testkit;

pub use bcd::{solve, solve_baseline, solve_bcd, Algorithm, SolveReport, SolverConfig};
pub use config::Config;
pub use error::{Error, Result};
pub use experiments::{run_sweep, Axis, SweepRow, SweepSpec};
pub use perf::{Assignment, FeasibilityReport, Objective, Workload};
pub use scenario::{generate_scenario, validate_scenario, Scenario, ScenarioConfig};
pub use state::{Evaluator, Move, NetworkState};
