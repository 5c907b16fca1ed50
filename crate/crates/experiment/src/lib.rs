//! Experiment harness: scenario configuration, the exploration loop, run
//! records, statistics and file exports behind the `siren` CLI.

pub mod config;
pub mod error;
pub mod mapping;
pub mod record;
pub mod runner;
pub mod scripted;
pub mod stats;

pub use config::{Layout, Pps, ScenarioConfig, WorldFixture};
pub use error::{ExperimentError, Result};
pub use mapping::MapState;
pub use record::{RunRecord, StopReason};
pub use runner::{run_batch, run_once, run_scenario};
