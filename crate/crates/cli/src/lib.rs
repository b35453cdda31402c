//! Config-driven runner: builds a scenario, runs the selected checks and
//! writes machine-readable reports.

pub mod battery;
pub mod config;
pub mod emit;
pub mod run;

pub use battery::{verify_all, BatteryReport};
pub use config::{CheckId, ConfigError, RunConfig};
pub use run::{run, Outcome, RunReport};
