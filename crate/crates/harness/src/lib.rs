//! Experiment harness for Frost Hollow: run configuration, the seeded
//! experiment loop, metrics, sweep grids and CSV/JSON artifacts.

pub mod config;
pub mod error;
pub mod metrics;
pub mod output;
pub mod presets;
pub mod run;
pub mod sweep;

pub use config::{AgentKind, Overrides, RunConfig, TraceDetail};
pub use error::{HarnessError, Result};
pub use run::{run_experiment, run_scripted, run_seed, EpisodeSummary, RunOutput, StepTrace, Stepper};
