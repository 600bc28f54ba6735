//! Core simulation pieces for Pavlovian signalling in the Frost Hollow domain.
//!
//! The crate is organised bottom-up:
//!
//! - [`env`]: the seven-location linear walk, heat accumulation and the wind
//!   hazard schedule (fixed, random and drift conditions).
//! - [`repr`]: temporal feature generators (bias unit, oscillator, bit cascade,
//!   tile-coded trace) that append a presence bit to a one-hot vector.
//! - [`gvf`]: accumulation and countdown prediction questions, online TD(λ)
//!   and a forward-view return used to check what the learner converges to.
//! - [`coagent`]: the signalling side, turning presence into one Boolean token
//!   per step (learned or oracle).
//! - [`agents`]: tabular Expected Sarsa(λ), Sarsa(λ), Q(λ) and the hard-coded
//!   responsive policy.
//! - [`sim`]: the per-step ordering shared by the batch harness and the live
//!   session service.

pub mod agents;
pub mod coagent;
pub mod env;
pub mod error;
pub mod gvf;
pub mod repr;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
