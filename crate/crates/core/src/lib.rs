//! Simulation and verification toolkit for the mixed Hegselmann-Krause model
//!
//! ```text
//! x(t+1) = diag(alpha(t)) x(t) + (I - diag(alpha(t))) A(t) x(t)
//! ```
//!
//! where `A(t)` averages each agent over the agents within `epsilon` of it and
//! `alpha_i(t)` in `[0, 1]` is agent `i`'s stubbornness.

pub mod batch;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod matching;
pub mod monitors;
pub mod profile;
pub mod scenario;
pub mod spectral;

pub use dynamics::{simulate, step, ModelConfig, OpinionState, Schedule, Trajectory};
pub use error::{HkError, Result};
