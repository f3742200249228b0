//! Seeded Monte Carlo simulations comparing monoculture, polyculture and
//! ensemble monoculture in hiring markets and greedy bandit exploration.

pub mod error;
pub mod exclusion;
pub mod experiment;
pub mod greedy;
pub mod harness;
pub mod hiring;
pub mod hiring_bandit;
pub mod plot;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use rng::{derive_stream, RngStream};
