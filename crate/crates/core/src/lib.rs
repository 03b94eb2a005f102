//! Population-protocol simulator for stable, silent parity and modular
//! congruence protocols.

pub mod audit;
pub mod clock;
pub mod composer;
pub mod engine;
pub mod error;
pub mod harness;
pub mod leader_election;
pub mod majority;
pub mod slow;
pub mod weights;

pub use error::{Error, Result};
