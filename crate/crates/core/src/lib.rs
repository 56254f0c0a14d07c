//! Multiuser multichannel opportunistic spectrum access.
//!
//! Users contend for channels under random access; upon winning, a user sees
//! the instantaneous channel condition and decides to transmit (STOP), give
//! the opportunity up and contend again on the same channel (STAY), or move
//! on to the next channel of its sequence (SWITCH). This crate computes the
//! nested stopping policies for IID and Markov channel models, models how
//! load turns into contention and switching delays, and simulates the
//! resulting multiuser system.

pub mod channel;
pub mod congestion;
mod error;
pub mod experiments;
pub mod policy;
pub mod rng;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
