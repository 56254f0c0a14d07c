//! Nested stopping policies.
//!
//! On winning contention at stage `i` a user observes the channel condition
//! and picks one of three actions. The policy bundles STOP and SWITCH into a
//! single meta-stopping action worth `max(x, c_i)`, where `c_i` is the
//! discounted value of moving to the next channel, and solves the resulting
//! one-dimensional stopping problem for its threshold.

pub mod iid;
pub mod markov;

use std::fmt;

pub use iid::{backward_induction, decide, solve_threshold, solve_threshold_detailed, PolicyTable, StagePolicy, ThresholdSolution};
pub use markov::{
    backward_induction_markov, decide_markov, value_iteration, Discount, MarkovPolicyTable, MarkovStagePolicy,
    StageMdp, ValueIteration,
};

/// The action taken upon winning contention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    /// Transmit now for `T` time units.
    Stop,
    /// Release the channel and contend for it again.
    Stay,
    /// Move to the next channel in the user's sequence.
    Switch,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Stop, Action::Stay, Action::Switch];

    pub fn index(self) -> usize {
        match self {
            Action::Stop => 0,
            Action::Stay => 1,
            Action::Switch => 2,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Stop => "STOP",
            Action::Stay => "STAY",
            Action::Switch => "SWITCH",
        })
    }
}

/// What a stage does when the observed condition is not good enough to
/// transmit. Fixed per stage under the IID model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuation {
    Stay,
    Switch,
}

impl Continuation {
    pub fn action(self) -> Action {
        match self {
            Continuation::Stay => Action::Stay,
            Continuation::Switch => Action::Switch,
        }
    }
}

impl fmt::Display for Continuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.action().fmt(f)
    }
}

/// Validates and collects per-channel delays for a sequence of `n` stages.
pub(crate) fn check_delays(n: usize, contention: &[f64], switching: &[f64], t: f64) -> crate::Result<()> {
    use crate::error::domain;
    if n == 0 {
        return Err(domain("a channel sequence needs at least one channel"));
    }
    if contention.len() != n || switching.len() != n {
        return Err(domain(format!(
            "expected {n} contention and switching delays, got {} and {}",
            contention.len(),
            switching.len()
        )));
    }
    if contention.iter().chain(switching).any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(domain("all delays must be positive and finite"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(format!("transmission time must be positive, got {t}")));
    }
    Ok(())
}
