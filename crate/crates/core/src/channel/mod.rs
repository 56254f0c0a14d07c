//! Channel condition models.
//!
//! Two families are supported: IID channels whose condition at each
//! observation is an independent draw from a finite-support
//! [`DiscreteDistribution`], and slowly varying channels whose condition is
//! the state of a finite [`MarkovChannel`] advancing once per time unit.

mod distribution;
pub(crate) mod markov;

pub use distribution::{awgn_default_rate_max, DiscreteDistribution, DEFAULT_GRID_POINTS};
pub use markov::{Matrix, MarkovChannel};

use rand::Rng;

/// A channel model as used by policies and the simulator.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    Iid(DiscreteDistribution),
    Markov(MarkovChannel),
}

impl ChannelModel {
    /// Long-run mean reward.
    pub fn mean_reward(&self) -> f64 {
        match self {
            ChannelModel::Iid(d) => d.mean(),
            ChannelModel::Markov(m) => m.stationary_mean(),
        }
    }

    /// Draws an initial condition: a reward for IID channels, a state index
    /// for Markov channels (drawn from the stationary distribution).
    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            ChannelModel::Iid(d) => d.sample_index(rng),
            ChannelModel::Markov(m) => m.sample_stationary(rng),
        }
    }
}
