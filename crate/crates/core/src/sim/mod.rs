//! Discrete-event simulation of the multiuser multichannel system.
//!
//! `m` users receive Poisson packet arrivals. For each packet a user walks
//! its channel sequence: it contends on the current channel, observes the
//! channel condition upon winning, and applies its policy. STOP occupies the
//! channel for `T` time units; STAY releases it after the handshake and
//! contends again; SWITCH releases it and moves to the next channel.
//!
//! Two access models are available. In [`Mode::Contention`] users back off,
//! carrier-sense, and collide explicitly. In [`Mode::MeanDelay`] the access
//! delay is drawn from an exponential law whose mean comes from the analytic
//! congestion model, which isolates policy effects from MAC effects.

mod contention;
mod engine;
mod equilibrium;

pub use contention::{CollisionWindow, CONTROL_TIME};
pub use engine::run;
pub use equilibrium::{equilibrium_loads, measured_loads, Equilibrium, EquilibriumOptions};

use rand::seq::SliceRandom;

use crate::channel::{ChannelModel, DiscreteDistribution, MarkovChannel};
use crate::congestion::{CongestionProfile, DEFAULT_MEAN_BACKOFF};
use crate::error::{domain, Error, Result};
use crate::policy::{backward_induction, backward_induction_markov, Action, Discount, MarkovPolicyTable, PolicyTable};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Access delays drawn from the analytic congestion model.
    MeanDelay,
    /// Explicit backoff, carrier sensing and collisions.
    #[default]
    Contention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SensingOrder {
    /// Random permutations of the channels, balanced across users.
    #[default]
    RandomPermutation,
    /// Every user senses channels in decreasing order of mean reward.
    GreedyDescendingMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolicyKind {
    #[default]
    Nested,
    /// Pick a channel uniformly at random and transmit whatever it offers.
    Baseline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_users: usize,
    /// `T`, in time units.
    pub transmission_time: u32,
    /// `1/zeta`, in time units.
    pub mean_backoff: f64,
    /// After `k` consecutive collisions the mean backoff is
    /// `mean_backoff * 2^min(k, max_backoff_doublings)`; zero keeps it fixed.
    pub max_backoff_doublings: u32,
    /// External packet arrival rate per user.
    pub arrival_rate: f64,
    /// Bytes per packet; a transmission delivers at most this much.
    pub packet_payload: f64,
    pub horizon: f64,
    pub warmup: f64,
    pub seed: u64,
    pub mode: Mode,
    pub sensing_order: SensingOrder,
    pub policy_kind: PolicyKind,
    /// Discounting used for Markov-channel policies.
    pub discount: Discount,
    /// Number of equal time bins for the per-channel load series.
    pub load_bins: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_users: 50,
            transmission_time: 40,
            mean_backoff: DEFAULT_MEAN_BACKOFF,
            max_backoff_doublings: 6,
            arrival_rate: 0.002,
            packet_payload: 1024.0,
            horizon: 200_000.0,
            warmup: 20_000.0,
            seed: 1,
            mode: Mode::Contention,
            sensing_order: SensingOrder::RandomPermutation,
            policy_kind: PolicyKind::Nested,
            discount: Discount::Beta,
            load_bins: 20,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 {
            return Err(domain("need at least one user"));
        }
        if self.transmission_time == 0 {
            return Err(domain("transmission time must be at least one time unit"));
        }
        if !(self.mean_backoff > 0.0 && self.mean_backoff.is_finite()) {
            return Err(domain("mean backoff must be positive"));
        }
        if !(self.arrival_rate >= 0.0 && self.arrival_rate.is_finite()) {
            return Err(domain("arrival rate must be non-negative"));
        }
        if !(self.packet_payload > 0.0) {
            return Err(domain("packet payload must be positive"));
        }
        if !(self.warmup >= 0.0 && self.horizon > self.warmup && self.horizon.is_finite()) {
            return Err(domain(format!("need horizon > warmup >= 0, got {} and {}", self.horizon, self.warmup)));
        }
        if self.max_backoff_doublings > 16 {
            return Err(domain("at most 16 backoff doublings"));
        }
        if self.load_bins == 0 {
            return Err(domain("need at least one load bin"));
        }
        Ok(())
    }

    pub fn t(&self) -> f64 {
        self.transmission_time as f64
    }
}

/// Access rule of one user.
#[derive(Debug, Clone, PartialEq)]
pub enum UserPolicy {
    Iid(PolicyTable),
    Markov(MarkovPolicyTable),
    /// Always STOP; the channel is drawn uniformly per packet.
    Baseline,
}

impl UserPolicy {
    /// Action at `stage` given the observed reward and, for Markov channels,
    /// the observed state.
    pub fn decide(&self, stage: usize, reward: f64, state: usize) -> Action {
        match self {
            UserPolicy::Iid(p) => p.decide(stage, reward),
            UserPolicy::Markov(p) => p.decide(stage, state),
            UserPolicy::Baseline => Action::Stop,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserPlan {
    /// Channel indices in sensing order.
    pub sequence: Vec<usize>,
    pub policy: UserPolicy,
}

/// Everything a simulation run needs beyond the configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessPlan {
    pub users: Vec<UserPlan>,
    /// Per-channel attempt rates the policies were built for.
    pub loads: Vec<f64>,
    /// Per-channel mean contention delays (used directly in mean-delay mode).
    pub contention_delays: Vec<f64>,
    pub switching_delays: Vec<f64>,
}

/// Channel order for every user, derived from the seed only.
pub fn sensing_sequences(config: &SimConfig, channels: &[ChannelModel]) -> Vec<Vec<usize>> {
    let n = channels.len();
    match config.sensing_order {
        SensingOrder::GreedyDescendingMean => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|a, b| channels[*b].mean_reward().total_cmp(&channels[*a].mean_reward()).then(a.cmp(b)));
            vec![order; config.n_users]
        }
        // Users come in blocks of `n`: a block shares one random base
        // permutation and its members take its `n` cyclic shifts, so every
        // channel sits at every position equally often while each user's
        // sequence is still uniformly distributed.
        SensingOrder::RandomPermutation => (0..config.n_users)
            .map(|u| {
                let block = u / n;
                let mut r = rng::stream(config.seed, user_stream(block, UserStream::Sequence));
                let mut base: Vec<usize> = (0..n).collect();
                base.shuffle(&mut r);
                base.rotate_left(u % n);
                base
            })
            .collect(),
    }
}

/// Builds per-user policies for the given per-channel attempt rates.
pub fn build_plan(config: &SimConfig, channels: &[ChannelModel], loads: &[f64]) -> Result<AccessPlan> {
    config.validate()?;
    if channels.is_empty() {
        return Err(domain("need at least one channel"));
    }
    if loads.len() != channels.len() {
        return Err(domain(format!("expected {} channel loads, got {}", channels.len(), loads.len())));
    }
    let t = config.t();
    let profiles = CongestionProfile::for_loads(loads, t, config.mean_backoff)?;
    let contention: Vec<f64> = profiles.iter().map(|p| p.contention_delay).collect();
    let switching: Vec<f64> = profiles.iter().map(|p| p.switching_delay).collect();
    let sequences = sensing_sequences(config, channels);

    let users = match config.policy_kind {
        PolicyKind::Baseline => sequences
            .into_iter()
            .map(|sequence| UserPlan { sequence, policy: UserPolicy::Baseline })
            .collect(),
        PolicyKind::Nested => {
            let iid: Option<Vec<&DiscreteDistribution>> = channels
                .iter()
                .map(|c| match c {
                    ChannelModel::Iid(d) => Some(d),
                    ChannelModel::Markov(_) => None,
                })
                .collect();
            let markov: Option<Vec<&MarkovChannel>> = channels
                .iter()
                .map(|c| match c {
                    ChannelModel::Markov(m) => Some(m),
                    ChannelModel::Iid(_) => None,
                })
                .collect();
            let mut cache: std::collections::HashMap<Vec<usize>, UserPolicy> = Default::default();
            let mut users = Vec::with_capacity(sequences.len());
            for sequence in sequences {
                let policy = match cache.get(&sequence) {
                    Some(p) => p.clone(),
                    None => {
                        let tc: Vec<f64> = sequence.iter().map(|&j| contention[j]).collect();
                        let ts: Vec<f64> = sequence.iter().map(|&j| switching[j]).collect();
                        let p = if let Some(d) = &iid {
                            let dists: Vec<DiscreteDistribution> = sequence.iter().map(|&j| d[j].clone()).collect();
                            UserPolicy::Iid(backward_induction(&dists, &tc, &ts, t)?)
                        } else if let Some(m) = &markov {
                            let chains: Vec<MarkovChannel> = sequence.iter().map(|&j| m[j].clone()).collect();
                            UserPolicy::Markov(backward_induction_markov(&chains, &tc, &ts, t, config.discount)?)
                        } else {
                            return Err(Error::Model("nested policies need all channels of one kind".into()));
                        };
                        cache.insert(sequence.clone(), p.clone());
                        p
                    }
                };
                users.push(UserPlan { sequence, policy });
            }
            users
        }
    };
    Ok(AccessPlan { users, loads: loads.to_vec(), contention_delays: contention, switching_delays: switching })
}

/// Baseline plan: random channel per packet, always transmit.
pub fn baseline_policy(config: &SimConfig, channels: &[ChannelModel]) -> Result<AccessPlan> {
    let config = SimConfig { policy_kind: PolicyKind::Baseline, ..config.clone() };
    build_plan(&config, channels, &vec![0.0; channels.len()])
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum UserStream {
    Arrivals,
    Access,
    Sequence,
}

pub(crate) fn user_stream(user: usize, kind: UserStream) -> u64 {
    3 * user as u64
        + match kind {
            UserStream::Arrivals => 0,
            UserStream::Access => 1,
            UserStream::Sequence => 2,
        }
}

pub(crate) fn channel_stream(channel: usize) -> u64 {
    (1u64 << 40) + channel as u64
}

/// Measurements from one run. Rates and means cover `[warmup, horizon]`;
/// packet counts cover the whole run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimStats {
    pub delivered_bytes: f64,
    /// Length of the measurement window.
    pub elapsed: f64,
    /// `delivered_bytes / elapsed`.
    pub throughput: f64,
    /// Bytes delivered per unit of time spent from the start of a decision
    /// process to the end of its transmission, pooled over processes: the
    /// rate of return the policies optimize.
    pub data_rate: f64,
    pub processes_completed: u64,
    /// Measured attempt rate per channel.
    pub attempt_rates: Vec<f64>,
    /// Mean time to win after re-contending on the same channel.
    pub contention_delays: Vec<f64>,
    /// Mean time to win after arriving at a channel.
    pub switching_delays: Vec<f64>,
    pub contention_samples: Vec<u64>,
    pub switching_samples: Vec<u64>,
    /// Counts indexed by [`Action::index`].
    pub decisions: [u64; 3],
    pub attempts: u64,
    pub successful_attempts: u64,
    pub packets_generated: u64,
    pub packets_delivered: u64,
    pub packets_queued: u64,
    /// Attempt rate per channel in equal time bins over the window.
    pub load_series: Vec<Vec<f64>>,
    /// Reservations granted on a channel that was already reserved.
    pub exclusivity_violations: u64,
    /// Stage moves that did not advance along the sequence.
    pub revisit_violations: u64,
}

impl SimStats {
    pub fn decision_count(&self, a: Action) -> u64 {
        self.decisions[a.index()]
    }

    pub fn total_attempt_rate(&self) -> f64 {
        self.attempt_rates.iter().sum()
    }

    /// Packets generated equal packets delivered plus packets still queued.
    pub fn conserves_packets(&self) -> bool {
        self.packets_generated == self.packets_delivered + self.packets_queued
    }
}
