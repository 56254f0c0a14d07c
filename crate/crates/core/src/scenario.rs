//! Scenario files.
//!
//! A scenario is a TOML document describing the channels, the system and the
//! experiment to run. Every table rejects unknown keys, and `version` must
//! match [`SCENARIO_VERSION`], so a file either means exactly one thing or
//! fails to load.
//!
//! ```toml
//! version = 1
//! name = "exponential"
//!
//! [[channel]]
//! kind = "exponential"
//! mean = 2.5
//!
//! [system]
//! users = 50
//! transmission_time = 40
//! load = 0.3
//!
//! [sweep]
//! axis = "G"
//! grid = [0.1, 0.2, 0.3, 0.4, 0.5]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{awgn_default_rate_max, ChannelModel, DiscreteDistribution, MarkovChannel, DEFAULT_GRID_POINTS};
use crate::error::{Error, Result};
use crate::policy::Discount;
use crate::sim::{EquilibriumOptions, Mode, PolicyKind, SensingOrder, SimConfig};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(rename = "channel")]
    pub channels: Vec<ChannelSpec>,
    #[serde(default)]
    pub system: SystemSpec,
    #[serde(default)]
    pub policy: PolicySpec,
    #[serde(default)]
    pub equilibrium: EquilibriumSpec,
    #[serde(default)]
    pub compare: CompareSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelSpec {
    /// Exponential rate truncated at `x_max` (default five means).
    Exponential {
        mean: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<usize>,
    },
    /// Shannon rate of a Rayleigh-faded AWGN link with mean SNR `snr`.
    Awgn {
        snr: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<usize>,
    },
    /// Explicit finite distribution.
    Discrete { values: Vec<f64>, probs: Vec<f64> },
    /// Markov chain given either by a full `transition` matrix or by the
    /// up-probability `up` of a birth-death chain.
    Markov {
        rewards: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        up: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        transition: Option<Vec<Vec<f64>>>,
    },
}

impl ChannelSpec {
    pub fn build(&self) -> Result<ChannelModel> {
        Ok(match self {
            ChannelSpec::Exponential { mean, x_max, points } => ChannelModel::Iid(DiscreteDistribution::discretize_exponential(
                *mean,
                x_max.unwrap_or(5.0 * mean),
                points.unwrap_or(DEFAULT_GRID_POINTS),
            )?),
            ChannelSpec::Awgn { snr, r_max, points } => ChannelModel::Iid(DiscreteDistribution::discretize_awgn(
                *snr,
                r_max.unwrap_or_else(|| awgn_default_rate_max(*snr)),
                points.unwrap_or(DEFAULT_GRID_POINTS),
            )?),
            ChannelSpec::Discrete { values, probs } => {
                ChannelModel::Iid(DiscreteDistribution::new(values.clone(), probs.clone())?)
            }
            ChannelSpec::Markov { rewards, up, transition } => match (up, transition) {
                (Some(up), None) => ChannelModel::Markov(MarkovChannel::birth_death(*up, rewards.clone())?),
                (None, Some(p)) => ChannelModel::Markov(MarkovChannel::new(p.clone(), rewards.clone())?),
                _ => return Err(Error::Scenario("markov channel needs exactly one of `up` or `transition`".into())),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSpec {
    pub users: usize,
    pub transmission_time: u32,
    pub mean_backoff: f64,
    pub max_backoff_doublings: u32,
    /// Offered utilization: the total arrival rate is
    /// `load * N / (T + 2)` packets per time unit, shared evenly by the users.
    pub load: f64,
    pub packet_payload: f64,
    pub horizon: f64,
    pub warmup: f64,
    pub seed: u64,
    pub mode: Mode,
    pub sensing_order: SensingOrder,
    pub discount: Discount,
}

impl Default for SystemSpec {
    fn default() -> Self {
        let c = SimConfig::default();
        Self {
            users: c.n_users,
            transmission_time: c.transmission_time,
            mean_backoff: c.mean_backoff,
            max_backoff_doublings: c.max_backoff_doublings,
            load: 0.3,
            packet_payload: c.packet_payload,
            horizon: c.horizon,
            warmup: c.warmup,
            seed: c.seed,
            mode: c.mode,
            sensing_order: c.sensing_order,
            discount: c.discount,
        }
    }
}

/// Settings of the `policy` command: tables are computed for a user that
/// senses the channels in file order, at each uniform attempt rate in `loads`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySpec {
    pub loads: Vec<f64>,
}

impl Default for PolicySpec {
    fn default() -> Self {
        Self { loads: vec![0.05, 0.1, 0.3, 0.5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriumSpec {
    /// When false, nested policies are built for `initial_load` directly.
    pub enabled: bool,
    pub initial_load: f64,
    pub damping: f64,
    pub tolerance: f64,
    pub max_rounds: usize,
}

impl Default for EquilibriumSpec {
    fn default() -> Self {
        let o = EquilibriumOptions::default();
        Self { enabled: true, initial_load: 0.1, damping: o.damping, tolerance: o.tolerance, max_rounds: o.max_rounds }
    }
}

impl EquilibriumSpec {
    pub fn options(&self) -> EquilibriumOptions {
        EquilibriumOptions { damping: self.damping, tolerance: self.tolerance, max_rounds: self.max_rounds }
    }
}

/// Which access schemes `simulate` and `sweep` run side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSpec {
    pub policies: Vec<PolicyKind>,
    /// Extra sensing orders for the nested policy besides `system.sensing_order`.
    pub sensing_orders: Vec<SensingOrder>,
    pub replications: usize,
}

impl Default for CompareSpec {
    fn default() -> Self {
        Self { policies: vec![PolicyKind::Nested, PolicyKind::Baseline], sensing_orders: Vec::new(), replications: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// Offered load.
    G,
    /// Transmission time.
    T,
    /// Number of channels.
    N,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "G" | "g" => Ok(Axis::G),
            "T" | "t" => Ok(Axis::T),
            "N" | "n" => Ok(Axis::N),
            _ => Err(Error::Scenario(format!("unknown sweep axis `{s}`, expected G, T or N"))),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::G => "G",
            Axis::T => "T",
            Axis::N => "N",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: Axis,
    pub grid: Vec<f64>,
}

macro_rules! kebab_serde {
    ($ty:ty { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_str(match self { $(<$ty>::$variant => $name),+ })
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                match s.as_str() {
                    $($name => Ok(<$ty>::$variant),)+
                    other => Err(serde::de::Error::unknown_variant(other, &[$($name),+])),
                }
            }
        }

        impl std::str::FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(<$ty>::$variant),)+
                    other => Err(Error::Scenario(format!(
                        "unknown value `{other}`, expected one of: {}",
                        [$($name),+].join(", ")
                    ))),
                }
            }
        }

        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(match self { $(<$ty>::$variant => $name),+ })
            }
        }
    };
}

kebab_serde!(Mode { MeanDelay => "mean-delay", Contention => "contention" });
kebab_serde!(SensingOrder { RandomPermutation => "random-permutation", GreedyDescendingMean => "greedy-descending-mean" });
kebab_serde!(PolicyKind { Nested => "nested", Baseline => "baseline" });
kebab_serde!(Discount { Beta => "beta", Exact => "exact" });

impl Scenario {
    /// Parses and validates a scenario. Syntax errors carry the line and
    /// column reported by the TOML parser.
    pub fn parse(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Scenario(msg) => Error::Scenario(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCENARIO_VERSION {
            return Err(Error::Scenario(format!(
                "version: unsupported scenario version {}, this build reads version {SCENARIO_VERSION}",
                self.version
            )));
        }
        if self.channels.is_empty() {
            return Err(Error::Scenario("channel: at least one [[channel]] table is required".into()));
        }
        for (i, c) in self.channels.iter().enumerate() {
            c.build().map_err(|e| Error::Scenario(format!("channel {}: {}", i + 1, message(e))))?;
        }
        let markov = self.channels.iter().filter(|c| matches!(c, ChannelSpec::Markov { .. })).count();
        if markov != 0 && markov != self.channels.len() {
            return Err(Error::Scenario("channel: Markov and IID channels cannot be mixed".into()));
        }
        if !(self.system.load >= 0.0 && self.system.load.is_finite()) {
            return Err(Error::Scenario(format!("system.load: must be non-negative, got {}", self.system.load)));
        }
        self.sim_config()
            .validate()
            .map_err(|e| Error::Scenario(format!("system: {}", message(e))))?;
        if self.policy.loads.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::Scenario("policy.loads: attempt rates must be non-negative".into()));
        }
        if self.compare.replications == 0 {
            return Err(Error::Scenario("compare.replications: must be at least 1".into()));
        }
        if self.compare.policies.is_empty() {
            return Err(Error::Scenario("compare.policies: list at least one policy".into()));
        }
        if !(self.equilibrium.initial_load >= 0.0 && self.equilibrium.initial_load.is_finite()) {
            return Err(Error::Scenario("equilibrium.initial_load: must be non-negative".into()));
        }
        if let Some(sweep) = &self.sweep {
            validate_grid(sweep.axis, &sweep.grid)?;
        }
        Ok(())
    }

    pub fn build_channels(&self) -> Result<Vec<ChannelModel>> {
        self.channels.iter().map(ChannelSpec::build).collect()
    }

    /// Simulation settings for the base point of the scenario.
    pub fn sim_config(&self) -> SimConfig {
        let s = &self.system;
        let mut config = SimConfig {
            n_users: s.users,
            transmission_time: s.transmission_time,
            mean_backoff: s.mean_backoff,
            max_backoff_doublings: s.max_backoff_doublings,
            arrival_rate: 0.0,
            packet_payload: s.packet_payload,
            horizon: s.horizon,
            warmup: s.warmup,
            seed: s.seed,
            mode: s.mode,
            sensing_order: s.sensing_order,
            policy_kind: PolicyKind::Nested,
            discount: s.discount,
            ..SimConfig::default()
        };
        config.arrival_rate = per_user_arrival_rate(total_arrival_rate(s.load, self.channels.len(), s.transmission_time), s.users);
        config
    }
}

/// Total external arrival rate for offered utilization `load` on `n`
/// channels with transmission time `t`.
pub fn total_arrival_rate(load: f64, n: usize, t: u32) -> f64 {
    load * n as f64 / (f64::from(t) + crate::congestion::HANDSHAKE_TIME)
}

pub fn per_user_arrival_rate(total: f64, users: usize) -> f64 {
    if users == 0 {
        0.0
    } else {
        total / users as f64
    }
}

/// Checks a sweep grid for the given axis.
pub fn validate_grid(axis: Axis, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Scenario("sweep.grid: grid must not be empty".into()));
    }
    for &v in grid {
        let ok = match axis {
            Axis::G => v >= 0.0 && v.is_finite(),
            Axis::T | Axis::N => v >= 1.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX),
        };
        if !ok {
            let want = match axis {
                Axis::G => "non-negative loads",
                Axis::T => "positive integer transmission times",
                Axis::N => "positive integer channel counts",
            };
            return Err(Error::Scenario(format!("sweep.grid: axis {axis} needs {want}, got {v}")));
        }
    }
    Ok(())
}

fn message(e: Error) -> String {
    match e {
        Error::Domain(m) | Error::Numerical(m) | Error::Model(m) | Error::Scenario(m) => m,
        Error::Io { path, message } => format!("{path}: {message}"),
    }
}
