//! Mean-field load equilibrium.
//!
//! Policies are built from assumed per-channel attempt rates, but the rates
//! themselves result from everyone following those policies. The loop below
//! alternates the two with damping until the loads settle.

use super::{build_plan, run, AccessPlan, SimConfig, SimStats};
use crate::channel::ChannelModel;
use crate::congestion;
use crate::error::{domain, Result};

/// Delay samples needed before a measured mean delay is trusted.
const MIN_DELAY_SAMPLES: u64 = 30;
const MAX_EQUIVALENT_LOAD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumOptions {
    /// Weight on the newly measured loads.
    pub damping: f64,
    pub tolerance: f64,
    pub max_rounds: usize,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        Self { damping: 0.5, tolerance: 1e-3, max_rounds: 50 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub loads: Vec<f64>,
    /// Policies built from `loads`.
    pub plan: AccessPlan,
    pub rounds: usize,
    /// False when `max_rounds` ran out first; the last iterate is returned.
    pub converged: bool,
    /// Assumed loads at the start of every round, then the final loads.
    pub history: Vec<Vec<f64>>,
    /// Measurements of the last simulated round.
    pub last_stats: SimStats,
}

/// Iterates policy construction and simulation until the per-channel
/// attempt rates move by less than `options.tolerance`. Every round reuses
/// `config.seed`, so the measured loads are a deterministic function of the
/// assumed ones.
pub fn equilibrium_loads(
    config: &SimConfig,
    channels: &[ChannelModel],
    initial: &[f64],
    options: EquilibriumOptions,
) -> Result<Equilibrium> {
    if !(options.damping > 0.0 && options.damping <= 1.0) {
        return Err(domain(format!("damping must lie in (0, 1], got {}", options.damping)));
    }
    if options.max_rounds == 0 {
        return Err(domain("need at least one round"));
    }
    let mut loads = initial.to_vec();
    let mut steps = vec![options.damping; loads.len()];
    let mut last_sign = vec![0.0_f64; loads.len()];
    let mut history = vec![loads.clone()];
    let mut converged = false;
    let mut rounds = 0;
    let mut last_stats = SimStats::default();
    while rounds < options.max_rounds {
        rounds += 1;
        let plan = build_plan(config, channels, &loads)?;
        last_stats = run(config, channels, &plan)?;
        let measured = measured_loads(config, &last_stats)?;
        let mut delta: f64 = 0.0;
        for j in 0..loads.len() {
            let correction = measured[j] - loads[j];
            let sign = correction.signum();
            // An overshoot means the response is steeper than the step can
            // follow, so that channel's step is halved.
            if sign * last_sign[j] < 0.0 {
                steps[j] *= 0.5;
            }
            last_sign[j] = sign;
            let change = steps[j] * correction;
            loads[j] += change;
            delta = delta.max(change.abs());
        }
        history.push(loads.clone());
        if delta < options.tolerance {
            converged = true;
            break;
        }
    }
    let plan = build_plan(config, channels, &loads)?;
    Ok(Equilibrium { loads, plan, rounds, converged, history, last_stats })
}

/// Attempt rate at which `delay(G)` reaches `target`, by bisection.
fn invert_delay(target: f64, delay: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if target <= delay(0.0)? {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, MAX_EQUIVALENT_LOAD);
    if delay(hi)? <= target {
        return Ok(hi);
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if delay(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Per-channel load as users perceive it: the attempt rate at which the
/// analytic congestion model reproduces the measured mean re-contention
/// delay (or, lacking samples, the measured arrival delay). Channels with
/// too few samples of either fall back to the raw attempt rate.
pub fn measured_loads(config: &SimConfig, stats: &SimStats) -> Result<Vec<f64>> {
    let t = config.t();
    let inv_zeta = config.mean_backoff;
    (0..stats.attempt_rates.len())
        .map(|j| {
            if stats.contention_samples[j] >= MIN_DELAY_SAMPLES {
                invert_delay(stats.contention_delays[j], |g| congestion::contention_delay(g, inv_zeta))
            } else if stats.switching_samples[j] >= MIN_DELAY_SAMPLES {
                invert_delay(stats.switching_delays[j], |g| congestion::switching_delay(g, t, inv_zeta))
            } else {
                Ok(stats.attempt_rates[j])
            }
        })
        .collect()
}
