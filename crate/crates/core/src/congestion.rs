//! Closed-form congestion model.
//!
//! Maps the Poisson attempt rate `G` on a channel to the delays a user sees
//! there: the success rate of contention, the residual wait for an ongoing
//! transmission to finish, the contention delay, and the switching delay
//! (`t_s = t_w + t_c`). All functions are pure.
//!
//! `G = 0` is handled through the analytic limits `S = 0`, `t_w = 0`,
//! `t_c = 2` rather than by dividing by zero.

use crate::error::{domain, Result};

/// Default mean backoff `1/zeta`, in time units. The value is a free
/// parameter of the model and has no canonical setting.
pub const DEFAULT_MEAN_BACKOFF: f64 = 2.0;

/// Duration of a successful reservation handshake (two control packets).
pub const HANDSHAKE_TIME: f64 = 2.0;

fn check_rate(g: f64) -> Result<()> {
    if !(g >= 0.0) || !g.is_finite() {
        return Err(domain(format!("attempt rate must be finite and >= 0, got {g}")));
    }
    Ok(())
}

fn check_transmission_time(t: f64) -> Result<()> {
    if !(t >= 1.0) || !t.is_finite() {
        return Err(domain(format!("transmission time must be >= 1, got {t}")));
    }
    Ok(())
}

fn check_backoff(inv_zeta: f64) -> Result<()> {
    if !(inv_zeta > 0.0) || !inv_zeta.is_finite() {
        return Err(domain(format!("mean backoff must be > 0, got {inv_zeta}")));
    }
    Ok(())
}

/// Success rate of channel contention,
/// `S = G e^{-2G} / (1 + (1 + T) G e^{-2G})`.
pub fn success_rate(g: f64, t: f64) -> Result<f64> {
    check_rate(g)?;
    check_transmission_time(t)?;
    let a = g * (-2.0 * g).exp();
    Ok(a / (1.0 + (1.0 + t) * a))
}

/// Expected wait for the channel to become idle when arriving during an
/// active transmission (including the mean backoff that follows).
pub fn residual_wait(g: f64, t: f64, inv_zeta: f64) -> Result<f64> {
    check_backoff(inv_zeta)?;
    let s = success_rate(g, t)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    let span = t + 1.0;
    let st = span * s;
    // For tiny S the direct form cancels catastrophically; use the series of
    // (1/S + b)(1 - e^{-u}) - span e^{-u} with u = span S instead.
    if st < 1e-4 {
        let b = inv_zeta;
        let series = span * st / 2.0 - span * st * st / 3.0 + b * (st - st * st / 2.0 + st.powi(3) / 6.0);
        return Ok(series.max(0.0));
    }
    let inv_s = 1.0 / s;
    Ok(inv_s + inv_zeta - (span + inv_s + inv_zeta) * (-st).exp())
}

/// Mean contention delay `t_c = (e^{2G} - 1)(1/zeta + 2) + 2`.
pub fn contention_delay(g: f64, inv_zeta: f64) -> Result<f64> {
    check_rate(g)?;
    check_backoff(inv_zeta)?;
    Ok(((2.0 * g).exp() - 1.0) * (inv_zeta + HANDSHAKE_TIME) + HANDSHAKE_TIME)
}

/// Mean switching delay `t_s = t_w + t_c`.
pub fn switching_delay(g: f64, t: f64, inv_zeta: f64) -> Result<f64> {
    Ok(residual_wait(g, t, inv_zeta)? + contention_delay(g, inv_zeta)?)
}

/// All derived congestion quantities for one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CongestionProfile {
    pub attempt_rate: f64,
    pub transmission_time: f64,
    pub mean_backoff: f64,
    pub success_rate: f64,
    pub residual_wait: f64,
    pub contention_delay: f64,
    pub switching_delay: f64,
}

impl CongestionProfile {
    pub fn new(attempt_rate: f64, transmission_time: f64, mean_backoff: f64) -> Result<Self> {
        let success_rate = success_rate(attempt_rate, transmission_time)?;
        let residual_wait = residual_wait(attempt_rate, transmission_time, mean_backoff)?;
        let contention_delay = contention_delay(attempt_rate, mean_backoff)?;
        Ok(Self {
            attempt_rate,
            transmission_time,
            mean_backoff,
            success_rate,
            residual_wait,
            contention_delay,
            switching_delay: residual_wait + contention_delay,
        })
    }

    /// Profiles for a vector of per-channel attempt rates.
    pub fn for_loads(loads: &[f64], transmission_time: f64, mean_backoff: f64) -> Result<Vec<Self>> {
        loads
            .iter()
            .map(|&g| Self::new(g, transmission_time, mean_backoff))
            .collect()
    }
}
