//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Tables come back as tab-separated text with a header row and curves as
//! flat number arrays, which keeps the JavaScript side free of any glue
//! beyond what `wasm-bindgen` generates.

use std::fmt::Write as _;

use stayswitch::channel::{DiscreteDistribution, MarkovChannel, DEFAULT_GRID_POINTS};
use stayswitch::congestion::CongestionProfile;
use stayswitch::policy::{backward_induction, backward_induction_markov, Discount};
use wasm_bindgen::prelude::*;

fn js(e: stayswitch::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn delays(n: usize, load: f64, t: f64, mean_backoff: f64) -> Result<(Vec<f64>, Vec<f64>), JsError> {
    let p = CongestionProfile::new(load, t, mean_backoff).map_err(js)?;
    Ok((vec![p.contention_delay; n], vec![p.switching_delay; n]))
}

/// Congestion model sampled at `points` attempt rates in `[0, g_max]`.
/// Returns rows of `[G, S, t_w, t_c, t_s]`, flattened.
#[wasm_bindgen]
pub fn congestion_curves(t: f64, mean_backoff: f64, g_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    if !(g_max > 0.0) || points < 2 {
        return Err(JsError::new("need g_max > 0 and at least two points"));
    }
    let mut out = Vec::with_capacity(5 * points);
    for k in 0..points {
        let g = g_max * k as f64 / (points - 1) as f64;
        let p = CongestionProfile::new(g, t, mean_backoff).map_err(js)?;
        out.extend([g, p.success_rate, p.residual_wait, p.contention_delay, p.switching_delay]);
    }
    Ok(out)
}

/// Nested policy for exponential channels with the given means, sensed in
/// order, every channel carrying attempt rate `load`.
#[wasm_bindgen]
pub fn iid_policy(means: Vec<f64>, load: f64, t: f64, mean_backoff: f64) -> Result<String, JsError> {
    if means.is_empty() {
        return Err(JsError::new("give at least one channel mean"));
    }
    let dists = means
        .iter()
        .map(|&m| DiscreteDistribution::discretize_exponential(m, 5.0 * m, DEFAULT_GRID_POINTS))
        .collect::<Result<Vec<_>, _>>()
        .map_err(js)?;
    let (tc, ts) = delays(dists.len(), load, t, mean_backoff)?;
    let table = backward_induction(&dists, &tc, &ts, t).map_err(js)?;
    let mut out = String::from("stage\tmean\tt_c\tt_s\tswitch_value\tthreshold\tstage_value\tcontinuation\n");
    for (s, m) in table.stages.iter().zip(&means) {
        let _ = writeln!(
            out,
            "{}\t{m}\t{:.3}\t{:.3}\t{:.4}\t{:.4}\t{:.4}\t{}",
            s.stage + 1,
            tc[s.stage],
            ts[s.stage],
            s.switch_value,
            s.threshold,
            s.stage_value,
            s.continuation
        );
    }
    Ok(out)
}

/// Decision table for birth-death channels, one per row of `rewards`
/// (`n_states` values each, flattened), moving up with probability `up`.
#[wasm_bindgen]
pub fn markov_policy(
    rewards: Vec<f64>,
    n_states: usize,
    up: f64,
    load: f64,
    t: f64,
    mean_backoff: f64,
    exact_discount: bool,
) -> Result<String, JsError> {
    if n_states == 0 || rewards.is_empty() || !rewards.len().is_multiple_of(n_states) {
        return Err(JsError::new("rewards must hold n_states values per channel"));
    }
    let chains = rewards
        .chunks(n_states)
        .map(|r| MarkovChannel::birth_death(up, r.to_vec()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(js)?;
    let (tc, ts) = delays(chains.len(), load, t, mean_backoff)?;
    let discount = if exact_discount { Discount::Exact } else { Discount::Beta };
    let table = backward_induction_markov(&chains, &tc, &ts, t, discount).map_err(js)?;
    Ok(table.to_text())
}
