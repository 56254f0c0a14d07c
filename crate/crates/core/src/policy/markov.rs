//! Policy computation for Markov channels.
//!
//! Each stage is a discounted optimal stopping problem over the chain's
//! states. Staying costs one contention period of `t_c` time units, during
//! which the chain makes `t_c` transitions, so the continuation term is
//! `factor * P^{t_c} V` with `factor = beta^{t_c}`, `beta = 1/(1 + 1/T)`.
//! The Bellman map is a sup-norm contraction with modulus `factor`.

use std::fmt::Write as _;

use super::{check_delays, Action};
use crate::channel::markov::{matrix_power, Matrix};
use crate::channel::MarkovChannel;
use crate::error::{domain, Error, Result};

const VALUE_TOL: f64 = 1e-10;
const VALUE_MAX_ITERS: usize = 1_000_000;

/// How the cost of one contention period is discounted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Discount {
    /// `beta^{t_c}` with `beta = 1/(1 + 1/T)`.
    #[default]
    Beta,
    /// The rate-of-return factor `T/(T + t_c)` itself.
    Exact,
}

impl Discount {
    pub fn factor(self, t_c: u32, t: f64) -> f64 {
        match self {
            Discount::Beta => (1.0 / (1.0 + 1.0 / t)).powi(t_c as i32),
            Discount::Exact => t / (t + t_c as f64),
        }
    }
}

/// Rounds a real delay to the nearest integer, at least one.
pub fn round_delay(d: f64) -> u32 {
    d.round().max(1.0) as u32
}

/// One stage's stopping problem: `V = max(reward, factor * kernel V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageMdp {
    /// Meta-stopping reward `max(r(x), c)` per state.
    pub stop_reward: Vec<f64>,
    /// `P^{t_c}`.
    pub kernel: Matrix,
    pub factor: f64,
}

impl StageMdp {
    pub fn new(chain: &MarkovChannel, c: f64, t_c: u32, t: f64, discount: Discount) -> Result<Self> {
        if t_c < 1 {
            return Err(domain("contention delay must be at least one time unit"));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(domain(format!("transmission time must be positive, got {t}")));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(domain(format!("switch value must be >= 0, got {c}")));
        }
        Ok(Self {
            stop_reward: chain.rewards().iter().map(|r| r.max(c)).collect(),
            kernel: matrix_power(chain.transition(), t_c),
            factor: discount.factor(t_c, t),
        })
    }

    /// `factor * sum_y P^{t_c}(y|x) v(y)` for every state `x`.
    pub fn continuation(&self, v: &[f64]) -> Vec<f64> {
        self.kernel
            .iter()
            .map(|row| self.factor * row.iter().zip(v).map(|(p, vy)| p * vy).sum::<f64>())
            .collect()
    }

    /// One application of the Bellman map.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.continuation(v).into_iter().zip(&self.stop_reward).map(|(cont, r)| r.max(cont)).collect()
    }

    /// Iterates the Bellman map from `init` to its fixed point.
    pub fn solve_from(&self, init: Vec<f64>) -> Result<ValueIteration> {
        let mut v = init;
        let mut residuals = Vec::new();
        for _ in 0..VALUE_MAX_ITERS {
            let next = self.apply(&v);
            let r = sup_distance(&next, &v);
            residuals.push(r);
            v = next;
            if r < VALUE_TOL {
                let continuation = self.continuation(&v);
                let stop = self.stop_reward.iter().zip(&continuation).map(|(r, c)| r >= c).collect();
                return Ok(ValueIteration { values: v, stop, continuation, residuals });
            }
        }
        Err(Error::Numerical(format!("value iteration did not converge in {VALUE_MAX_ITERS} sweeps")))
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Converged values of one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueIteration {
    pub values: Vec<f64>,
    /// States where the meta-stopping action is optimal (ties stop).
    pub stop: Vec<bool>,
    /// Continuation value per state at the fixed point.
    pub continuation: Vec<f64>,
    /// Sup-norm change per sweep.
    pub residuals: Vec<f64>,
}

/// Value iteration from `V = 0` for one stage.
pub fn value_iteration(
    chain: &MarkovChannel,
    c: f64,
    t_c: u32,
    t: f64,
    discount: Discount,
) -> Result<ValueIteration> {
    let mdp = StageMdp::new(chain, c, t_c, t, discount)?;
    mdp.solve_from(vec![0.0; chain.n_states()])
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovStagePolicy {
    pub stage: usize,
    pub switch_value: f64,
    pub values: Vec<f64>,
    pub continuation: Vec<f64>,
    pub actions: Vec<Action>,
    /// `E[V_i]` under the stationary law of the channel.
    pub stage_value: f64,
    pub factor: f64,
    pub contention_delay: u32,
    pub rewards: Vec<f64>,
}

impl MarkovStagePolicy {
    pub fn decide(&self, state: usize) -> Action {
        self.actions[state]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovPolicyTable {
    pub stages: Vec<MarkovStagePolicy>,
    pub transmission_time: f64,
    pub discount: Discount,
    pub contention_delays: Vec<u32>,
    pub switching_delays: Vec<u32>,
}

impl MarkovPolicyTable {
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn decide(&self, stage: usize, state: usize) -> Action {
        decide_markov(self, stage, state)
    }

    /// Tab-separated table, one row per (stage, state), both numbered from 1.
    pub fn to_text(&self) -> String {
        let mut out = String::from("stage\tstate\treward\tswitch_value\tvalue\taction\n");
        for s in &self.stages {
            for (x, a) in s.actions.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}",
                    s.stage + 1,
                    x + 1,
                    s.rewards[x],
                    s.switch_value,
                    s.values[x],
                    a
                );
            }
        }
        out
    }
}

fn action_for(stop: bool, reward: f64, c: f64) -> Action {
    match (stop, reward >= c) {
        (true, true) => Action::Stop,
        (true, false) => Action::Switch,
        (false, _) => Action::Stay,
    }
}

/// Backward induction over Markov channels. Real-valued delays are rounded
/// to the nearest integer (at least one) before use.
pub fn backward_induction_markov(
    chains: &[MarkovChannel],
    contention: &[f64],
    switching: &[f64],
    t: f64,
    discount: Discount,
) -> Result<MarkovPolicyTable> {
    check_delays(chains.len(), contention, switching, t)?;
    let n = chains.len();
    let tc: Vec<u32> = contention.iter().map(|d| round_delay(*d)).collect();
    let ts: Vec<u32> = switching.iter().map(|d| round_delay(*d)).collect();
    let mut stages = Vec::with_capacity(n);
    let mut next_value = 0.0;
    for i in (0..n).rev() {
        let chain = &chains[i];
        let switch_value = if i + 1 == n { 0.0 } else { t / (t + ts[i + 1] as f64) * next_value };
        let mdp = StageMdp::new(chain, switch_value, tc[i], t, discount)?;
        let solved = mdp.solve_from(vec![0.0; chain.n_states()])?;
        let actions = solved
            .stop
            .iter()
            .zip(chain.rewards())
            .map(|(s, r)| action_for(*s, *r, switch_value))
            .collect();
        let stage_value = chain.stationary().iter().zip(&solved.values).map(|(p, v)| p * v).sum();
        stages.push(MarkovStagePolicy {
            stage: i,
            switch_value,
            values: solved.values,
            continuation: solved.continuation,
            actions,
            stage_value,
            factor: mdp.factor,
            contention_delay: tc[i],
            rewards: chain.rewards().to_vec(),
        });
        next_value = stage_value;
    }
    stages.reverse();
    Ok(MarkovPolicyTable { stages, transmission_time: t, discount, contention_delays: tc, switching_delays: ts })
}

/// Action at `stage` (zero-based) when the chain is in `state`.
pub fn decide_markov(policy: &MarkovPolicyTable, stage: usize, state: usize) -> Action {
    policy.stages[stage].decide(state)
}
