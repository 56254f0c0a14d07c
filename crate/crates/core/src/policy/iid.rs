//! Policy computation for IID channels.
//!
//! For a stage with reward law `X`, switch value `c` and contention delay
//! `t_c`, the threshold `lambda*` is the unique root of
//!
//! ```text
//!   D(lambda) = E[max(X, c) - lambda]^+ - lambda * t_c / T
//! ```
//!
//! `D` is continuous and strictly decreasing with `D(0) > 0`, so the root
//! exists and is unique whenever `t_c > 0`. Two routes compute it: the
//! `lambda < c` closed form / `lambda >= c` fixed point pair, and plain
//! bisection on `D`. Bisection wins when they disagree.

use std::fmt::Write as _;

use super::{check_delays, Action, Continuation};
use crate::channel::DiscreteDistribution;
use crate::error::{domain, Error, Result};

const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_MAX_ITERS: usize = 10_000;
const AGREEMENT_TOL: f64 = 1e-8;

/// `D(lambda)` for the bundled reward `max(X, c)`.
pub fn threshold_gap(dist: &DiscreteDistribution, c: f64, t_c: f64, t: f64, lambda: f64) -> f64 {
    dist.expect(|x| (x.max(c) - lambda).max(0.0)) - lambda * t_c / t
}

/// Outcome of the threshold solve with both routes exposed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSolution {
    pub lambda: f64,
    /// Value from the closed form (`lambda < c`) or the fixed point.
    pub analytic: f64,
    pub bisection: f64,
    /// Fixed-point iterations used; zero when the closed form applied.
    pub iterations: usize,
}

fn check_threshold_args(c: f64, t_c: f64, t: f64) -> Result<()> {
    if !(t_c > 0.0 && t_c.is_finite()) {
        return Err(domain(format!("contention delay must be > 0 for a unique threshold, got {t_c}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(format!("transmission time must be > 0, got {t}")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(domain(format!("switch value must be >= 0, got {c}")));
    }
    Ok(())
}

/// Root of `D` by bisection on `[0, max(X_max, c)]`.
fn bisect(dist: &DiscreteDistribution, c: f64, t_c: f64, t: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = dist.max().max(c);
    // D(hi) = -hi * t_c / T < 0 and D(0) = E[max(X, c)] > 0
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if threshold_gap(dist, c, t_c, t, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `lambda <- E[X; X >= lambda] / (P(X >= lambda) + t_c/T)` from `start`.
fn fixed_point(dist: &DiscreteDistribution, ratio: f64, start: f64) -> Option<(f64, usize)> {
    let mut lambda = start;
    for iter in 1..=FIXED_POINT_MAX_ITERS {
        let (mass, partial) = dist
            .support()
            .iter()
            .zip(dist.probs())
            .filter(|(x, _)| **x >= lambda)
            .fold((0.0, 0.0), |(m, s), (x, p)| (m + p, s + x * p));
        let next = partial / (mass + ratio);
        if (next - lambda).abs() < FIXED_POINT_TOL {
            return Some((next, iter));
        }
        lambda = next;
    }
    None
}

/// Solves for `lambda*` and reports both solution routes.
pub fn solve_threshold_detailed(dist: &DiscreteDistribution, c: f64, t_c: f64, t: f64) -> Result<ThresholdSolution> {
    check_threshold_args(c, t_c, t)?;
    let ratio = t_c / t;
    let bisection = bisect(dist, c, t_c, t);

    let below_c = (dist.expect(|x| if x > c { x } else { 0.0 }) + c * dist.cdf(c)) / (1.0 + ratio);
    let (analytic, iterations) = if below_c < c {
        (below_c, 0)
    } else {
        let start = dist.expect(|x| x.max(c));
        match fixed_point(dist, ratio, start) {
            Some(found) => found,
            None => (f64::NAN, FIXED_POINT_MAX_ITERS),
        }
    };

    let lambda = if (analytic - bisection).abs() <= AGREEMENT_TOL { analytic } else { bisection };
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Numerical(format!("threshold solve produced {lambda}")));
    }
    Ok(ThresholdSolution { lambda, analytic, bisection, iterations })
}

/// The threshold `lambda*` for one stage.
pub fn solve_threshold(dist: &DiscreteDistribution, c: f64, t_c: f64, t: f64) -> Result<f64> {
    Ok(solve_threshold_detailed(dist, c, t_c, t)?.lambda)
}

/// Policy for one stage of a user's channel sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct StagePolicy {
    /// Zero-based position in the sequence.
    pub stage: usize,
    /// Expected reward of switching to the next stage; zero at the last one.
    pub switch_value: f64,
    pub threshold: f64,
    /// `E[V_i] = E[max(X, lambda*, c)]`.
    pub stage_value: f64,
    pub continuation: Continuation,
}

impl StagePolicy {
    pub fn decide(&self, x: f64) -> Action {
        match self.continuation {
            Continuation::Switch if x >= self.switch_value => Action::Stop,
            Continuation::Switch => Action::Switch,
            Continuation::Stay if x >= self.threshold => Action::Stop,
            Continuation::Stay => Action::Stay,
        }
    }
}

/// Nested stopping policy for a whole channel sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    pub stages: Vec<StagePolicy>,
    pub transmission_time: f64,
    pub contention_delays: Vec<f64>,
    pub switching_delays: Vec<f64>,
}

impl PolicyTable {
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn decide(&self, stage: usize, x: f64) -> Action {
        decide(self, stage, x)
    }

    /// Tab-separated table, one row per stage, stages numbered from 1.
    pub fn to_text(&self) -> String {
        let mut out = String::from("stage\tswitch_value\tthreshold\tstage_value\tcontinuation\n");
        for s in &self.stages {
            let _ = writeln!(
                out,
                "{}\t{:.6}\t{:.6}\t{:.6}\t{}",
                s.stage + 1,
                s.switch_value,
                s.threshold,
                s.stage_value,
                s.continuation
            );
        }
        out
    }
}

/// Backward induction over the sequence `dists`, where `contention[i]` and
/// `switching[i]` are the delays of the channel at stage `i`.
pub fn backward_induction(
    dists: &[DiscreteDistribution],
    contention: &[f64],
    switching: &[f64],
    t: f64,
) -> Result<PolicyTable> {
    check_delays(dists.len(), contention, switching, t)?;
    let n = dists.len();
    let mut stages = Vec::with_capacity(n);
    let mut next_value = 0.0;
    for i in (0..n).rev() {
        let switch_value = if i + 1 == n { 0.0 } else { t / (t + switching[i + 1]) * next_value };
        let threshold = solve_threshold(&dists[i], switch_value, contention[i], t)?;
        let floor = threshold.max(switch_value);
        let stage_value = dists[i].expect(|x| x.max(floor));
        let continuation = if threshold < switch_value { Continuation::Switch } else { Continuation::Stay };
        stages.push(StagePolicy { stage: i, switch_value, threshold, stage_value, continuation });
        next_value = stage_value;
    }
    stages.reverse();
    Ok(PolicyTable {
        stages,
        transmission_time: t,
        contention_delays: contention.to_vec(),
        switching_delays: switching.to_vec(),
    })
}

/// Action at `stage` (zero-based) when the observed reward is `x`.
///
/// Ties go to STOP: the stopping set `{x : max(x, c) >= lambda*}` is closed.
pub fn decide(policy: &PolicyTable, stage: usize, x: f64) -> Action {
    policy.stages[stage].decide(x)
}
