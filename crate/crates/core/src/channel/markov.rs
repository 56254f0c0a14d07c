use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};

const ROW_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-12;
const STATIONARY_MAX_ITERS: usize = 1_000_000;

/// Square row-stochastic matrix stored row-major.
pub type Matrix = Vec<Vec<f64>>;

/// Finite-state Markov channel: one transition per time unit, a reward per
/// state. Rewards are positive and strictly increasing in the state index.
#[derive(Debug, Clone)]
pub struct MarkovChannel {
    transition: Matrix,
    rewards: Vec<f64>,
    stationary: Vec<f64>,
    row_samplers: Vec<WeightedIndex<f64>>,
    stationary_sampler: WeightedIndex<f64>,
}

impl PartialEq for MarkovChannel {
    fn eq(&self, other: &Self) -> bool {
        self.transition == other.transition && self.rewards == other.rewards
    }
}

impl MarkovChannel {
    pub fn new(transition: Matrix, rewards: Vec<f64>) -> Result<Self> {
        let n = rewards.len();
        if n == 0 {
            return Err(Error::Model("a chain needs at least one state".into()));
        }
        if transition.len() != n || transition.iter().any(|row| row.len() != n) {
            return Err(Error::Model(format!("transition matrix must be {n}x{n}")));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::Model(format!("row {i} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOL {
                return Err(Error::Model(format!("row {i} sums to {s}")));
            }
        }
        if rewards.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Model("state rewards must be finite and positive".into()));
        }
        if rewards.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Model("state rewards must be strictly increasing".into()));
        }
        if !is_irreducible(&transition) {
            return Err(Error::Model("transition matrix is reducible".into()));
        }
        let stationary = stationary_distribution(&transition)?;
        let row_samplers = transition
            .iter()
            .map(|row| WeightedIndex::new(row).map_err(|e| Error::Model(e.to_string())))
            .collect::<Result<_>>()?;
        let stationary_sampler = WeightedIndex::new(&stationary).map_err(|e| Error::Model(e.to_string()))?;
        Ok(Self { transition, rewards, stationary, row_samplers, stationary_sampler })
    }

    /// Birth-death chain moving up with probability `up` and down with
    /// `1 - up`; the boundary states hold in place with the blocked mass.
    pub fn birth_death(up: f64, rewards: Vec<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&up) {
            return Err(Error::Domain(format!("up probability {up} outside [0, 1]")));
        }
        let n = rewards.len();
        let down = 1.0 - up;
        let mut p = vec![vec![0.0; n]; n];
        for i in 0..n {
            if n == 1 {
                p[0][0] = 1.0;
                break;
            }
            if i + 1 < n {
                p[i][i + 1] += up;
            } else {
                p[i][i] += up;
            }
            if i > 0 {
                p[i][i - 1] += down;
            } else {
                p[i][i] += down;
            }
        }
        Self::new(p, rewards)
    }

    pub fn n_states(&self) -> usize {
        self.rewards.len()
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn reward(&self, state: usize) -> f64 {
        self.rewards[state]
    }

    /// Stationary distribution `pi` with `pi P = pi`.
    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn stationary_mean(&self) -> f64 {
        self.stationary.iter().zip(&self.rewards).map(|(p, r)| p * r).sum()
    }

    /// `k`-step transition matrix.
    pub fn k_step(&self, k: u32) -> Matrix {
        matrix_power(&self.transition, k)
    }

    /// One transition from `state`.
    pub fn step<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        self.row_samplers[state].sample(rng)
    }

    /// `k` consecutive transitions from `state`.
    pub fn advance<R: Rng + ?Sized>(&self, mut state: usize, k: u64, rng: &mut R) -> usize {
        for _ in 0..k {
            state = self.step(state, rng);
        }
        state
    }

    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.stationary_sampler.sample(rng)
    }
}

pub(crate) fn identity(n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub(crate) fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// Keeps a product of stochastic matrices stochastic in the face of rounding.
fn restore_stochastic(m: &mut Matrix) {
    for row in m.iter_mut() {
        for p in row.iter_mut() {
            *p = p.clamp(0.0, 1.0);
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_TOL {
            row.iter_mut().for_each(|p| *p /= s);
        }
    }
}

/// `P^k` by repeated squaring.
pub(crate) fn matrix_power(p: &Matrix, mut k: u32) -> Matrix {
    let mut result = identity(p.len());
    let mut base = p.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = mat_mul(&result, &base);
            restore_stochastic(&mut result);
        }
        k >>= 1;
        if k > 0 {
            base = mat_mul(&base, &base);
            restore_stochastic(&mut base);
        }
    }
    result
}

fn is_irreducible(p: &Matrix) -> bool {
    let n = p.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let edge = if forward { p[i][j] } else { p[j][i] };
                if edge > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// Power iteration on the lazy chain `(I + P)/2`, which shares the
/// stationary law of `P` and is aperiodic.
fn stationary_distribution(p: &Matrix) -> Result<Vec<f64>> {
    let n = p.len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..STATIONARY_MAX_ITERS {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[j] += pi[i] * p[i][j];
            }
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= s);
        let residual = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual < STATIONARY_TOL {
            return Ok(next);
        }
        for (a, b) in pi.iter_mut().zip(&next) {
            *a = 0.5 * (*a + b);
        }
    }
    Err(Error::Numerical("stationary distribution did not converge".into()))
}
