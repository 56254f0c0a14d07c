use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{domain, Error, Result};

/// Grid resolution used when discretizing continuous reward laws.
pub const DEFAULT_GRID_POINTS: usize = 1000;

const PROB_TOL: f64 = 1e-12;

/// Finite-support reward distribution of an IID channel.
///
/// Support values are strictly increasing and positive; probabilities sum
/// to one.
#[derive(Debug, Clone)]
pub struct DiscreteDistribution {
    support: Vec<f64>,
    probs: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl PartialEq for DiscreteDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.support == other.support && self.probs == other.probs
    }
}

impl DiscreteDistribution {
    /// Builds a distribution, checking every invariant. Probabilities are
    /// renormalized when they sum to one within `1e-12`; larger deviations
    /// are rejected.
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(Error::Model(format!(
                "support ({}) and probabilities ({}) must be non-empty and of equal length",
                support.len(),
                probs.len()
            )));
        }
        if support.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::Model("rewards must be finite and positive".into()));
        }
        if support.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Model("support must be strictly increasing".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Model("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::Model(format!("probabilities sum to {total}, expected 1")));
        }
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        Self::from_normalized(support, probs)
    }

    fn from_normalized(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let sampler = WeightedIndex::new(&probs).map_err(|e| Error::Model(format!("bad weights: {e}")))?;
        Ok(Self { support, probs, sampler })
    }

    /// Builds a distribution from unnormalized non-negative weights, dropping
    /// zero-weight points.
    pub fn from_weights(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::Model("support and weights differ in length".into()));
        }
        let (support, weights): (Vec<f64>, Vec<f64>) =
            support.into_iter().zip(weights).filter(|(_, w)| *w > 0.0).unzip();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Model("weights must have positive finite total".into()));
        }
        let probs = weights.iter().map(|w| w / total).collect();
        Self::new(support, probs)
    }

    /// Point mass at `value`.
    pub fn degenerate(value: f64) -> Result<Self> {
        Self::new(vec![value], vec![1.0])
    }

    /// Exponential law with the given mean, truncated to `(0, x_max]` and
    /// discretized to `n_points` equispaced bin midpoints.
    pub fn discretize_exponential(mean: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) || !(x_max > 0.0 && x_max.is_finite()) {
            return Err(domain(format!("exponential needs mean > 0 and x_max > 0, got {mean}, {x_max}")));
        }
        if n_points < 2 {
            return Err(domain("need at least two grid points"));
        }
        let h = x_max / n_points as f64;
        let support: Vec<f64> = (0..n_points).map(|k| (k as f64 + 0.5) * h).collect();
        // bin masses of an exponential are proportional to the density at
        // the bin midpoint, so the two constructions coincide
        let weights = support.iter().map(|x| (-x / mean).exp()).collect();
        Self::from_weights(support, weights)
    }

    /// Shannon-rate law of a Rayleigh-faded AWGN link with mean SNR `rho`,
    /// `F(r) = 1 - exp(-(e^r - 1)/rho)`, truncated at `r_max` and
    /// discretized to `n_points` bins (midpoint support, CDF-difference mass).
    pub fn discretize_awgn(rho: f64, r_max: f64, n_points: usize) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) || !(r_max > 0.0 && r_max.is_finite()) {
            return Err(domain(format!("awgn needs rho > 0 and r_max > 0, got {rho}, {r_max}")));
        }
        if n_points < 2 {
            return Err(domain("need at least two grid points"));
        }
        let h = r_max / n_points as f64;
        let support: Vec<f64> = (0..n_points).map(|k| (k as f64 + 0.5) * h).collect();
        let weights = (0..n_points)
            .map(|k| awgn_cdf(rho, (k + 1) as f64 * h) - awgn_cdf(rho, k as f64 * h))
            .collect();
        Self::from_weights(support, weights)
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Largest reward in the support.
    pub fn max(&self) -> f64 {
        *self.support.last().expect("non-empty support")
    }

    pub fn min(&self) -> f64 {
        self.support[0]
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    /// `E[f(X)]` as an exact finite sum.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.support.iter().zip(&self.probs).map(|(x, p)| p * f(*x)).sum()
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .take_while(|(s, _)| **s <= x)
            .map(|(_, p)| p)
            .sum()
    }

    /// Every reward multiplied by `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(domain(format!("scale must be positive, got {k}")));
        }
        Self::from_normalized(self.support.iter().map(|x| x * k).collect(), self.probs.clone())
    }

    /// Draws a support index.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }

    /// Draws a reward.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.support[self.sample_index(rng)]
    }
}

pub(crate) fn awgn_cdf(rho: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    -(-(r.exp_m1()) / rho).exp_m1()
}

/// Truncation point leaving less than `1e-4` of the AWGN rate mass beyond it.
pub fn awgn_default_rate_max(rho: f64) -> f64 {
    (1.0 + rho * 1e4f64.ln()).ln()
}
