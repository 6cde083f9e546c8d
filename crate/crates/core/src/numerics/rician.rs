//! Rician block fading in the power domain.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::marcum::{marcum_q1_pair, DEFAULT_MARCUM_TOL};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Power gain `|h|²` of a Rician channel with average power `mean_gain` and
/// LoS-to-scatter power ratio `rician_factor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicianChannel<S = f64> {
    mean_gain: S,
    rician_factor: S,
}

impl<S: Scalar> RicianChannel<S> {
    pub fn new(mean_gain: S, rician_factor: S) -> Result<Self> {
        if !(mean_gain > S::zero()) || !mean_gain.is_finite() {
            return Err(Error::Domain(format!("mean channel gain must be positive, got {mean_gain}")));
        }
        if !(rician_factor >= S::zero()) || !rician_factor.is_finite() {
            return Err(Error::Domain(format!("Rician factor must be non-negative, got {rician_factor}")));
        }
        Ok(Self { mean_gain, rician_factor })
    }

    pub fn mean_gain(&self) -> S {
        self.mean_gain
    }

    pub fn rician_factor(&self) -> S {
        self.rician_factor
    }

    /// `(F(x), 1 − F(x))` for the power gain, each with full relative precision
    /// on its small side.
    pub fn cdf_pair(&self, x: S) -> Result<(S, S)> {
        if x.is_nan() || x < S::zero() {
            return Err(Error::Domain(format!("channel power gain must be non-negative, got {x}")));
        }
        if x == S::infinity() {
            return Ok((S::one(), S::zero()));
        }
        let two = S::lit(2.0);
        let a = (two * self.rician_factor).sqrt();
        let b = (two * (self.rician_factor + S::one()) * x / self.mean_gain).sqrt();
        let (q, one_minus_q) = marcum_q1_pair(a, b, DEFAULT_MARCUM_TOL)?;
        Ok((one_minus_q, q))
    }

    /// `P(|h|² ≤ x) = 1 − Q₁(√(2Ψ), √(2(Ψ+1)x/H̄))`.
    pub fn cdf(&self, x: S) -> Result<S> {
        self.cdf_pair(x).map(|(f, _)| f)
    }

    /// `P(|h|² > x)`.
    pub fn ccdf(&self, x: S) -> Result<S> {
        self.cdf_pair(x).map(|(_, c)| c)
    }

    /// Precomputes the Gaussian parameters used by [`RicianSampler::sample`].
    pub fn sampler(&self) -> RicianSampler<S> {
        let one = S::one();
        let los = (self.rician_factor * self.mean_gain / (self.rician_factor + one)).sqrt();
        let sigma = (self.mean_gain / (S::lit(2.0) * (self.rician_factor + one))).sqrt();
        RicianSampler { los, sigma }
    }

    /// Draws one power gain. Prefer [`RicianChannel::sampler`] in hot loops.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        self.sampler().sample(rng)
    }
}

/// `|μ + σ(n₁ + j n₂)|²` with `μ² = ΨH̄/(Ψ+1)` and `2σ² = H̄/(Ψ+1)`.
#[derive(Debug, Clone, Copy)]
pub struct RicianSampler<S> {
    los: S,
    sigma: S,
}

impl<S: Scalar> RicianSampler<S> {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        let re = self.los + self.sigma * S::sample_std_normal(rng);
        let im = self.sigma * S::sample_std_normal(rng);
        re * re + im * im
    }
}
