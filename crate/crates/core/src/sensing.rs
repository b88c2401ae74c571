//! Noisy sensor observations `x_i(t_n) = x(t_n) + n_i(t_n)` with i.i.d.
//! Gaussian noise, and the per-sample probability that an observation falls
//! at or below the threshold.

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

/// `N` identical sensors with additive Gaussian noise `N(μ, σ²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorModel {
    sensors: usize,
    mu: f64,
    sigma2: f64,
}

impl SensorModel {
    pub fn new(sensors: usize, mu: f64, sigma2: f64) -> Result<Self> {
        if sensors == 0 {
            return Err(Error::config("sensor count N must be at least 1"));
        }
        if !mu.is_finite() {
            return Err(Error::config(format!(
                "noise mean must be finite, got {mu}"
            )));
        }
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::config(format!(
                "noise variance must be positive, got {sigma2}"
            )));
        }
        Ok(SensorModel {
            sensors,
            mu,
            sigma2,
        })
    }

    pub fn sensors(&self) -> usize {
        self.sensors
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn with_sensors(self, sensors: usize) -> Result<Self> {
        Self::new(sensors, self.mu, self.sigma2)
    }
}

/// `P(x_i(t_n) <= x_th) = ½ (1 + erf((x_th − x − μ) / (σ√2)))`.
pub fn observe_probability_below(x: f64, x_th: f64, model: &SensorModel) -> f64 {
    let z = (x_th - x - model.mu) / (model.sigma() * std::f64::consts::SQRT_2);
    (0.5 * (1.0 + libm::erf(z))).clamp(0.0, 1.0)
}

/// Per-sample observation probabilities on each side of the threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct SensingProbabilities {
    p_below: Vec<f64>,
    p_above: Vec<f64>,
}

impl SensingProbabilities {
    /// Builds a profile from arbitrary per-sample `P(x_i <= x_th)` values,
    /// e.g. for a non-Gaussian noise model.
    pub fn from_below(p_below: Vec<f64>) -> Result<Self> {
        if let Some(pos) = p_below.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config(format!(
                "sensing probability at sample {pos} is outside [0, 1]"
            )));
        }
        let p_above = p_below.iter().map(|p| 1.0 - p).collect();
        Ok(SensingProbabilities { p_below, p_above })
    }

    pub fn p_below(&self) -> &[f64] {
        &self.p_below
    }

    pub fn p_above(&self) -> &[f64] {
        &self.p_above
    }

    pub fn len(&self) -> usize {
        self.p_below.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_below.is_empty()
    }
}

pub fn sensing_profile(
    signal: &SampledSignal,
    x_th: f64,
    model: &SensorModel,
) -> SensingProbabilities {
    let p_below: Vec<f64> = signal
        .values()
        .iter()
        .map(|&x| observe_probability_below(x, x_th, model))
        .collect();
    let p_above = p_below.iter().map(|p| 1.0 - p).collect();
    SensingProbabilities { p_below, p_above }
}
