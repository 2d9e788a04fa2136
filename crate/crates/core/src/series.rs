use serde::{Deserialize, Serialize};

use crate::error::{LadderError, Result};

/// Real samples `p(t_n)` on the uniform grid `t_n = n·dt`, starting at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl TimeSeries {
    pub fn new(dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(LadderError::InvalidParameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(LadderError::InvalidParameter(format!(
                "sample {i} is not finite"
            )));
        }
        Ok(Self { dt, samples })
    }

    /// Samples `f(t_n)` for `n = 0..len`.
    pub fn from_fn(dt: f64, len: usize, f: impl Fn(f64) -> f64) -> Self {
        Self {
            dt,
            samples: (0..len).map(|n| f(n as f64 * dt)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|n| self.t(n))
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.len().saturating_sub(1))
    }

    pub fn initial(&self) -> f64 {
        self.samples[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// First `len` samples.
    pub fn truncated(&self, len: usize) -> Self {
        Self {
            dt: self.dt,
            samples: self.samples[..len.min(self.len())].to_vec(),
        }
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            dt: self.dt,
            samples: self
                .samples
                .iter()
                .enumerate()
                .map(|(n, &x)| f(self.t(n), x))
                .collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|_, x| factor * x)
    }

    pub fn check_same_grid(&self, other: &TimeSeries) -> Result<()> {
        if self.len() != other.len() {
            return Err(LadderError::GridMismatch(format!(
                "{} vs {} samples",
                self.len(),
                other.len()
            )));
        }
        if (self.dt - other.dt).abs() > 1e-12 * self.dt {
            return Err(LadderError::GridMismatch(format!(
                "dt {} vs {}",
                self.dt, other.dt
            )));
        }
        Ok(())
    }

    /// `Σ_n (a_n - b_n)² dt`.
    pub fn squared_distance(&self, other: &TimeSeries) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            * self.dt)
    }

    /// `sqrt(Σ_n a_n² dt)`.
    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|a| a * a).sum::<f64>() * self.dt).sqrt()
    }

    /// Multiplies the series so that it starts at `target`.
    pub fn rescale_to(&self, target: f64) -> Result<Self> {
        let p0 = self.initial();
        if p0 == 0.0 {
            return Err(LadderError::UndefinedScaling);
        }
        Ok(self.scaled(target / p0))
    }

    /// One-sided second-order estimate of `dp/dt` at `t = 0`.
    pub fn slope_at_zero(&self) -> Result<f64> {
        if self.len() < 3 {
            return Err(LadderError::TooFewSamples {
                needed: 3,
                got: self.len(),
            });
        }
        let s = &self.samples;
        Ok((-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * self.dt))
    }
}

/// Number of samples covering `[0, t_max]` at step `dt`.
pub fn grid_len(t_max: f64, dt: f64) -> usize {
    (t_max / dt).round() as usize + 1
}
