//! Uniformly sampled complex baseband envelopes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform time grid `t_k = t0 + k·dt`, `k = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("grid step must be > 0, got {dt}")));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("grid must hold at least one sample".into()));
        }
        Ok(Self { t0, dt, n })
    }

    /// Grid covering `[t0, t0 + duration]` with step close to `dt_max`
    /// (never larger), endpoints included.
    pub fn spanning(t0: f64, duration: f64, dt_max: f64) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::InvalidArgument(format!("duration must be > 0, got {duration}")));
        }
        let steps = (duration / dt_max).ceil().max(1.0) as usize;
        Self::new(t0, duration / steps as f64, steps + 1)
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|k| self.time(k))
    }

    /// Time of the last sample.
    pub fn end(&self) -> f64 {
        self.time(self.n - 1)
    }

    pub fn duration(&self) -> f64 {
        self.dt * (self.n - 1) as f64
    }

    /// True when both grids share origin and step to a relative 1e-9.
    pub fn aligned_with(&self, other: &Grid) -> bool {
        let scale = self.dt.max(other.dt);
        (self.dt - other.dt).abs() <= 1e-9 * scale && (self.t0 - other.t0).abs() <= 1e-6 * scale
    }
}

/// Complex amplitude in √(quanta/s), so `Σ|v|²·dt` counts quanta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<Complex64>,
    /// Carrier of the envelope, rad/s. Metadata only; dynamics run in
    /// baseband.
    #[serde(default)]
    pub carrier: Option<f64>,
}

impl Envelope {
    pub fn new(t0: f64, dt: f64, values: Vec<Complex64>) -> Self {
        Self { t0, dt, values, carrier: None }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::new(grid.t0, grid.dt, vec![Complex64::new(0.0, 0.0); grid.n])
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        Self::new(grid.t0, grid.dt, grid.times().map(f).collect())
    }

    /// `√(energy·γ) e^{-γ(t-t0)/2}`: power decays at rate `γ` and the
    /// untruncated pulse carries `energy` quanta.
    pub fn exponential(grid: Grid, gamma: f64, energy: f64) -> Self {
        let amp = (energy * gamma).sqrt();
        let t0 = grid.t0;
        Self::from_fn(grid, |t| Complex64::new(amp * (-gamma * (t - t0) / 2.0).exp(), 0.0))
    }

    /// Amplitude `A e^{-(t-center)²/(2σ²)}` with `A` set so the untruncated
    /// pulse carries `energy` quanta.
    pub fn gaussian(grid: Grid, center: f64, sigma: f64, energy: f64) -> Self {
        let amp = (energy / (sigma * crate::consts::PI.sqrt())).sqrt();
        Self::from_fn(grid, |t| {
            let x = (t - center) / sigma;
            Complex64::new(amp * (-0.5 * x * x).exp(), 0.0)
        })
    }

    pub fn with_carrier(mut self, carrier: f64) -> Self {
        self.carrier = Some(carrier);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn grid(&self) -> Grid {
        Grid { t0: self.t0, dt: self.dt, n: self.values.len() }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// `Σ |v|² dt`, quanta.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dt
    }

    /// Linear interpolation; zero outside the sampled interval.
    pub fn sample(&self, t: f64) -> Complex64 {
        let n = self.values.len();
        if n == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let x = (t - self.t0) / self.dt;
        let last = (n - 1) as f64;
        if x < -1e-9 || x > last + 1e-9 {
            return Complex64::new(0.0, 0.0);
        }
        let x = x.clamp(0.0, last);
        let k = (x.floor() as usize).min(n.saturating_sub(2));
        if n == 1 {
            return self.values[0];
        }
        let frac = x - k as f64;
        self.values[k] * (1.0 - frac) + self.values[k + 1] * frac
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    /// Time-reversed samples on the same grid.
    pub fn time_reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { values, ..self.clone() }
    }

    /// Normalized overlap `|⟨a, b⟩|² / (E_a E_b)` of two envelopes sampled on
    /// the same number of points.
    pub fn overlap(&self, other: &Envelope) -> f64 {
        let inner: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let ea: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        let eb: f64 = other.values.iter().map(|v| v.norm_sqr()).sum();
        inner.norm_sqr() / (ea * eb)
    }
}
