//! Seeded noise streams and the noise configuration.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::DeviceParams;

/// Fluctuation sources for a trajectory.
///
/// The mechanical bath damps `c` at `kappa_m / 2` and, with
/// `thermal_drive`, drives it with a white force of strength
/// `⟨ξ(t)ξ*(t')⟩ = κ_m (n_m + ½) δ(t − t')`. With `include_vacuum_input`
/// both the signal port and the circuit's internal-loss port carry
/// half a quantum of white noise, and a protocol starts the mechanics from
/// a zero-point amplitude with `E|c|² = ½`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub n_m: f64,
    pub kappa_m: f64,
    #[serde(default = "yes")]
    pub thermal_drive: bool,
    #[serde(default)]
    pub include_vacuum_input: bool,
    #[serde(default)]
    pub seed: u64,
}

fn yes() -> bool {
    true
}

impl NoiseSpec {
    /// Deterministic and lossless mechanics.
    pub fn off() -> Self {
        Self { n_m: 0.0, kappa_m: 0.0, thermal_drive: false, include_vacuum_input: false, seed: 0 }
    }

    /// Mechanical damping without fluctuations.
    pub fn damping_only(kappa_m: f64) -> Self {
        Self { kappa_m, ..Self::off() }
    }

    /// Thermal bath of the device, no vacuum input noise.
    pub fn thermal(params: &DeviceParams, seed: u64) -> Self {
        Self { n_m: params.n_m, kappa_m: params.kappa_m, thermal_drive: true, include_vacuum_input: false, seed }
    }

    pub fn with_vacuum(mut self, on: bool) -> Self {
        self.include_vacuum_input = on;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn is_stochastic(&self) -> bool {
        self.include_vacuum_input || self.thermal_strength() > 0.0
    }

    /// `κ_m (n_m + ½)` when the thermal drive is on.
    pub fn thermal_strength(&self) -> f64 {
        if self.thermal_drive {
            self.kappa_m * (self.n_m + 0.5)
        } else {
            0.0
        }
    }

    pub fn decoherence_rate(&self) -> f64 {
        self.n_m * self.kappa_m
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::off()
    }
}

/// Independent stream per `(master seed, run index)`.
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, run: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run);
        Self { rng }
    }

    /// Circular complex Gaussian with `E|z|² = variance`.
    pub fn complex_normal(&mut self, variance: f64) -> Complex64 {
        let s = (variance / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(&mut self.rng);
        let im: f64 = StandardNormal.sample(&mut self.rng);
        Complex64::new(s * re, s * im)
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// White noise of spectral density `density` (quanta, or rate for the
    /// mechanical force) realized on `n` samples spaced `dt`: each sample
    /// has `E|z|² = density/dt`.
    pub fn white(&mut self, n: usize, dt: f64, density: f64) -> Vec<Complex64> {
        (0..n).map(|_| self.complex_normal(density / dt)).collect()
    }
}
