//! Time-domain integration of the converter.
//!
//! Two models share one input/output convention: all fields are complex
//! baseband envelopes in the frame of the circuit resonance (mechanics in
//! the frame of `ω_m`), in √(quanta/s) for propagating fields and √quanta
//! for mode amplitudes.
//!
//! - [`integrate_full`]: linearized optomechanics around a pump detuned by
//!   `Δ`, including the counter-rotating coupling.
//! - [`integrate_reduced`]: resolved-sideband, weak-coupling beam-splitter
//!   dynamics driven directly by `Γ(t)`.
//!
//! Both use fixed-step classical RK4. Stochastic sources are realized as
//! white samples on the schedule grid, linearly interpolated between
//! samples, so a noisy run is an ordinary RK4 solve driven by one noise
//! realization.

mod ensemble;
mod full;
mod noise;
mod protocol;
mod reduced;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::envelope::{Envelope, Grid};
use crate::{Error, Result};

pub use ensemble::{monte_carlo, monte_carlo_map, vacuum_ensemble};
pub use full::integrate_full;
pub use noise::{NoiseSpec, NoiseStream};
pub use protocol::{run_protocol, run_protocol_seeded, ConversionDesign, ModelKind, ProtocolResult, ProtocolSpec, ProtocolWarning};
pub use reduced::integrate_reduced;

/// Integrator steps per period for the full model, and per `1/max Γ`.
pub const STEPS_PER_TIMESCALE: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SystemState {
    /// Circuit mode amplitude, √photons.
    pub a: Complex64,
    /// Mechanical mode amplitude, √phonons.
    pub c: Complex64,
    pub t: f64,
}

impl SystemState {
    pub fn with_phonons(c: Complex64) -> Self {
        Self { c, ..Self::default() }
    }

    pub fn with_photons(a: Complex64) -> Self {
        Self { a, ..Self::default() }
    }
}

/// Options shared by both integrators.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegratorOptions {
    /// State at the first grid sample.
    pub initial: SystemState,
    /// RK4 steps per grid interval. `None` picks the smallest count that
    /// meets the step bound; an explicit count above the bound is an error.
    pub substeps: Option<usize>,
    /// Noise stream index, combined with `NoiseSpec::seed`.
    pub run: u64,
}

impl IntegratorOptions {
    pub fn from_state(initial: SystemState) -> Self {
        Self { initial, ..Self::default() }
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = Some(substeps);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    /// Mode amplitudes at each grid sample.
    pub states: Vec<SystemState>,
    /// Field leaving toward the receiver, `a_out = √κ_ext a − a_in`.
    pub a_out: Envelope,
    /// Energy of the deterministic input, quanta (trapezoid rule).
    pub energy_in: f64,
    /// `∫|a_out|² dt`, quanta (trapezoid rule).
    pub energy_out: f64,
    pub phonons_initial: f64,
    pub phonons_final: f64,
    /// RK4 step actually used, s.
    pub step: f64,
}

impl TrajectoryResult {
    pub fn final_state(&self) -> SystemState {
        *self.states.last().expect("trajectory holds at least one sample")
    }
}

pub(crate) fn trapezoid_energy(values: &[Complex64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (values.iter().map(|v| v.norm_sqr()).sum::<f64>() - 0.5 * (values[0].norm_sqr() + values[n - 1].norm_sqr())),
    }
}

/// Deterministic input samples on `grid`, zero-padded past the end of
/// `input`.
pub(crate) fn aligned_input(grid: &Grid, input: Option<&Envelope>) -> Result<Vec<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    let Some(env) = input else {
        return Ok(vec![zero; grid.n]);
    };
    if !grid.aligned_with(&env.grid()) {
        return Err(Error::MisalignedGrid(format!(
            "input (t0 = {:.6e}, dt = {:.6e}) vs schedule (t0 = {:.6e}, dt = {:.6e})",
            env.t0, env.dt, grid.t0, grid.dt
        )));
    }
    if env.len() > grid.n {
        return Err(Error::MisalignedGrid(format!(
            "input has {} samples but the schedule only {}",
            env.len(),
            grid.n
        )));
    }
    let mut v = env.values.clone();
    v.resize(grid.n, zero);
    Ok(v)
}

/// Chooses the substep count for a grid interval `dt` under `bound`.
pub(crate) fn resolve_substeps(dt: f64, bound: f64, requested: Option<usize>) -> Result<usize> {
    match requested {
        Some(0) => Err(Error::InvalidArgument("substeps must be ≥ 1".into())),
        Some(m) => {
            let step = dt / m as f64;
            if step > bound * (1.0 + 1e-12) {
                Err(Error::StepSize { step, bound })
            } else {
                Ok(m)
            }
        }
        None => Ok(((dt / bound) * (1.0 - 1e-12)).ceil().max(1.0) as usize),
    }
}

#[inline]
pub(crate) fn lerp(a: Complex64, b: Complex64, frac: f64) -> Complex64 {
    a + (b - a) * frac
}
