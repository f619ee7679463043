//! Capture, store, release.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::full::full_leg;
use super::noise::{NoiseSpec, NoiseStream};
use super::reduced::reduced_leg;
use super::{IntegratorOptions, SystemState, TrajectoryResult};
use crate::consts::hz;
use crate::envelope::{Envelope, Grid};
use crate::pulse::{exp_capture_schedule, gauss_release_schedule, CouplingSchedule};
use crate::{DeviceParams, Error, Result};

/// Decoherence budget `n_m κ_m T` above which a protocol is flagged.
pub const DECOHERENCE_SANITY_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    Reduced,
    /// Full linearized model with pump detuning `delta`, rad/s.
    Full { delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub capture_schedule: CouplingSchedule,
    /// Free evolution between the legs, s.
    pub store_duration: f64,
    /// Release schedule in leg-local time (its first sample starts the leg).
    pub release_schedule: CouplingSchedule,
    /// Signal incident during capture, on the capture grid.
    pub input: Envelope,
    /// Carrier of the incoming (and reflected) signal, rad/s.
    pub carrier_in: f64,
    /// Carrier of the released signal, rad/s.
    pub carrier_out: f64,
    pub noise: NoiseSpec,
    /// Adiabatic mechanical frequency change while the bias is switched,
    /// applied as a phase `∫ δω_m dt` on `c` during storage, rad/s.
    #[serde(default)]
    pub mech_shift: f64,
    pub model: ModelKind,
    /// RK4 steps per sample interval; `None` picks the coarsest stable count.
    #[serde(default)]
    pub substeps: Option<usize>,
}

/// Parameters of the exponential-in, Gaussian-out conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConversionDesign {
    /// Power decay rate of the incoming signal and Gaussian release rate, rad/s.
    pub gamma: f64,
    /// Coupling at the start of each leg, rad/s.
    pub gamma0: f64,
    pub capture_duration: f64,
    pub store_duration: f64,
    pub release_duration: f64,
    /// Center of the released Gaussian, leg-local time.
    pub release_center: f64,
    /// Quanta carried by the (untruncated) incoming pulse.
    pub input_energy: f64,
    pub carrier_in: f64,
    pub carrier_out: f64,
    pub mech_shift: f64,
    /// Sample step; `None` uses `1/(40 Γ0)`.
    pub dt: Option<f64>,
}

impl Default for ConversionDesign {
    /// 2π×24 kHz exponential in, 2π×500 kHz initial coupling, 30 µs per leg,
    /// release centered mid-leg, 7.078 → 7.341 GHz.
    fn default() -> Self {
        Self {
            gamma: hz(24e3),
            gamma0: hz(500e3),
            capture_duration: 30e-6,
            store_duration: 30e-6,
            release_duration: 30e-6,
            release_center: 15e-6,
            input_energy: 1.0,
            carrier_in: hz(7.07825e9),
            carrier_out: hz(7.34135e9),
            mech_shift: hz(300e3),
            dt: None,
        }
    }
}

impl ConversionDesign {
    /// Sample step: at most `dt` (default `1/(40 Γ0)`), shortened so the
    /// capture leg holds a whole number of steps.
    pub fn sample_step(&self) -> f64 {
        let dt_max = self.dt.unwrap_or(1.0 / (super::STEPS_PER_TIMESCALE * self.gamma0));
        self.capture_duration / (self.capture_duration / dt_max).ceil().max(1.0)
    }

    pub fn total_duration(&self) -> f64 {
        self.capture_duration + self.store_duration + self.release_duration
    }

    pub fn build(&self, noise: NoiseSpec, model: ModelKind) -> Result<ProtocolSpec> {
        let dt = self.sample_step();
        let steps = |d: f64| ((d / dt).round() as usize).max(1);
        let capture_grid = Grid::new(0.0, dt, steps(self.capture_duration) + 1)?;
        let release_grid = Grid::new(0.0, dt, steps(self.release_duration) + 1)?;
        let capture = exp_capture_schedule(self.gamma, self.gamma0, capture_grid)?;
        let release = gauss_release_schedule(self.gamma, self.release_center, self.gamma0, release_grid)?;
        let input = Envelope::exponential(capture_grid, self.gamma, self.input_energy).with_carrier(self.carrier_in);
        Ok(ProtocolSpec {
            capture_schedule: capture,
            store_duration: self.store_duration,
            release_schedule: release,
            input,
            carrier_in: self.carrier_in,
            carrier_out: self.carrier_out,
            noise,
            mech_shift: self.mech_shift,
            model,
            substeps: None,
        })
    }
}

impl ProtocolSpec {
    /// The conversion of [`ConversionDesign::default`] in the reduced model.
    pub fn paper_default(noise: NoiseSpec) -> Result<Self> {
        ConversionDesign::default().build(noise, ModelKind::Reduced)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.store_duration >= 0.0) {
            return Err(Error::InvalidArgument(format!("store duration must be ≥ 0, got {}", self.store_duration)));
        }
        if !(self.carrier_in > 0.0) || !(self.carrier_out > 0.0) {
            return Err(Error::InvalidArgument("carrier frequencies must be positive".into()));
        }
        if self.noise.n_m < 0.0 {
            return Err(Error::InvalidArgument("n_m must be ≥ 0".into()));
        }
        let (a, b) = (self.capture_schedule.dt, self.release_schedule.dt);
        if (a - b).abs() > 1e-9 * a.max(b) {
            return Err(Error::MisalignedGrid(format!("capture step {a:.6e} s differs from release step {b:.6e} s")));
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.capture_schedule.grid().duration() + self.store_steps() as f64 * self.capture_schedule.dt
            + self.release_schedule.grid().duration()
    }

    fn store_steps(&self) -> usize {
        (self.store_duration / self.capture_schedule.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProtocolWarning {
    InfeasibleSchedule { leg: String, max_gamma: f64, limit: f64 },
    LongStorage { decoherence_quanta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub capture: TrajectoryResult,
    pub store: Option<TrajectoryResult>,
    pub release: TrajectoryResult,
    /// All three legs stitched on one global time axis.
    pub output: Envelope,
    /// First sample of `output` carried at `carrier_out` (start of storage).
    pub carrier_switch_index: usize,
    pub carrier_in: f64,
    pub carrier_out: f64,
    pub energy_in: f64,
    pub energy_reflected: f64,
    /// `|c|²` at the end of capture.
    pub phonons_captured: f64,
    /// `|c|²` at the start of release.
    pub phonons_stored: f64,
    pub energy_released: f64,
    /// Captured fraction of the signal that couples in:
    /// `|c|² / (η E_in)`.
    pub capture_efficiency: f64,
    /// End-to-end photon-number efficiency `E_released / E_in`.
    pub efficiency: f64,
    pub warnings: Vec<ProtocolWarning>,
}

impl ProtocolResult {
    /// Released signal on its own (global) time axis, at `carrier_out`.
    pub fn converted(&self) -> Envelope {
        self.release.a_out.clone().with_carrier(self.carrier_out)
    }

    /// Reflected part of the incoming signal, at `carrier_in`.
    pub fn reflected(&self) -> Envelope {
        self.capture.a_out.clone().with_carrier(self.carrier_in)
    }

    /// Carrier of output sample `k`.
    pub fn carrier_at(&self, k: usize) -> f64 {
        if k < self.carrier_switch_index {
            self.carrier_in
        } else {
            self.carrier_out
        }
    }
}

pub fn run_protocol(spec: &ProtocolSpec, params: &DeviceParams) -> Result<ProtocolResult> {
    run_protocol_seeded(spec, params, 0)
}

/// [`run_protocol`] with noise stream `run` of `spec.noise.seed`.
pub fn run_protocol_seeded(spec: &ProtocolSpec, params: &DeviceParams, run: u64) -> Result<ProtocolResult> {
    spec.check()?;
    let eta = params.eta()?;
    let mut warnings = Vec::new();
    for (leg, sched) in [("capture", &spec.capture_schedule), ("release", &spec.release_schedule)] {
        let mut s = sched.clone();
        if !s.check_feasibility(params.kappa) {
            warnings.push(ProtocolWarning::InfeasibleSchedule {
                leg: leg.into(),
                max_gamma: s.max_gamma(),
                limit: params.kappa / 2.0,
            });
        }
    }
    let budget = spec.noise.decoherence_rate() * spec.total_duration();
    if budget > DECOHERENCE_SANITY_LIMIT {
        warnings.push(ProtocolWarning::LongStorage { decoherence_quanta: budget });
    }

    let mut stream = NoiseStream::new(spec.noise.seed, run);
    let leg = |sched: &CouplingSchedule,
               input: Option<&Envelope>,
               initial: SystemState,
               mech_shift: f64,
               stream: &mut NoiseStream|
     -> Result<TrajectoryResult> {
        let opts = IntegratorOptions { initial, substeps: spec.substeps, run };
        match spec.model {
            ModelKind::Reduced => reduced_leg(params, sched, input, &spec.noise, &opts, mech_shift, stream),
            ModelKind::Full { delta } => {
                let mut r = full_leg(params, sched, delta, input, &spec.noise, &opts, stream)?;
                if mech_shift != 0.0 {
                    let duration = sched.grid().duration();
                    let last = r.states.last_mut().expect("non-empty trajectory");
                    last.c *= Complex64::from_polar(1.0, -mech_shift * duration);
                }
                Ok(r)
            }
        }
    };

    let dt = spec.capture_schedule.dt;
    let capture_sched = spec.capture_schedule.clone();
    let mut input = spec.input.clone();
    input.t0 = capture_sched.t0;
    // the mechanics start in their zero-point state, so that a vacuum input
    // comes out at the vacuum level
    let mut initial = SystemState::default();
    if spec.noise.include_vacuum_input {
        initial.c = stream.complex_normal(0.5);
    }
    let capture = leg(&capture_sched, Some(&input), initial, 0.0, &mut stream)?;
    let mut state = capture.final_state();
    let mut t = capture_sched.grid().end();

    let store_steps = spec.store_steps();
    let store = if store_steps > 0 {
        let grid = Grid::new(t, dt, store_steps + 1)?;
        let r = leg(&CouplingSchedule::off(grid), None, state, spec.mech_shift, &mut stream)?;
        state = r.final_state();
        t = grid.end();
        Some(r)
    } else {
        None
    };

    let mut release_sched = spec.release_schedule.clone();
    release_sched.t0 = t;
    let release = leg(&release_sched, None, state, 0.0, &mut stream)?;

    let mut values = Vec::new();
    values.extend_from_slice(&capture.a_out.values[..capture.a_out.len() - 1]);
    let carrier_switch_index = values.len();
    if let Some(s) = &store {
        values.extend_from_slice(&s.a_out.values[..s.a_out.len() - 1]);
    }
    values.extend_from_slice(&release.a_out.values);
    let output = Envelope::new(capture_sched.t0, dt, values).with_carrier(spec.carrier_out);

    let energy_in = capture.energy_in;
    let phonons_captured = capture.phonons_final;
    let phonons_stored = release.phonons_initial;
    let energy_released = release.energy_out;
    let (capture_efficiency, efficiency) = if energy_in > 0.0 {
        (phonons_captured / (eta * energy_in), energy_released / energy_in)
    } else {
        (0.0, 0.0)
    };
    Ok(ProtocolResult {
        energy_reflected: capture.energy_out,
        capture,
        store,
        release,
        output,
        carrier_switch_index,
        carrier_in: spec.carrier_in,
        carrier_out: spec.carrier_out,
        energy_in,
        phonons_captured,
        phonons_stored,
        energy_released,
        capture_efficiency,
        efficiency,
        warnings,
    })
}
