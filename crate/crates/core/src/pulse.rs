//! Coupling schedules `Γ(t)` and their pump realization.
//!
//! In the weak-coupling regime the pump-enhanced exchange rate between the
//! transmission line and the drumhead is `Γ = 4|g|²/κ` with
//! `|g| = g0 √n`, so a schedule maps one-to-one onto a pump photon number
//! program `n(t) = Γ κ / (4 g0²)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::envelope::{Envelope, Grid};
use crate::{DeviceParams, Error, Result};

/// Non-fatal diagnostics carried by a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScheduleWarning {
    /// `max Γ ≥ κ/2`: outside the circuit-bandwidth limit of the weak
    /// coupling picture.
    Infeasible { max_gamma: f64, limit: f64 },
}

/// `Γ(t) ≥ 0` sampled on a uniform grid, plus the pump phase `ψ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSchedule {
    pub t0: f64,
    pub dt: f64,
    /// Γ at `t0 + k·dt`, rad/s.
    pub gamma_series: Vec<f64>,
    /// `ψ = Arg(−i g)`, radians. Constant over the schedule.
    pub phase_psi: f64,
    #[serde(default)]
    pub warnings: Vec<ScheduleWarning>,
}

impl CouplingSchedule {
    pub fn new(t0: f64, dt: f64, gamma_series: Vec<f64>) -> Result<Self> {
        if let Some(bad) = gamma_series.iter().find(|g| !(**g >= 0.0) || !g.is_finite()) {
            return Err(Error::InvalidArgument(format!("coupling rate must be finite and ≥ 0, got {bad}")));
        }
        Ok(Self { t0, dt, gamma_series, phase_psi: 0.0, warnings: Vec::new() })
    }

    /// Γ ≡ 0 on `grid` (storage).
    pub fn off(grid: Grid) -> Self {
        Self { t0: grid.t0, dt: grid.dt, gamma_series: vec![0.0; grid.n], phase_psi: 0.0, warnings: Vec::new() }
    }

    /// Γ ≡ `gamma` on `grid`.
    pub fn constant(grid: Grid, gamma: f64) -> Result<Self> {
        Self::new(grid.t0, grid.dt, vec![gamma; grid.n])
    }

    pub fn with_phase(mut self, psi: f64) -> Self {
        self.phase_psi = psi;
        self
    }

    pub fn grid(&self) -> Grid {
        Grid { t0: self.t0, dt: self.dt, n: self.gamma_series.len() }
    }

    pub fn len(&self) -> usize {
        self.gamma_series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma_series.is_empty()
    }

    pub fn max_gamma(&self) -> f64 {
        self.gamma_series.iter().copied().fold(0.0, f64::max)
    }

    /// Linear interpolation, zero outside the sampled interval.
    pub fn gamma_at(&self, t: f64) -> f64 {
        let n = self.gamma_series.len();
        if n == 0 {
            return 0.0;
        }
        let x = (t - self.t0) / self.dt;
        let last = (n - 1) as f64;
        if x < -1e-9 || x > last + 1e-9 {
            return 0.0;
        }
        if n == 1 {
            return self.gamma_series[0];
        }
        let x = x.clamp(0.0, last);
        let k = (x.floor() as usize).min(n - 2);
        let frac = x - k as f64;
        self.gamma_series[k] * (1.0 - frac) + self.gamma_series[k + 1] * frac
    }

    /// Attaches an [`ScheduleWarning::Infeasible`] warning when
    /// `max Γ ≥ κ/2`. Returns whether the schedule is feasible.
    pub fn check_feasibility(&mut self, kappa: f64) -> bool {
        let limit = kappa / 2.0;
        let max_gamma = self.max_gamma();
        self.warnings.retain(|w| !matches!(w, ScheduleWarning::Infeasible { .. }));
        if max_gamma >= limit {
            self.warnings.push(ScheduleWarning::Infeasible { max_gamma, limit });
            false
        } else {
            true
        }
    }

    pub fn is_feasible(&self) -> bool {
        !self.warnings.iter().any(|w| matches!(w, ScheduleWarning::Infeasible { .. }))
    }

    /// Samples mirrored in time on the same grid.
    pub fn time_reversed(&self) -> Self {
        let mut gamma_series = self.gamma_series.clone();
        gamma_series.reverse();
        Self { gamma_series, ..self.clone() }
    }

    /// `∫ Γ dt` by the trapezoid rule.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.gamma_series, self.dt)
    }
}

fn trapezoid(y: &[f64], dt: f64) -> f64 {
    match y.len() {
        0 | 1 => 0.0,
        n => dt * (y.iter().sum::<f64>() - 0.5 * (y[0] + y[n - 1])),
    }
}

/// Coupling that minimizes the energy reflected while capturing `env`
/// (unit coupling efficiency):
///
/// ```text
/// Γ(t) = e^{κ_m t}|a(t)|² / ( |a(0)|²/Γ(0) + ∫₀ᵗ e^{κ_m t'}|a(t')|² dt' )
/// ```
///
/// `t = 0` is the first nonzero sample of `env`; earlier samples get
/// `Γ(0)`. The cumulative integral uses the trapezoid rule on the envelope
/// grid.
pub fn optimal_capture(env: &Envelope, gamma0: f64, kappa_m: f64) -> Result<CouplingSchedule> {
    if !(gamma0 > 0.0) {
        return Err(Error::InvalidArgument(format!("initial coupling must be > 0, got {gamma0}")));
    }
    let start = env
        .values
        .iter()
        .position(|v| v.norm_sqr() > 0.0)
        .ok_or_else(|| Error::DegenerateInput("envelope is identically zero".into()))?;
    let dt = env.dt;
    let mut gamma = vec![gamma0; env.len()];
    let weighted = |k: usize| {
        let t = (k - start) as f64 * dt;
        (kappa_m * t).exp() * env.values[k].norm_sqr()
    };
    let offset = env.values[start].norm_sqr() / gamma0;
    let mut cumulative = 0.0;
    let mut prev = weighted(start);
    gamma[start] = gamma0;
    for (k, g) in gamma.iter_mut().enumerate().skip(start + 1) {
        let w = weighted(k);
        cumulative += 0.5 * (prev + w) * dt;
        prev = w;
        *g = w / (offset + cumulative);
    }
    CouplingSchedule::new(env.t0, dt, gamma)
}

/// Closed-form optimal capture of an exponentially decaying envelope
/// `Θ(t) e^{-γt/2}`:
///
/// ```text
/// Γ(t) = Θ(t) γ e^{-γt} / (1 − e^{-γt} + γ/Γ(0))
/// ```
///
/// Times are absolute grid times; `Θ` is right-continuous so `Γ(0) = Γ(0)`.
pub fn exp_capture_schedule(gamma: f64, gamma0: f64, grid: Grid) -> Result<CouplingSchedule> {
    if !(gamma > 0.0) || !(gamma0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "decay rate and initial coupling must be > 0, got {gamma}, {gamma0}"
        )));
    }
    let series = grid
        .times()
        .map(|t| {
            if t < 0.0 {
                0.0
            } else {
                gamma * (-gamma * t).exp() / (-(-gamma * t).exp_m1() + gamma / gamma0)
            }
        })
        .collect();
    CouplingSchedule::new(grid.t0, grid.dt, series)
}

/// Offset `δ = γ/Γ(0) · e^{-γ² t_o²}` used by [`gauss_release_schedule`].
pub fn gauss_release_delta(gamma: f64, t_o: f64, gamma0: f64) -> f64 {
    gamma / gamma0 * (-(gamma * t_o).powi(2)).exp()
}

/// Release schedule for a Gaussian envelope centered at `t_o`:
///
/// ```text
/// Γ(t) = γ e^{-γ²(t−t_o)²} / (1 − erf(γ(t−t_o)) + δ),   δ = γ/Γ(0) e^{-γ² t_o²}
/// ```
///
/// The released power follows `e^{-γ²(t−t_o)²}` up to the slowly varying
/// factor `(1 − erf + δ)^{√π/2 − 1}`; the emitted envelope is Gaussian in
/// shape but its width is set by this factor rather than exactly by `γ`.
pub fn gauss_release_schedule(gamma: f64, t_o: f64, gamma0: f64, grid: Grid) -> Result<CouplingSchedule> {
    if !(gamma > 0.0) || !(gamma0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "width and initial coupling must be > 0, got {gamma}, {gamma0}"
        )));
    }
    let delta = gauss_release_delta(gamma, t_o, gamma0);
    let series = grid
        .times()
        .map(|t| {
            let x = gamma * (t - t_o);
            gamma * (-x * x).exp() / (libm::erfc(x) + delta)
        })
        .collect();
    CouplingSchedule::new(grid.t0, grid.dt, series)
}

/// Pump strength program, in photons induced in the circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpProgram {
    pub t0: f64,
    pub dt: f64,
    pub photons: Vec<f64>,
    pub phase_psi: f64,
}

/// `n(t) = Γ(t) κ / (4 g0²)`.
pub fn schedule_to_pump(sched: &CouplingSchedule, params: &DeviceParams) -> Result<PumpProgram> {
    if params.g0 == 0.0 {
        return Err(Error::DegenerateParameter("g0 = 0"));
    }
    let factor = params.kappa / (4.0 * params.g0 * params.g0);
    Ok(PumpProgram {
        t0: sched.t0,
        dt: sched.dt,
        photons: sched.gamma_series.iter().map(|g| g * factor).collect(),
        phase_psi: sched.phase_psi,
    })
}

/// Inverse of [`schedule_to_pump`]: `Γ = 4 g0² n / κ`.
pub fn pump_to_schedule(pump: &PumpProgram, params: &DeviceParams) -> Result<CouplingSchedule> {
    if params.kappa == 0.0 {
        return Err(Error::DegenerateParameter("kappa = 0"));
    }
    let factor = 4.0 * params.g0 * params.g0 / params.kappa;
    let mut sched = CouplingSchedule::new(pump.t0, pump.dt, pump.photons.iter().map(|n| n * factor).collect())?;
    sched.phase_psi = pump.phase_psi;
    Ok(sched)
}

/// Complex pump coupling `g = i e^{iψ} √(Γκ)/2`, chosen so that
/// `Arg(−i g) = ψ` and `4|g|²/κ = Γ`.
pub fn coupling_from_rate(gamma: f64, kappa: f64, psi: f64) -> Complex64 {
    Complex64::new(0.0, 1.0) * Complex64::from_polar((gamma * kappa).sqrt() / 2.0, psi)
}
