//! Lumped model of the drumhead under bias: a linear spring pulled by the
//! electrostatic force of the actuation electrode and by the Casimir
//! pressure across the capacitor gap.
//!
//! With deflection `x` toward the electrodes the total attractive force is
//!
//! ```text
//! F(x) = ε₀ A_act (V + V_patch)² / (2 (d_act0 − x)²) + s P_cas(d_cap0 − x) A_cap
//! ```
//!
//! and equilibrium solves `k x = F(x)`. `F` is convex, so `G = k x − F` is
//! concave: it has a stable root below its maximum, or none (pull-in).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consts::{C_LIGHT, EPSILON_0, HBAR, PI};
use crate::{DeviceParams, Error, Result};

/// `ħ c π² / (240 d⁴)`, Pa, magnitude of the attraction between perfect
/// conductors.
pub fn casimir_pressure(d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("gap must be > 0, got {d}")));
    }
    Ok(HBAR * C_LIGHT * PI * PI / (240.0 * d.powi(4)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningModel {
    /// N/m.
    pub k_spring: f64,
    /// kg, `k_spring / ω_m0²`.
    pub m_eff: f64,
    pub d_cap0: f64,
    pub d_act0: f64,
    pub a_act: f64,
    pub a_cap: f64,
    pub casimir_scale: f64,
    pub patch_voltage: f64,
    /// `C_m / (C_p + C_m)` at zero bias.
    pub c_ratio: f64,
    /// Circuit frequency at zero bias, rad/s.
    pub omega_e0: f64,
}

pub const DEFAULT_CAP_GAP: f64 = 40e-9;
pub const DEFAULT_ACT_GAP: f64 = 120e-9;
pub const DEFAULT_CASIMIR_SCALE: f64 = 0.7;
pub const DEFAULT_C_RATIO: f64 = 0.65;
/// Drum diameter used for the capacitor area.
pub const DEFAULT_DRUM_DIAMETER: f64 = 15e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Equilibrium {
    Stable(f64),
    PullIn,
}

impl Equilibrium {
    pub fn deflection(self) -> Result<f64> {
        match self {
            Equilibrium::Stable(x) => Ok(x),
            Equilibrium::PullIn => Err(Error::PullIn),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullInPoint {
    pub deflection: f64,
    pub voltage: f64,
}

impl TuningModel {
    /// Spring and mass from the mechanical frequency and zero-point motion,
    /// default geometry, and an actuation area still to be calibrated.
    pub fn from_params(params: &DeviceParams, a_act: f64) -> Result<Self> {
        if !(params.omega_m > 0.0) || !(params.x_zp > 0.0) {
            return Err(Error::DegenerateParameter("omega_m and x_zp must be > 0"));
        }
        let m_eff = params.effective_mass();
        let model = Self {
            k_spring: m_eff * params.omega_m * params.omega_m,
            m_eff,
            d_cap0: DEFAULT_CAP_GAP,
            d_act0: DEFAULT_ACT_GAP,
            a_act,
            a_cap: PI * (DEFAULT_DRUM_DIAMETER / 2.0).powi(2),
            casimir_scale: DEFAULT_CASIMIR_SCALE,
            patch_voltage: 0.0,
            c_ratio: DEFAULT_C_RATIO,
            omega_e0: params.omega_e,
        };
        model.check()?;
        Ok(model)
    }

    /// [`TuningModel::from_params`] with `a_act` chosen so that
    /// `ω_e(v_target) = omega_target`.
    pub fn calibrated(params: &DeviceParams, v_target: f64, omega_target: f64) -> Result<Self> {
        let base = Self::from_params(params, 1e-12)?;
        base.calibrate_area(v_target, omega_target)
    }

    /// Bisects the actuation area (in log space) to hit `omega_target` at
    /// `v_target`. Pulled-in trial areas count as too large.
    pub fn calibrate_area(mut self, v_target: f64, omega_target: f64) -> Result<Self> {
        if !(omega_target < self.omega_e0) || !(v_target > 0.0) {
            return Err(Error::InvalidArgument("calibration target must lie below the zero-bias frequency".into()));
        }
        let too_small = |m: &TuningModel| match m.omega_e_of_v(v_target) {
            Ok(w) => w > omega_target,
            Err(_) => false,
        };
        let (mut lo, mut hi) = (1e-18f64.ln(), 1e-6f64.ln());
        self.a_act = lo.exp();
        if !too_small(&self) {
            return Err(Error::InvalidArgument("calibration target unreachable".into()));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            self.a_act = mid.exp();
            if too_small(&self) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        self.a_act = lo.exp();
        self.omega_e_of_v(v_target)?;
        Ok(self)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.d_cap0 > 0.0) || !(self.d_act0 > 0.0) {
            return Err(Error::InvalidArgument("gaps must be > 0".into()));
        }
        if !(self.c_ratio > 0.0 && self.c_ratio < 1.0) {
            return Err(Error::InvalidArgument(format!("c_ratio must lie in (0, 1), got {}", self.c_ratio)));
        }
        if !(self.casimir_scale >= 0.0) {
            return Err(Error::InvalidArgument("casimir_scale must be ≥ 0".into()));
        }
        if !(self.k_spring > 0.0) || !(self.m_eff > 0.0) || !(self.a_act >= 0.0) || !(self.a_cap >= 0.0) {
            return Err(Error::InvalidArgument("spring, mass and areas must be positive".into()));
        }
        Ok(())
    }

    pub fn omega_m0(&self) -> f64 {
        (self.k_spring / self.m_eff).sqrt()
    }

    /// Largest admissible deflection (first contact).
    pub fn x_limit(&self) -> f64 {
        self.d_act0.min(self.d_cap0) * (1.0 - 1e-6)
    }

    fn electrostatic_unit(&self, x: f64) -> (f64, f64) {
        // force per volt², and its x-derivative
        let gap = self.d_act0 - x;
        let e = EPSILON_0 * self.a_act / (2.0 * gap * gap);
        (e, 2.0 * e / gap)
    }

    fn casimir(&self, x: f64) -> (f64, f64) {
        if self.casimir_scale == 0.0 {
            return (0.0, 0.0);
        }
        let gap = self.d_cap0 - x;
        let f = self.casimir_scale * HBAR * C_LIGHT * PI * PI / (240.0 * gap.powi(4)) * self.a_cap;
        (f, 4.0 * f / gap)
    }

    /// Total attractive force and its derivative at deflection `x`.
    pub fn force(&self, v: f64, x: f64) -> (f64, f64) {
        let vv = (v + self.patch_voltage).powi(2);
        let (e, de) = self.electrostatic_unit(x);
        let (c, dc) = self.casimir(x);
        (vv * e + c, vv * de + dc)
    }

    /// Smallest stable root of `k x = F(x)`.
    pub fn equilibrium(&self, v: f64) -> Result<Equilibrium> {
        if !(v >= 0.0) {
            return Err(Error::InvalidArgument(format!("bias must be ≥ 0, got {v}")));
        }
        let k = self.k_spring;
        let g = |x: f64| k * x - self.force(v, x).0;
        let dg = |x: f64| k - self.force(v, x).1;
        if self.force(v, 0.0).0 == 0.0 {
            return Ok(Equilibrium::Stable(0.0));
        }
        // maximum of the concave G
        let xl = self.x_limit();
        let x_max = if dg(0.0) <= 0.0 {
            0.0
        } else if dg(xl) >= 0.0 {
            xl
        } else {
            bisect(0.0, xl, |x| dg(x) > 0.0)
        };
        if g(x_max) < 0.0 {
            return Ok(Equilibrium::PullIn);
        }
        let mut x = bisect(0.0, x_max, |x| g(x) < 0.0);
        // Newton polish
        for _ in 0..3 {
            let d = dg(x);
            if d <= 0.0 {
                break;
            }
            let step = g(x) / d;
            let next = x - step;
            if !(0.0..=x_max).contains(&next) {
                break;
            }
            x = next;
        }
        Ok(Equilibrium::Stable(x))
    }

    pub fn deflection(&self, v: f64) -> Result<f64> {
        self.equilibrium(v)?.deflection()
    }

    /// `ω_e = ω_e0 / √((1 − r) + r (d − x₀)/(d − x))`, with `x₀` the
    /// zero-bias deflection, so that `ω_e(0) = ω_e0`.
    pub fn omega_e_at(&self, x: f64) -> Result<f64> {
        let x0 = self.deflection(0.0)?;
        let r = self.c_ratio;
        Ok(self.omega_e0 / ((1.0 - r) + r * (self.d_cap0 - x0) / (self.d_cap0 - x)).sqrt())
    }

    pub fn omega_e_of_v(&self, v: f64) -> Result<f64> {
        self.omega_e_at(self.deflection(v)?)
    }

    /// `√((k − F′(x*)) / m_eff)`.
    pub fn omega_m_of_v(&self, v: f64) -> Result<f64> {
        let x = self.deflection(v)?;
        let stiffness = self.k_spring - self.force(v, x).1;
        Ok((stiffness.max(0.0) / self.m_eff).sqrt())
    }

    /// `dω_e/dx` at deflection `x`, rad/s per m.
    pub fn omega_e_slope(&self, x: f64) -> Result<f64> {
        let x0 = self.deflection(0.0)?;
        let r = self.c_ratio;
        let gap = self.d_cap0 - x;
        let u = (1.0 - r) + r * (self.d_cap0 - x0) / gap;
        let du = r * (self.d_cap0 - x0) / (gap * gap);
        Ok(-0.5 * self.omega_e0 * u.powf(-1.5) * du)
    }

    /// Deflection and bias at which the stable root disappears: solves
    /// `G = G′ = 0`, i.e. `(k x − F_c) e′ − (k − F_c′) e = 0` with `e` the
    /// electrostatic force per volt².
    pub fn pull_in(&self) -> Result<PullInPoint> {
        if self.a_act == 0.0 {
            return Err(Error::DegenerateParameter("a_act = 0"));
        }
        let k = self.k_spring;
        let h = |x: f64| {
            let (e, de) = self.electrostatic_unit(x);
            let (c, dc) = self.casimir(x);
            (k * x - c) * de - (k - dc) * e
        };
        let xl = self.x_limit();
        let n = 4000;
        let mut prev = 0.0;
        let mut found = None;
        for i in 1..=n {
            let x = xl * i as f64 / n as f64;
            if h(x) >= 0.0 {
                found = Some((prev, x));
                break;
            }
            prev = x;
        }
        let (lo, hi) = found.ok_or(Error::PullIn)?;
        let x = bisect(lo, hi, |x| h(x) < 0.0);
        let (e, _) = self.electrostatic_unit(x);
        let (c, _) = self.casimir(x);
        let vv = (k * x - c) / e;
        if !(vv >= 0.0) {
            return Err(Error::PullIn);
        }
        Ok(PullInPoint { deflection: x, voltage: vv.sqrt() - self.patch_voltage })
    }
}

/// Bisection for the boundary of `below` on `[lo, hi]`, `below(lo)` true.
fn bisect(mut lo: f64, mut hi: f64, below: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningPoint {
    pub voltage: f64,
    /// NaN once pulled in.
    pub x_star: f64,
    /// rad/s; NaN once pulled in.
    pub omega_e: f64,
    /// rad/s; 0 once pulled in.
    pub omega_m: f64,
    pub pulled_in: bool,
}

/// Evaluates the model at each voltage, in order.
pub fn sweep(model: &TuningModel, voltages: &[f64]) -> Result<Vec<TuningPoint>> {
    model.check()?;
    voltages
        .par_iter()
        .map(|&v| match model.equilibrium(v)? {
            Equilibrium::Stable(x) => Ok(TuningPoint {
                voltage: v,
                x_star: x,
                omega_e: model.omega_e_at(x)?,
                omega_m: model.omega_m_of_v(v)?,
                pulled_in: false,
            }),
            Equilibrium::PullIn => Ok(TuningPoint {
                voltage: v,
                x_star: f64::NAN,
                omega_e: f64::NAN,
                omega_m: 0.0,
                pulled_in: true,
            }),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consts::hz;

    #[test]
    fn casimir_scaling() {
        let p = casimir_pressure(40e-9).unwrap();
        assert!((p - 507.9).abs() < 0.5, "{p}");
        assert!((casimir_pressure(80e-9).unwrap() * 16.0 - p).abs() < 1e-9 * p);
        assert!(casimir_pressure(0.0).is_err());
    }

    #[test]
    fn no_force_no_deflection() {
        let mut m = TuningModel::from_params(&DeviceParams::paper_table(), 1e-11).unwrap();
        m.casimir_scale = 0.0;
        assert_eq!(m.deflection(0.0).unwrap(), 0.0);
        assert!((m.omega_m_of_v(0.0).unwrap() - hz(9.56e6)).abs() < 1e-6 * hz(9.56e6));
    }

    #[test]
    fn zero_bias_frequency_is_exact() {
        let m = TuningModel::calibrated(&DeviceParams::paper_table(), 10.0, hz(7.08e9)).unwrap();
        assert_eq!(m.omega_e_of_v(0.0).unwrap(), m.omega_e0);
    }

    #[test]
    fn negative_bias_rejected() {
        let m = TuningModel::from_params(&DeviceParams::paper_table(), 1e-11).unwrap();
        assert!(m.equilibrium(-1.0).is_err());
    }
}
