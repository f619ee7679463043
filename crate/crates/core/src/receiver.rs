//! Calibrated receiver: load noise, gain/efficiency fit, matched-filter
//! quadratures, added-noise statistics and sideband thermometry.
//!
//! Quadratures are referred to the receiver input in √quanta, so that
//! `X₁² + X₂²` estimates the number of quanta in the windowed mode. Noise
//! densities are one-sided: a source of `S` quanta per quadrature appears
//! at the output as `𝒢 ζ S` (µV)²/Hz.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::consts::{HBAR, K_B};
use crate::dynamics::NoiseStream;
use crate::envelope::Envelope;
use crate::tf::{synthesize_voltage, VoltageTrace};
use crate::{DeviceParams, Error, ReceiverCal, Result};

/// `S_L = ½ coth(ħω / 2k_B T_L)`; the `T_L → 0` limit ½ for `T_L ≤ 0`.
pub fn load_spectral_density(t_load: f64, omega: f64) -> f64 {
    if !(t_load > 0.0) {
        return 0.5;
    }
    let x = HBAR * omega / (2.0 * K_B * t_load);
    0.5 / x.tanh()
}

/// `S_out = 𝒢 ((1−ζ)/2 + ζ S_L)`, (µV)²/Hz.
pub fn receiver_output(s_load: f64, cal: &ReceiverCal) -> f64 {
    let z = cal.effective_efficiency();
    cal.gain * ((1.0 - z) / 2.0 + z * s_load)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFit {
    pub cal: ReceiverCal,
    /// Root-mean-square residual, (µV)²/Hz.
    pub residual: f64,
    pub iterations: usize,
}

/// Least-squares fit of `(𝒢, ζ)` to `(T_L, S_out)` pairs at frequency
/// `omega`.
///
/// The model is linear in `(𝒢(1−ζ)/2, 𝒢ζ)`; that solution seeds a
/// Gauss–Newton refinement in `(𝒢, ζ)` with the analytic Jacobian.
pub fn fit_calibration(samples: &[(f64, f64)], omega: f64) -> Result<CalibrationFit> {
    if samples.len() < 3 {
        return Err(Error::FitFailure(format!("need ≥ 3 temperature points, got {}", samples.len())));
    }
    if samples.iter().any(|(t, s)| !t.is_finite() || !s.is_finite()) {
        return Err(Error::FitFailure("non-finite calibration data".into()));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(t, s)| (load_spectral_density(t, omega), s)).collect();
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx <= 1e-12 * mean_x.powi(2).max(1e-300) {
        return Err(Error::FitFailure("all points share one load temperature".into()));
    }
    let slope = sxy / sxx;
    let offset = mean_y - slope * mean_x;
    let mut gain = 2.0 * offset + slope;
    let mut zeta = if gain != 0.0 { slope / gain } else { 0.0 };

    let residuals = |g: f64, z: f64| -> Vec<f64> { pts.iter().map(|&(x, y)| y - g * ((1.0 - z) / 2.0 + z * x)).collect() };
    let mut iterations = 0;
    for _ in 0..50 {
        iterations += 1;
        let r = residuals(gain, zeta);
        // J = [∂S/∂𝒢, ∂S/∂ζ]
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&(x, _), ri) in pts.iter().zip(&r) {
            let j1 = (1.0 - zeta) / 2.0 + zeta * x;
            let j2 = gain * (x - 0.5);
            a11 += j1 * j1;
            a12 += j1 * j2;
            a22 += j2 * j2;
            b1 += j1 * ri;
            b2 += j2 * ri;
        }
        let det = a11 * a22 - a12 * a12;
        if !(det.abs() > 0.0) {
            return Err(Error::FitFailure("singular normal equations".into()));
        }
        let dg = (a22 * b1 - a12 * b2) / det;
        let dz = (a11 * b2 - a12 * b1) / det;
        gain += dg;
        zeta += dz;
        if dg.abs() <= 1e-15 * gain.abs() && dz.abs() <= 1e-15 {
            break;
        }
    }
    if !(gain > 0.0) || !(0.0..=1.0).contains(&zeta) {
        return Err(Error::FitFailure(format!("unphysical fit: gain {gain:.4e}, efficiency {zeta:.4e}")));
    }
    let r = residuals(gain, zeta);
    let residual = (r.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
    Ok(CalibrationFit { cal: ReceiverCal::new(gain, zeta, omega)?, residual, iterations })
}

/// Matched-filter quadrature amplitudes, √quanta at the receiver input.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuadraturePair {
    pub x1: f64,
    pub x2: f64,
}

impl QuadraturePair {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    /// `X₁² + X₂²`.
    pub fn quanta(&self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2
    }

    pub fn rotated(&self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Self { x1: c * self.x1 - s * self.x2, x2: s * self.x1 + c * self.x2 }
    }
}

/// Window for [`quadratures`].
#[derive(Debug, Clone, PartialEq)]
pub enum Window {
    /// `f ≡ 1`, `C = N`.
    Rect,
    /// Real weights on the trace grid.
    Samples(Vec<f64>),
}

impl Window {
    /// `|env|` resampled onto the grid of `trace`, aligned at the trace
    /// origin.
    pub fn matched(env: &Envelope, trace: &VoltageTrace) -> Self {
        Window::Samples((0..trace.len()).map(|k| env.sample(trace.time(k)).norm()).collect())
    }
}

/// `X₁ = √(2/(ζ𝒢)) √(dt/C) Σ f_k y_k cos(ω k dt)`, `X₂` likewise with sin,
/// `C = Σ f_k²`, `ω` the frequency of the signal in the trace (IF).
pub fn quadratures(trace: &VoltageTrace, omega: f64, window: &Window, cal: &ReceiverCal) -> Result<QuadraturePair> {
    cal.check()?;
    let z = cal.effective_efficiency();
    if !(z > 0.0) {
        return Err(Error::InvalidArgument("receiver efficiency is zero".into()));
    }
    let n = trace.len();
    let weights: Vec<f64> = match window {
        Window::Rect => vec![1.0; n],
        Window::Samples(f) if f.len() != n => {
            return Err(Error::MisalignedGrid(format!("window has {} samples, trace {}", f.len(), n)))
        }
        Window::Samples(f) => f.clone(),
    };
    let c: f64 = weights.iter().map(|f| f * f).sum();
    if !(c > 0.0) {
        return Err(Error::DegenerateInput("window is identically zero".into()));
    }
    let (mut s1, mut s2) = (0.0, 0.0);
    for (k, (y, f)) in trace.samples.iter().zip(&weights).enumerate() {
        let (s, co) = (omega * k as f64 * trace.dt).sin_cos();
        s1 += f * y * co;
        s2 += f * y * s;
    }
    let scale = (2.0 / (z * cal.gain)).sqrt() * (trace.dt / c).sqrt();
    Ok(QuadraturePair::new(scale * s1, scale * s2))
}

/// Quadratures taken directly on the complex envelope with a complex
/// window: `α = √(dt/C) Σ f_k* v_k`, returned as `(Re α, −Im α)` to match
/// the voltage-domain sign convention.
pub fn envelope_quadratures(env: &Envelope, window: &Envelope) -> Result<QuadraturePair> {
    if env.len() != window.len() {
        return Err(Error::MisalignedGrid(format!("window has {} samples, envelope {}", window.len(), env.len())));
    }
    let c: f64 = window.values.iter().map(|f| f.norm_sqr()).sum();
    if !(c > 0.0) {
        return Err(Error::DegenerateInput("window is identically zero".into()));
    }
    let alpha: Complex64 = window.values.iter().zip(&env.values).map(|(f, v)| f.conj() * v).sum::<Complex64>()
        * (env.dt / c).sqrt();
    Ok(QuadraturePair::new(alpha.re, -alpha.im))
}

/// Real white noise of one-sided density `psd` ((µV)²/Hz) at step `dt`.
pub fn white_voltage_noise(n: usize, dt: f64, psd: f64, stream: &mut NoiseStream) -> Vec<f64> {
    let sigma = (psd / (2.0 * dt)).sqrt();
    (0..n).map(|_| sigma * stream.normal()).collect()
}

/// Digitized receiver with a down-converting mixer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverEmulator {
    pub cal: ReceiverCal,
    /// Intermediate frequency, rad/s.
    pub omega_if: f64,
    pub sample_rate: f64,
    /// Load temperature seen in place of the signal, K. Only the excess
    /// over vacuum is added; the signal's own vacuum is expected in the
    /// envelope.
    pub load_temperature: f64,
}

impl ReceiverEmulator {
    pub fn new(cal: ReceiverCal) -> Self {
        Self {
            cal,
            omega_if: crate::consts::hz(crate::tf::DEFAULT_IF_HZ),
            sample_rate: crate::tf::DEFAULT_SAMPLE_RATE,
            load_temperature: 0.0,
        }
    }

    /// Density added by the receiver itself: the `(1−ζ)/2` vacuum of its
    /// losses plus any thermal excess of the load.
    pub fn added_psd(&self) -> f64 {
        let z = self.cal.effective_efficiency();
        let excess = load_spectral_density(self.load_temperature, self.cal.frequency) - 0.5;
        self.cal.gain * ((1.0 - z) / 2.0 + z * excess)
    }

    /// Voltage trace for `env` with receiver noise drawn from `stream`.
    pub fn measure(&self, env: &Envelope, stream: &mut NoiseStream) -> Result<VoltageTrace> {
        let mut trace = synthesize_voltage(env, self.omega_if, self.sample_rate, Some(&self.cal))?;
        let noise = white_voltage_noise(trace.len(), trace.dt, self.added_psd(), stream);
        trace.add(&noise);
        Ok(trace)
    }

    pub fn quadratures(&self, trace: &VoltageTrace, window: &Window) -> Result<QuadraturePair> {
        quadratures(trace, self.omega_if, window, &self.cal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    /// `Var X₁ + Var X₂` of the signal ensemble, quanta.
    pub var_sum: f64,
    /// Same for the vacuum ensemble.
    pub vacuum_reference: f64,
    pub added_noise: f64,
    pub stderr: f64,
}

/// Sample variances (n − 1) of both quadratures.
pub fn quadrature_variances(ensemble: &[QuadraturePair]) -> (f64, f64) {
    let n = ensemble.len() as f64;
    let m1 = ensemble.iter().map(|q| q.x1).sum::<f64>() / n;
    let m2 = ensemble.iter().map(|q| q.x2).sum::<f64>() / n;
    let v1 = ensemble.iter().map(|q| (q.x1 - m1).powi(2)).sum::<f64>() / (n - 1.0);
    let v2 = ensemble.iter().map(|q| (q.x2 - m2).powi(2)).sum::<f64>() / (n - 1.0);
    (v1, v2)
}

/// Excess of `Var X₁ + Var X₂` over the vacuum ensemble. The standard error
/// treats quadratures as Gaussian: `se(Var) = Var √(2/(n−1))`, combined in
/// quadrature over the four variances.
pub fn added_noise(ensemble: &[QuadraturePair], vacuum: &[QuadraturePair]) -> Result<NoiseReport> {
    if ensemble.len() < 2 || vacuum.len() < 2 {
        return Err(Error::InvalidArgument("added-noise estimate needs ≥ 2 runs per ensemble".into()));
    }
    let se2 = |vars: (f64, f64), n: usize| (vars.0.powi(2) + vars.1.powi(2)) * 2.0 / (n as f64 - 1.0);
    let sig = quadrature_variances(ensemble);
    let vac = quadrature_variances(vacuum);
    let var_sum = sig.0 + sig.1;
    let vacuum_reference = vac.0 + vac.1;
    Ok(NoiseReport {
        var_sum,
        vacuum_reference,
        added_noise: var_sum - vacuum_reference,
        stderr: (se2(sig, ensemble.len()) + se2(vac, vacuum.len())).sqrt(),
    })
}

/// Power in the mechanical sideband relative to the pump,
/// `(g0²/2)(⟨x²⟩/x_zp²) κ_ext² / (Δ² + (κ_ext − κ/2)²) / ((Δ + ω_m)² + (κ/2)²)`
/// with `⟨x²⟩ = 2 x_zp² n_m`.
pub fn sideband_ratio(params: &DeviceParams, n_m: f64, delta: f64) -> f64 {
    sideband_ratio_per_phonon(params, delta) * params.g0 * params.g0 * n_m
}

fn sideband_ratio_per_phonon(params: &DeviceParams, delta: f64) -> f64 {
    let k = params.kappa;
    let ke = params.kappa_ext;
    ke * ke / (delta * delta + (ke - k / 2.0).powi(2)) / ((delta + params.omega_m).powi(2) + (k / 2.0).powi(2))
}

/// Thermal phonon number `k_B T / ħω_m`.
pub fn thermal_occupation(temperature: f64, omega_m: f64) -> f64 {
    K_B * temperature / (HBAR * omega_m)
}

/// Recovers `g0` from sideband ratios measured at several temperatures: the
/// ratio is linear in `T` with slope `g0² K k_B/(ħω_m)`; the intercept
/// absorbs any offset.
pub fn fit_thermometry(params: &DeviceParams, data: &[(f64, f64)], delta: f64) -> Result<f64> {
    if data.len() < 2 {
        return Err(Error::FitFailure("need ≥ 2 temperatures".into()));
    }
    let n = data.len() as f64;
    let mt = data.iter().map(|d| d.0).sum::<f64>() / n;
    let mr = data.iter().map(|d| d.1).sum::<f64>() / n;
    let stt: f64 = data.iter().map(|d| (d.0 - mt).powi(2)).sum();
    if !(stt > 0.0) {
        return Err(Error::FitFailure("all points share one temperature".into()));
    }
    let slope = data.iter().map(|d| (d.0 - mt) * (d.1 - mr)).sum::<f64>() / stt;
    let per_kelvin = sideband_ratio_per_phonon(params, delta) * thermal_occupation(1.0, params.omega_m);
    if !(slope > 0.0) {
        return Err(Error::FitFailure(format!("non-positive slope {slope:.3e}")));
    }
    Ok((slope / per_kelvin).sqrt())
}
