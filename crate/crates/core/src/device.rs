//! Physical parameters of the electromechanical circuit and the receiver.
//!
//! Every rate and frequency stored here is angular (rad/s); lengths are in
//! meters. Conversion from ordinary frequency happens once, at the config
//! boundary.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::consts::{hz, HBAR};
use crate::{Error, Result};

/// Relative tolerance on `g0 = G_disp · x_zp`. The published values are
/// rounded to two significant figures.
pub const COUPLING_CONSISTENCY_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Circuit resonance at zero bias, rad/s.
    pub omega_e: f64,
    /// Total circuit energy decay rate, rad/s.
    pub kappa: f64,
    /// Decay rate into the transmission line, rad/s.
    pub kappa_ext: f64,
    /// Mechanical resonance at zero bias, rad/s.
    pub omega_m: f64,
    /// Mechanical energy decay rate, rad/s.
    pub kappa_m: f64,
    /// Thermal phonon occupancy.
    pub n_m: f64,
    /// Vacuum electromechanical coupling, rad/s.
    pub g0: f64,
    /// Frequency pull per displacement, rad/(s·m).
    pub g_disp: f64,
    /// Zero-point motion, m.
    pub x_zp: f64,
}

impl DeviceParams {
    /// The measured device: 7.34 GHz circuit, 2.5 MHz linewidth (92 %
    /// external), 9.56 MHz drumhead with 25 Hz damping and 36 thermal
    /// phonons, `g0 = 2π×270 Hz`, `G = 2π×42 MHz/nm`, `x_zp = 6.4 fm`.
    pub fn paper_table() -> Self {
        let kappa = hz(2.5e6);
        Self {
            omega_e: hz(7.34e9),
            kappa,
            kappa_ext: 0.92 * kappa,
            omega_m: hz(9.56e6),
            kappa_m: hz(25.0),
            n_m: 36.0,
            g0: hz(270.0),
            g_disp: hz(42e6) / 1e-9,
            x_zp: 6.4e-15,
        }
    }

    /// Coupling efficiency `κ_ext/κ`.
    pub fn eta(&self) -> Result<f64> {
        if self.kappa == 0.0 {
            return Err(Error::DegenerateParameter("kappa = 0"));
        }
        Ok(self.kappa_ext / self.kappa)
    }

    /// Thermal decoherence rate `n_m κ_m`, rad/s.
    pub fn decoherence_rate(&self) -> f64 {
        self.n_m * self.kappa_m
    }

    /// `4 ω_m > κ`, required before the reduced model is meaningful.
    pub fn is_resolved_sideband(&self) -> bool {
        4.0 * self.omega_m > self.kappa
    }

    /// Effective mass implied by the zero-point motion,
    /// `m = ħ / (2 ω_m x_zp²)`, kg.
    pub fn effective_mass(&self) -> f64 {
        HBAR / (2.0 * self.omega_m * self.x_zp * self.x_zp)
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self::paper_table()
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    NonFinite(&'static str),
    NegativeRate(&'static str),
    NegativeOccupancy,
    ExternalExceedsTotal { kappa_ext: f64, kappa: f64 },
    CouplingInconsistent { g0: f64, product: f64, deviation: f64 },
    NotResolvedSideband { omega_m: f64, kappa: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite(name) => write!(f, "{name} must be finite"),
            Violation::NegativeRate(name) => write!(f, "{name} ≥ 0"),
            Violation::NegativeOccupancy => write!(f, "n_m ≥ 0"),
            Violation::ExternalExceedsTotal { kappa_ext, kappa } => {
                write!(f, "kappa_ext ≤ kappa (kappa_ext = {kappa_ext:.6e}, kappa = {kappa:.6e})")
            }
            Violation::CouplingInconsistent { deviation, .. } => write!(
                f,
                "|g0 - G_disp*x_zp|/g0 ≤ {COUPLING_CONSISTENCY_TOL} (got {deviation:.4})"
            ),
            Violation::NotResolvedSideband { .. } => write!(f, "4*omega_m > kappa"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

/// Collects every violated invariant of `params`. An empty report means the
/// parameters are usable by every downstream module.
pub fn validate(params: &DeviceParams) -> ValidationReport {
    let mut violations = Vec::new();
    let fields = [
        ("omega_e", params.omega_e),
        ("kappa", params.kappa),
        ("kappa_ext", params.kappa_ext),
        ("omega_m", params.omega_m),
        ("kappa_m", params.kappa_m),
        ("n_m", params.n_m),
        ("g0", params.g0),
        ("G_disp", params.g_disp),
        ("x_zp", params.x_zp),
    ];
    for (name, value) in fields {
        if !value.is_finite() {
            violations.push(Violation::NonFinite(name));
        }
    }
    for (name, value) in [
        ("omega_e", params.omega_e),
        ("kappa", params.kappa),
        ("kappa_ext", params.kappa_ext),
        ("omega_m", params.omega_m),
        ("kappa_m", params.kappa_m),
        ("g0", params.g0),
    ] {
        if value < 0.0 {
            violations.push(Violation::NegativeRate(name));
        }
    }
    if params.n_m < 0.0 {
        violations.push(Violation::NegativeOccupancy);
    }
    if params.kappa_ext > params.kappa {
        violations.push(Violation::ExternalExceedsTotal {
            kappa_ext: params.kappa_ext,
            kappa: params.kappa,
        });
    }
    let product = params.g_disp * params.x_zp;
    let deviation = if params.g0 > 0.0 {
        (params.g0 - product).abs() / params.g0
    } else {
        f64::INFINITY
    };
    if !(deviation <= COUPLING_CONSISTENCY_TOL) {
        violations.push(Violation::CouplingInconsistent {
            g0: params.g0,
            product,
            deviation,
        });
    }
    if !params.is_resolved_sideband() {
        violations.push(Violation::NotResolvedSideband {
            omega_m: params.omega_m,
            kappa: params.kappa,
        });
    }
    ValidationReport { violations }
}

/// Calibrated gain and efficiency of the microwave receiver at one
/// operating frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverCal {
    /// Gain, (µV)²/(Hz·quanta).
    pub gain: f64,
    /// Measurement efficiency ζ in [0, 1].
    pub efficiency: f64,
    /// Operating frequency, rad/s.
    pub frequency: f64,
    /// Signal lies entirely on one side of the phase-sensitive amplifier's
    /// pump, so only half of it is measured: the effective efficiency is ζ/2.
    #[serde(default)]
    pub phase_preserving_mode: bool,
}

impl ReceiverCal {
    pub fn new(gain: f64, efficiency: f64, frequency: f64) -> Result<Self> {
        let cal = Self {
            gain,
            efficiency,
            frequency,
            phase_preserving_mode: false,
        };
        cal.check()?;
        Ok(cal)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.gain > 0.0) || !self.gain.is_finite() {
            return Err(Error::InvalidArgument(format!("receiver gain must be > 0, got {}", self.gain)));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::InvalidArgument(format!(
                "receiver efficiency must lie in [0, 1], got {}",
                self.efficiency
            )));
        }
        Ok(())
    }

    /// Efficiency seen by a signal, after the phase-preserving halving.
    pub fn effective_efficiency(&self) -> f64 {
        if self.phase_preserving_mode {
            self.efficiency / 2.0
        } else {
            self.efficiency
        }
    }

    /// Amplitude factor from a photon-flux envelope (√(quanta/s)) to
    /// receiver output voltage (µV): `√(2 ζ 𝒢)`. A flux `F` then gives a
    /// mean-square voltage `ζ 𝒢 F`, consistent with the one-sided noise
    /// density `𝒢 ζ S` of a source of `S` quanta.
    pub fn voltage_scale(&self) -> f64 {
        (2.0 * self.effective_efficiency() * self.gain).sqrt()
    }

    /// With the parametric amplifier, near `ω_e,1 = 2π×7.07825 GHz`.
    pub fn jpa_first() -> Self {
        Self { gain: 5.0, efficiency: 0.49, frequency: hz(7.07825e9), phase_preserving_mode: false }
    }

    /// With the parametric amplifier, near `ω_e,2 = 2π×7.34135 GHz`.
    pub fn jpa_second() -> Self {
        Self { gain: 11.0, efficiency: 0.60, frequency: hz(7.34135e9), phase_preserving_mode: false }
    }

    /// Without the parametric amplifier, near `ω_e,1`.
    pub fn bare_first() -> Self {
        Self { gain: 0.705, efficiency: 0.0105, frequency: hz(7.07825e9), phase_preserving_mode: false }
    }

    /// Without the parametric amplifier, near `ω_e,2`.
    pub fn bare_second() -> Self {
        Self { gain: 0.98, efficiency: 0.0125, frequency: hz(7.34135e9), phase_preserving_mode: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values_are_valid() {
        let report = DeviceParams::paper_table().validate();
        assert!(report.is_valid(), "{:?}", report.messages());
    }

    #[test]
    fn overcoupled_external_rate_is_flagged() {
        let mut p = DeviceParams::paper_table();
        p.kappa_ext = 1.1 * p.kappa;
        let report = validate(&p);
        assert_eq!(report.violations.len(), 1);
        assert!(report.messages()[0].starts_with("kappa_ext ≤ kappa"));
    }

    #[test]
    fn coupling_consistency_deviation() {
        let p = DeviceParams::paper_table();
        let product = p.g_disp * p.x_zp;
        // 42 MHz/nm × 6.4 fm = 268.8 Hz
        assert!((product / hz(1.0) - 268.8).abs() < 1e-9);
        let dev = (p.g0 - product).abs() / p.g0;
        assert!((dev - 1.2 / 270.0).abs() < 1e-12);
        assert!(dev < 0.005);
    }

    #[test]
    fn inconsistent_coupling_is_flagged() {
        let mut p = DeviceParams::paper_table();
        p.x_zp = 8.0e-15;
        assert!(matches!(
            validate(&p).violations.as_slice(),
            [Violation::CouplingInconsistent { .. }]
        ));
    }

    #[test]
    fn eta_values() {
        let mut p = DeviceParams::paper_table();
        assert!((p.eta().unwrap() - 0.92).abs() < 1e-15);
        p.kappa_ext = p.kappa;
        assert_eq!(p.eta().unwrap(), 1.0);
        p.kappa_ext = 0.0;
        assert_eq!(p.eta().unwrap(), 0.0);
        p.kappa = 0.0;
        assert!(matches!(p.eta(), Err(Error::DegenerateParameter(_))));
    }

    #[test]
    fn validate_is_idempotent() {
        let mut p = DeviceParams::paper_table();
        p.n_m = -1.0;
        p.kappa_ext = 2.0 * p.kappa;
        assert_eq!(validate(&p), validate(&p));
        assert_eq!(validate(&p).violations.len(), 2);
    }

    #[test]
    fn decoherence_rate_matches_table() {
        // 36 × 25 Hz = 900 Hz
        let p = DeviceParams::paper_table();
        assert!((p.decoherence_rate() - hz(900.0)).abs() < 1e-9);
    }

    #[test]
    fn receiver_cal_rejects_out_of_range() {
        assert!(ReceiverCal::new(5.0, 0.49, 1.0).is_ok());
        assert!(ReceiverCal::new(0.0, 0.49, 1.0).is_err());
        assert!(ReceiverCal::new(5.0, 1.2, 1.0).is_err());
    }

    #[test]
    fn phase_preserving_halves_efficiency() {
        let mut cal = ReceiverCal::jpa_first();
        cal.phase_preserving_mode = true;
        assert!((cal.effective_efficiency() - 0.245).abs() < 1e-15);
    }
}
