//! Scenario files. Frequencies are in Hz (converted to rad/s on load),
//! times in seconds, lengths in metres, voltages in volts.

use std::path::{Path, PathBuf};

use mode_converter::consts::{hz, TAU};
use mode_converter::dynamics::{ConversionDesign, ModelKind, NoiseSpec, ProtocolSpec};
use mode_converter::tuning::TuningModel;
use mode_converter::{DeviceParams, ReceiverCal};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Device parameter file (TOML, same keys as `[device]`), relative to
    /// the scenario file.
    pub params_file: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub device: DeviceSection,
    #[serde(default)]
    pub pulse: PulseSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub receiver: ReceiverSection,
    #[serde(default)]
    pub tuning: TuningSection,
    #[serde(default)]
    pub wigner: WignerSection,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub omega_e: Option<f64>,
    pub kappa: Option<f64>,
    pub kappa_ext: Option<f64>,
    pub omega_m: Option<f64>,
    pub kappa_m: Option<f64>,
    pub n_m: Option<f64>,
    pub g0: Option<f64>,
    /// Hz per metre.
    pub g_disp: Option<f64>,
    pub x_zp: Option<f64>,
}

impl DeviceSection {
    fn apply(&self, p: &mut DeviceParams) {
        let set_hz = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = hz(v);
            }
        };
        set_hz(&mut p.omega_e, self.omega_e);
        set_hz(&mut p.kappa, self.kappa);
        set_hz(&mut p.kappa_ext, self.kappa_ext);
        set_hz(&mut p.omega_m, self.omega_m);
        set_hz(&mut p.kappa_m, self.kappa_m);
        set_hz(&mut p.g0, self.g0);
        set_hz(&mut p.g_disp, self.g_disp);
        if let Some(n) = self.n_m {
            p.n_m = n;
        }
        if let Some(x) = self.x_zp {
            p.x_zp = x;
        }
    }
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    /// Decay rate of the incoming power and Gaussian release rate.
    pub gamma: Option<f64>,
    /// Coupling at the start of each leg.
    pub gamma0: Option<f64>,
    pub capture_duration: Option<f64>,
    pub release_duration: Option<f64>,
    pub release_center: Option<f64>,
    pub input_energy: Option<f64>,
    /// Pump phase ψ, radians.
    pub phase: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub store_duration: Option<f64>,
    pub carrier_in: Option<f64>,
    pub carrier_out: Option<f64>,
    pub mech_shift: Option<f64>,
    /// `reduced` (default) or `full`.
    pub model: Option<String>,
    /// Pump detuning for the full model; defaults to −ω_m.
    pub delta: Option<f64>,
    pub substeps: Option<usize>,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Thermal bath on the mechanics. Off by default for `protocol`, on
    /// for `noise-ensemble`.
    pub thermal: Option<bool>,
    /// Half a quantum of white noise on the signal and loss ports.
    pub vacuum: Option<bool>,
    pub n_m: Option<f64>,
    pub kappa_m: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSection {
    pub gain: Option<f64>,
    pub efficiency: Option<f64>,
    pub frequency: Option<f64>,
    /// `T_L, S_out` CSV for `calibration`; synthetic data is generated
    /// from `gain`/`efficiency` when absent.
    pub data: Option<PathBuf>,
    pub points: Option<usize>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    /// Relative Gaussian noise on synthetic `S_out`.
    pub noise: Option<f64>,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSection {
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    pub points: Option<usize>,
    pub d_cap0: Option<f64>,
    pub d_act0: Option<f64>,
    pub casimir_scale: Option<f64>,
    pub patch_voltage: Option<f64>,
    pub c_ratio: Option<f64>,
    /// Actuation area, m². Calibrated from the anchor below when absent.
    pub a_act: Option<f64>,
    pub calibration_voltage: Option<f64>,
    pub calibration_frequency: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerSection {
    /// Envelope CSV (`t, re, im`); the converted signal of the protocol
    /// is used when absent.
    pub input: Option<PathBuf>,
    /// Carrier of `input`, Hz.
    pub carrier: Option<f64>,
    pub if_frequency: Option<f64>,
    pub sample_rate: Option<f64>,
    pub stride: Option<usize>,
    /// Divide marginals by the input energy.
    pub normalize: Option<bool>,
}

/// A parsed scenario plus where it came from.
#[derive(Debug, Default)]
pub struct Loaded {
    pub scenario: Scenario,
    pub raw: Vec<u8>,
    pub base_dir: PathBuf,
}

pub fn load(path: Option<&Path>) -> Result<Loaded, CliError> {
    let Some(path) = path else {
        return Ok(Loaded { base_dir: PathBuf::from("."), ..Default::default() });
    };
    let raw = std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&raw).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let scenario: Scenario = toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    Ok(Loaded { scenario, raw, base_dir })
}

impl Loaded {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn device(&self) -> Result<DeviceParams, CliError> {
        let mut p = DeviceParams::paper_table();
        if let Some(file) = &self.scenario.params_file {
            let path = self.resolve(file);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("cannot read params file {}: {e}", path.display())))?;
            let sec: DeviceSection =
                toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            sec.apply(&mut p);
        }
        self.scenario.device.apply(&mut p);
        let report = p.validate();
        if !report.is_valid() {
            return Err(CliError::Config(format!("invalid device parameters: {}", report.messages().join("; "))));
        }
        Ok(p)
    }

    pub fn design(&self) -> ConversionDesign {
        let mut d = ConversionDesign::default();
        let pu = &self.scenario.pulse;
        let pr = &self.scenario.protocol;
        if let Some(v) = pu.gamma {
            d.gamma = hz(v);
        }
        if let Some(v) = pu.gamma0 {
            d.gamma0 = hz(v);
        }
        d.capture_duration = pu.capture_duration.unwrap_or(d.capture_duration);
        d.release_duration = pu.release_duration.unwrap_or(d.release_duration);
        d.release_center = pu.release_center.unwrap_or(d.release_center);
        d.input_energy = pu.input_energy.unwrap_or(d.input_energy);
        d.dt = pu.dt.or(d.dt);
        d.store_duration = pr.store_duration.unwrap_or(d.store_duration);
        if let Some(v) = pr.carrier_in {
            d.carrier_in = hz(v);
        }
        if let Some(v) = pr.carrier_out {
            d.carrier_out = hz(v);
        }
        if let Some(v) = pr.mech_shift {
            d.mech_shift = hz(v);
        }
        d
    }

    pub fn model(&self, params: &DeviceParams) -> Result<ModelKind, CliError> {
        match self.scenario.protocol.model.as_deref() {
            None | Some("reduced") => Ok(ModelKind::Reduced),
            Some("full") => Ok(ModelKind::Full {
                delta: self.scenario.protocol.delta.map(hz).unwrap_or(-params.omega_m),
            }),
            Some(other) => Err(CliError::Config(format!("unknown model {other:?}; expected reduced or full"))),
        }
    }

    pub fn noise(&self, params: &DeviceParams, seed: u64, thermal_default: bool) -> NoiseSpec {
        let sec = &self.scenario.noise;
        let mut noise = if sec.thermal.unwrap_or(thermal_default) {
            NoiseSpec::thermal(params, seed)
        } else {
            NoiseSpec::off().with_seed(seed)
        };
        if let Some(n) = sec.n_m {
            noise.n_m = n;
        }
        if let Some(k) = sec.kappa_m {
            noise.kappa_m = hz(k);
        }
        noise.with_vacuum(sec.vacuum.unwrap_or(thermal_default))
    }

    pub fn protocol(&self, params: &DeviceParams, noise: NoiseSpec) -> Result<ProtocolSpec, CliError> {
        let model = self.model(params)?;
        let mut spec = self.design().build(noise, model).map_err(CliError::from_core)?;
        if let Some(psi) = self.scenario.pulse.phase {
            spec.capture_schedule.phase_psi = psi;
            spec.release_schedule.phase_psi = psi;
        }
        spec.substeps = self.scenario.protocol.substeps;
        Ok(spec)
    }

    pub fn receiver_cal(&self) -> Result<ReceiverCal, CliError> {
        let sec = &self.scenario.receiver;
        let base = ReceiverCal::jpa_second();
        let cal = ReceiverCal {
            gain: sec.gain.unwrap_or(base.gain),
            efficiency: sec.efficiency.unwrap_or(base.efficiency),
            frequency: sec.frequency.map(hz).unwrap_or(base.frequency),
            ..base
        };
        cal.check().map_err(CliError::from_core)?;
        Ok(cal)
    }

    pub fn tuning_model(&self, params: &DeviceParams) -> Result<TuningModel, CliError> {
        let sec = &self.scenario.tuning;
        let mut m = TuningModel::from_params(params, sec.a_act.unwrap_or(1e-12)).map_err(CliError::from_core)?;
        m.d_cap0 = sec.d_cap0.unwrap_or(m.d_cap0);
        m.d_act0 = sec.d_act0.unwrap_or(m.d_act0);
        m.casimir_scale = sec.casimir_scale.unwrap_or(m.casimir_scale);
        m.patch_voltage = sec.patch_voltage.unwrap_or(m.patch_voltage);
        m.c_ratio = sec.c_ratio.unwrap_or(m.c_ratio);
        m.check().map_err(CliError::from_core)?;
        if sec.a_act.is_some() {
            return Ok(m);
        }
        let v = sec.calibration_voltage.unwrap_or(10.0);
        let w = sec.calibration_frequency.map(hz).unwrap_or(hz(7.08e9));
        m.calibrate_area(v, w).map_err(CliError::from_core)
    }
}

pub fn to_hz(w: f64) -> f64 {
    w / TAU
}
