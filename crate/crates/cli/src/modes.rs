use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use mode_converter::consts::hz;
use mode_converter::dynamics::{
    monte_carlo_map, run_protocol, vacuum_ensemble, NoiseSpec, NoiseStream, ProtocolResult, ProtocolWarning,
};
use mode_converter::pulse::{schedule_to_pump, CouplingSchedule};
use mode_converter::receiver::{added_noise, envelope_quadratures, fit_calibration, quadrature_variances, receiver_output};
use mode_converter::receiver::load_spectral_density;
use mode_converter::tf::{analytic_signal, marginals, synthesize_voltage, wigner_ville_strided, DEFAULT_IF_HZ, DEFAULT_SAMPLE_RATE};
use mode_converter::tuning::sweep;
use mode_converter::{io, Envelope};
use serde_json::json;

use crate::config::{to_hz, Loaded};
use crate::manifest::Manifest;
use crate::CliError;

pub struct Context<'a> {
    pub loaded: &'a Loaded,
    pub seed: u64,
    pub runs: Option<usize>,
    pub out_dir: &'a Path,
}

impl Context<'_> {
    /// Creates `name` in the output directory, hands a buffered writer to
    /// `body` and records the file in the manifest.
    fn emit<F>(&self, manifest: &mut Manifest, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> mode_converter::Result<()>,
    {
        let path = self.out_dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w).map_err(|e| match e {
            mode_converter::Error::Io(io) => CliError::io(&path, io),
            other => CliError::from_core(other),
        })?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        manifest.record(name);
        Ok(())
    }

    fn emit_json(&self, manifest: &mut Manifest, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        self.emit(manifest, name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

pub fn run(mode: &str, ctx: &Context, manifest: &mut Manifest) -> Result<(), CliError> {
    match mode {
        "protocol" => protocol(ctx, manifest),
        "pulse" => pulse(ctx, manifest),
        "wigner" => wigner(ctx, manifest),
        "noise-ensemble" => noise_ensemble(ctx, manifest),
        "calibration" => calibration(ctx, manifest),
        "tuning-sweep" => tuning_sweep(ctx, manifest),
        other => Err(CliError::Config(format!("unknown mode {other}"))),
    }
}

fn infeasible(warnings: &[ProtocolWarning]) -> Option<String> {
    warnings.iter().find_map(|w| match w {
        ProtocolWarning::InfeasibleSchedule { leg, max_gamma, limit } => Some(format!(
            "{leg} schedule needs Γ up to 2π×{:.4e} Hz, above the κ/2 limit 2π×{:.4e} Hz",
            to_hz(*max_gamma),
            to_hz(*limit)
        )),
        _ => None,
    })
}

fn schedule_infeasible(leg: &str, sched: &CouplingSchedule, kappa: f64) -> Option<String> {
    let mut s = sched.clone();
    (!s.check_feasibility(kappa)).then(|| {
        format!(
            "{leg} schedule needs Γ up to 2π×{:.4e} Hz, above the κ/2 limit 2π×{:.4e} Hz",
            to_hz(s.max_gamma()),
            to_hz(kappa / 2.0)
        )
    })
}

/// Γ on the stitched output grid.
fn stitched_gammas(spec_capture: &CouplingSchedule, r: &ProtocolResult, release: &CouplingSchedule) -> Vec<f64> {
    let mut g = spec_capture.gamma_series[..spec_capture.len() - 1].to_vec();
    if let Some(s) = &r.store {
        g.extend(std::iter::repeat_n(0.0, s.states.len() - 1));
    }
    g.extend_from_slice(&release.gamma_series);
    g
}

fn protocol(ctx: &Context, manifest: &mut Manifest) -> Result<(), CliError> {
    let params = ctx.loaded.device()?;
    let noise = ctx.loaded.noise(&params, ctx.seed, false);
    let spec = ctx.loaded.protocol(&params, noise)?;
    let r = run_protocol(&spec, &params).map_err(CliError::from_core)?;
    let eta = params.eta().map_err(CliError::from_core)?;

    let gammas = stitched_gammas(&spec.capture_schedule, &r, &spec.release_schedule);
    ctx.emit(manifest, "trajectory.csv", |w| io::write_trajectory(w, &r, &gammas))?;
    ctx.emit(manifest, "converted_signal.csv", |w| io::write_envelope(w, &r.converted()))?;
    let summary = json!({
        "efficiency": r.efficiency,
        "capture_efficiency": r.capture_efficiency,
        "eta": eta,
        "eta_squared_capture": eta * eta * r.capture_efficiency,
        "energy_in": r.energy_in,
        "energy_reflected": r.energy_reflected,
        "reflected_fraction": if r.energy_in > 0.0 { r.energy_reflected / r.energy_in } else { 0.0 },
        "phonons_captured": r.phonons_captured,
        "phonons_stored": r.phonons_stored,
        "energy_released": r.energy_released,
        "carrier_in_hz": to_hz(r.carrier_in),
        "carrier_out_hz": to_hz(r.carrier_out),
        "duration": spec.total_duration(),
        "dt": spec.capture_schedule.dt,
        "warnings": r.warnings,
    });
    ctx.emit_json(manifest, "summary.json", &summary)?;
    match infeasible(&r.warnings) {
        Some(msg) => Err(CliError::Physics(msg)),
        None => Ok(()),
    }
}

fn pulse(ctx: &Context, manifest: &mut Manifest) -> Result<(), CliError> {
    let params = ctx.loaded.device()?;
    let spec = ctx.loaded.protocol(&params, NoiseSpec::off())?;
    let release_start = spec.capture_schedule.grid().end() + spec.store_duration;
    let mut release = spec.release_schedule.clone();
    release.t0 = release_start;
    let legs = [("capture", &spec.capture_schedule), ("release", &release)];

    ctx.emit(manifest, "pulse.csv", |w| {
        writeln!(w, "leg,t,gamma,pump_photons,g_abs")?;
        for (leg, sched) in legs {
            let pump = schedule_to_pump(sched, &params)?;
            for (k, (g, n)) in sched.gamma_series.iter().zip(&pump.photons).enumerate() {
                let coupling = (g * params.kappa).sqrt() / 2.0;
                writeln!(w, "{leg},{},{g},{n},{coupling}", sched.t0 + k as f64 * sched.dt)?;
            }
        }
        Ok(())
    })?;
    ctx.emit(manifest, "input_signal.csv", |w| io::write_envelope(w, &spec.input))?;

    let max_photons = legs
        .iter()
        .map(|(_, s)| s.max_gamma() * params.kappa / (4.0 * params.g0 * params.g0))
        .fold(0.0, f64::max);
    let summary = json!({
        "capture_max_gamma_hz": to_hz(spec.capture_schedule.max_gamma()),
        "release_max_gamma_hz": to_hz(release.max_gamma()),
        "gamma_limit_hz": to_hz(params.kappa / 2.0),
        "max_pump_photons": max_photons,
        "phase_psi": spec.capture_schedule.phase_psi,
    });
    ctx.emit_json(manifest, "summary.json", &summary)?;
    for (leg, sched) in legs {
        if let Some(msg) = schedule_infeasible(leg, sched, params.kappa) {
            return Err(CliError::Physics(msg));
        }
    }
    Ok(())
}

fn wigner_input(ctx: &Context) -> Result<Envelope, CliError> {
    let sec = &ctx.loaded.scenario.wigner;
    match &sec.input {
        Some(p) => {
            let path = ctx.loaded.resolve(p);
            let file = File::open(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let env = io::read_envelope(BufReader::new(file)).map_err(CliError::from_core)?;
            Ok(match sec.carrier {
                Some(c) => env.with_carrier(hz(c)),
                None => env,
            })
        }
        None => {
            let params = ctx.loaded.device()?;
            let spec = ctx.loaded.protocol(&params, NoiseSpec::off())?;
            Ok(run_protocol(&spec, &params).map_err(CliError::from_core)?.converted())
        }
    }
}

fn wigner(ctx: &Context, manifest: &mut Manifest) -> Result<(), CliError> {
    let sec = &ctx.loaded.scenario.wigner;
    let env = wigner_input(ctx)?;
    let omega_if = hz(sec.if_frequency.unwrap_or(DEFAULT_IF_HZ));
    let fs = sec.sample_rate.unwrap_or(DEFAULT_SAMPLE_RATE);
    let trace = synthesize_voltage(&env, omega_if, fs, None).map_err(CliError::from_core)?;
    let analytic = analytic_signal(&trace).map_err(CliError::from_core)?;
    let map = wigner_ville_strided(&analytic, sec.stride.unwrap_or(1)).map_err(CliError::from_core)?;
    let e_sig = sec.normalize.unwrap_or(true).then(|| env.energy());
    let m = marginals(&map, e_sig).map_err(CliError::from_core)?;

    ctx.emit(manifest, "voltage.csv", |w| io::write_voltage(w, &trace))?;
    ctx.emit(manifest, "wigner.csv", |w| io::write_wigner(w, &map))?;
    let lo = map.lo_hz;
    let mut spectral = Vec::new();
    io::write_marginals(std::io::sink(), &mut spectral, &m, lo).map_err(CliError::from_core)?;
    ctx.emit(manifest, "marginal_t.csv", |w| io::write_marginals(w, std::io::sink(), &m, lo))?;
    ctx.emit(manifest, "marginal_f.csv", |w| Ok(w.write_all(&spectral)?))?;
    let summary = json!({
        "samples": trace.len(),
        "sample_rate": fs,
        "if_hz": to_hz(omega_if),
        "lo_hz": lo,
        "energy": env.energy(),
        "normalization": e_sig,
        "w_min": map.min(),
        "w_max_abs": map.max_abs(),
    });
    ctx.emit_json(manifest, "summary.json", &summary)
}

fn noise_ensemble(ctx: &Context, manifest: &mut Manifest) -> Result<(), CliError> {
    let params = ctx.loaded.device()?;
    let runs = ctx.runs.unwrap_or(500);
    if runs < 2 {
        return Err(CliError::Config(format!("ensemble needs ≥ 2 runs, got {runs}")));
    }
    let clean_spec = ctx.loaded.protocol(&params, NoiseSpec::off())?;
    let clean = run_protocol(&clean_spec, &params).map_err(CliError::from_core)?;
    let window = clean.release.a_out.clone();
    if !(window.energy() > 0.0) {
        return Err(CliError::Physics("converted signal is empty; no matched window".into()));
    }

    let noise = ctx.loaded.noise(&params, ctx.seed, true);
    let spec = ctx.loaded.protocol(&params, noise)?;
    let signal = monte_carlo_map(&spec, &params, runs, |_, r| envelope_quadratures(&r.release.a_out, &window))
        .map_err(CliError::from_core)?
        .into_iter()
        .collect::<mode_converter::Result<Vec<_>>>()
        .map_err(CliError::from_core)?;
    let vacuum = vacuum_ensemble(window.grid(), runs, ctx.seed)
        .iter()
        .map(|v| envelope_quadratures(v, &window))
        .collect::<mode_converter::Result<Vec<_>>>()
        .map_err(CliError::from_core)?;

    ctx.emit(manifest, "quadratures.csv", |w| io::write_quadratures(w, &signal))?;
    ctx.emit(manifest, "vacuum_quadratures.csv", |w| io::write_quadratures(w, &vacuum))?;
    let report = added_noise(&signal, &vacuum).map_err(CliError::from_core)?;
    let (v1, v2) = quadrature_variances(&signal);
    let n = runs as f64;
    let mean = |f: fn(&mode_converter::receiver::QuadraturePair) -> f64| signal.iter().map(f).sum::<f64>() / n;
    let summary = json!({
        "runs": runs,
        "seed": ctx.seed,
        "mean_x1": mean(|q| q.x1),
        "mean_x2": mean(|q| q.x2),
        "var_x1": v1,
        "var_x2": v2,
        "vacuum_reference": report.vacuum_reference,
        "added_noise": report.added_noise,
        "added_noise_stderr": report.stderr,
        "decoherence_budget": spec.noise.decoherence_rate() * spec.total_duration(),
    });
    ctx.emit_json(manifest, "summary.json", &summary)
}

fn calibration(ctx: &Context, manifest: &mut Manifest) -> Result<(), CliError> {
    let sec = &ctx.loaded.scenario.receiver;
    let cal = ctx.loaded.receiver_cal()?;
    let data = match &sec.data {
        Some(p) => {
            let path = ctx.loaded.resolve(p);
            let file = File::open(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            io::read_calibration(BufReader::new(file)).map_err(CliError::from_core)?
        }
        None => {
            let n = sec.points.unwrap_or(20);
            let (t0, t1) = (sec.t_min.unwrap_or(0.02), sec.t_max.unwrap_or(1.0));
            if n < 2 || !(t1 > t0) || !(t0 >= 0.0) {
                return Err(CliError::Config("synthetic calibration needs ≥ 2 points and 0 ≤ t_min < t_max".into()));
            }
            let rel = sec.noise.unwrap_or(0.0);
            let mut stream = NoiseStream::new(ctx.seed, 0);
            let data: Vec<(f64, f64)> = (0..n)
                .map(|k| {
                    let t = t0 + (t1 - t0) * k as f64 / (n - 1) as f64;
                    let s = receiver_output(load_spectral_density(t, cal.frequency), &cal);
                    (t, s * (1.0 + rel * stream.normal()))
                })
                .collect();
            ctx.emit(manifest, "calibration_data.csv", |w| io::write_calibration(w, &data))?;
            data
        }
    };
    let fit = fit_calibration(&data, cal.frequency).map_err(CliError::from_core)?;
    let summary = json!({
        "gain": fit.cal.gain,
        "efficiency": fit.cal.efficiency,
        "frequency_hz": to_hz(fit.cal.frequency),
        "residual": fit.residual,
        "iterations": fit.iterations,
        "points": data.len(),
    });
    ctx.emit_json(manifest, "calibration.json", &summary)
}

fn tuning_sweep(ctx: &Context, manifest: &mut Manifest) -> Result<(), CliError> {
    let params = ctx.loaded.device()?;
    let sec = &ctx.loaded.scenario.tuning;
    let model = ctx.loaded.tuning_model(&params)?;
    let (v0, v1) = (sec.v_min.unwrap_or(0.0), sec.v_max.unwrap_or(25.0));
    let n = sec.points.unwrap_or(251);
    if n < 2 || !(v1 > v0) {
        return Err(CliError::Config("sweep needs ≥ 2 points and v_min < v_max".into()));
    }
    let voltages: Vec<f64> = (0..n).map(|k| v0 + (v1 - v0) * k as f64 / (n - 1) as f64).collect();
    let points = sweep(&model, &voltages).map_err(CliError::from_core)?;
    ctx.emit(manifest, "tuning.csv", |w| io::write_tuning(w, &points))?;
    let pull_in = model.pull_in().map_err(CliError::from_core)?;
    let summary = json!({
        "k_spring": model.k_spring,
        "m_eff": model.m_eff,
        "a_act": model.a_act,
        "a_cap": model.a_cap,
        "d_cap0": model.d_cap0,
        "d_act0": model.d_act0,
        "casimir_scale": model.casimir_scale,
        "omega_e0_hz": to_hz(model.omega_e0),
        "pull_in_voltage": pull_in.voltage,
        "pull_in_deflection": pull_in.deflection,
        "pulled_in_points": points.iter().filter(|p| p.pulled_in).count(),
    });
    ctx.emit_json(manifest, "summary.json", &summary)
}
