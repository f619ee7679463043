use num_complex::Complex64;

use super::noise::{NoiseSpec, NoiseStream};
use super::{
    aligned_input, lerp, resolve_substeps, trapezoid_energy, IntegratorOptions, SystemState, TrajectoryResult,
    STEPS_PER_TIMESCALE,
};
use crate::envelope::Envelope;
use crate::pulse::CouplingSchedule;
use crate::{DeviceParams, Error, Result};

/// Weak-coupling, resolved-sideband dynamics in the frame of the circuit
/// resonance:
///
/// ```text
/// ċ     = −Γ(t) c/2 − e^{−iψ} √(ηΓ(t)) a_in
/// a_out = e^{iψ} √(ηΓ(t)) c + (2η − 1) a_in
/// ```
///
/// With noise, the mechanics is damped at `κ_m/2` and driven by the thermal
/// force, and the internal-loss port `b_in` enters as
/// `−e^{−iψ}√((1−η)Γ) b_in` in `ċ` and `2√(η(1−η)) b_in` in `a_out`.
///
/// `input` must share origin and step with the schedule; it is zero-padded
/// if shorter.
pub fn integrate_reduced(
    params: &DeviceParams,
    sched: &CouplingSchedule,
    input: &Envelope,
    noise: &NoiseSpec,
    opts: &IntegratorOptions,
) -> Result<TrajectoryResult> {
    let mut stream = NoiseStream::new(noise.seed, opts.run);
    reduced_leg(params, sched, Some(input), noise, opts, 0.0, &mut stream)
}

/// Step bound `1/(40 max Γ)`; unbounded when Γ ≡ 0.
pub(crate) fn reduced_step_bound(sched: &CouplingSchedule) -> f64 {
    let max_gamma = sched.max_gamma();
    if max_gamma > 0.0 {
        1.0 / (STEPS_PER_TIMESCALE * max_gamma)
    } else {
        f64::INFINITY
    }
}

/// One leg of the reduced model. `mech_detuning` adds `−i δω_m c` to the
/// mechanical equation (adiabatic frequency shift during storage).
pub(crate) fn reduced_leg(
    params: &DeviceParams,
    sched: &CouplingSchedule,
    input: Option<&Envelope>,
    noise: &NoiseSpec,
    opts: &IntegratorOptions,
    mech_detuning: f64,
    stream: &mut NoiseStream,
) -> Result<TrajectoryResult> {
    if !params.is_resolved_sideband() {
        return Err(Error::InvalidArgument(
            "reduced model requires the resolved-sideband regime 4 ω_m > κ".into(),
        ));
    }
    let eta = params.eta()?;
    let grid = sched.grid();
    if grid.n < 2 {
        return Err(Error::InvalidArgument("schedule needs at least two samples".into()));
    }
    let dt = grid.dt;
    let drive = aligned_input(&grid, input)?;
    let substeps = resolve_substeps(dt, reduced_step_bound(sched), opts.substeps)?;
    let h = dt / substeps as f64;

    let zero = Complex64::new(0.0, 0.0);
    let (signal_noise, loss_noise) = if noise.include_vacuum_input {
        (stream.white(grid.n, dt, 0.5), stream.white(grid.n, dt, 0.5))
    } else {
        (vec![zero; grid.n], vec![zero; grid.n])
    };
    let thermal = noise.thermal_strength();
    let force = if thermal > 0.0 {
        stream.white(grid.n, dt, thermal)
    } else {
        vec![zero; grid.n]
    };
    let a_in: Vec<Complex64> = drive.iter().zip(&signal_noise).map(|(d, w)| d + w).collect();

    let rot = Complex64::from_polar(1.0, sched.phase_psi);
    let rot_conj = rot.conj();
    let damping = Complex64::new(noise.kappa_m / 2.0, mech_detuning);
    let loss_share = (1.0 - eta).max(0.0);
    let gammas = &sched.gamma_series;

    let rhs = |k: usize, frac: f64, c: Complex64| -> Complex64 {
        let g = gammas[k] + (gammas[k + 1] - gammas[k]) * frac;
        let g = g.max(0.0);
        let ain = lerp(a_in[k], a_in[k + 1], frac);
        let bin = lerp(loss_noise[k], loss_noise[k + 1], frac);
        let xi = lerp(force[k], force[k + 1], frac);
        -(0.5 * g + damping) * c - rot_conj * ((eta * g).sqrt() * ain + (loss_share * g).sqrt() * bin) + xi
    };

    let out_at = |k: usize, c: Complex64| -> Complex64 {
        let g = gammas[k];
        rot * (eta * g).sqrt() * c + (2.0 * eta - 1.0) * a_in[k] + 2.0 * (eta * loss_share).sqrt() * loss_noise[k]
    };
    let circuit_at = |k: usize, c: Complex64| -> Complex64 {
        let g = gammas[k];
        rot * (g / params.kappa).sqrt() * c
            + 2.0 / params.kappa * (params.kappa_ext.sqrt() * a_in[k] + (params.kappa - params.kappa_ext).max(0.0).sqrt() * loss_noise[k])
    };

    let mut c = opts.initial.c;
    let mut states = Vec::with_capacity(grid.n);
    let mut out = Vec::with_capacity(grid.n);
    states.push(SystemState { a: circuit_at(0, c), c, t: grid.t0 });
    out.push(out_at(0, c));
    let inv = 1.0 / substeps as f64;
    for k in 0..grid.n - 1 {
        for j in 0..substeps {
            let s0 = j as f64 * inv;
            let sm = (j as f64 + 0.5) * inv;
            let s1 = (j as f64 + 1.0) * inv;
            let k1 = rhs(k, s0, c);
            let k2 = rhs(k, sm, c + 0.5 * h * k1);
            let k3 = rhs(k, sm, c + 0.5 * h * k2);
            let k4 = rhs(k, s1, c + h * k3);
            c += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        states.push(SystemState { a: circuit_at(k + 1, c), c, t: grid.time(k + 1) });
        out.push(out_at(k + 1, c));
    }

    let a_out = Envelope::new(grid.t0, dt, out);
    Ok(TrajectoryResult {
        energy_in: trapezoid_energy(&drive, dt),
        energy_out: trapezoid_energy(&a_out.values, dt),
        phonons_initial: opts.initial.c.norm_sqr(),
        phonons_final: c.norm_sqr(),
        states,
        a_out,
        step: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consts::hz;
    use crate::envelope::Grid;
    use crate::pulse::exp_capture_schedule;

    fn unit_eta() -> DeviceParams {
        let mut p = DeviceParams::paper_table();
        p.kappa_ext = p.kappa;
        p
    }

    #[test]
    fn constant_coupling_empties_the_mode() {
        let p = DeviceParams::paper_table();
        let gamma = hz(100e3);
        let grid = Grid::spanning(0.0, 60e-6, 2e-9).unwrap();
        let sched = CouplingSchedule::constant(grid, gamma).unwrap();
        let opts = IntegratorOptions::from_state(SystemState::with_phonons(Complex64::new(1.0, 0.0)));
        let r = integrate_reduced(&p, &sched, &Envelope::zeros(grid), &NoiseSpec::off(), &opts).unwrap();
        for (k, s) in r.states.iter().enumerate().step_by(997) {
            let t = grid.time(k);
            assert!((s.c.norm_sqr() - (-gamma * t).exp()).abs() < 1e-10);
        }
        // fraction η of the stored energy leaves through the line
        let expected = p.eta().unwrap() * (1.0 - (-gamma * grid.end()).exp());
        assert!((r.energy_out - expected).abs() < 1e-6);
    }

    #[test]
    fn capture_efficiency_near_limit() {
        let p = unit_eta();
        let gamma = hz(24e3);
        let g0 = hz(500e3);
        let grid = Grid::spanning(0.0, 60e-6, 1e-9).unwrap();
        let sched = exp_capture_schedule(gamma, g0, grid).unwrap();
        let input = Envelope::exponential(grid, gamma, 1.0);
        let r = integrate_reduced(&p, &sched, &input, &NoiseSpec::off(), &IntegratorOptions::default()).unwrap();
        let eff = r.phonons_final / r.energy_in;
        assert!((eff - 0.954).abs() < 1e-3, "{eff}");
        // lossless bookkeeping; the trapezoid error of the fast initial
        // transient scales as dt²
        assert!((r.energy_in - r.energy_out - r.phonons_final).abs() < 1e-6, "{} {} {}", r.energy_in, r.energy_out, r.phonons_final);
    }

    #[test]
    fn misaligned_input_is_rejected() {
        let p = DeviceParams::paper_table();
        let grid = Grid::new(0.0, 1e-8, 100).unwrap();
        let sched = CouplingSchedule::constant(grid, hz(100e3)).unwrap();
        let input = Envelope::zeros(Grid::new(0.0, 2e-8, 100).unwrap());
        let err = integrate_reduced(&p, &sched, &input, &NoiseSpec::off(), &IntegratorOptions::default());
        assert!(matches!(err, Err(Error::MisalignedGrid(_))));
    }

    #[test]
    fn explicit_coarse_step_is_rejected() {
        let p = DeviceParams::paper_table();
        let grid = Grid::new(0.0, 1e-6, 10).unwrap();
        let sched = CouplingSchedule::constant(grid, hz(100e3)).unwrap();
        let opts = IntegratorOptions::default().with_substeps(1);
        let err = integrate_reduced(&p, &sched, &Envelope::zeros(grid), &NoiseSpec::off(), &opts);
        assert!(matches!(err, Err(Error::StepSize { .. })));
    }
}
