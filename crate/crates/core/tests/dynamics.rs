use mode_converter::consts::hz;
use mode_converter::dynamics::{
    integrate_reduced, monte_carlo, monte_carlo_map, run_protocol, vacuum_ensemble, ConversionDesign,
    IntegratorOptions, ModelKind, NoiseSpec, ProtocolSpec, SystemState,
};
use mode_converter::pulse::exp_capture_schedule;
use mode_converter::receiver::{added_noise, envelope_quadratures, quadrature_variances};
use mode_converter::{CouplingSchedule, DeviceParams, Envelope, Grid};
use num_complex::Complex64;
use proptest::prelude::*;

fn lossless() -> DeviceParams {
    let mut p = DeviceParams::paper_table();
    p.kappa_ext = p.kappa;
    p
}

#[test]
fn energy_is_accounted_for_without_loss() {
    let p = lossless();
    let design = ConversionDesign { dt: Some(1e-9), ..Default::default() };
    let spec = design.build(NoiseSpec::off(), ModelKind::Reduced).unwrap();
    let r = run_protocol(&spec, &p).unwrap();
    let out = r.energy_reflected + r.energy_released + r.release.phonons_final;
    assert!((out / r.energy_in - 1.0).abs() < 1e-6, "in {} out {out}", r.energy_in);
    // storage without damping keeps every phonon
    assert!((r.phonons_stored / r.phonons_captured - 1.0).abs() < 1e-9);
}

#[test]
fn time_reversed_schedule_returns_time_reversed_signal() {
    let p = lossless();
    let mut spec = ProtocolSpec::paper_default(NoiseSpec::off()).unwrap();
    spec.store_duration = 0.0;
    spec.release_schedule = spec.capture_schedule.time_reversed();
    let r = run_protocol(&spec, &p).unwrap();
    assert!(r.efficiency >= 0.95 * 0.95, "efficiency {}", r.efficiency);
    let reversed = spec.input.time_reversed();
    let overlap = r.release.a_out.overlap(&reversed);
    assert!(overlap > 0.99, "shape overlap {overlap}");
}

#[test]
fn halving_the_step_barely_moves_the_released_energy() {
    let p = DeviceParams::paper_table();
    let mut spec = ProtocolSpec::paper_default(NoiseSpec::off()).unwrap();
    spec.substeps = Some(1);
    let coarse = run_protocol(&spec, &p).unwrap().energy_released;
    spec.substeps = Some(2);
    let fine = run_protocol(&spec, &p).unwrap().energy_released;
    assert!((coarse / fine - 1.0).abs() <= 1e-8, "{coarse} vs {fine}");
}

#[test]
fn noiseless_ensemble_is_identical() {
    let p = DeviceParams::paper_table();
    let spec = ProtocolSpec::paper_default(NoiseSpec::off().with_seed(5)).unwrap();
    let runs = monte_carlo(&spec, &p, 3).unwrap();
    assert!(runs.windows(2).all(|w| w[0].values == w[1].values));
}

#[test]
fn vacuum_input_reads_as_vacuum() {
    let p = DeviceParams::paper_table();
    let clean = run_protocol(&ProtocolSpec::paper_default(NoiseSpec::off()).unwrap(), &p).unwrap();
    let window = clean.release.a_out.clone();
    let design = ConversionDesign { input_energy: 0.0, ..Default::default() };
    let spec = design.build(NoiseSpec::off().with_seed(31).with_vacuum(true), ModelKind::Reduced).unwrap();
    let runs = 3000;
    let qs = monte_carlo_map(&spec, &p, runs, |_, r| envelope_quadratures(&r.release.a_out, &window).unwrap()).unwrap();
    let vac: Vec<_> = vacuum_ensemble(window.grid(), runs, 32)
        .iter()
        .map(|v| envelope_quadratures(v, &window).unwrap())
        .collect();
    let report = added_noise(&qs, &vac).unwrap();
    assert!(report.added_noise.abs() < 4.0 * report.stderr, "{report:?}");
    let (v1, v2) = quadrature_variances(&vac);
    assert!((v1 + v2 - 0.5).abs() < 4.0 * 0.5 * (2.0 / runs as f64).sqrt(), "vacuum reference {}", v1 + v2);
}

/// A free oscillator coupled to a bath with occupancy `n + ½` fills as
/// `(n + ½)(1 − e^{−κ_m T})` from empty.
#[test]
fn bath_fills_the_oscillator() {
    let p = DeviceParams::paper_table();
    let kappa_m = hz(25e3);
    let t_end = 20e-6;
    let grid = Grid::spanning(0.0, t_end, 10e-9).unwrap();
    let sched = CouplingSchedule::off(grid);
    let noise = NoiseSpec { n_m: 36.0, kappa_m, thermal_drive: true, include_vacuum_input: false, seed: 11 };
    let input = Envelope::zeros(grid);
    let runs = 4000;
    let mean = (0..runs)
        .map(|run| {
            let opts = IntegratorOptions { run, ..Default::default() };
            integrate_reduced(&p, &sched, &input, &noise, &opts).unwrap().phonons_final
        })
        .sum::<f64>()
        / runs as f64;
    let expected = 36.5 * (1.0 - (-kappa_m * t_end).exp());
    // |c|² is exponentially distributed: standard error mean/√runs
    let se = expected / (runs as f64).sqrt();
    assert!((mean - expected).abs() < 4.0 * se, "{mean} vs {expected}");
}

/// Thermal motion of the free oscillator has a Lorentzian spectrum of full
/// width κ_m.
#[test]
fn thermal_spectrum_has_mechanical_linewidth() {
    let p = DeviceParams::paper_table();
    let kappa_m = hz(50e3);
    let dt = 0.25e-6;
    let grid = Grid::new(0.0, dt, 960).unwrap();
    let skip = 160;
    let sched = CouplingSchedule::off(grid);
    let noise = NoiseSpec { n_m: 10.0, kappa_m, thermal_drive: true, include_vacuum_input: false, seed: 3 };
    let input = Envelope::zeros(grid);
    let n = grid.n - skip;
    let df = 1.0 / (n as f64 * dt);
    let bins: Vec<i64> = (-20..=20).collect();
    let mut psd = vec![0.0; bins.len()];
    let runs = 300;
    for run in 0..runs {
        let opts = IntegratorOptions { run, ..Default::default() };
        let r = integrate_reduced(&p, &sched, &input, &noise, &opts).unwrap();
        let c: Vec<Complex64> = r.states[skip..].iter().map(|s| s.c).collect();
        for (s, &b) in psd.iter_mut().zip(&bins) {
            let f = b as f64 * df;
            let x: Complex64 = c
                .iter()
                .enumerate()
                .map(|(k, v)| v * Complex64::from_polar(1.0, -std::f64::consts::TAU * f * k as f64 * dt))
                .sum();
            *s += x.norm_sqr();
        }
    }
    // 1/S = a + b f² for a Lorentzian; half maximum at f = √(a/b)
    let pts: Vec<(f64, f64)> = bins.iter().zip(&psd).map(|(&b, s)| ((b as f64 * df).powi(2), 1.0 / s)).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let intercept = my - slope * mx;
    let fwhm = 2.0 * (intercept / slope).sqrt();
    assert!((fwhm / 50e3 - 1.0).abs() < 0.1, "FWHM {fwhm} Hz");
}

/// Excess quadrature variance of the converted signal predicted from the
/// protocol's own propagator: noise entering the mechanics at `s` reaches
/// the matched filter with weight `h(s) = Σ_{t_k ≥ s} w_k |P(t_k)|/|P(s)|`,
/// where `|P(t)| = exp(−½∫(Γ + κ_m))`, and adds `n_m κ_m ∫|h|² ds`.
#[test]
fn output_referred_noise_follows_exposure_weighting() {
    let p = DeviceParams::paper_table();
    let clean_spec = ProtocolSpec::paper_default(NoiseSpec::off()).unwrap();
    let clean = run_protocol(&clean_spec, &p).unwrap();
    let window = clean.release.a_out.clone();
    let eta = p.eta().unwrap();

    // Γ on the stitched grid
    let dt = clean_spec.capture_schedule.dt;
    let mut gammas = clean_spec.capture_schedule.gamma_series.clone();
    gammas.pop();
    let store = clean.store.as_ref().unwrap().states.len() - 1;
    gammas.extend(std::iter::repeat_n(0.0, store));
    let release_start = gammas.len();
    gammas.extend_from_slice(&clean_spec.release_schedule.gamma_series);

    let kappa_m = p.kappa_m;
    let mut log_p = vec![0.0; gammas.len()];
    for k in 1..gammas.len() {
        log_p[k] = log_p[k - 1] - 0.25 * dt * (gammas[k - 1] + gammas[k] + 2.0 * kappa_m);
    }
    let c_norm: f64 = window.values.iter().map(|f| f.norm_sqr()).sum();
    let clean_c: Vec<f64> = clean.release.states.iter().map(|s| s.c.norm()).collect();
    // suffix sums of w_k |P(t_k)|
    let mut suffix = vec![0.0; gammas.len() + 1];
    for k in (0..gammas.len()).rev() {
        let w = if k >= release_start {
            let j = k - release_start;
            eta * gammas[k] * clean_c[j] * log_p[k].exp()
        } else {
            0.0
        };
        suffix[k] = suffix[k + 1] + w;
    }
    let h2: Vec<f64> = (0..gammas.len())
        .map(|k| (dt / c_norm) * (suffix[k] / log_p[k].exp()).powi(2))
        .collect();
    let exposure = dt * (h2.iter().sum::<f64>() - 0.5 * (h2[0] + h2[h2.len() - 1]));
    let predicted = p.n_m * kappa_m * exposure;

    let spec = ProtocolSpec::paper_default(NoiseSpec::thermal(&p, 404).with_vacuum(true)).unwrap();
    let runs = 4000;
    let qs = monte_carlo_map(&spec, &p, runs, |_, r| envelope_quadratures(&r.release.a_out, &window).unwrap()).unwrap();
    let vac: Vec<_> = vacuum_ensemble(window.grid(), runs, 405)
        .iter()
        .map(|v| envelope_quadratures(v, &window).unwrap())
        .collect();
    let report = added_noise(&qs, &vac).unwrap();
    assert!(
        (report.added_noise - predicted).abs() < 4.0 * report.stderr + 0.02 * predicted,
        "measured {} ± {} vs predicted {predicted}",
        report.added_noise,
        report.stderr
    );
}

/// The converted ~10-quanta signal of a 90 MHz shift, 500 repetitions:
/// the excess over vacuum lies in the band around the decoherence floor.
#[test]
fn five_hundred_shot_excess_is_in_band() {
    let p = DeviceParams::paper_table();
    let design = ConversionDesign {
        input_energy: 10.0 / 0.81,
        carrier_out: hz(7.07825e9 + 90e6),
        ..Default::default()
    };
    let clean = run_protocol(&design.build(NoiseSpec::off(), ModelKind::Reduced).unwrap(), &p).unwrap();
    let window = clean.release.a_out.clone();
    let spec = design.build(NoiseSpec::thermal(&p, 7).with_vacuum(true), ModelKind::Reduced).unwrap();
    let qs = monte_carlo_map(&spec, &p, 500, |_, r| envelope_quadratures(&r.release.a_out, &window).unwrap()).unwrap();
    let vac: Vec<_> = vacuum_ensemble(window.grid(), 500, 8)
        .iter()
        .map(|v| envelope_quadratures(v, &window).unwrap())
        .collect();
    let report = added_noise(&qs, &vac).unwrap();
    let mean_quanta = qs.iter().map(|q| q.quanta()).sum::<f64>() / 500.0;
    assert!((mean_quanta / 10.0 - 1.0).abs() < 0.1, "signal {mean_quanta} quanta");
    assert!((0.3..=1.2).contains(&report.added_noise), "{report:?}");
}

fn constant_leg(n: usize, gamma: f64) -> CouplingSchedule {
    CouplingSchedule::constant(Grid::new(0.0, 1e-8, n).unwrap(), gamma).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reduced_model_is_linear_in_the_input(
        amps in prop::collection::vec(-1.0f64..1.0, 40),
        scale_re in -3.0f64..3.0,
        scale_im in -3.0f64..3.0,
        gamma in 1e5f64..3e6,
    ) {
        let p = DeviceParams::paper_table();
        let sched = constant_leg(40, gamma);
        let input = Envelope::new(0.0, 1e-8, amps.iter().map(|a| Complex64::new(*a * 1e3, 0.5 * a * 1e3)).collect());
        let s = Complex64::new(scale_re, scale_im);
        let opts = IntegratorOptions::default();
        let base = integrate_reduced(&p, &sched, &input, &NoiseSpec::off(), &opts).unwrap();
        let scaled = integrate_reduced(&p, &sched, &input.scaled(s), &NoiseSpec::off(), &opts).unwrap();
        for (a, b) in base.a_out.values.iter().zip(&scaled.a_out.values) {
            prop_assert!((a * s - b).norm() <= 1e-9 * (1.0 + b.norm()));
        }
        for (a, b) in base.states.iter().zip(&scaled.states) {
            prop_assert!((a.c * s - b.c).norm() <= 1e-12 * (1.0 + b.c.norm()));
        }
    }

    #[test]
    fn noiseless_legs_are_passive(
        gammas in prop::collection::vec(0.0f64..5e6, 2..60),
        amps in prop::collection::vec(-1.0f64..1.0, 60),
        kext in 0.5f64..1.0,
    ) {
        let mut p = DeviceParams::paper_table();
        p.kappa_ext = kext * p.kappa;
        let n = gammas.len();
        let sched = CouplingSchedule::new(0.0, 1e-8, gammas).unwrap();
        let input = Envelope::new(0.0, 1e-8, amps[..n].iter().map(|a| Complex64::new(*a * 1e3, 0.0)).collect());
        let r = integrate_reduced(&p, &sched, &input, &NoiseSpec::off(), &IntegratorOptions::default()).unwrap();
        prop_assert!(r.energy_out + r.phonons_final <= r.energy_in * (1.0 + 1e-6) + 1e-12);
    }

    /// Started from the state that the optimal coupling assumes, capture
    /// reflects nothing, and smooth ±5 % perturbations only add reflection.
    #[test]
    fn matched_optimal_capture_is_a_minimum(
        amp in 0.01f64..0.05,
        cycles in 0.5f64..4.0,
        phase in 0.0f64..6.0,
    ) {
        let p = lossless();
        let gamma = hz(24e3);
        let gamma0 = hz(500e3);
        let grid = Grid::spanning(0.0, 30e-6, 5e-9).unwrap();
        let input = Envelope::exponential(grid, gamma, 1.0);
        let optimal = exp_capture_schedule(gamma, gamma0, grid).unwrap();
        let c0 = -input.values[0] / gamma0.sqrt();
        let opts = IntegratorOptions::from_state(SystemState::with_phonons(c0));
        let base = integrate_reduced(&p, &optimal, &input, &NoiseSpec::off(), &opts).unwrap().energy_out;
        prop_assert!(base < 1e-12, "matched reflection {}", base);
        let perturbed: Vec<f64> = optimal
            .gamma_series
            .iter()
            .enumerate()
            .map(|(k, g)| g * (1.0 + amp * (std::f64::consts::TAU * cycles * k as f64 / grid.n as f64 + phase).sin()))
            .collect();
        let sched = CouplingSchedule::new(grid.t0, grid.dt, perturbed).unwrap();
        let refl = integrate_reduced(&p, &sched, &input, &NoiseSpec::off(), &opts).unwrap().energy_out;
        prop_assert!(refl > base);
    }
}
