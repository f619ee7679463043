use mode_converter::consts::{hz, HBAR, K_B};
use mode_converter::receiver::{
    envelope_quadratures, fit_calibration, fit_thermometry, load_spectral_density, quadratures, receiver_output,
    sideband_ratio, thermal_occupation, QuadraturePair, Window,
};
use mode_converter::tf::{synthesize_voltage, VoltageTrace};
use mode_converter::{DeviceParams, Envelope, ReceiverCal};
use num_complex::Complex64;
use proptest::prelude::*;

const IF: f64 = 2e6;
const FS: f64 = 20e6;

/// 200 samples at the trace rate: exactly 20 IF periods.
fn constant_envelope(v: Complex64) -> Envelope {
    Envelope::new(0.0, 1.0 / FS, vec![v; 200])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn voltage_quadratures_match_envelope(re in -3.0f64..3.0, im in -3.0f64..3.0, gain in 0.5f64..20.0, zeta in 0.05f64..1.0) {
        let env = constant_envelope(Complex64::new(re, im));
        let cal = ReceiverCal::new(gain, zeta, hz(7e9)).unwrap();
        let trace = synthesize_voltage(&env, hz(IF), FS, Some(&cal)).unwrap();
        prop_assert_eq!(trace.len(), 200);
        let q = quadratures(&trace, hz(IF), &Window::Rect, &cal).unwrap();
        // (Re α, −Im α) with α = v √T
        let root_t = (200.0 / FS).sqrt();
        prop_assert!((q.x1 - re * root_t).abs() < 1e-12 * (1.0 + re.abs()) * root_t);
        prop_assert!((q.x2 + im * root_t).abs() < 1e-12 * (1.0 + im.abs()) * root_t);
        let e = envelope_quadratures(&env, &constant_envelope(Complex64::new(1.0, 0.0))).unwrap();
        prop_assert!((e.x1 - q.x1).abs() < 1e-10 && (e.x2 - q.x2).abs() < 1e-10);
    }

    #[test]
    fn quadratures_are_linear(
        a in prop::collection::vec(-1.0f64..1.0, 64),
        b in prop::collection::vec(-1.0f64..1.0, 64),
        s in -5.0f64..5.0,
    ) {
        let cal = ReceiverCal::jpa_first();
        let w = hz(IF);
        let q = |y: Vec<f64>| quadratures(&VoltageTrace::new(1.0 / FS, y).unwrap(), w, &Window::Rect, &cal).unwrap();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + s * y).collect();
        let (qa, qb, qs) = (q(a), q(b), q(sum));
        prop_assert!((qs.x1 - qa.x1 - s * qb.x1).abs() < 1e-12 * (1.0 + s.abs()));
        prop_assert!((qs.x2 - qa.x2 - s * qb.x2).abs() < 1e-12 * (1.0 + s.abs()));
    }

    /// Multiplying the envelope by `e^{iφ}` rotates `α`; with the
    /// `(Re α, −Im α)` convention the pair turns by `−φ`.
    #[test]
    fn envelope_phase_rotates_quadratures(re in -2.0f64..2.0, im in -2.0f64..2.0, phi in -3.1f64..3.1) {
        let window = constant_envelope(Complex64::new(1.0, 0.0));
        let v = Complex64::new(re, im);
        let base = envelope_quadratures(&constant_envelope(v), &window).unwrap();
        let turned = envelope_quadratures(&constant_envelope(v * Complex64::from_polar(1.0, phi)), &window).unwrap();
        let alpha = v * Complex64::from_polar(1.0, phi) * (200.0 / FS).sqrt();
        prop_assert!((turned.x1 - alpha.re).abs() < 1e-12 && (turned.x2 + alpha.im).abs() < 1e-12);
        let r = base.rotated(-phi);
        prop_assert!((r.x1 - turned.x1).abs() < 1e-12 && (r.x2 - turned.x2).abs() < 1e-12);
        prop_assert!((turned.quanta() - base.quanta()).abs() < 1e-12 * (1.0 + base.quanta()));
    }

    #[test]
    fn output_grows_with_load_temperature(t1 in 0.0f64..2.0, dt in 1e-4f64..1.0, gain in 0.1f64..50.0, zeta in 0.01f64..1.0) {
        let cal = ReceiverCal::new(gain, zeta, hz(7.3e9)).unwrap();
        let w = cal.frequency;
        let lo = receiver_output(load_spectral_density(t1, w), &cal);
        let hi = receiver_output(load_spectral_density(t1 + dt, w), &cal);
        prop_assert!(hi >= lo);
        prop_assert!(lo >= gain / 2.0 * (1.0 - 1e-12));
    }

    #[test]
    fn noiseless_calibration_is_recovered(gain in 0.5f64..50.0, zeta in 0.05f64..0.99) {
        let w = hz(7.34135e9);
        let cal = ReceiverCal::new(gain, zeta, w).unwrap();
        let data: Vec<(f64, f64)> = (0..15)
            .map(|k| {
                let t = 0.02 + 0.07 * k as f64;
                (t, receiver_output(load_spectral_density(t, w), &cal))
            })
            .collect();
        let fit = fit_calibration(&data, w).unwrap();
        prop_assert!((fit.cal.gain / gain - 1.0).abs() < 1e-10);
        prop_assert!((fit.cal.efficiency - zeta).abs() < 1e-10);
    }
}

#[test]
fn load_density_matches_coth() {
    let w = hz(7.08e9);
    for t in [0.01, 0.05, 0.3, 1.0, 4.0] {
        let x = HBAR * w / (2.0 * K_B * t);
        let coth = (x.exp() + (-x).exp()) / (x.exp() - (-x).exp());
        assert!((load_spectral_density(t, w) - 0.5 * coth).abs() < 1e-12);
    }
}

#[test]
fn sideband_ratio_matches_lorentzian_product() {
    let p = DeviceParams::paper_table();
    for (n, delta) in [(10.0, -p.omega_m), (3.0, -p.omega_m + hz(1e5)), (40.0, -0.8 * p.omega_m)] {
        let (k, ke) = (p.kappa, p.kappa_ext);
        let expected = p.g0 * p.g0 * n * ke * ke
            / ((delta * delta + (ke - k / 2.0).powi(2)) * ((delta + p.omega_m).powi(2) + (k / 2.0).powi(2)));
        let got = sideband_ratio(&p, n, delta);
        assert!((got / expected - 1.0).abs() < 1e-12, "{got} vs {expected}");
    }
    // doubling the phonon number doubles the sideband
    let r = sideband_ratio(&p, 2.0, -p.omega_m) / sideband_ratio(&p, 1.0, -p.omega_m);
    assert!((r - 2.0).abs() < 1e-12);
}

#[test]
fn thermometry_recovers_vacuum_coupling() {
    let p = DeviceParams::paper_table();
    let delta = -p.omega_m;
    // a few percent of scatter and a constant background
    let scatter = [1.02, 0.985, 1.01, 0.99, 1.0, 1.015, 0.98, 1.005];
    let background = 0.05 * sideband_ratio(&p, thermal_occupation(0.05, p.omega_m), delta);
    let data: Vec<(f64, f64)> = scatter
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let t = 0.05 + 0.025 * k as f64;
            (t, s * sideband_ratio(&p, thermal_occupation(t, p.omega_m), delta) + background)
        })
        .collect();
    let g0 = fit_thermometry(&p, &data, delta).unwrap();
    assert!((g0 / p.g0 - 1.0).abs() < 0.02, "g0 {} Hz vs {} Hz", g0 / hz(1.0), p.g0 / hz(1.0));
}

#[test]
fn thermal_occupation_is_classical() {
    let w = hz(3.3e6);
    let n = thermal_occupation(0.1, w);
    assert!((n * HBAR * w / (K_B * 0.1) - 1.0).abs() < 1e-12);
    assert!((n - 631.6).abs() < 1.0);
}

#[test]
fn quadrature_pair_rotation_keeps_norm() {
    let q = QuadraturePair::new(0.3, -1.2);
    let r = q.rotated(std::f64::consts::FRAC_PI_2);
    assert!((r.x1 - 1.2).abs() < 1e-15 && (r.x2 - 0.3).abs() < 1e-15);
}
