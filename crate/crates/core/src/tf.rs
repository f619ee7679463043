//! Voltage synthesis, analytic signal and the discrete Wigner-Ville
//! distribution.
//!
//! Discrete WVD convention: the kernel `v(n+m) v*(n−m)` advances the lag in
//! steps of `2·dt`, so an `M`-point transform over `m` resolves frequencies
//! `f_k = k / (2 M dt)`, `k = 0..M`, covering `[0, f_s/2)`. The transform
//! uses `e^{−2πi f τ}`, which places a tone `e^{+2πi f₀ t}` at `+f₀`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::consts::TAU;
use crate::envelope::Envelope;
use crate::{Error, ReceiverCal, Result};

/// Default intermediate frequency after the down-converting mixer, Hz.
pub const DEFAULT_IF_HZ: f64 = 2e6;
/// Default digitizer rate, samples/s.
pub const DEFAULT_SAMPLE_RATE: f64 = 20e6;

/// Real digitized voltage, µV, uniformly sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageTrace {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
    /// Local-oscillator frequency removed before digitizing, Hz.
    #[serde(default)]
    pub lo_hz: Option<f64>,
}

impl VoltageTrace {
    pub fn new(dt: f64, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::DegenerateInput(format!("trace needs ≥ 2 samples, got {}", samples.len())));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("sample step must be > 0, got {dt}")));
        }
        Ok(Self { t0: 0.0, dt, samples, lo_hz: None })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Adds `noise` sample by sample.
    pub fn add(&mut self, noise: &[f64]) {
        for (s, n) in self.samples.iter_mut().zip(noise) {
            *s += n;
        }
    }
}

/// Complex (analytic) trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexTrace {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<Complex64>,
    #[serde(default)]
    pub lo_hz: Option<f64>,
}

impl ComplexTrace {
    pub fn new(t0: f64, dt: f64, values: Vec<Complex64>) -> Self {
        Self { t0, dt, values, lo_hz: None }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ |v|² dt`.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dt
    }
}

impl From<&Envelope> for ComplexTrace {
    fn from(env: &Envelope) -> Self {
        Self::new(env.t0, env.dt, env.values.clone())
    }
}

/// `V_k = s · Re[v(t0 + k dt) e^{i ω_IF k dt}]` on a grid of `sample_rate`
/// spanning the envelope. `s = √(2ζ𝒢)` when `cal` is given, else 1.
/// When the envelope carries a carrier, the LO is recorded as
/// `carrier − ω_IF`.
pub fn synthesize_voltage(
    env: &Envelope,
    omega_if: f64,
    sample_rate: f64,
    cal: Option<&ReceiverCal>,
) -> Result<VoltageTrace> {
    if !(sample_rate > omega_if / std::f64::consts::PI) {
        return Err(Error::Nyquist { sample_rate, carrier_hz: omega_if / TAU });
    }
    if env.len() < 2 {
        return Err(Error::DegenerateInput(format!("envelope needs ≥ 2 samples, got {}", env.len())));
    }
    let scale = match cal {
        Some(c) => {
            c.check()?;
            c.voltage_scale()
        }
        None => 1.0,
    };
    let dt = 1.0 / sample_rate;
    let duration = env.grid().duration();
    let n = ((duration / dt) * (1.0 + 1e-12)).floor() as usize + 1;
    let samples = (0..n)
        .map(|k| {
            let tk = k as f64 * dt;
            let v = env.sample(env.t0 + tk);
            scale * (v * Complex64::from_polar(1.0, omega_if * tk)).re
        })
        .collect();
    Ok(VoltageTrace {
        t0: env.t0,
        dt,
        samples,
        lo_hz: env.carrier.map(|c| (c - omega_if) / TAU),
    })
}

/// `v = V + i ℋ(V)` by the frequency-domain method: negative-frequency bins
/// zeroed, positive bins doubled, DC and Nyquist kept.
pub fn analytic_signal(trace: &VoltageTrace) -> Result<ComplexTrace> {
    let n = trace.len();
    if n < 2 {
        return Err(Error::DegenerateInput(format!("trace needs ≥ 2 samples, got {n}")));
    }
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = trace.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let last_doubled = if n.is_multiple_of(2) { half - 1 } else { half };
    for (k, b) in buf.iter_mut().enumerate().skip(1) {
        if k <= last_doubled {
            *b *= 2.0;
        } else if !(n.is_multiple_of(2) && k == half) {
            *b = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let inv = 1.0 / n as f64;
    Ok(ComplexTrace {
        t0: trace.t0,
        dt: trace.dt,
        values: buf.into_iter().map(|b| b * inv).collect(),
        lo_hz: trace.lo_hz,
    })
}

/// Discrete Wigner-Ville distribution on `n_t × n_f` points, row-major in
/// time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerVilleMap {
    pub t_axis: Vec<f64>,
    /// Frequencies relative to the trace's reference (IF or baseband), Hz.
    pub f_axis: Vec<f64>,
    pub values: Vec<f64>,
    pub dt: f64,
    pub df: f64,
    #[serde(default)]
    pub lo_hz: Option<f64>,
}

impl WignerVilleMap {
    pub fn n_t(&self) -> usize {
        self.t_axis.len()
    }

    pub fn n_f(&self) -> usize {
        self.f_axis.len()
    }

    #[inline]
    pub fn at(&self, n: usize, k: usize) -> f64 {
        self.values[n * self.n_f() + k]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let nf = self.n_f();
        &self.values[n * nf..(n + 1) * nf]
    }

    /// `f_axis` shifted by the LO, when one is recorded.
    pub fn absolute_f_axis(&self) -> Vec<f64> {
        let lo = self.lo_hz.unwrap_or(0.0);
        self.f_axis.iter().map(|f| f + lo).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Σ W dt df`.
    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dt * self.df
    }
}

/// WVD with one transform per sample, `M = N`.
pub fn wigner_ville(v: &ComplexTrace) -> Result<WignerVilleMap> {
    wigner_ville_strided(v, 1)
}

/// WVD evaluated on every `stride`-th time sample. Each row is exact; only
/// the time axis is thinned.
pub fn wigner_ville_strided(v: &ComplexTrace, stride: usize) -> Result<WignerVilleMap> {
    let n = v.len();
    if n < 2 {
        return Err(Error::DegenerateInput(format!("trace needs ≥ 2 samples, got {n}")));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be ≥ 1".into()));
    }
    let m = n;
    let dt = v.dt;
    let df = 1.0 / (2.0 * m as f64 * dt);
    let rows: Vec<usize> = (0..n).step_by(stride).collect();
    let fft = FftPlanner::new().plan_fft_forward(m);
    let zero = Complex64::new(0.0, 0.0);
    let x = &v.values;

    let mut values = vec![0.0; rows.len() * m];
    values.par_chunks_mut(m).zip(rows.par_iter()).for_each(|(out, &row)| {
        let lag = row.min(n - 1 - row);
        let mut buf = vec![zero; m];
        buf[0] = x[row] * x[row].conj();
        for l in 1..=lag {
            let kern = x[row + l] * x[row - l].conj();
            buf[l] = kern;
            buf[m - l] = kern.conj();
        }
        fft.process(&mut buf);
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = 2.0 * dt * b.re;
        }
    });

    Ok(WignerVilleMap {
        t_axis: rows.iter().map(|&r| v.t0 + r as f64 * dt).collect(),
        f_axis: (0..m).map(|k| k as f64 * df).collect(),
        values,
        dt: dt * stride as f64,
        df,
        lo_hz: v.lo_hz,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginals {
    pub t_axis: Vec<f64>,
    /// `Σ_f W df`, equal to `|v(t)|²` sample by sample.
    pub temporal: Vec<f64>,
    pub f_axis: Vec<f64>,
    /// `Σ_t W dt`. For a full-resolution map this is
    /// `dt² (|V(f)|² + |V(f + f_s/2)|²)` with `V` the DTFT of the samples;
    /// the second term vanishes for analytic, band-limited signals.
    pub spectral: Vec<f64>,
    pub normalization: Option<f64>,
}

/// Marginals of `w`, divided by `e_sig` when given.
pub fn marginals(w: &WignerVilleMap, e_sig: Option<f64>) -> Result<Marginals> {
    let scale = match e_sig {
        Some(e) if !(e > 0.0) || !e.is_finite() => {
            return Err(Error::DegenerateInput(format!("normalization energy must be > 0, got {e}")))
        }
        Some(e) => 1.0 / e,
        None => 1.0,
    };
    let nf = w.n_f();
    let temporal = (0..w.n_t()).map(|n| w.row(n).iter().sum::<f64>() * w.df * scale).collect();
    let mut spectral = vec![0.0; nf];
    for n in 0..w.n_t() {
        for (s, x) in spectral.iter_mut().zip(w.row(n)) {
            *s += x;
        }
    }
    for s in &mut spectral {
        *s *= w.dt * scale;
    }
    Ok(Marginals {
        t_axis: w.t_axis.clone(),
        temporal,
        f_axis: w.f_axis.clone(),
        spectral,
        normalization: e_sig,
    })
}

/// Least-squares fit of `A exp(−(t−μ)²/(2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub amplitude: f64,
    pub center: f64,
    pub sigma: f64,
    /// Coefficient of determination over the fitted samples.
    pub r_squared: f64,
}

impl GaussianFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (-(t - self.center).powi(2) / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Damped Gauss–Newton fit of a Gaussian to `(t, y)`, started from the
/// moments of `y`.
pub fn fit_gaussian(t: &[f64], y: &[f64]) -> Result<GaussianFit> {
    if t.len() != y.len() || t.len() < 4 {
        return Err(Error::InvalidArgument("need ≥ 4 matching samples for a Gaussian fit".into()));
    }
    let w: f64 = y.iter().sum();
    if !(w > 0.0) {
        return Err(Error::DegenerateInput("fit data has no positive mass".into()));
    }
    let mu0 = t.iter().zip(y).map(|(t, y)| t * y).sum::<f64>() / w;
    let var0 = t.iter().zip(y).map(|(t, y)| (t - mu0).powi(2) * y).sum::<f64>() / w;
    let amp0 = y.iter().copied().fold(f64::MIN, f64::max);
    let scale = var0.sqrt().max(f64::MIN_POSITIVE);
    let mut p = [amp0, mu0, scale];
    let sse = |p: &[f64; 3]| -> f64 {
        t.iter()
            .zip(y)
            .map(|(&t, &y)| {
                let z = (t - p[1]) / p[2];
                (y - p[0] * (-0.5 * z * z).exp()).powi(2)
            })
            .sum()
    };
    let mut cost = sse(&p);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let mut a = [[0.0; 3]; 3];
        let mut b = [0.0; 3];
        for (&ti, &yi) in t.iter().zip(y) {
            let z = (ti - p[1]) / p[2];
            let e = (-0.5 * z * z).exp();
            let r = yi - p[0] * e;
            let j = [e, p[0] * e * z / p[2], p[0] * e * z * z / p[2]];
            for r_ in 0..3 {
                b[r_] += j[r_] * r;
                for c in 0..3 {
                    a[r_][c] += j[r_] * j[c];
                }
            }
        }
        let mut improved = false;
        for _ in 0..20 {
            let mut m = a;
            for (d, row) in m.iter_mut().enumerate() {
                row[d] *= 1.0 + lambda;
            }
            let Some(step) = solve3(m, b) else { break };
            let trial = [p[0] + step[0], p[1] + step[1], (p[2] + step[2]).abs()];
            let c = sse(&trial);
            if c <= cost {
                let done = (cost - c) <= 1e-15 * cost;
                p = trial;
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = !done;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    Ok(GaussianFit { amplitude: p[0], center: p[1], sigma: p[2], r_squared: 1.0 - cost / sst })
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if !(d.abs() > 0.0) || !d.is_finite() {
        return None;
    }
    let mut x = [0.0; 3];
    for (i, xi) in x.iter_mut().enumerate() {
        let mut mi = m;
        for r in 0..3 {
            mi[r][i] = b[r];
        }
        *xi = det(&mi) / d;
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_envelope_gives_zero_trace() {
        let env = Envelope::zeros(crate::Grid::new(0.0, 1e-8, 500).unwrap());
        let tr = synthesize_voltage(&env, TAU * DEFAULT_IF_HZ, DEFAULT_SAMPLE_RATE, None).unwrap();
        assert!(tr.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn nyquist_is_enforced() {
        let env = Envelope::zeros(crate::Grid::new(0.0, 1e-8, 500).unwrap());
        let err = synthesize_voltage(&env, TAU * 11e6, 20e6, None);
        assert!(matches!(err, Err(Error::Nyquist { .. })));
    }

    #[test]
    fn constant_envelope_is_a_scaled_cosine() {
        let env = Envelope::new(0.0, 1e-8, vec![Complex64::new(3.0, 0.0); 1001]);
        let cal = ReceiverCal::jpa_first();
        let w = TAU * DEFAULT_IF_HZ;
        let tr = synthesize_voltage(&env, w, DEFAULT_SAMPLE_RATE, Some(&cal)).unwrap();
        for (k, s) in tr.samples.iter().enumerate() {
            let expected = 3.0 * cal.voltage_scale() * (w * k as f64 * tr.dt).cos();
            assert!((s - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_becomes_complex_exponential() {
        let n = 1000;
        let dt = 1e-3;
        let f0 = 50.0;
        let v: Vec<f64> = (0..n).map(|k| (TAU * f0 * k as f64 * dt).cos()).collect();
        let a = analytic_signal(&VoltageTrace::new(dt, v.clone()).unwrap()).unwrap();
        for (k, z) in a.values.iter().enumerate() {
            let e = Complex64::from_polar(1.0, TAU * f0 * k as f64 * dt);
            assert!((z - e).norm() < 1e-10);
            assert!((z.re - v[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn tone_sits_on_its_line() {
        let n = 256;
        let dt = 1e-3;
        let k0 = 40; // f0 = k0 df
        let df = 1.0 / (2.0 * n as f64 * dt);
        let f0 = k0 as f64 * df;
        let values = (0..n).map(|k| Complex64::from_polar(1.0, TAU * f0 * k as f64 * dt)).collect();
        let w = wigner_ville(&ComplexTrace::new(0.0, dt, values)).unwrap();
        let row = w.row(n / 2);
        let peak = row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(peak, k0);
        let m = marginals(&w, None).unwrap();
        assert!(m.temporal.iter().all(|x| (x - 1.0).abs() < 1e-10));
    }

    #[test]
    fn gaussian_fit_recovers_parameters() {
        let t: Vec<f64> = (0..400).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.5 * (-(t - 17.0f64).powi(2) / (2.0 * 4.0 * 4.0)).exp()).collect();
        let f = fit_gaussian(&t, &y).unwrap();
        assert!((f.amplitude - 2.5).abs() < 1e-9 && (f.center - 17.0).abs() < 1e-9 && (f.sigma - 4.0).abs() < 1e-9);
        assert!(f.r_squared > 1.0 - 1e-12);
    }
}
