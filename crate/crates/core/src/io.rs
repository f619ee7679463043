//! CSV import/export. Floats are written with Rust's shortest round-trip
//! formatting, so every value reads back bit-exact.

use std::io::{BufRead, Write};

use crate::consts::TAU;
use crate::dynamics::ProtocolResult;
use crate::envelope::Envelope;
use crate::receiver::QuadraturePair;
use crate::tf::{Marginals, VoltageTrace, WignerVilleMap};
use crate::tuning::TuningPoint;
use crate::{Error, Result};

/// `t, re, im, power`.
pub fn write_envelope<W: Write>(mut w: W, env: &Envelope) -> Result<()> {
    writeln!(w, "t,re,im,power")?;
    for (k, v) in env.values.iter().enumerate() {
        writeln!(w, "{},{},{},{}", env.time(k), v.re, v.im, v.norm_sqr())?;
    }
    Ok(())
}

/// Per-sample protocol trajectory: `t, gamma, a_re, a_im, c_re, c_im,
/// phonons, a_out_re, a_out_im, carrier_hz`. In the reduced model `a` is
/// the adiabatically eliminated circuit field.
pub fn write_trajectory<W: Write>(mut w: W, result: &ProtocolResult, gammas: &[f64]) -> Result<()> {
    writeln!(w, "t,gamma,a_re,a_im,c_re,c_im,phonons,a_out_re,a_out_im,carrier_hz")?;
    let mut states = Vec::with_capacity(result.output.len());
    states.extend_from_slice(&result.capture.states[..result.capture.states.len() - 1]);
    if let Some(s) = &result.store {
        states.extend_from_slice(&s.states[..s.states.len() - 1]);
    }
    states.extend_from_slice(&result.release.states);
    for (k, (s, a)) in states.iter().zip(&result.output.values).enumerate() {
        let g = gammas.get(k).copied().unwrap_or(0.0);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            s.t,
            g,
            s.a.re,
            s.a.im,
            s.c.re,
            s.c.im,
            s.c.norm_sqr(),
            a.re,
            a.im,
            result.carrier_at(k) / TAU
        )?;
    }
    Ok(())
}

/// `t, v`.
pub fn write_voltage<W: Write>(mut w: W, trace: &VoltageTrace) -> Result<()> {
    writeln!(w, "t,v")?;
    for (k, v) in trace.samples.iter().enumerate() {
        writeln!(w, "{},{}", trace.time(k), v)?;
    }
    Ok(())
}

/// `run, X1, X2`.
pub fn write_quadratures<W: Write>(mut w: W, ensemble: &[QuadraturePair]) -> Result<()> {
    writeln!(w, "run,X1,X2")?;
    for (k, q) in ensemble.iter().enumerate() {
        writeln!(w, "{},{},{}", k, q.x1, q.x2)?;
    }
    Ok(())
}

/// Long format `t, f, W`, with `f` on the absolute axis when an LO is
/// recorded.
pub fn write_wigner<W: Write>(mut w: W, map: &WignerVilleMap) -> Result<()> {
    writeln!(w, "t,f,W")?;
    let f_axis = map.absolute_f_axis();
    for (n, t) in map.t_axis.iter().enumerate() {
        for (f, v) in f_axis.iter().zip(map.row(n)) {
            writeln!(w, "{t},{f},{v}")?;
        }
    }
    Ok(())
}

/// Two files' worth of content: `(t, eps_t)` and `(f, eps_f)`.
pub fn write_marginals<W: Write, V: Write>(mut wt: W, mut wf: V, m: &Marginals, lo_hz: Option<f64>) -> Result<()> {
    writeln!(wt, "t,eps_t")?;
    for (t, e) in m.t_axis.iter().zip(&m.temporal) {
        writeln!(wt, "{t},{e}")?;
    }
    writeln!(wf, "f,eps_f")?;
    let lo = lo_hz.unwrap_or(0.0);
    for (f, e) in m.f_axis.iter().zip(&m.spectral) {
        writeln!(wf, "{},{}", f + lo, e)?;
    }
    Ok(())
}

/// `V, x_star, omega_e_hz, omega_m_hz, pulled_in`.
pub fn write_tuning<W: Write>(mut w: W, points: &[TuningPoint]) -> Result<()> {
    writeln!(w, "V,x_star,omega_e_hz,omega_m_hz,pulled_in")?;
    for p in points {
        writeln!(w, "{},{},{},{},{}", p.voltage, p.x_star, p.omega_e / TAU, p.omega_m / TAU, p.pulled_in)?;
    }
    Ok(())
}

/// `T_L, S_out`.
pub fn write_calibration<W: Write>(mut w: W, data: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "T_L,S_out")?;
    for (t, s) in data {
        writeln!(w, "{t},{s}")?;
    }
    Ok(())
}

/// Reads `T_L, S_out` rows; a non-numeric first line is taken as a header.
pub fn read_calibration<R: BufRead>(r: R) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let parsed = match (cols.next(), cols.next()) {
            (Some(a), Some(b)) => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some(p) => out.push(p),
            None if i == 0 => continue,
            None => return Err(Error::InvalidArgument(format!("calibration line {}: cannot parse {line:?}", i + 1))),
        }
    }
    Ok(out)
}

/// Reads `t, re, im[, ...]` rows into an envelope; the step is taken from
/// the first two rows and must be uniform.
pub fn read_envelope<R: BufRead>(r: R) -> Result<Envelope> {
    let mut t = Vec::new();
    let mut v = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let nums: Option<Vec<f64>> = cols.iter().take(3).map(|c| c.parse().ok()).collect();
        match nums {
            Some(n) if n.len() == 3 => {
                t.push(n[0]);
                v.push(num_complex::Complex64::new(n[1], n[2]));
            }
            _ if i == 0 => continue,
            _ => return Err(Error::InvalidArgument(format!("envelope line {}: cannot parse {line:?}", i + 1))),
        }
    }
    if v.len() < 2 {
        return Err(Error::DegenerateInput(format!("envelope needs ≥ 2 samples, got {}", v.len())));
    }
    let dt = t[1] - t[0];
    if !(dt > 0.0) || t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
        return Err(Error::MisalignedGrid("envelope samples are not uniformly spaced".into()));
    }
    Ok(Envelope::new(t[0], dt, v))
}
