//! Lab-frame waveform export and hardware-constraint reporting.
//!
//! The simulation never touches the carriers; this module reattaches them for
//! the instrument: `eps(t) = envelope_c(t) e^{-i omega_c t}` and likewise for
//! the qubit channel.

use crate::error::Error;
use crate::types::C64;
use crate::Result;

use super::{ChebyshevPulse, HardwareConfig};

/// One row of the exported waveform: time in ns, both channel amplitudes in
/// MHz with the carrier attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformSample {
    pub t_ns: f64,
    pub eps: C64,
    pub omega: C64,
}

/// Samples both lab-frame channels on a uniform grid of `samples_per_ns`
/// points per nanosecond, `t_j = j / samples_per_ns` up to and excluding `T`.
///
/// The rate must resolve the fastest carrier: at least `ceil(2 f_max)`
/// samples per ns with `f_max` in GHz. Export-only; the simulation never runs
/// at this rate.
pub fn lab_frame_export(
    pulse: &ChebyshevPulse,
    hw: &HardwareConfig,
    samples_per_ns: usize,
) -> Result<Vec<WaveformSample>> {
    hw.validate()?;
    let f_max = hw.omega_c_ghz.max(hw.omega_q_ghz);
    let needed = (2.0 * f_max).ceil() as usize;
    if samples_per_ns < needed {
        return Err(Error::UnderSampled {
            needed,
            got: samples_per_ns,
        });
    }
    let t_ns_total = pulse.duration_us() * 1000.0;
    let n = (t_ns_total * samples_per_ns as f64).round() as usize;
    let mut rows = Vec::with_capacity(n);
    for j in 0..n {
        let t_ns = j as f64 / samples_per_ns as f64;
        let t_us = t_ns / 1000.0;
        let (env_c, env_q) = pulse.envelopes_unchecked(t_us);
        rows.push(WaveformSample {
            t_ns,
            eps: env_c * C64::from_polar(1.0, -hw.omega_c_ang() * t_us),
            omega: env_q * C64::from_polar(1.0, -hw.omega_q_ang() * t_us),
        });
    }
    Ok(rows)
}

/// Steepest envelope change in MHz per ns: the maximum of
/// `|env(t + dt) - env(t)| / dt` over both channels and all adjacent samples
/// on the `dt_ns` grid (endpoint included).
pub fn max_slope(pulse: &ChebyshevPulse, dt_ns: f64) -> Result<f64> {
    if !(dt_ns > 0.0) {
        return Err(Error::NotPositive {
            what: "slope sample length",
            value: dt_ns,
        });
    }
    let t_ns_total = pulse.duration_us() * 1000.0;
    let mut grid: Vec<f64> = Vec::new();
    let mut t = 0.0;
    while t < t_ns_total - 1e-9 {
        grid.push(t);
        t += dt_ns;
    }
    grid.push(t_ns_total);
    let mut worst = 0.0f64;
    let mut prev: Option<(f64, C64, C64)> = None;
    for &t_ns in &grid {
        let (c, q) = pulse.envelopes_unchecked(t_ns / 1000.0);
        if let Some((t0, c0, q0)) = prev {
            let dt = t_ns - t0;
            worst = worst.max((c - c0).norm() / dt).max((q - q0).norm() / dt);
        }
        prev = Some((t_ns, c, q));
    }
    Ok(worst)
}

/// Writes the waveform table as CSV with 12 significant digits per value.
pub fn write_waveform_csv(rows: &[WaveformSample], out: &mut dyn std::io::Write) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Invalid(e.to_string());
    writeln!(out, "t_ns,eps_re,eps_im,omega_re,omega_im").map_err(io_err)?;
    for r in rows {
        writeln!(
            out,
            "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}",
            r.t_ns, r.eps.re, r.eps.im, r.omega.re, r.omega.im
        )
        .map_err(io_err)?;
    }
    Ok(())
}
