//! Interaction-picture time evolution under the driven dispersive model.
//!
//! Sign table for the joint space `qubit (x) cavity`, ordering `(g, e)`:
//!
//! ```text
//!   sigma_z |g> = -|g>        sigma_z |e> = +|e>
//!   H_disp = chi n sigma_z    =>  <g,n|H|g,n> = -chi n,  <e,n|H|e,n> = +chi n
//!   H_0    = omega_c n + (omega_q / 2) sigma_z
//! ```
//!
//! `chi` here is angular (rad/us); envelopes enter in MHz and pick up `2 pi`
//! inside the builders. The drive carriers at `omega_c` and `omega_q` are
//! removed exactly by the frame transformation `V = U_0(t)^dag U_lab`: the
//! dispersive term commutes with `H_0`, and the carrier phase on each drive
//! cancels against the rotation of `a^dag` and `sigma_+`, so the co-rotating
//! model is the lab model with the carriers deleted, with no rotating-wave
//! step involved.

use crate::cost::FidelityReport;
use crate::ecd::joint_pad_target;
use crate::error::Error;
use crate::expm::expm;
use crate::factored::{full_overlap, overlap_to_infidelity};
use crate::fock::{FockSpace, JointSpace};
use crate::operators::project_joint;
use crate::types::{identity, max_abs_diff, C64, CMat, CVec};
use crate::Result;

use super::{ChebyshevPulse, EvolutionConfig, Frame, HardwareConfig};

use std::f64::consts::TAU;

/// Writes `chi n sigma_z + 2 pi (eps a^dag + h.c.) + 2 pi (omega sigma_+ + h.c.)`
/// over `h`, envelopes in MHz, `chi_ang` in rad/us.
fn fill_interaction(h: &mut CMat, eps_mhz: C64, omega_mhz: C64, chi_ang: f64, nn: usize) {
    h.fill(C64::new(0.0, 0.0));
    let eps = eps_mhz * TAU;
    let om = omega_mhz * TAU;
    for (q, sign) in [(0usize, -1.0), (1, 1.0)] {
        let base = q * nn;
        for n in 0..nn {
            h[(base + n, base + n)] = C64::new(chi_ang * sign * n as f64, 0.0);
        }
        for n in 0..nn - 1 {
            let root = ((n + 1) as f64).sqrt();
            h[(base + n + 1, base + n)] = eps * root;
            h[(base + n, base + n + 1)] = eps.conj() * root;
        }
    }
    for n in 0..nn {
        h[(nn + n, n)] = om;
        h[(n, nn + n)] = om.conj();
    }
}

/// Co-rotating Hamiltonian at time `t`, in rad/us on the joint space.
///
/// The carriers are already removed: what remains is the dispersive shift
/// plus the slow envelopes coupling to `a^dag` and `sigma_+`.
pub fn interaction_hamiltonian(
    pulse: &ChebyshevPulse,
    t_us: f64,
    hw: &HardwareConfig,
    space: FockSpace,
) -> Result<CMat> {
    let eps = pulse.envelope_c(t_us)?;
    let om = pulse.envelope_q(t_us)?;
    let nn = space.n_levels();
    let mut h = CMat::zeros((2 * nn, 2 * nn));
    fill_interaction(&mut h, eps, om, hw.chi_ang(), nn);
    Ok(h)
}

/// Full lab-frame Hamiltonian at time `t`: the free part plus the dispersive
/// shift plus carrier-modulated drives. Only used to check the frame
/// transformation at desk scale; production evolution never integrates the
/// carriers.
pub fn lab_hamiltonian(
    pulse: &ChebyshevPulse,
    t_us: f64,
    hw: &HardwareConfig,
    space: FockSpace,
) -> Result<CMat> {
    let eps = pulse.envelope_c(t_us)? * C64::from_polar(1.0, -hw.omega_c_ang() * t_us);
    let om = pulse.envelope_q(t_us)? * C64::from_polar(1.0, -hw.omega_q_ang() * t_us);
    let nn = space.n_levels();
    let mut h = CMat::zeros((2 * nn, 2 * nn));
    fill_interaction(&mut h, eps, om, hw.chi_ang(), nn);
    for (q, sign) in [(0usize, -1.0), (1, 1.0)] {
        for n in 0..nn {
            let i = q * nn + n;
            h[(i, i)] += C64::new(
                hw.omega_c_ang() * n as f64 + sign * hw.omega_q_ang() / 2.0,
                0.0,
            );
        }
    }
    Ok(h)
}

/// Free propagator `U_0(t) = exp(-i (omega_c n + omega_q sigma_z / 2) t)`,
/// diagonal in the joint basis.
pub fn free_evolution(t_us: f64, hw: &HardwareConfig, space: FockSpace) -> CMat {
    let nn = space.n_levels();
    let mut u = CMat::zeros((2 * nn, 2 * nn));
    for (q, sign) in [(0usize, -1.0), (1, 1.0)] {
        for n in 0..nn {
            let i = q * nn + n;
            let phase = hw.omega_c_ang() * n as f64 + sign * hw.omega_q_ang() / 2.0;
            u[(i, i)] = C64::from_polar(1.0, -phase * t_us);
        }
    }
    u
}

/// Trotter product `prod_n exp(-i H(t_n) dt)` over the full pulse, envelopes
/// sampled at sub-step midpoints, later factors multiplying on the left.
///
/// Returns the co-rotating propagator `V`, or `U_0(T) V` when the config asks
/// for the lab frame.
pub fn evolve(pulse: &ChebyshevPulse, hw: &HardwareConfig, cfg: &EvolutionConfig) -> Result<CMat> {
    hw.validate()?;
    cfg.validate()?;
    let n_samples = cfg.samples(pulse.duration_us())?;
    let nn = cfg.space.n_levels();
    let dim = 2 * nn;
    let dt_us = cfg.dt_ns / 1000.0 / cfg.substeps as f64;
    let chi = hw.chi_ang();
    let mut u = identity(dim);
    let mut gen = CMat::zeros((dim, dim));
    for k in 0..n_samples * cfg.substeps {
        let t_mid = (k as f64 + 0.5) * dt_us;
        let (eps, om) = pulse.envelopes_unchecked(t_mid);
        fill_interaction(&mut gen, eps, om, chi, nn);
        gen.mapv_inplace(|z| z * C64::new(0.0, -dt_us));
        let step = expm(&gen)?;
        u = step.dot(&u);
    }
    if cfg.frame == Frame::Lab {
        u = free_evolution(pulse.duration_us(), hw, cfg.space).dot(&u);
    }
    Ok(u)
}

/// Doubles the sub-step count until one halving changes no propagator entry
/// by `tol` or more, and returns the first count that passed. Fails past
/// `max_substeps`.
pub fn calibrate_substeps(
    pulse: &ChebyshevPulse,
    hw: &HardwareConfig,
    cfg: &EvolutionConfig,
    tol: f64,
    max_substeps: usize,
) -> Result<usize> {
    let mut coarse = *cfg;
    let mut u = evolve(pulse, hw, &coarse)?;
    while coarse.substeps <= max_substeps {
        let mut fine = coarse;
        fine.substeps = coarse.substeps * 2;
        let v = evolve(pulse, hw, &fine)?;
        if max_abs_diff(&u, &v) < tol {
            return Ok(coarse.substeps);
        }
        coarse = fine;
        u = v;
    }
    Err(Error::Invalid(format!(
        "Trotter halving still above {tol:e} at {max_substeps} substeps"
    )))
}

/// Gate infidelity of the co-rotating propagator against
/// `identity_2 (x) target`, trace-normalized by `2d` over the computational
/// joint block.
///
/// The frame factor `U_0(T)` is absorbed by the co-rotating basis, but the
/// deterministic dispersive phase `exp(-i chi T n sigma_z)` is not: it stays
/// in `V`, and a synthesized pulse has to cancel it along with everything
/// else. The config's frame field is ignored; the metric is defined on `V`.
pub fn pulse_gate_report(
    pulse: &ChebyshevPulse,
    target: &CMat,
    hw: &HardwareConfig,
    cfg: &EvolutionConfig,
) -> Result<FidelityReport> {
    let mut c = *cfg;
    c.frame = Frame::Interaction;
    let pad = joint_pad_target(target, &identity(2), c.space)?;
    let v = evolve(pulse, hw, &c)?;
    let (_, leakage) = project_joint(&v, JointSpace::new(c.space));
    let dim_norm = 2.0 * c.space.d() as f64;
    Ok(FidelityReport {
        infidelity: overlap_to_infidelity(full_overlap(&pad, &v), dim_norm),
        leakage,
    })
}

pub fn pulse_gate_infidelity(
    pulse: &ChebyshevPulse,
    target: &CMat,
    hw: &HardwareConfig,
    cfg: &EvolutionConfig,
) -> Result<f64> {
    Ok(pulse_gate_report(pulse, target, hw, cfg)?.infidelity)
}

/// State-preparation infidelity `1 - |(<target| (x) <g|) V (|0> (x) |g>)|^2`:
/// the qubit must return to `|g>`. Leakage is the population left outside the
/// computational cavity levels in either qubit branch.
pub fn pulse_state_report(
    pulse: &ChebyshevPulse,
    target: &CVec,
    hw: &HardwareConfig,
    cfg: &EvolutionConfig,
) -> Result<FidelityReport> {
    let d = cfg.space.d();
    if target.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: target.len(),
        });
    }
    let norm = target.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { norm });
    }
    let mut c = *cfg;
    c.frame = Frame::Interaction;
    let nn = c.space.n_levels();
    let v = evolve(pulse, hw, &c)?;
    let psi = v.column(0);
    let overlap: C64 = target
        .iter()
        .zip(psi.iter())
        .map(|(t, a)| t.conj() * a)
        .sum();
    let mut in_block = 0.0;
    for q in 0..2 {
        for level in 0..d {
            in_block += psi[q * nn + level].norm_sqr();
        }
    }
    Ok(FidelityReport {
        infidelity: (1.0 - overlap.norm_sqr()).max(0.0),
        leakage: (1.0 - in_block).max(0.0),
    })
}

pub fn pulse_state_infidelity(
    pulse: &ChebyshevPulse,
    target: &CVec,
    hw: &HardwareConfig,
    cfg: &EvolutionConfig,
) -> Result<f64> {
    Ok(pulse_state_report(pulse, target, hw, cfg)?.infidelity)
}
