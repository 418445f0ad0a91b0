//! Direct pulse synthesis: Chebyshev-parameterized drive envelopes evolved
//! under the interaction-picture dispersive Hamiltonian with a Trotter
//! product, plus lab-frame export and hardware-constraint checks.
//!
//! The simulation integrates slow co-rotating envelopes only; the carriers at
//! the cavity and qubit frequencies are removed analytically and reattached at
//! export time. Coefficients and envelopes are ordinary frequencies in MHz and
//! pick up their factor of `2 pi` inside the Hamiltonian.

mod cheby;
mod cost;
mod evolve;
mod export;

pub use cheby::chebyshev_eval;
pub use cost::{embed_pulse_params, PulseGateCost, PulseStateCost, SlopePenalty};
pub use evolve::{
    calibrate_substeps, evolve, free_evolution, interaction_hamiltonian, lab_hamiltonian,
    pulse_gate_infidelity, pulse_gate_report, pulse_state_infidelity, pulse_state_report,
};
pub use export::{lab_frame_export, max_slope, write_waveform_csv, WaveformSample};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fock::FockSpace;
use crate::types::C64;
use crate::Result;

use std::f64::consts::TAU;

/// Transmon-cavity hardware parameters, quoted as ordinary frequencies.
///
/// The `*_ang` accessors convert to angular frequencies in rad/us, the units
/// every Hamiltonian in this module is built in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareConfig {
    /// Cavity frequency in GHz.
    pub omega_c_ghz: f64,
    /// Qubit frequency in GHz.
    pub omega_q_ghz: f64,
    /// Dispersive shift in MHz.
    pub chi_mhz: f64,
    /// Control sample length for state preparation, in ns.
    pub dt_state_prep_ns: f64,
    /// Control sample length for gate synthesis, in ns.
    pub dt_gate_ns: f64,
    /// Envelope slope limit in MHz per ns.
    pub slope_limit_mhz_per_ns: f64,
    /// Cavity decoherence budget in ms.
    pub t1_budget_ms: f64,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        Self {
            omega_c_ghz: 5.0,
            omega_q_ghz: 3.0,
            chi_mhz: 0.3,
            dt_state_prep_ns: 1.0,
            dt_gate_ns: 10.0,
            slope_limit_mhz_per_ns: 1.0,
            t1_budget_ms: 10.0,
        }
    }
}

impl HardwareConfig {
    /// Dispersive shift in rad/us.
    pub fn chi_ang(&self) -> f64 {
        TAU * self.chi_mhz
    }

    /// Cavity frequency in rad/us.
    pub fn omega_c_ang(&self) -> f64 {
        TAU * self.omega_c_ghz * 1000.0
    }

    /// Qubit frequency in rad/us.
    pub fn omega_q_ang(&self) -> f64 {
        TAU * self.omega_q_ghz * 1000.0
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("cavity frequency", self.omega_c_ghz),
            ("qubit frequency", self.omega_q_ghz),
            ("dispersive shift", self.chi_mhz),
            ("state-prep sample length", self.dt_state_prep_ns),
            ("gate sample length", self.dt_gate_ns),
            ("slope limit", self.slope_limit_mhz_per_ns),
            ("decoherence budget", self.t1_budget_ms),
        ];
        for (what, value) in fields {
            if !(value > 0.0) {
                return Err(Error::NotPositive { what, value });
            }
        }
        Ok(())
    }
}

/// Which propagator [`evolve`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    /// The co-rotating propagator `V`; the free rotation is absorbed into the
    /// basis definition.
    Interaction,
    /// `U_0(T) V`, with the free rotation at the cavity and qubit frequencies
    /// composed back in.
    Lab,
}

/// Discretization of one evolution: the control grid, its Trotter refinement,
/// the simulated space, and the output frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    /// Trotter sub-steps per control sample.
    pub substeps: usize,
    /// Control sample length in ns.
    pub dt_ns: f64,
    pub space: FockSpace,
    pub frame: Frame,
}

impl EvolutionConfig {
    /// Gate-synthesis grid: the coarse control resolution.
    pub fn gate(hw: &HardwareConfig, space: FockSpace) -> Self {
        Self {
            substeps: 4,
            dt_ns: hw.dt_gate_ns,
            space,
            frame: Frame::Interaction,
        }
    }

    /// State-preparation grid: the fine control resolution.
    pub fn state_prep(hw: &HardwareConfig, space: FockSpace) -> Self {
        Self {
            substeps: 4,
            dt_ns: hw.dt_state_prep_ns,
            space,
            frame: Frame::Interaction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.substeps == 0 {
            return Err(Error::NotPositive {
                what: "substeps",
                value: 0.0,
            });
        }
        if !(self.dt_ns > 0.0) {
            return Err(Error::NotPositive {
                what: "control sample length",
                value: self.dt_ns,
            });
        }
        Ok(())
    }

    /// Control samples in a duration, which must sit on the grid exactly.
    pub fn samples(&self, duration_us: f64) -> Result<usize> {
        let raw = duration_us * 1000.0 / self.dt_ns;
        let rounded = raw.round();
        if rounded < 1.0 || (raw - rounded).abs() > 1e-6 {
            return Err(Error::UnalignedDuration {
                duration_us,
                dt_ns: self.dt_ns,
            });
        }
        Ok(rounded as usize)
    }
}

/// Chebyshev-parameterized drive envelopes for both channels over `[0, T]`.
///
/// Time maps into the Chebyshev domain through `x = 2t/T - 1`; coefficients
/// are complex envelope amplitudes in MHz. Flattened layout: cavity real
/// parts, cavity imaginary parts, qubit real parts, qubit imaginary parts,
/// each `order + 1` long.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevPulse {
    order: usize,
    c: Vec<C64>,
    q: Vec<C64>,
    t_us: f64,
}

#[derive(Serialize, Deserialize)]
struct PulseWire {
    ansatz: String,
    order: usize,
    #[serde(rename = "T_us")]
    t_us: f64,
    c_re: Vec<f64>,
    c_im: Vec<f64>,
    q_re: Vec<f64>,
    q_im: Vec<f64>,
}

impl ChebyshevPulse {
    pub fn zeros(order: usize, t_us: f64) -> Self {
        Self {
            order,
            c: vec![C64::new(0.0, 0.0); order + 1],
            q: vec![C64::new(0.0, 0.0); order + 1],
            t_us,
        }
    }

    pub fn from_parts(c: Vec<C64>, q: Vec<C64>, t_us: f64) -> Result<Self> {
        if c.is_empty() || c.len() != q.len() {
            return Err(Error::WrongParameterCount {
                expected: c.len().max(1),
                got: q.len(),
            });
        }
        if !(t_us > 0.0) {
            return Err(Error::NotPositive {
                what: "pulse duration",
                value: t_us,
            });
        }
        Ok(Self {
            order: c.len() - 1,
            c,
            q,
            t_us,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn duration_us(&self) -> f64 {
        self.t_us
    }

    pub fn cavity_coefficients(&self) -> &[C64] {
        &self.c
    }

    pub fn qubit_coefficients(&self) -> &[C64] {
        &self.q
    }

    /// Flattened length `4 (order + 1)`.
    pub fn param_count(order: usize) -> usize {
        4 * (order + 1)
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(Self::param_count(self.order));
        out.extend(self.c.iter().map(|z| z.re));
        out.extend(self.c.iter().map(|z| z.im));
        out.extend(self.q.iter().map(|z| z.re));
        out.extend(self.q.iter().map(|z| z.im));
        out
    }

    pub fn from_flat(order: usize, t_us: f64, x: &[f64]) -> Result<Self> {
        let expected = Self::param_count(order);
        if x.len() != expected {
            return Err(Error::WrongParameterCount {
                expected,
                got: x.len(),
            });
        }
        let n = order + 1;
        let c = (0..n).map(|k| C64::new(x[k], x[n + k])).collect();
        let q = (0..n).map(|k| C64::new(x[2 * n + k], x[3 * n + k])).collect();
        Self::from_parts(c, q, t_us)
    }

    fn domain_point(&self, t_us: f64) -> Result<f64> {
        if !(0.0..=self.t_us + 1e-12).contains(&t_us) {
            return Err(Error::OutOfDomain {
                what: "pulse time",
                value: t_us,
            });
        }
        Ok(2.0 * t_us / self.t_us - 1.0)
    }

    /// Cavity envelope at `t` in MHz.
    pub fn envelope_c(&self, t_us: f64) -> Result<C64> {
        let x = self.domain_point(t_us)?;
        Ok(cheby::series_sum(&self.c, x))
    }

    /// Qubit envelope at `t` in MHz.
    pub fn envelope_q(&self, t_us: f64) -> Result<C64> {
        let x = self.domain_point(t_us)?;
        Ok(cheby::series_sum(&self.q, x))
    }

    /// Both envelopes at an in-grid time, skipping the domain check.
    pub(crate) fn envelopes_unchecked(&self, t_us: f64) -> (C64, C64) {
        let x = 2.0 * t_us / self.t_us - 1.0;
        (cheby::series_sum(&self.c, x), cheby::series_sum(&self.q, x))
    }

    pub fn to_json(&self) -> String {
        let wire = PulseWire {
            ansatz: "pulse".to_string(),
            order: self.order,
            t_us: self.t_us,
            c_re: self.c.iter().map(|z| z.re).collect(),
            c_im: self.c.iter().map(|z| z.im).collect(),
            q_re: self.q.iter().map(|z| z.re).collect(),
            q_im: self.q.iter().map(|z| z.im).collect(),
        };
        serde_json::to_string(&wire).expect("plain numeric fields")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: PulseWire =
            serde_json::from_str(text).map_err(|e| Error::Invalid(e.to_string()))?;
        if wire.ansatz != "pulse" {
            return Err(Error::Invalid(format!(
                "expected ansatz \"pulse\", got \"{}\"",
                wire.ansatz
            )));
        }
        let n = wire.order + 1;
        if wire.c_re.len() != n
            || wire.c_im.len() != n
            || wire.q_re.len() != n
            || wire.q_im.len() != n
        {
            return Err(Error::WrongParameterCount {
                expected: n,
                got: wire.c_re.len(),
            });
        }
        let c = wire
            .c_re
            .iter()
            .zip(&wire.c_im)
            .map(|(&re, &im)| C64::new(re, im))
            .collect();
        let q = wire
            .q_re
            .iter()
            .zip(&wire.q_im)
            .map(|(&re, &im)| C64::new(re, im))
            .collect();
        Self::from_parts(c, q, wire.t_us)
    }
}
