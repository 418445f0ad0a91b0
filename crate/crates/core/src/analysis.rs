//! Noise-robustness sweeps and hardware-budget estimates.
//!
//! The robustness question: how far does a converged circuit degrade when
//! every control parameter is jittered by a relative amount `beta`?  The
//! sweep perturbs, rebuilds, and re-scores the circuit many times per noise
//! strength; downstream studies compare the medians across ansaetze.
//!
//! The budget question: given an energy-relaxation time, how many gates fit
//! before decoherence wins?  Two closed forms cover it: the break-even
//! dimension where a per-block-cheap but block-hungry ansatz overtakes a
//! block-frugal slow one, and the plain gate count for a fixed block time.
//!
//! All randomness is counter-split from a single seed ([`split_seed`]) so
//! that rows are reproducible independently of evaluation order.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// How a parameter `a` is jittered at noise strength `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// `a -> a + delta`, `delta ~ Normal(0, (beta |a|)^2)`: the jitter is a
    /// zero-mean fraction of the parameter itself.  Default.
    RelativeGaussian,
    /// `a -> a + f(x)` where `f` is the Normal(0, (beta |a|)^2) density and
    /// `x` a draw from the same distribution.  This adds a density *value*
    /// (dimensionally odd, and divergent as `beta |a| -> 0`), but it is the
    /// formula some stability write-ups print, so it stays available for
    /// comparison.  The default mode matches the observed small-beta
    /// behaviour; this one does not.
    PdfLiteral,
}

/// Sweep layout: which noise strengths, how many samples each, which mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Noise strengths.  Zero is allowed and means the limit case: parameters
    /// pass through untouched and every sample scores the noiseless circuit.
    pub betas: Vec<f64>,
    /// Perturbation samples per noise strength.
    pub samples: usize,
    pub mode: NoiseMode,
}

impl Default for NoiseSpec {
    /// Half-decade grid over `[1e-6, 1e-1]`, 50 samples per strength.
    fn default() -> Self {
        Self {
            betas: log_spaced(1e-6, 1e-1, 11),
            samples: 50,
            mode: NoiseMode::RelativeGaussian,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() {
            return Err(Error::Invalid("noise sweep with no beta values".into()));
        }
        for &b in &self.betas {
            if !b.is_finite() || b < 0.0 {
                return Err(Error::OutOfDomain {
                    what: "noise strength",
                    value: b,
                });
            }
        }
        if self.samples == 0 {
            return Err(Error::Invalid("noise sweep with zero samples".into()));
        }
        Ok(())
    }
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2, "need 0 < lo < hi and n >= 2");
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Counter-based seed splitting (the splitmix64 finalizer).  Derives the
/// stream for row `index` from one base seed; consecutive indices land far
/// apart, and the mapping is pure, so parallel or reordered evaluation
/// cannot change any row.
pub fn split_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Jitter every nonzero entry of `params` at strength `beta > 0`.
///
/// Zero-valued parameters pass through untouched and consume no randomness,
/// so inserting or removing a zero never shifts the perturbations of the
/// other entries under the same seed.
pub fn perturb_parameters(params: &[f64], beta: f64, mode: NoiseMode, seed: u64) -> Result<Vec<f64>> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::NotPositive {
            what: "noise strength",
            value: beta,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(params.len());
    for &a in params {
        if a == 0.0 {
            out.push(a);
            continue;
        }
        let sigma = beta * a.abs();
        let x = Normal::new(0.0, sigma)
            .map_err(|_| Error::NotPositive {
                what: "perturbation width",
                value: sigma,
            })?
            .sample(&mut rng);
        let shift = match mode {
            NoiseMode::RelativeGaussian => x,
            NoiseMode::PdfLiteral => {
                (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt())
            }
        };
        out.push(a + shift);
    }
    Ok(out)
}

/// One scored perturbation sample.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseRow {
    pub beta: f64,
    pub sample: usize,
    pub infidelity: f64,
}

/// Score `spec.samples` perturbations of `params` at every strength in
/// `spec.betas`.  `infidelity` rebuilds the circuit from a flat parameter
/// vector and scores it against the target; its errors abort the sweep.
///
/// Output length is exactly `spec.betas.len() * spec.samples`, ordered by
/// strength then sample.  `beta = 0` rows score the unperturbed parameters.
pub fn noise_sweep(
    params: &[f64],
    infidelity: &dyn Fn(&[f64]) -> Result<f64>,
    spec: &NoiseSpec,
    seed: u64,
) -> Result<Vec<NoiseRow>> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.betas.len() * spec.samples);
    for (bi, &beta) in spec.betas.iter().enumerate() {
        for sample in 0..spec.samples {
            let value = if beta == 0.0 {
                infidelity(params)?
            } else {
                let row_seed = split_seed(seed, (bi * spec.samples + sample) as u64);
                let jittered = perturb_parameters(params, beta, spec.mode, row_seed)?;
                infidelity(&jittered)?
            };
            rows.push(NoiseRow {
                beta,
                sample,
                infidelity: value,
            });
        }
    }
    Ok(rows)
}

/// Middle value (mean of the middle pair for even length).  Rejects NaN.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Invalid("median of NaN values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN filtered above"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        Ok(sorted[mid])
    } else {
        Ok(0.5 * (sorted[mid - 1] + sorted[mid]))
    }
}

/// Qudit dimension at which a per-block-fast ansatz whose block count grows
/// as `d^2` costs the same wall-clock time as a block-count-constant slow
/// one: equating `B_fast(d) t_fast = B_slow t_slow` with `B_fast ~ d^2`
/// gives `d_b = sqrt(t_slow / t_fast)`.
pub fn break_even_dimension(t_slow_us: f64, t_fast_us: f64) -> Result<f64> {
    for (what, value) in [
        ("slow block time", t_slow_us),
        ("fast block time", t_fast_us),
    ] {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::NotPositive { what, value });
        }
    }
    Ok((t_slow_us / t_fast_us).sqrt())
}

/// Gates of `blocks` blocks, each block taking `block_time_us`, that fit in
/// a coherence budget of `t1_budget_us`.
pub fn gate_budget(t1_budget_us: f64, block_time_us: f64, blocks: usize) -> Result<u64> {
    for (what, value) in [
        ("coherence budget", t1_budget_us),
        ("block time", block_time_us),
    ] {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::NotPositive { what, value });
        }
    }
    if blocks == 0 {
        return Err(Error::NotPositive {
            what: "block count",
            value: 0.0,
        });
    }
    Ok((t1_budget_us / (block_time_us * blocks as f64)).floor() as u64)
}
