//! The SNAP-and-displacement ansatz: alternating displacements and per-level
//! phase gates on the cavity alone.
//!
//! A circuit with `B` blocks is
//! `D(alpha_0) S(theta_0) D(alpha_1) S(theta_1) ... S(theta_{B-1}) D(alpha_B)`,
//! the rightmost factor applied first to states, giving `(d+1)B + 1` free
//! parameters in the default real-amplitude mode.

use serde::{Deserialize, Serialize};

use crate::cost::FidelityReport;
use crate::error::Error;
use crate::factored::{full_overlap, overlap_to_infidelity, FactorTraces};
use crate::fock::FockSpace;
use crate::operators::{displacement, project_computational};
use crate::opt::cost::CostFunction;
use crate::timing::TimingConfig;
use crate::types::{identity, CMat, CVec, C64};
use crate::Result;

/// Parameters of one SNAP-and-displacement circuit.
///
/// Amplitudes are real by default ("without loss of generality" for this gate
/// set); the complex mode doubles the displacement parameter count for
/// exploration. Flattened layout: amplitude real parts (`B + 1`), then
/// imaginary parts when complex, then the `B * d` phases blockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapDParams {
    d: usize,
    alphas: Vec<f64>,
    alphas_im: Option<Vec<f64>>,
    thetas: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct SnapDWire {
    ansatz: String,
    d: usize,
    #[serde(rename = "B")]
    b: usize,
    alphas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alphas_im: Option<Vec<f64>>,
    thetas: Vec<Vec<f64>>,
}

impl SnapDParams {
    /// All-zero parameters (the identity circuit) with real amplitudes.
    pub fn zeros(d: usize, blocks: usize) -> Self {
        Self {
            d,
            alphas: vec![0.0; blocks + 1],
            alphas_im: None,
            thetas: vec![vec![0.0; d]; blocks],
        }
    }

    /// All-zero parameters with complex amplitudes enabled.
    pub fn zeros_complex(d: usize, blocks: usize) -> Self {
        Self {
            alphas_im: Some(vec![0.0; blocks + 1]),
            ..Self::zeros(d, blocks)
        }
    }

    pub fn from_parts(
        d: usize,
        alphas: Vec<f64>,
        alphas_im: Option<Vec<f64>>,
        thetas: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let blocks = thetas.len();
        if blocks == 0 || alphas.len() != blocks + 1 {
            return Err(Error::WrongParameterCount {
                expected: blocks + 1,
                got: alphas.len(),
            });
        }
        if let Some(im) = &alphas_im {
            if im.len() != blocks + 1 {
                return Err(Error::WrongParameterCount {
                    expected: blocks + 1,
                    got: im.len(),
                });
            }
        }
        if thetas.iter().any(|row| row.len() != d) {
            return Err(Error::WrongAngleCount {
                expected: d,
                got: thetas.iter().map(Vec::len).find(|&l| l != d).unwrap_or(0),
            });
        }
        Ok(Self {
            d,
            alphas,
            alphas_im,
            thetas,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn blocks(&self) -> usize {
        self.thetas.len()
    }

    pub fn complex_alpha(&self) -> bool {
        self.alphas_im.is_some()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alphas_im(&self) -> Option<&[f64]> {
        self.alphas_im.as_deref()
    }

    pub fn thetas(&self) -> &[Vec<f64>] {
        &self.thetas
    }

    pub fn alpha(&self, k: usize) -> C64 {
        let im = self.alphas_im.as_ref().map_or(0.0, |v| v[k]);
        C64::new(self.alphas[k], im)
    }

    /// Number of optimizer variables: `(d + 1) B + 1`, plus `B + 1` more in
    /// complex mode.
    pub fn param_count(d: usize, blocks: usize, complex_alpha: bool) -> usize {
        let base = (d + 1) * blocks + 1;
        if complex_alpha {
            base + blocks + 1
        } else {
            base
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.alphas.clone();
        if let Some(im) = &self.alphas_im {
            out.extend_from_slice(im);
        }
        for row in &self.thetas {
            out.extend_from_slice(row);
        }
        out
    }

    pub fn from_flat(d: usize, blocks: usize, complex_alpha: bool, x: &[f64]) -> Result<Self> {
        let expected = Self::param_count(d, blocks, complex_alpha);
        if x.len() != expected {
            return Err(Error::WrongParameterCount {
                expected,
                got: x.len(),
            });
        }
        let alphas = x[..blocks + 1].to_vec();
        let mut at = blocks + 1;
        let alphas_im = complex_alpha.then(|| {
            let im = x[at..at + blocks + 1].to_vec();
            at += blocks + 1;
            im
        });
        let thetas = (0..blocks)
            .map(|k| x[at + k * d..at + (k + 1) * d].to_vec())
            .collect();
        Ok(Self {
            d,
            alphas,
            alphas_im,
            thetas,
        })
    }

    /// Append one zero block (`S(0) D(0)` on the right); the grown circuit is
    /// exactly the old one, making best-of-k monotone in `B` under warm starts.
    pub fn with_extra_block(&self) -> Self {
        let mut grown = self.clone();
        grown.alphas.push(0.0);
        if let Some(im) = grown.alphas_im.as_mut() {
            im.push(0.0);
        }
        grown.thetas.push(vec![0.0; self.d]);
        grown
    }

    pub fn to_json(&self) -> String {
        let wire = SnapDWire {
            ansatz: "snapd".into(),
            d: self.d,
            b: self.blocks(),
            alphas: self.alphas.clone(),
            alphas_im: self.alphas_im.clone(),
            thetas: self.thetas.clone(),
        };
        serde_json::to_string_pretty(&wire).expect("plain numeric fields")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let wire: SnapDWire =
            serde_json::from_str(s).map_err(|e| Error::Invalid(format!("bad parameter JSON: {e}")))?;
        if wire.ansatz != "snapd" {
            return Err(Error::Invalid(format!(
                "expected ansatz \"snapd\", got \"{}\"",
                wire.ansatz
            )));
        }
        if wire.thetas.len() != wire.b {
            return Err(Error::WrongParameterCount {
                expected: wire.b,
                got: wire.thetas.len(),
            });
        }
        Self::from_parts(wire.d, wire.alphas, wire.alphas_im, wire.thetas)
    }
}

/// Phase gate `diag(e^{i theta_0}, ..., e^{i theta_{d-1}}, 1, ..., 1)`:
/// arbitrary phases on the computational levels, identity on the guards.
pub fn snap(thetas: &[f64], space: FockSpace) -> Result<CMat> {
    if thetas.len() != space.d() {
        return Err(Error::WrongAngleCount {
            expected: space.d(),
            got: thetas.len(),
        });
    }
    let mut m = identity(space.n_levels());
    for (n, &theta) in thetas.iter().enumerate() {
        m[(n, n)] = C64::from_polar(1.0, theta);
    }
    Ok(m)
}

/// Factors of the circuit left to right:
/// `[D(alpha_0), S(theta_0), ..., S(theta_{B-1}), D(alpha_B)]`.
fn factor_list(p: &SnapDParams, space: FockSpace) -> Result<Vec<CMat>> {
    if p.d != space.d() {
        return Err(Error::DimensionMismatch {
            expected: space.d(),
            got: p.d,
        });
    }
    let b = p.blocks();
    let mut fs = Vec::with_capacity(2 * b + 1);
    for k in 0..b {
        fs.push(displacement(p.alpha(k), space));
        fs.push(snap(&p.thetas[k], space)?);
    }
    fs.push(displacement(p.alpha(b), space));
    Ok(fs)
}

/// Full circuit unitary on all `N` levels.
pub fn build_circuit(p: &SnapDParams, space: FockSpace) -> Result<CMat> {
    let fs = factor_list(p, space)?;
    let mut u = fs[0].clone();
    for f in &fs[1..] {
        u = u.dot(f);
    }
    Ok(u)
}

/// Target padded to the full space with zeros on guard rows and columns, so
/// that `Tr(pad(T)^dag U)` is the computational-block overlap.
fn pad_target(target: &CMat, space: FockSpace) -> Result<CMat> {
    let d = space.d();
    if target.dim() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: target.nrows(),
        });
    }
    let n = space.n_levels();
    let mut pad = CMat::zeros((n, n));
    pad.slice_mut(ndarray::s![..d, ..d]).assign(target);
    Ok(pad)
}

/// Trace infidelity of the projected `d x d` block against `target`, with the
/// guard-space population as leakage.
pub fn snapd_gate_report(
    p: &SnapDParams,
    target: &CMat,
    space: FockSpace,
) -> Result<FidelityReport> {
    let pad = pad_target(target, space)?;
    let u = build_circuit(p, space)?;
    let (_, leakage) = project_computational(&u, space);
    let infidelity = overlap_to_infidelity(full_overlap(&pad, &u), space.d() as f64);
    Ok(FidelityReport {
        infidelity,
        leakage,
    })
}

pub fn snapd_gate_infidelity(p: &SnapDParams, target: &CMat, space: FockSpace) -> Result<f64> {
    Ok(snapd_gate_report(p, target, space)?.infidelity)
}

/// State-preparation infidelity `1 - |<target| U |0>|^2` with the target given
/// on the computational levels, plus the population the prepared state leaves
/// outside them.
pub fn snapd_state_report(
    p: &SnapDParams,
    target: &CVec,
    space: FockSpace,
) -> Result<FidelityReport> {
    let d = space.d();
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
    let u = build_circuit(p, space)?;
    let psi = u.column(0);
    let overlap: C64 = target
        .iter()
        .zip(psi.iter())
        .map(|(t, v)| t.conj() * v)
        .sum();
    let in_block: f64 = psi.iter().take(d).map(|z| z.norm_sqr()).sum();
    Ok(FidelityReport {
        infidelity: (1.0 - overlap.norm_sqr()).max(0.0),
        leakage: (1.0 - in_block).max(0.0),
    })
}

pub fn snapd_state_infidelity(p: &SnapDParams, target: &CVec, space: FockSpace) -> Result<f64> {
    Ok(snapd_state_report(p, target, space)?.infidelity)
}

/// Wall-clock estimate `B T_snap + (B + 1) T_disp` in microseconds.
pub fn gate_time_estimate_snapd(p: &SnapDParams, timing: &TimingConfig) -> f64 {
    let b = p.blocks() as f64;
    b * timing.t_snap_us + (b + 1.0) * timing.t_disp_us
}

/// Where a flattened coordinate lives in the factor list.
enum Coordinate {
    /// (factor index, imaginary part?)
    Alpha(usize, bool),
    /// (factor index, level)
    Theta(usize, usize),
}

fn coordinate(j: usize, d: usize, blocks: usize, complex_alpha: bool) -> Coordinate {
    let n_alpha = blocks + 1;
    if j < n_alpha {
        return Coordinate::Alpha(2 * j, false);
    }
    let mut rest = j - n_alpha;
    if complex_alpha {
        if rest < n_alpha {
            return Coordinate::Alpha(2 * rest, true);
        }
        rest -= n_alpha;
    }
    Coordinate::Theta(2 * (rest / d) + 1, rest % d)
}

fn snap_diag(thetas: &[f64], n_levels: usize) -> Vec<C64> {
    let mut diag = vec![C64::new(1.0, 0.0); n_levels];
    for (n, &theta) in thetas.iter().enumerate() {
        diag[n] = C64::from_polar(1.0, theta);
    }
    diag
}

/// Gate-synthesis objective: trace infidelity on the computational block.
pub struct SnapdGateCost {
    space: FockSpace,
    blocks: usize,
    complex_alpha: bool,
    /// `pad(T)` and its adjoint, cached.
    t_pad: CMat,
    t_pad_dag: CMat,
}

impl SnapdGateCost {
    pub fn new(
        target: &CMat,
        space: FockSpace,
        blocks: usize,
        complex_alpha: bool,
    ) -> Result<Self> {
        let t_pad = pad_target(target, space)?;
        let t_pad_dag = crate::types::dagger(&t_pad);
        Ok(Self {
            space,
            blocks,
            complex_alpha,
            t_pad,
            t_pad_dag,
        })
    }

    fn params(&self, x: &[f64]) -> SnapDParams {
        SnapDParams::from_flat(self.space.d(), self.blocks, self.complex_alpha, x)
            .expect("dim() fixes the length")
    }
}

impl CostFunction for SnapdGateCost {
    fn dim(&self) -> usize {
        SnapDParams::param_count(self.space.d(), self.blocks, self.complex_alpha)
    }

    fn value(&self, x: &[f64]) -> f64 {
        let p = self.params(x);
        let fs = factor_list(&p, self.space).expect("validated layout");
        // Only the first d columns of U enter the overlap, so push a thin
        // slab through the chain instead of forming the full product.
        let n = self.space.n_levels();
        let d = self.space.d();
        let mut slab = CMat::zeros((n, d));
        for c in 0..d {
            slab[(c, c)] = C64::new(1.0, 0.0);
        }
        for f in fs.iter().rev() {
            slab = f.dot(&slab);
        }
        let mut overlap = C64::new(0.0, 0.0);
        for r in 0..d {
            for c in 0..d {
                overlap += self.t_pad[(r, c)].conj() * slab[(r, c)];
            }
        }
        overlap_to_infidelity(overlap, d as f64)
    }

    fn fd_gradient(&self, x: &[f64], rel_step: f64, out: &mut [f64]) {
        let p = self.params(x);
        let fs = factor_list(&p, self.space).expect("validated layout");
        let traces = FactorTraces::build(&fs, &self.t_pad_dag);
        let d = self.space.d() as f64;
        let n = self.space.n_levels();
        for (j, g) in out.iter_mut().enumerate() {
            let h = rel_step * (1.0 + x[j].abs());
            match coordinate(j, self.space.d(), self.blocks, self.complex_alpha) {
                Coordinate::Alpha(i, imag) => {
                    let alpha = p.alpha(i / 2);
                    let delta = if imag {
                        C64::new(0.0, h)
                    } else {
                        C64::new(h, 0.0)
                    };
                    let plus = traces.replaced(i, &displacement(alpha + delta, self.space));
                    let minus = traces.replaced(i, &displacement(alpha - delta, self.space));
                    *g = (overlap_to_infidelity(plus, d) - overlap_to_infidelity(minus, d))
                        / (2.0 * h);
                }
                Coordinate::Theta(i, level) => {
                    let diag = snap_diag(&p.thetas[(i - 1) / 2], n);
                    let base = traces.replaced_diag(i, &diag);
                    let m_nn = traces.m[i][(level, level)];
                    let theta = diag[level];
                    let plus = base + m_nn * (theta * C64::from_polar(1.0, h) - theta);
                    let minus = base + m_nn * (theta * C64::from_polar(1.0, -h) - theta);
                    *g = (overlap_to_infidelity(plus, d) - overlap_to_infidelity(minus, d))
                        / (2.0 * h);
                }
            }
        }
    }

    /// The factored gradient costs about two full evaluations (the
    /// displacement probes), not 2n.
    fn gradient_eval_cost(&self) -> usize {
        2
    }
}

/// State-preparation objective: `1 - |<target| U |0>|^2`.
pub struct SnapdStateCost {
    space: FockSpace,
    blocks: usize,
    complex_alpha: bool,
    /// Conjugated target amplitudes on the computational levels.
    target_conj: Vec<C64>,
}

impl SnapdStateCost {
    pub fn new(
        target: &CVec,
        space: FockSpace,
        blocks: usize,
        complex_alpha: bool,
    ) -> Result<Self> {
        if target.len() != space.d() {
            return Err(Error::DimensionMismatch {
                expected: space.d(),
                got: target.len(),
            });
        }
        let norm = target.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            space,
            blocks,
            complex_alpha,
            target_conj: target.iter().map(|z| z.conj()).collect(),
        })
    }

    fn params(&self, x: &[f64]) -> SnapDParams {
        SnapDParams::from_flat(self.space.d(), self.blocks, self.complex_alpha, x)
            .expect("dim() fixes the length")
    }

    fn overlap(&self, psi: &[C64]) -> C64 {
        self.target_conj
            .iter()
            .zip(psi)
            .map(|(t, v)| t * v)
            .sum()
    }
}

impl CostFunction for SnapdStateCost {
    fn dim(&self) -> usize {
        SnapDParams::param_count(self.space.d(), self.blocks, self.complex_alpha)
    }

    fn value(&self, x: &[f64]) -> f64 {
        let p = self.params(x);
        let fs = factor_list(&p, self.space).expect("validated layout");
        let n = self.space.n_levels();
        let mut psi = CVec::zeros(n);
        psi[0] = C64::new(1.0, 0.0);
        for f in fs.iter().rev() {
            psi = f.dot(&psi);
        }
        let overlap = self.overlap(psi.as_slice().expect("contiguous"));
        (1.0 - overlap.norm_sqr()).max(0.0)
    }

    fn fd_gradient(&self, x: &[f64], rel_step: f64, out: &mut [f64]) {
        let p = self.params(x);
        let fs = factor_list(&p, self.space).expect("validated layout");
        let nf = fs.len();
        let n = self.space.n_levels();
        // right[i] = F_i ... F_{last} |0>, left[i] = <target| F_0 ... F_{i-1}.
        let mut right = vec![CVec::zeros(n); nf + 1];
        right[nf][0] = C64::new(1.0, 0.0);
        for i in (0..nf).rev() {
            right[i] = fs[i].dot(&right[i + 1]);
        }
        let mut left = vec![CVec::zeros(n); nf];
        for (j, t) in self.target_conj.iter().enumerate() {
            left[0][j] = *t;
        }
        for i in 1..nf {
            left[i] = fs[i - 1].t().dot(&left[i - 1]);
        }
        let infid = |o: C64| (1.0 - o.norm_sqr()).max(0.0);
        let bilinear = |i: usize, f: &CMat| -> C64 {
            let lf = f.t().dot(&left[i]);
            lf.iter().zip(right[i + 1].iter()).map(|(a, b)| a * b).sum()
        };
        for (j, g) in out.iter_mut().enumerate() {
            let h = rel_step * (1.0 + x[j].abs());
            match coordinate(j, self.space.d(), self.blocks, self.complex_alpha) {
                Coordinate::Alpha(i, imag) => {
                    let alpha = p.alpha(i / 2);
                    let delta = if imag {
                        C64::new(0.0, h)
                    } else {
                        C64::new(h, 0.0)
                    };
                    let plus = bilinear(i, &displacement(alpha + delta, self.space));
                    let minus = bilinear(i, &displacement(alpha - delta, self.space));
                    *g = (infid(plus) - infid(minus)) / (2.0 * h);
                }
                Coordinate::Theta(i, level) => {
                    let diag = snap_diag(&p.thetas[(i - 1) / 2], n);
                    let base: C64 = diag
                        .iter()
                        .enumerate()
                        .map(|(m, f)| left[i][m] * f * right[i + 1][m])
                        .sum();
                    let term = left[i][level] * right[i + 1][level];
                    let theta = diag[level];
                    let plus = base + term * (theta * C64::from_polar(1.0, h) - theta);
                    let minus = base + term * (theta * C64::from_polar(1.0, -h) - theta);
                    *g = (infid(plus) - infid(minus)) / (2.0 * h);
                }
            }
        }
    }

    fn gradient_eval_cost(&self) -> usize {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lgt::rotations::pauli_x_embed;
    use crate::lgt::states::fock_state;
    use crate::opt::init::snapd_init;
    use crate::opt::multistart::{multi_start, MultiStart};
    use crate::opt::OptimizationConfig;
    use crate::types::{max_abs_diff, unitarity_error};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn space4() -> FockSpace {
        FockSpace::new(4).unwrap()
    }

    #[test]
    fn snap_of_zeros_is_identity() {
        let s = snap(&[0.0; 4], space4()).unwrap();
        assert!(max_abs_diff(&s, &identity(8)) < 1e-15);
    }

    #[test]
    fn snap_applies_phases_on_computational_levels_only() {
        let s = snap(&[PI, 0.0, 0.0, 0.0], space4()).unwrap();
        assert_abs_diff_eq!(s[(0, 0)].re, -1.0, epsilon = 1e-15);
        for n in 1..8 {
            assert_abs_diff_eq!(s[(n, n)].re, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn snap_rejects_wrong_angle_count() {
        assert!(matches!(
            snap(&[0.0; 3], space4()),
            Err(Error::WrongAngleCount { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn zero_circuit_is_identity() {
        let u = build_circuit(&SnapDParams::zeros(4, 1), space4()).unwrap();
        assert!(max_abs_diff(&u, &identity(8)) < 1e-14);
    }

    #[test]
    fn opposite_displacements_cancel_exactly_for_real_amplitudes() {
        let p = SnapDParams::from_parts(4, vec![0.7, -0.7], None, vec![vec![0.0; 4]]).unwrap();
        let u = build_circuit(&p, space4()).unwrap();
        assert!(max_abs_diff(&u, &identity(8)) < 1e-12);
    }

    #[test]
    fn parameter_count_matches_layout() {
        assert_eq!(SnapDParams::param_count(6, 3, false), 22);
        assert_eq!(SnapDParams::param_count(6, 3, true), 26);
        assert_eq!(SnapDParams::zeros(6, 3).flatten().len(), 22);
        assert_eq!(SnapDParams::zeros_complex(6, 3).flatten().len(), 26);
    }

    #[test]
    fn flatten_round_trips_exactly() {
        for complex in [false, true] {
            let x = snapd_init(5, 3, complex, 99);
            let p = SnapDParams::from_flat(5, 3, complex, &x).unwrap();
            assert_eq!(p.flatten(), x);
        }
    }

    #[test]
    fn json_schema_and_round_trip() {
        let p = SnapDParams::from_parts(
            3,
            vec![0.1, -0.2],
            None,
            vec![vec![0.3, 0.4, 0.5]],
        )
        .unwrap();
        let s = p.to_json();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["ansatz"], "snapd");
        assert_eq!(v["d"], 3);
        assert_eq!(v["B"], 1);
        assert!(v["thetas"][0].as_array().unwrap().len() == 3);
        assert_eq!(SnapDParams::from_json(&s).unwrap(), p);
        assert!(SnapDParams::from_json(&s.replace("snapd", "other")).is_err());
    }

    #[test]
    fn identity_target_with_zero_params_has_zero_infidelity() {
        let report =
            snapd_gate_report(&SnapDParams::zeros(4, 1), &identity(4), space4()).unwrap();
        assert!(report.infidelity < 1e-15);
        assert!(report.leakage < 1e-15);
    }

    #[test]
    fn self_consistency_of_projected_circuit() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let thetas: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..4).map(|_| rng.gen_range(-PI..PI)).collect())
            .collect();
        let p =
            SnapDParams::from_parts(4, vec![1e-5, -2e-5, 1.5e-5], None, thetas).unwrap();
        let u = build_circuit(&p, space4()).unwrap();
        let (block, leakage) = project_computational(&u, space4());
        assert!(leakage < 1e-8);
        assert!(snapd_gate_infidelity(&p, &block, space4()).unwrap() < 1e-8);
    }

    #[test]
    fn circuit_is_unitary_on_the_full_space() {
        for seed in 0..10 {
            let x = snapd_init(4, 3, seed % 2 == 0, seed as u64);
            let p = SnapDParams::from_flat(4, 3, seed % 2 == 0, &x).unwrap();
            let u = build_circuit(&p, space4()).unwrap();
            assert!(unitarity_error(&u) < 1e-10);
        }
    }

    #[test]
    fn gate_infidelity_is_phase_invariant() {
        let space = space4();
        let x = snapd_init(4, 2, false, 3);
        let p = SnapDParams::from_flat(4, 2, false, &x).unwrap();
        let target = pauli_x_embed(0, 1, 4).unwrap();
        let base = snapd_gate_infidelity(&p, &target, space).unwrap();
        for k in 0..8 {
            let phase = C64::from_polar(1.0, 0.77 * k as f64);
            let rotated = target.mapv(|z| z * phase);
            let v = snapd_gate_infidelity(&p, &rotated, space).unwrap();
            assert!((v - base).abs() < 1e-12);
        }
    }

    #[test]
    fn factored_gradient_matches_plain_central_differences() {
        let space = space4();
        let target = pauli_x_embed(2, 3, 4).unwrap();
        let cost = SnapdGateCost::new(&target, space, 2, false).unwrap();
        let x = snapd_init(4, 2, false, 11);
        let mut fast = vec![0.0; x.len()];
        cost.fd_gradient(&x, 1e-7, &mut fast);
        let mut probe = x.clone();
        for j in 0..x.len() {
            let h = 1e-7 * (1.0 + x[j].abs());
            probe[j] = x[j] + h;
            let fp = cost.value(&probe);
            probe[j] = x[j] - h;
            let fm = cost.value(&probe);
            probe[j] = x[j];
            let slow = (fp - fm) / (2.0 * h);
            assert!(
                (fast[j] - slow).abs() < 1e-6,
                "coord {j}: {} vs {}",
                fast[j],
                slow
            );
        }
    }

    #[test]
    fn state_gradient_matches_plain_central_differences() {
        let space = space4();
        let target = fock_state(3, 4).unwrap();
        let cost = SnapdStateCost::new(&target, space, 2, true).unwrap();
        let x = snapd_init(4, 2, true, 17);
        let mut fast = vec![0.0; x.len()];
        cost.fd_gradient(&x, 1e-7, &mut fast);
        let mut probe = x.clone();
        for j in 0..x.len() {
            let h = 1e-7 * (1.0 + x[j].abs());
            probe[j] = x[j] + h;
            let fp = cost.value(&probe);
            probe[j] = x[j] - h;
            let fm = cost.value(&probe);
            probe[j] = x[j];
            let slow = (fp - fm) / (2.0 * h);
            assert!(
                (fast[j] - slow).abs() < 1e-6,
                "coord {j}: {} vs {}",
                fast[j],
                slow
            );
        }
    }

    #[test]
    fn central_and_one_sided_differences_agree_to_first_order() {
        let space = space4();
        let target = pauli_x_embed(0, 3, 4).unwrap();
        let cost = SnapdGateCost::new(&target, space, 2, false).unwrap();
        let x = snapd_init(4, 2, false, 29);
        let mut central = vec![0.0; x.len()];
        cost.fd_gradient(&x, 1e-7, &mut central);
        let base = cost.value(&x);
        let mut probe = x.clone();
        for j in 0..x.len() {
            // Same relative step as the central difference: the gap between the
            // two estimates is then the pure first-order truncation term.
            let h = 1e-7 * (1.0 + x[j].abs());
            probe[j] = x[j] + h;
            let one_sided = (cost.value(&probe) - base) / h;
            probe[j] = x[j];
            let scale = central[j].abs().max(one_sided.abs()).max(1e-2);
            assert!(
                (central[j] - one_sided).abs() / scale < 1e-4,
                "coord {j}: {} vs {}",
                central[j],
                one_sided
            );
        }
    }

    #[test]
    fn two_level_bit_flip_synthesis_reaches_target() {
        // Synthesis runs in the bare computational space: a B-block circuit
        // has too few parameters to also pin down guard-level amplitudes, and
        // the reference decompositions assume none.
        let space = FockSpace::with_guard(2, 0).unwrap();
        let target = pauli_x_embed(0, 1, 2).unwrap();
        let cost = SnapdGateCost::new(&target, space, 1, false).unwrap();
        let config = OptimizationConfig {
            cost_target: Some(1e-10),
            ..Default::default()
        };
        let ms = MultiStart {
            stop_when: Some(1e-10),
            ..MultiStart::sampled(20, 0)
        };
        let out = multi_start(&cost, &|seed| snapd_init(2, 1, false, seed), &ms, &config)
            .unwrap();
        assert!(out.best.cost < 1e-6, "best infidelity {}", out.best.cost);
    }

    #[test]
    fn coherent_state_is_prepared_by_a_lone_displacement() {
        // The residual infidelity is the Poisson tail mass P(n >= d; |a|^2),
        // so d must be large enough for the 1e-6 bound: about 8e-10 at d = 12.
        let d = 12;
        let space = FockSpace::with_guard(d, 8).unwrap();
        let alpha = 1.0f64;
        // Coherent amplitudes c_n = e^{-|a|^2/2} a^n / sqrt(n!), truncated to
        // the computational levels and renormalized.
        let mut c = vec![0.0f64; d];
        let mut term = (-alpha * alpha / 2.0).exp();
        for (n, slot) in c.iter_mut().enumerate() {
            *slot = term;
            term *= alpha / ((n + 1) as f64).sqrt();
        }
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let target: CVec = c.iter().map(|v| C64::new(v / norm, 0.0)).collect();
        let p = SnapDParams::from_parts(d, vec![alpha, 0.0], None, vec![vec![0.0; d]]).unwrap();
        let infid = snapd_state_infidelity(&p, &target, space).unwrap();
        assert!(infid < 1e-6, "infidelity {infid}");
    }

    #[test]
    fn fock_three_preparation_at_two_blocks() {
        let space = FockSpace::with_guard(6, 0).unwrap();
        let target = fock_state(3, 6).unwrap();
        let cost = SnapdStateCost::new(&target, space, 2, false).unwrap();
        let config = OptimizationConfig {
            cost_target: Some(1e-11),
            ..Default::default()
        };
        let ms = MultiStart {
            stop_when: Some(1e-11),
            ..MultiStart::sampled(20, 1)
        };
        let out = multi_start(&cost, &|seed| snapd_init(6, 2, false, seed), &ms, &config)
            .unwrap();
        assert!(out.best.cost < 1e-10, "best infidelity {}", out.best.cost);
    }

    #[test]
    fn widening_the_guard_band_leaves_the_projected_infidelity_fixed() {
        // Guard convergence is set by the tail element <0|D(a)|N|, roughly
        // e^{-|a|^2/2} |a|^N / sqrt(N!), so the 1e-8 stability window at
        // n_guard = 4 only covers small displacements.
        let mut rng = ChaCha8Rng::seed_from_u64(517);
        let target = pauli_x_embed(1, 2, 4).unwrap();
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let alphas: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.1..0.1)).collect();
            let alphas_im: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.1..0.1)).collect();
            let thetas: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..4).map(|_| rng.gen_range(-PI..PI)).collect())
                .collect();
            let p = SnapDParams::from_parts(4, alphas, Some(alphas_im), thetas).unwrap();
            let narrow = snapd_gate_infidelity(&p, &target, FockSpace::with_guard(4, 4).unwrap())
                .unwrap();
            let wide = snapd_gate_infidelity(&p, &target, FockSpace::with_guard(4, 8).unwrap())
                .unwrap();
            worst = worst.max((narrow - wide).abs());
        }
        assert!(worst < 1e-8, "worst guard sensitivity {worst:.3e}");
        // At |a| = 2 the same widening moves the infidelity at the 1e-3 level:
        // four guard levels are nowhere near converged for large displacements.
        let big =
            SnapDParams::from_parts(4, vec![2.0, -2.0], None, vec![vec![0.4, 1.1, -0.7, 2.3]])
                .unwrap();
        let narrow =
            snapd_gate_infidelity(&big, &target, FockSpace::with_guard(4, 4).unwrap()).unwrap();
        let wide =
            snapd_gate_infidelity(&big, &target, FockSpace::with_guard(4, 8).unwrap()).unwrap();
        assert!(
            (narrow - wide).abs() > 1e-3,
            "expected visible truncation shift, got {:.3e}",
            (narrow - wide).abs()
        );
    }

    #[test]
    fn extra_zero_block_reproduces_the_circuit() {
        let x = snapd_init(4, 2, false, 8);
        let p = SnapDParams::from_flat(4, 2, false, &x).unwrap();
        let grown = p.with_extra_block();
        assert_eq!(grown.blocks(), 3);
        let a = build_circuit(&p, space4()).unwrap();
        let b = build_circuit(&grown, space4()).unwrap();
        assert!(max_abs_diff(&a, &b) < 1e-13);
    }

    #[test]
    fn best_of_k_is_monotone_in_block_count() {
        let space = FockSpace::new(3).unwrap();
        let target = pauli_x_embed(0, 2, 3).unwrap();
        let config = OptimizationConfig {
            max_iterations: 300,
            ..Default::default()
        };
        let cost1 = SnapdGateCost::new(&target, space, 1, false).unwrap();
        let out1 = multi_start(
            &cost1,
            &|seed| snapd_init(3, 1, false, seed),
            &MultiStart::sampled(3, 7),
            &config,
        )
        .unwrap();
        let warm = SnapDParams::from_flat(3, 1, false, &out1.best.x)
            .unwrap()
            .with_extra_block()
            .flatten();
        let cost2 = SnapdGateCost::new(&target, space, 2, false).unwrap();
        let out2 = multi_start(
            &cost2,
            &|seed| snapd_init(3, 2, false, seed),
            &MultiStart {
                extra_inits: vec![warm],
                ..MultiStart::sampled(3, 7)
            },
            &config,
        )
        .unwrap();
        assert!(out2.best.cost <= out1.best.cost + 1e-9);
    }

    #[test]
    fn gate_time_endpoints() {
        let p1 = SnapDParams::zeros(4, 1);
        let fast = TimingConfig {
            t_snap_us: 1.0,
            t_disp_us: 0.01,
            ..Default::default()
        };
        assert_abs_diff_eq!(gate_time_estimate_snapd(&p1, &fast), 1.02, epsilon = 1e-12);
        let p5 = SnapDParams::zeros(4, 5);
        let slow = TimingConfig {
            t_snap_us: 50.0,
            t_disp_us: 0.2,
            ..Default::default()
        };
        assert_abs_diff_eq!(gate_time_estimate_snapd(&p5, &slow), 251.2, epsilon = 1e-12);
        // Linear in B: doubling blocks doubles the per-block part.
        let p10 = SnapDParams::zeros(4, 10);
        let t5 = gate_time_estimate_snapd(&p5, &slow);
        let t10 = gate_time_estimate_snapd(&p10, &slow);
        assert_abs_diff_eq!(t10 - slow.t_disp_us, 2.0 * (t5 - slow.t_disp_us), epsilon = 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn snap_diagonal_has_unit_modulus(thetas in proptest::collection::vec(-10.0f64..10.0, 4)) {
            let s = snap(&thetas, space4()).unwrap();
            for n in 0..8 {
                prop_assert!((s[(n, n)].norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
