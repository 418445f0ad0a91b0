//! The echoed-conditional-displacement ansatz: qubit-conditioned cavity
//! displacements interleaved with unselective qubit rotations on the joint
//! transmon-cavity space.
//!
//! A circuit with `B` blocks is
//! `R(theta_0, phi_0) ECD(alpha_0) ... R(theta_{B-1}, phi_{B-1}) ECD(alpha_{B-1}) R(theta_B, phi_B)`,
//! the rightmost factor applied first to states, giving `4B + 2` free
//! parameters with complex amplitudes and `3B + 2` in the real-amplitude
//! compatibility mode.

use ndarray as nd;
use serde::{Deserialize, Serialize};

use crate::cost::FidelityReport;
use crate::error::Error;
use crate::factored::{full_overlap, overlap_to_infidelity, replaced_qubit, FactorTraces};
use crate::fock::{FockSpace, JointSpace};
use crate::operators::{displacement, project_joint};
use crate::opt::cost::CostFunction;
use crate::timing::TimingConfig;
use crate::types::{dagger, identity, kron, CMat, CVec, C64};
use crate::Result;

/// Parameters of one ECD-and-rotation circuit.
///
/// Amplitudes are complex by default; the real mode reproduces the `3B + 2`
/// parameter count of the original proposal. Flattened layout: amplitude real
/// parts (`B`), then imaginary parts when complex, then the `B + 1` polar
/// angles, then the `B + 1` azimuthal angles.
#[derive(Debug, Clone, PartialEq)]
pub struct ECDParams {
    d: usize,
    alphas: Vec<f64>,
    alphas_im: Option<Vec<f64>>,
    thetas: Vec<f64>,
    phis: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct EcdWire {
    ansatz: String,
    d: usize,
    #[serde(rename = "B")]
    b: usize,
    alphas_re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alphas_im: Option<Vec<f64>>,
    thetas: Vec<f64>,
    phis: Vec<f64>,
}

impl ECDParams {
    /// All-zero parameters with real amplitudes.
    pub fn zeros(d: usize, blocks: usize) -> Self {
        Self {
            d,
            alphas: vec![0.0; blocks],
            alphas_im: None,
            thetas: vec![0.0; blocks + 1],
            phis: vec![0.0; blocks + 1],
        }
    }

    /// All-zero parameters with complex amplitudes enabled.
    pub fn zeros_complex(d: usize, blocks: usize) -> Self {
        Self {
            alphas_im: Some(vec![0.0; blocks]),
            ..Self::zeros(d, blocks)
        }
    }

    pub fn from_parts(
        d: usize,
        alphas: Vec<f64>,
        alphas_im: Option<Vec<f64>>,
        thetas: Vec<f64>,
        phis: Vec<f64>,
    ) -> Result<Self> {
        let blocks = alphas.len();
        if blocks == 0 {
            return Err(Error::WrongParameterCount {
                expected: 1,
                got: 0,
            });
        }
        if let Some(im) = &alphas_im {
            if im.len() != blocks {
                return Err(Error::WrongParameterCount {
                    expected: blocks,
                    got: im.len(),
                });
            }
        }
        if thetas.len() != blocks + 1 {
            return Err(Error::WrongAngleCount {
                expected: blocks + 1,
                got: thetas.len(),
            });
        }
        if phis.len() != blocks + 1 {
            return Err(Error::WrongAngleCount {
                expected: blocks + 1,
                got: phis.len(),
            });
        }
        Ok(Self {
            d,
            alphas,
            alphas_im,
            thetas,
            phis,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn blocks(&self) -> usize {
        self.alphas.len()
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

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    /// The `k`-th displacement amplitude as a complex number.
    pub fn alpha(&self, k: usize) -> C64 {
        let im = self.alphas_im.as_ref().map_or(0.0, |v| v[k]);
        C64::new(self.alphas[k], im)
    }

    /// The `k`-th rotation pair `(theta, phi)`.
    pub fn rotation(&self, k: usize) -> (f64, f64) {
        (self.thetas[k], self.phis[k])
    }

    /// Flattened length: `4B + 2` complex, `3B + 2` real.
    pub fn param_count(blocks: usize, complex_alpha: bool) -> usize {
        let per_alpha = if complex_alpha { 2 } else { 1 };
        per_alpha * blocks + 2 * (blocks + 1)
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(Self::param_count(self.blocks(), self.complex_alpha()));
        out.extend_from_slice(&self.alphas);
        if let Some(im) = &self.alphas_im {
            out.extend_from_slice(im);
        }
        out.extend_from_slice(&self.thetas);
        out.extend_from_slice(&self.phis);
        out
    }

    pub fn from_flat(d: usize, blocks: usize, complex_alpha: bool, x: &[f64]) -> Result<Self> {
        let expected = Self::param_count(blocks, complex_alpha);
        if x.len() != expected {
            return Err(Error::WrongParameterCount {
                expected,
                got: x.len(),
            });
        }
        let alphas = x[..blocks].to_vec();
        let mut at = blocks;
        let alphas_im = complex_alpha.then(|| {
            let im = x[at..at + blocks].to_vec();
            at += blocks;
            im
        });
        let thetas = x[at..at + blocks + 1].to_vec();
        let phis = x[at + blocks + 1..].to_vec();
        Self::from_parts(d, alphas, alphas_im, thetas, phis)
    }

    /// One more block that leaves the circuit fixed up to a global phase: the
    /// appended `ECD(0) R(pi, 0)` tail composes to `-i` times the identity.
    pub fn with_extra_block(&self) -> Self {
        let mut grown = self.clone();
        grown.alphas.push(0.0);
        if let Some(im) = &mut grown.alphas_im {
            im.push(0.0);
        }
        grown.thetas.push(std::f64::consts::PI);
        grown.phis.push(0.0);
        grown
    }

    pub fn to_json(&self) -> String {
        let wire = EcdWire {
            ansatz: "ecd".to_string(),
            d: self.d,
            b: self.blocks(),
            alphas_re: self.alphas.clone(),
            alphas_im: self.alphas_im.clone(),
            thetas: self.thetas.clone(),
            phis: self.phis.clone(),
        };
        serde_json::to_string(&wire).expect("plain numeric fields")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: EcdWire =
            serde_json::from_str(text).map_err(|e| Error::Invalid(e.to_string()))?;
        if wire.ansatz != "ecd" {
            return Err(Error::Invalid(format!(
                "expected ansatz \"ecd\", got \"{}\"",
                wire.ansatz
            )));
        }
        if wire.alphas_re.len() != wire.b {
            return Err(Error::WrongParameterCount {
                expected: wire.b,
                got: wire.alphas_re.len(),
            });
        }
        Self::from_parts(wire.d, wire.alphas_re, wire.alphas_im, wire.thetas, wire.phis)
    }
}

/// The echoed conditional displacement
/// `D(alpha/2) (x) |e><g| + D(-alpha/2) (x) |g><e|` on the joint space, in the
/// qubit-slow basis ordering.
///
/// Large amplitudes on a shallow space are advisory territory for
/// `truncation_check(alpha / 2, space)`.
pub fn ecd(alpha: C64, space: FockSpace) -> CMat {
    let n = space.n_levels();
    let up = displacement(alpha * 0.5, space);
    let down = displacement(alpha * -0.5, space);
    let mut m = CMat::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            // e <- g carries the +alpha/2 branch, g <- e the echoed partner.
            m[(n + i, j)] = up[(i, j)];
            m[(i, n + j)] = down[(i, j)];
        }
    }
    m
}

/// The unselective qubit rotation
/// `exp(-i (theta/2) (sigma_x cos(phi) + sigma_y sin(phi)))` as a 2x2 matrix.
pub fn qubit_rotation(theta: f64, phi: f64) -> CMat {
    let c = C64::new((theta / 2.0).cos(), 0.0);
    let s = (theta / 2.0).sin();
    let off = C64::new(0.0, -s);
    nd::array![
        [c, off * C64::from_polar(1.0, -phi)],
        [off * C64::from_polar(1.0, phi), c]
    ]
}

fn promote(q: &CMat, space: FockSpace) -> CMat {
    kron(q, &identity(space.n_levels()))
}

/// Factors of the circuit left to right: rotations at even positions, ECD
/// blocks at odd ones.
fn factor_list(p: &ECDParams, space: FockSpace) -> Vec<CMat> {
    let b = p.blocks();
    let mut fs = Vec::with_capacity(2 * b + 1);
    for k in 0..b {
        let (theta, phi) = p.rotation(k);
        fs.push(promote(&qubit_rotation(theta, phi), space));
        fs.push(ecd(p.alpha(k), space));
    }
    let (theta, phi) = p.rotation(b);
    fs.push(promote(&qubit_rotation(theta, phi), space));
    fs
}

/// The full circuit unitary on the joint space, rightmost factor applied
/// first; the qubit starts conceptually in `|g>`.
pub fn build_circuit_ecd(p: &ECDParams, space: FockSpace) -> Result<CMat> {
    let fs = factor_list(p, space);
    let mut u = fs[0].clone();
    for f in &fs[1..] {
        u = u.dot(f);
    }
    Ok(u)
}

/// `qubit (x) target` padded with zeros outside the computational cavity
/// levels.
pub(crate) fn joint_pad_target(target: &CMat, qubit: &CMat, space: FockSpace) -> Result<CMat> {
    let d = space.d();
    if target.nrows() != target.ncols() {
        return Err(Error::NotSquare {
            rows: target.nrows(),
            cols: target.ncols(),
        });
    }
    if target.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: target.nrows(),
        });
    }
    if qubit.nrows() != 2 || qubit.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: qubit.nrows().max(qubit.ncols()),
        });
    }
    let n = space.n_levels();
    let mut pad = CMat::zeros((2 * n, 2 * n));
    for qa in 0..2 {
        for qb in 0..2 {
            for i in 0..d {
                for j in 0..d {
                    pad[(qa * n + i, qb * n + j)] = qubit[(qa, qb)] * target[(i, j)];
                }
            }
        }
    }
    Ok(pad)
}

/// Trace infidelity of the projected `2d x 2d` joint block against
/// `qubit_target (x) target`, normalized by `2d`, with the population outside
/// the block as leakage.
pub fn ecd_gate_report_with_qubit(
    p: &ECDParams,
    target: &CMat,
    qubit_target: &CMat,
    space: FockSpace,
) -> Result<FidelityReport> {
    let pad = joint_pad_target(target, qubit_target, space)?;
    let u = build_circuit_ecd(p, space)?;
    let (_, leakage) = project_joint(&u, JointSpace::new(space));
    let dim_norm = 2.0 * space.d() as f64;
    Ok(FidelityReport {
        infidelity: overlap_to_infidelity(full_overlap(&pad, &u), dim_norm),
        leakage,
    })
}

/// [`ecd_gate_report_with_qubit`] with the default identity qubit closure: a
/// good circuit implements `target` on the cavity and returns the qubit
/// unchanged.
pub fn ecd_gate_report(p: &ECDParams, target: &CMat, space: FockSpace) -> Result<FidelityReport> {
    ecd_gate_report_with_qubit(p, target, &identity(2), space)
}

pub fn ecd_gate_infidelity(p: &ECDParams, target: &CMat, space: FockSpace) -> Result<f64> {
    Ok(ecd_gate_report(p, target, space)?.infidelity)
}

/// State-preparation infidelity `1 - |(<target| (x) <g|) U (|0> (x) |g>)|^2`:
/// the qubit must return to `|g>`. Leakage is the population the prepared
/// state leaves outside the computational cavity levels in either qubit
/// branch.
pub fn ecd_state_report(p: &ECDParams, target: &CVec, space: FockSpace) -> Result<FidelityReport> {
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
    let n = space.n_levels();
    let u = build_circuit_ecd(p, space)?;
    let psi = u.column(0);
    let overlap: C64 = target
        .iter()
        .zip(psi.iter())
        .map(|(t, v)| t.conj() * v)
        .sum();
    let mut in_block = 0.0;
    for q in 0..2 {
        for level in 0..d {
            in_block += psi[q * n + level].norm_sqr();
        }
    }
    Ok(FidelityReport {
        infidelity: (1.0 - overlap.norm_sqr()).max(0.0),
        leakage: (1.0 - in_block).max(0.0),
    })
}

pub fn ecd_state_infidelity(p: &ECDParams, target: &CVec, space: FockSpace) -> Result<f64> {
    Ok(ecd_state_report(p, target, space)?.infidelity)
}

/// Wall-clock estimate `B (T_ecd + T_rot) + T_rot` in microseconds.
pub fn gate_time_estimate_ecd(p: &ECDParams, timing: &TimingConfig) -> f64 {
    let b = p.blocks() as f64;
    b * (timing.t_ecd_us + timing.t_rot_us) + timing.t_rot_us
}

/// Where a flattened coordinate lives in the factor list.
enum Coordinate {
    /// (factor index, imaginary part?)
    Alpha(usize, bool),
    Theta(usize),
    Phi(usize),
}

fn coordinate(j: usize, blocks: usize, complex_alpha: bool) -> Coordinate {
    if j < blocks {
        return Coordinate::Alpha(2 * j + 1, false);
    }
    let mut rest = j - blocks;
    if complex_alpha {
        if rest < blocks {
            return Coordinate::Alpha(2 * rest + 1, true);
        }
        rest -= blocks;
    }
    if rest < blocks + 1 {
        Coordinate::Theta(2 * rest)
    } else {
        Coordinate::Phi(2 * (rest - blocks - 1))
    }
}

/// Gate-synthesis objective: trace infidelity on the joint computational
/// block with the identity qubit closure.
pub struct EcdGateCost {
    space: FockSpace,
    blocks: usize,
    complex_alpha: bool,
    /// The `d x d` cavity target, and the padded joint adjoint, cached.
    t_block: CMat,
    t_pad_dag: CMat,
}

impl EcdGateCost {
    pub fn new(
        target: &CMat,
        space: FockSpace,
        blocks: usize,
        complex_alpha: bool,
    ) -> Result<Self> {
        let pad = joint_pad_target(target, &identity(2), space)?;
        Ok(Self {
            space,
            blocks,
            complex_alpha,
            t_block: target.clone(),
            t_pad_dag: dagger(&pad),
        })
    }

    fn params(&self, x: &[f64]) -> ECDParams {
        ECDParams::from_flat(self.space.d(), self.blocks, self.complex_alpha, x)
            .expect("dim() fixes the length")
    }
}

impl CostFunction for EcdGateCost {
    fn dim(&self) -> usize {
        ECDParams::param_count(self.blocks, self.complex_alpha)
    }

    fn value(&self, x: &[f64]) -> f64 {
        let p = self.params(x);
        let fs = factor_list(&p, self.space);
        // Only the 2d computational columns enter the overlap, so push a thin
        // slab through the chain instead of forming the full product.
        let n = self.space.n_levels();
        let d = self.space.d();
        let mut slab = CMat::zeros((2 * n, 2 * d));
        for q in 0..2 {
            for c in 0..d {
                slab[(q * n + c, q * d + c)] = C64::new(1.0, 0.0);
            }
        }
        for f in fs.iter().rev() {
            slab = f.dot(&slab);
        }
        let mut overlap = C64::new(0.0, 0.0);
        for q in 0..2 {
            for r in 0..d {
                for c in 0..d {
                    overlap += self.t_block[(r, c)].conj() * slab[(q * n + r, q * d + c)];
                }
            }
        }
        overlap_to_infidelity(overlap, 2.0 * d as f64)
    }

    fn fd_gradient(&self, x: &[f64], rel_step: f64, out: &mut [f64]) {
        let p = self.params(x);
        let fs = factor_list(&p, self.space);
        let traces = FactorTraces::build(&fs, &self.t_pad_dag);
        let n = self.space.n_levels();
        let dim_norm = 2.0 * self.space.d() as f64;
        // Rotation probes only need the qubit-side partial trace of each M_i.
        let qubit_blocks: Vec<[[C64; 2]; 2]> = (0..=self.blocks)
            .map(|k| traces.qubit_block(2 * k, n))
            .collect();
        for (j, g) in out.iter_mut().enumerate() {
            let h = rel_step * (1.0 + x[j].abs());
            match coordinate(j, self.blocks, self.complex_alpha) {
                Coordinate::Alpha(i, imag) => {
                    let alpha = p.alpha((i - 1) / 2);
                    let delta = if imag {
                        C64::new(0.0, h)
                    } else {
                        C64::new(h, 0.0)
                    };
                    let plus = traces.replaced(i, &ecd(alpha + delta, self.space));
                    let minus = traces.replaced(i, &ecd(alpha - delta, self.space));
                    *g = (overlap_to_infidelity(plus, dim_norm)
                        - overlap_to_infidelity(minus, dim_norm))
                        / (2.0 * h);
                }
                Coordinate::Theta(i) => {
                    let (theta, phi) = p.rotation(i / 2);
                    let s = &qubit_blocks[i / 2];
                    let plus = replaced_qubit(s, &qubit_rotation(theta + h, phi));
                    let minus = replaced_qubit(s, &qubit_rotation(theta - h, phi));
                    *g = (overlap_to_infidelity(plus, dim_norm)
                        - overlap_to_infidelity(minus, dim_norm))
                        / (2.0 * h);
                }
                Coordinate::Phi(i) => {
                    let (theta, phi) = p.rotation(i / 2);
                    let s = &qubit_blocks[i / 2];
                    let plus = replaced_qubit(s, &qubit_rotation(theta, phi + h));
                    let minus = replaced_qubit(s, &qubit_rotation(theta, phi - h));
                    *g = (overlap_to_infidelity(plus, dim_norm)
                        - overlap_to_infidelity(minus, dim_norm))
                        / (2.0 * h);
                }
            }
        }
    }

    /// The factored gradient costs about two full evaluations (the ECD
    /// probes), not 2n.
    fn gradient_eval_cost(&self) -> usize {
        2
    }
}

/// State-preparation objective:
/// `1 - |(<target| (x) <g|) U (|0> (x) |g>)|^2`.
pub struct EcdStateCost {
    space: FockSpace,
    blocks: usize,
    complex_alpha: bool,
    /// Conjugated target amplitudes on the computational levels.
    target_conj: Vec<C64>,
}

impl EcdStateCost {
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

    fn params(&self, x: &[f64]) -> ECDParams {
        ECDParams::from_flat(self.space.d(), self.blocks, self.complex_alpha, x)
            .expect("dim() fixes the length")
    }
}

impl CostFunction for EcdStateCost {
    fn dim(&self) -> usize {
        ECDParams::param_count(self.blocks, self.complex_alpha)
    }

    fn value(&self, x: &[f64]) -> f64 {
        let p = self.params(x);
        let fs = factor_list(&p, self.space);
        let n = self.space.n_levels();
        let mut psi = CVec::zeros(2 * n);
        psi[0] = C64::new(1.0, 0.0);
        for f in fs.iter().rev() {
            psi = f.dot(&psi);
        }
        let overlap: C64 = self
            .target_conj
            .iter()
            .zip(psi.iter())
            .map(|(t, v)| t * v)
            .sum();
        (1.0 - overlap.norm_sqr()).max(0.0)
    }

    fn fd_gradient(&self, x: &[f64], rel_step: f64, out: &mut [f64]) {
        let p = self.params(x);
        let fs = factor_list(&p, self.space);
        let nf = fs.len();
        let n = self.space.n_levels();
        // right[i] = F_i ... F_{last} |g,0>, left[i] = <g,target| F_0 ... F_{i-1}.
        let mut right = vec![CVec::zeros(2 * n); nf + 1];
        right[nf][0] = C64::new(1.0, 0.0);
        for i in (0..nf).rev() {
            right[i] = fs[i].dot(&right[i + 1]);
        }
        let mut left = vec![CVec::zeros(2 * n); nf];
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
        // The qubit-side contraction that replaces a rotation factor in O(1).
        let qubit_pair = |i: usize| -> [[C64; 2]; 2] {
            let mut c = [[C64::new(0.0, 0.0); 2]; 2];
            for (qa, row) in c.iter_mut().enumerate() {
                for (qb, slot) in row.iter_mut().enumerate() {
                    for level in 0..n {
                        *slot += left[i][qa * n + level] * right[i + 1][qb * n + level];
                    }
                }
            }
            c
        };
        let rotated = |c: &[[C64; 2]; 2], r: &CMat| -> C64 {
            let mut amp = C64::new(0.0, 0.0);
            for (qa, row) in c.iter().enumerate() {
                for (qb, val) in row.iter().enumerate() {
                    amp += *val * r[(qa, qb)];
                }
            }
            amp
        };
        for (j, g) in out.iter_mut().enumerate() {
            let h = rel_step * (1.0 + x[j].abs());
            match coordinate(j, self.blocks, self.complex_alpha) {
                Coordinate::Alpha(i, imag) => {
                    let alpha = p.alpha((i - 1) / 2);
                    let delta = if imag {
                        C64::new(0.0, h)
                    } else {
                        C64::new(h, 0.0)
                    };
                    let plus = bilinear(i, &ecd(alpha + delta, self.space));
                    let minus = bilinear(i, &ecd(alpha - delta, self.space));
                    *g = (infid(plus) - infid(minus)) / (2.0 * h);
                }
                Coordinate::Theta(i) => {
                    let (theta, phi) = p.rotation(i / 2);
                    let c = qubit_pair(i);
                    let plus = rotated(&c, &qubit_rotation(theta + h, phi));
                    let minus = rotated(&c, &qubit_rotation(theta - h, phi));
                    *g = (infid(plus) - infid(minus)) / (2.0 * h);
                }
                Coordinate::Phi(i) => {
                    let (theta, phi) = p.rotation(i / 2);
                    let c = qubit_pair(i);
                    let plus = rotated(&c, &qubit_rotation(theta, phi + h));
                    let minus = rotated(&c, &qubit_rotation(theta, phi - h));
                    *g = (infid(plus) - infid(minus)) / (2.0 * h);
                }
            }
        }
    }

    fn gradient_eval_cost(&self) -> usize {
        2
    }
}
