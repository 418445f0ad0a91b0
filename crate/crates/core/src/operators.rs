//! Ladder operators, displacements, qubit Paulis and computational-block
//! projection on truncated spaces.

use ndarray as nd;

use crate::expm::{expm, expm_real, to_complex};
use crate::fock::{FockSpace, JointSpace};
use crate::types::{CMat, C64};

/// Annihilation operator on the truncated space: `a|n> = sqrt(n)|n-1>`.
pub fn annihilation(space: FockSpace) -> CMat {
    let n = space.n_levels();
    let mut a = CMat::zeros((n, n));
    for k in 1..n {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// Creation operator, the conjugate transpose of [`annihilation`].
pub fn creation(space: FockSpace) -> CMat {
    let n = space.n_levels();
    let mut ad = CMat::zeros((n, n));
    for k in 1..n {
        ad[(k, k - 1)] = C64::new((k as f64).sqrt(), 0.0);
    }
    ad
}

/// Photon-number operator `diag(0, 1, ..., n_levels - 1)`.
pub fn number(space: FockSpace) -> CMat {
    let n = space.n_levels();
    CMat::from_diag(&nd::Array1::from_iter(
        (0..n).map(|k| C64::new(k as f64, 0.0)),
    ))
}

/// Displacement `D(alpha) = exp(alpha a^dag - alpha^* a)` on the truncated
/// space. The truncated generator is exactly anti-Hermitian, so the result is
/// exactly unitary on the truncated space (it is not the projection of the
/// infinite-dimensional displacement). Real `alpha` takes a real-arithmetic
/// path roughly 4x faster.
pub fn displacement(alpha: C64, space: FockSpace) -> CMat {
    let n = space.n_levels();
    if alpha.im == 0.0 {
        let mut k = nd::Array2::<f64>::zeros((n, n));
        for m in 1..n {
            let c = alpha.re * (m as f64).sqrt();
            k[(m, m - 1)] = c;
            k[(m - 1, m)] = -c;
        }
        return to_complex(&expm_real(&k).expect("real displacement generator is finite"));
    }
    let mut g = CMat::zeros((n, n));
    for m in 1..n {
        let c = (m as f64).sqrt();
        g[(m, m - 1)] = alpha * c;
        g[(m - 1, m)] = -alpha.conj() * c;
    }
    expm(&g).expect("displacement generator is finite")
}

/// Advisory raised when a displacement is large enough that the guard band may
/// be too thin for faithful dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationWarning {
    pub alpha: C64,
    pub n_levels: usize,
    /// Heuristic population estimate beyond the truncation, `exp(-(N - |alpha|^2))`.
    pub estimated_leakage: f64,
}

impl std::fmt::Display for TruncationWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "displacement |alpha| = {:.3} on {} levels: estimated truncation leakage {:.2e}",
            self.alpha.norm(),
            self.n_levels,
            self.estimated_leakage
        )
    }
}

/// Check a displacement amplitude against the truncation heuristic; `Some` when
/// the estimated beyond-truncation population exceeds `1e-6`. Advisory only.
pub fn truncation_check(alpha: C64, space: FockSpace) -> Option<TruncationWarning> {
    let n = space.n_levels() as f64;
    let est = (-(n - alpha.norm_sqr())).exp();
    (est > 1e-6).then(|| TruncationWarning {
        alpha,
        n_levels: space.n_levels(),
        estimated_leakage: est,
    })
}

/// Restrict a cavity operator to the computational `d x d` block.
///
/// The second return value is the leakage `1 - ||block||_F^2 / d`; it is zero
/// exactly when the operator is block-diagonal with a unitary computational
/// block.
pub fn project_computational(m: &CMat, space: FockSpace) -> (CMat, f64) {
    let d = space.d();
    let block = m.slice(nd::s![..d, ..d]).to_owned();
    let fro2: f64 = block.iter().map(|z| z.norm_sqr()).sum();
    (block, (1.0 - fro2 / d as f64).max(0.0))
}

/// Restrict a joint transmon-cavity operator to the `2d x 2d` computational
/// block (both qubit levels, cavity levels below `d`), with leakage normalized
/// by `2d`.
pub fn project_joint(m: &CMat, joint: JointSpace) -> (CMat, f64) {
    let d = joint.cavity().d();
    let n = joint.cavity().n_levels();
    let mut block = CMat::zeros((2 * d, 2 * d));
    for qi in 0..2 {
        for qj in 0..2 {
            for i in 0..d {
                for j in 0..d {
                    block[(qi * d + i, qj * d + j)] = m[(qi * n + i, qj * n + j)];
                }
            }
        }
    }
    let fro2: f64 = block.iter().map(|z| z.norm_sqr()).sum();
    (block, (1.0 - fro2 / (2.0 * d as f64)).max(0.0))
}

/// Pauli X in the (g, e) basis.
pub fn sigma_x() -> CMat {
    nd::array![
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
    ]
}

/// Pauli Y in the (g, e) basis.
pub fn sigma_y() -> CMat {
    nd::array![
        [C64::new(0.0, 0.0), C64::new(0.0, 1.0)],
        [C64::new(0.0, -1.0), C64::new(0.0, 0.0)]
    ]
}

/// Pauli Z with |e> on +1: `diag(-1, +1)` in the (g, e) basis.
pub fn sigma_z() -> CMat {
    nd::array![
        [C64::new(-1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
    ]
}

/// Raising operator `|e><g|`.
pub fn sigma_plus() -> CMat {
    nd::array![
        [C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
    ]
}

/// Lowering operator `|g><e|`.
pub fn sigma_minus() -> CMat {
    nd::array![
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(0.0, 0.0)]
    ]
}
