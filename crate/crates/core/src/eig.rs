//! Hermitian eigenvalues by cyclic Jacobi rotations; spectral norms derive
//! from them. Deterministic and dependency-free, which is all the small dense
//! matrices here need.

use crate::types::{dagger, frobenius_norm, CMat, C64};

/// Eigenvalues of a Hermitian matrix, ascending. The input is symmetrized
/// first, so tiny anti-Hermitian roundoff is tolerated.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "hermitian_eigenvalues needs a square matrix");
    let mut m = (a + &dagger(a)).mapv(|z| z * C64::new(0.5, 0.0));
    let scale = frobenius_norm(&m).max(1.0);
    let tol = 1e-14 * scale;

    for _sweep in 0..50 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let beta = apq.norm();
                if beta <= tol * 1e-2 {
                    continue;
                }
                let phase = apq / beta;
                let alpha = m[(p, p)].re;
                let gamma = m[(q, q)].re;
                let tau = (gamma - alpha) / (2.0 * beta);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let cs = C64::new(c, 0.0);
                let sp = phase * s;

                // Rows p and q under the rotation's conjugate transpose.
                for j in 0..n {
                    let mp = m[(p, j)];
                    let mq = m[(q, j)];
                    m[(p, j)] = cs * mp - sp * mq;
                    m[(q, j)] = sp.conj() * mp + cs * mq;
                }
                // Columns p and q under the rotation itself.
                for i in 0..n {
                    let mp = m[(i, p)];
                    let mq = m[(i, q)];
                    m[(i, p)] = cs * mp - sp.conj() * mq;
                    m[(i, q)] = sp * mp + cs * mq;
                }
            }
        }
    }

    let mut eigs: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}

/// Spectral norm (largest singular value), computed as the square root of the
/// top eigenvalue of `a^dag a`.
pub fn spectral_norm(a: &CMat) -> f64 {
    if a.iter().all(|z| z.norm_sqr() == 0.0) {
        return 0.0;
    }
    let gram = dagger(a).dot(a);
    let eigs = hermitian_eigenvalues(&gram);
    eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}
