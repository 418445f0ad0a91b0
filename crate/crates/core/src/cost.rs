//! Infidelity measures used as optimization costs.

use serde::{Deserialize, Serialize};

use crate::eig::spectral_norm;
use crate::error::Error;
use crate::types::{dagger, identity, CMat, CVec, C64};
use crate::Result;

/// Infidelity of a synthesized circuit together with the population it left
/// outside the computational block.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FidelityReport {
    pub infidelity: f64,
    pub leakage: f64,
}

fn check_square_pair(target: &CMat, v: &CMat) -> Result<usize> {
    let n = target.nrows();
    if target.ncols() != n {
        return Err(Error::NotSquare {
            rows: n,
            cols: target.ncols(),
        });
    }
    if v.dim() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.nrows(),
        });
    }
    Ok(n)
}

/// Trace infidelity `1 - |Tr(target^dag v)|^2 / dim_norm^2`.
///
/// Invariant under a global phase of either argument; `dim_norm` is the
/// dimension of the block the trace runs over (`d` for cavity-only gates,
/// `2d` for joint-space gates).
pub fn trace_infidelity(target: &CMat, v: &CMat, dim_norm: f64) -> Result<f64> {
    let n = check_square_pair(target, v)?;
    if dim_norm <= 0.0 {
        return Err(Error::NotPositive {
            what: "dim_norm",
            value: dim_norm,
        });
    }
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            tr += target[(k, i)].conj() * v[(k, i)];
        }
    }
    Ok((1.0 - tr.norm_sqr() / (dim_norm * dim_norm)).max(0.0))
}

/// Normwise cost `|| 1 - target^dag v ||_2` (spectral norm).
///
/// Zero iff `v` equals `target` including global phase; ranges over [0, 2]
/// for unitary arguments.
pub fn one_minus_norm(target: &CMat, v: &CMat) -> Result<f64> {
    let n = check_square_pair(target, v)?;
    let diff = identity(n) - dagger(target).dot(v);
    Ok(spectral_norm(&diff))
}

/// Direct difference norm `|| target - v ||_2` (spectral norm).
pub fn diff_norm(target: &CMat, v: &CMat) -> Result<f64> {
    check_square_pair(target, v)?;
    Ok(spectral_norm(&(target - v)))
}

/// State-preparation infidelity `1 - |<target| v |initial>|^2`.
///
/// Both states must be normalized to 1 within `1e-8`.
pub fn state_prep_infidelity(target: &CVec, v: &CMat, initial: &CVec) -> Result<f64> {
    let n = v.nrows();
    if v.ncols() != n {
        return Err(Error::NotSquare {
            rows: n,
            cols: v.ncols(),
        });
    }
    if target.len() != n || initial.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: target.len().min(initial.len()),
        });
    }
    for s in [target, initial] {
        let norm = s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized { norm });
        }
    }
    let evolved = v.dot(initial);
    let overlap: C64 = target
        .iter()
        .zip(evolved.iter())
        .map(|(t, e)| t.conj() * e)
        .sum();
    Ok((1.0 - overlap.norm_sqr()).max(0.0))
}
