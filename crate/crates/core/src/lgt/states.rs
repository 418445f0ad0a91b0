//! Reference cavity states used as preparation targets.

use crate::error::Error;
use crate::types::{CVec, C64};
use crate::Result;

/// Fock basis state |n> in a `dim`-dimensional register.
pub fn fock_state(n: usize, dim: usize) -> Result<CVec> {
    if n >= dim {
        return Err(Error::IndexOutOfRange { index: n, dim });
    }
    let mut v = CVec::zeros(dim);
    v[n] = C64::new(1.0, 0.0);
    Ok(v)
}

/// Uniform superposition `(1/sqrt(d)) sum_n |n>`, the image of |0> under the
/// d-dimensional Hadamard.
pub fn hadamard_state(dim: usize) -> Result<CVec> {
    if dim == 0 {
        return Err(Error::OutOfDomain {
            what: "dimension",
            value: 0.0,
        });
    }
    let amp = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
    Ok(CVec::from_elem(dim, amp))
}

/// Zero-pad a computational-space state up to the truncated simulation space.
pub fn pad_state(v: &CVec, n_levels: usize) -> Result<CVec> {
    if v.len() > n_levels {
        return Err(Error::DimensionMismatch {
            expected: n_levels,
            got: v.len(),
        });
    }
    let mut out = CVec::zeros(n_levels);
    out.slice_mut(ndarray::s![..v.len()]).assign(v);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hadamard_component() {
        let h = hadamard_state(4).unwrap();
        assert_abs_diff_eq!(h[3].re, 0.5, epsilon = 1e-15);
        let norm: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn fock_state_bounds() {
        assert!(fock_state(3, 4).is_ok());
        assert!(fock_state(4, 4).is_err());
    }

    #[test]
    fn padding_preserves_amplitudes() {
        let v = fock_state(2, 4).unwrap();
        let p = pad_state(&v, 8).unwrap();
        assert_eq!(p.len(), 8);
        assert_abs_diff_eq!(p[2].re, 1.0);
        assert_abs_diff_eq!(p[7].norm(), 0.0);
    }
}
