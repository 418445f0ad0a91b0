//! Shared machinery for structure-aware gradients of factored circuits: the
//! response of a trace overlap to replacing one factor of a product.

use crate::types::{identity, CMat, C64};

/// For each factor `F_i` of `U = F_0 ... F_{m-1}`, the overlap with a target
/// responds to a change of that factor alone as `Tr(M_i F_i')` with
/// `M_i = suffix_i T^dag prefix_i`.
pub(crate) struct FactorTraces {
    pub(crate) m: Vec<CMat>,
}

impl FactorTraces {
    pub(crate) fn build(factors: &[CMat], t_pad_dag: &CMat) -> Self {
        let nf = factors.len();
        let n = t_pad_dag.nrows();
        let mut prefix = Vec::with_capacity(nf);
        prefix.push(identity(n));
        for i in 1..nf {
            let next = prefix[i - 1].dot(&factors[i - 1]);
            prefix.push(next);
        }
        let mut suffix = vec![identity(n); nf];
        for i in (0..nf.saturating_sub(1)).rev() {
            suffix[i] = factors[i + 1].dot(&suffix[i + 1]);
        }
        let m = (0..nf)
            .map(|i| suffix[i].dot(&t_pad_dag.dot(&prefix[i])))
            .collect();
        Self { m }
    }

    /// `Tr(M_i F)` for a replacement factor.
    pub(crate) fn replaced(&self, i: usize, f: &CMat) -> C64 {
        let m = &self.m[i];
        let n = m.nrows();
        let mut tr = C64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                tr += m[(a, b)] * f[(b, a)];
            }
        }
        tr
    }

    /// `Tr(M_i F)` for a diagonal factor given its diagonal.
    pub(crate) fn replaced_diag(&self, i: usize, diag: &[C64]) -> C64 {
        let m = &self.m[i];
        diag.iter().enumerate().map(|(n, f)| m[(n, n)] * f).sum()
    }

    /// Partial trace of `M_i` over an `n_levels`-dimensional fast subsystem,
    /// leaving a 2x2 matrix on the slow qubit index.
    pub(crate) fn qubit_block(&self, i: usize, n_levels: usize) -> [[C64; 2]; 2] {
        let m = &self.m[i];
        let mut s = [[C64::new(0.0, 0.0); 2]; 2];
        for (qa, row) in s.iter_mut().enumerate() {
            for (qb, slot) in row.iter_mut().enumerate() {
                for n in 0..n_levels {
                    *slot += m[(qa * n_levels + n, qb * n_levels + n)];
                }
            }
        }
        s
    }
}

/// `Tr(M_i (Q tensor 1))` from the precomputed qubit block of `M_i`.
pub(crate) fn replaced_qubit(s: &[[C64; 2]; 2], q: &CMat) -> C64 {
    let mut tr = C64::new(0.0, 0.0);
    for (qa, row) in s.iter().enumerate() {
        for (qb, val) in row.iter().enumerate() {
            tr += *val * q[(qb, qa)];
        }
    }
    tr
}

/// `sum conj(t_ab) u_ab`; with a target padded by zeros this is the overlap of
/// the target block with the matching block of `u`.
pub(crate) fn full_overlap(pad_target: &CMat, u: &CMat) -> C64 {
    pad_target
        .iter()
        .zip(u.iter())
        .map(|(t, v)| t.conj() * v)
        .sum()
}

/// `1 - |o|^2 / dim^2`, clamped against tiny negative rounding.
pub(crate) fn overlap_to_infidelity(overlap: C64, dim_norm: f64) -> f64 {
    (1.0 - overlap.norm_sqr() / (dim_norm * dim_norm)).max(0.0)
}
