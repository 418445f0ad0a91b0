//! Finite-group multiplication tables, with the 24-element binary tetrahedral
//! group as the headline example.

use ndarray as nd;

use crate::error::Error;
use crate::types::{kron, CMat, C64};
use crate::Result;

/// Largest group order for which dense product-space gate matrices (dimension
/// |G|^2) are emitted.
pub const PRODUCT_SPACE_LIMIT: usize = 6;

/// Multiplication table of a finite group with element 0 the identity.
///
/// Optionally carries a faithful 2x2 unitary representation (the binary
/// tetrahedral group ships with its SU(2) embedding; cyclic groups do not).
#[derive(Debug, Clone)]
pub struct GroupTable {
    labels: Vec<String>,
    mult: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    rep2: Option<Vec<CMat>>,
}

impl GroupTable {
    pub fn order(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, g: usize) -> &str {
        &self.labels[g]
    }

    /// Index of the product `g * h`.
    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.mult[g][h]
    }

    pub fn inverse(&self, g: usize) -> usize {
        self.inverse[g]
    }

    /// 2x2 unitary representation of element `g`, when the group carries one.
    pub fn rep2(&self, g: usize) -> Result<&CMat> {
        self.rep2
            .as_ref()
            .map(|r| &r[g])
            .ok_or(Error::MissingRepresentation)
    }

    /// Real part of the trace of the 2x2 representation.
    pub fn re_trace(&self, g: usize) -> Result<f64> {
        Ok(self.rep2(g)?.diag().sum().re)
    }
}

/// Quaternion units as (w, x, y, z); components stay in {0, +-1/2, +-1}, which
/// f64 represents exactly, so table construction can match exactly.
fn quat_mul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    let [aw, ax, ay, az] = a;
    let [bw, bx, by, bz] = b;
    [
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ]
}

/// The binary tetrahedral group: the 8 Lipschitz units and 16 Hurwitz units
/// of the quaternions. Elements are ordered lexicographically descending on
/// (w, x, y, z), which places the identity first.
pub fn binary_tetrahedral() -> GroupTable {
    let mut elems: Vec<[f64; 4]> = Vec::with_capacity(24);
    for i in 0..4 {
        for s in [1.0f64, -1.0] {
            let mut e = [0.0; 4];
            e[i] = s;
            elems.push(e);
        }
    }
    for sw in [0.5f64, -0.5] {
        for sx in [0.5f64, -0.5] {
            for sy in [0.5f64, -0.5] {
                for sz in [0.5f64, -0.5] {
                    elems.push([sw, sx, sy, sz]);
                }
            }
        }
    }
    elems.sort_by(|a, b| {
        b.iter()
            .zip(a.iter())
            .map(|(x, y)| x.partial_cmp(y).unwrap())
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    debug_assert_eq!(elems[0], [1.0, 0.0, 0.0, 0.0]);

    let index_of = |q: [f64; 4]| -> usize {
        elems
            .iter()
            .position(|e| *e == q)
            .expect("group is closed under multiplication")
    };
    let mult: Vec<Vec<usize>> = elems
        .iter()
        .map(|&a| elems.iter().map(|&b| index_of(quat_mul(a, b))).collect())
        .collect();
    let inverse: Vec<usize> = elems
        .iter()
        .map(|&[w, x, y, z]| index_of([w, -x, -y, -z]))
        .collect();
    let rep2: Vec<CMat> = elems
        .iter()
        .map(|&[w, x, y, z]| {
            nd::array![
                [C64::new(w, x), C64::new(y, z)],
                [C64::new(-y, z), C64::new(w, -x)]
            ]
        })
        .collect();
    let labels = elems
        .iter()
        .map(|&[w, x, y, z]| format!("({w},{x},{y},{z})"))
        .collect();

    GroupTable {
        labels,
        mult,
        inverse,
        rep2: Some(rep2),
    }
}

/// The cyclic group Z_n under addition. No 2x2 representation is attached.
pub fn cyclic(n: usize) -> Result<GroupTable> {
    if n == 0 {
        return Err(Error::OutOfDomain {
            what: "group order",
            value: 0.0,
        });
    }
    Ok(GroupTable {
        labels: (0..n).map(|k| k.to_string()).collect(),
        mult: (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect(),
        inverse: (0..n).map(|i| (n - i) % n).collect(),
        rep2: None,
    })
}

/// Diagonal phase gate `|g> -> exp(i theta ReTr(rep2(g))) |g>` on the group
/// register; the phases are a class function of the group.
pub fn trace_phase_gate(group: &GroupTable, theta: f64) -> Result<CMat> {
    let n = group.order();
    let mut m = CMat::zeros((n, n));
    for g in 0..n {
        let phase = theta * group.re_trace(g)?;
        m[(g, g)] = C64::from_polar(1.0, phase);
    }
    Ok(m)
}

/// Controlled group multiplication `|g>|h> -> |g>|g h>` as a dense matrix on
/// the |G|^2-dimensional product space. Desk-scale only: groups larger than
/// [`PRODUCT_SPACE_LIMIT`] get permutation tuples instead (see
/// [`multiplication_permutations`](super::perm::multiplication_permutations)).
pub fn multiplication_gate_matrix(group: &GroupTable) -> Result<CMat> {
    let n = group.order();
    if n > PRODUCT_SPACE_LIMIT {
        return Err(Error::GroupTooLarge {
            order: n,
            limit: PRODUCT_SPACE_LIMIT,
        });
    }
    let mut m = CMat::zeros((n * n, n * n));
    for g in 0..n {
        let mut proj = CMat::zeros((n, n));
        proj[(g, g)] = C64::new(1.0, 0.0);
        let mut perm = CMat::zeros((n, n));
        for h in 0..n {
            perm[(group.mul(g, h), h)] = C64::new(1.0, 0.0);
        }
        m = m + kron(&proj, &perm);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{identity, max_abs_diff, unitarity_error};

    #[test]
    fn bt_has_24_elements_identity_first() {
        let bt = binary_tetrahedral();
        assert_eq!(bt.order(), 24);
        for h in 0..24 {
            assert_eq!(bt.mul(0, h), h);
            assert_eq!(bt.mul(h, 0), h);
        }
        assert_eq!(bt.inverse(0), 0);
    }

    #[test]
    fn bt_group_axioms() {
        let bt = binary_tetrahedral();
        for g in 0..24 {
            assert_eq!(bt.mul(g, bt.inverse(g)), 0);
            assert_eq!(bt.mul(bt.inverse(g), g), 0);
        }
        // Associativity on a deterministic sample of triples.
        for g in 0..24 {
            for h in 0..24 {
                let k = (5 * g + 7 * h + 3) % 24;
                assert_eq!(bt.mul(bt.mul(g, h), k), bt.mul(g, bt.mul(h, k)));
            }
        }
    }

    #[test]
    fn bt_exactly_two_self_inverse_elements() {
        let bt = binary_tetrahedral();
        let n_self = (0..24).filter(|&g| bt.inverse(g) == g).count();
        assert_eq!(n_self, 2);
    }

    #[test]
    fn bt_rep2_is_a_faithful_unitary_homomorphism() {
        let bt = binary_tetrahedral();
        for g in 0..24 {
            assert!(unitarity_error(bt.rep2(g).unwrap()) < 1e-15);
        }
        for g in 0..24 {
            for h in [0usize, 1, 5, 11, 17, 23] {
                let prod = bt.rep2(g).unwrap().dot(bt.rep2(h).unwrap());
                let expect = bt.rep2(bt.mul(g, h)).unwrap();
                assert!(max_abs_diff(&prod, expect) < 1e-14);
            }
        }
    }

    #[test]
    fn bt_re_trace_class_multiplicities() {
        let bt = binary_tetrahedral();
        let mut counts = std::collections::HashMap::new();
        for g in 0..24 {
            let tr = bt.re_trace(g).unwrap();
            *counts.entry((tr * 2.0).round() as i64).or_insert(0usize) += 1;
        }
        // ReTr in {2, -2, 1, -1, 0} with multiplicities {1, 1, 8, 8, 6}.
        assert_eq!(counts[&4], 1);
        assert_eq!(counts[&-4], 1);
        assert_eq!(counts[&2], 8);
        assert_eq!(counts[&-2], 8);
        assert_eq!(counts[&0], 6);
    }

    #[test]
    fn trace_phase_gate_on_bt() {
        let bt = binary_tetrahedral();
        let theta = 0.37;
        let m = trace_phase_gate(&bt, theta).unwrap();
        assert!(unitarity_error(&m) < 1e-14);
        // Identity element has ReTr = 2.
        assert!((m[(0, 0)] - C64::from_polar(1.0, 2.0 * theta)).norm() < 1e-14);
    }

    #[test]
    fn trace_phase_needs_a_representation() {
        let z3 = cyclic(3).unwrap();
        assert!(matches!(
            trace_phase_gate(&z3, 0.1),
            Err(Error::MissingRepresentation)
        ));
    }

    #[test]
    fn multiplication_gate_on_z3() {
        let z3 = cyclic(3).unwrap();
        let m = multiplication_gate_matrix(&z3).unwrap();
        assert_eq!(m.dim(), (9, 9));
        assert!(unitarity_error(&m) < 1e-14);
        // |1>|1> -> |1>|2>: column 3*1+1 = 4, row 3*1+2 = 5.
        assert!((m[(5, 4)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        // Control |0> block is the identity.
        let top = m.slice(ndarray::s![..3, ..3]).to_owned();
        assert!(max_abs_diff(&top, &identity(3)) < 1e-15);
    }

    #[test]
    fn product_space_guard() {
        let bt = binary_tetrahedral();
        assert!(matches!(
            multiplication_gate_matrix(&bt),
            Err(Error::GroupTooLarge { order: 24, .. })
        ));
    }
}
