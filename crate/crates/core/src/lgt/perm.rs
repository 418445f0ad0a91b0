//! Permutation tuples, their matrices, and the order metrics used in the
//! block-scaling study.
//!
//! A permutation is a tuple `t` with `t[i] = j` meaning the gate sends
//! `|j> -> |i>`; equivalently the matrix has its `1` of column `j` in row `i`.

use rand::seq::SliceRandom;
use rand::Rng;

use super::group::GroupTable;
use crate::error::Error;
use crate::types::{CMat, C64};
use crate::Result;

/// Check that `t` is a permutation of `0..t.len()`.
pub fn validate_permutation(t: &[usize]) -> Result<()> {
    let n = t.len();
    let mut seen = vec![false; n];
    for &v in t {
        if v >= n || seen[v] {
            return Err(Error::NotAPermutation { len: n });
        }
        seen[v] = true;
    }
    Ok(())
}

/// Permutation matrix `M[i][t[i]] = 1`, so `M |j> = |i>` whenever `t[i] = j`.
pub fn permutation_matrix(t: &[usize]) -> Result<CMat> {
    validate_permutation(t)?;
    let n = t.len();
    let mut m = CMat::zeros((n, n));
    for (i, &j) in t.iter().enumerate() {
        m[(i, j)] = C64::new(1.0, 0.0);
    }
    Ok(m)
}

/// Tuple of the inverse permutation: `out[t[i]] = i`.
pub fn inverse_permutation(t: &[usize]) -> Result<Vec<usize>> {
    validate_permutation(t)?;
    let mut out = vec![0; t.len()];
    for (i, &j) in t.iter().enumerate() {
        out[j] = i;
    }
    Ok(out)
}

/// One permutation tuple per group element: the tuple of left multiplication
/// by `g`, sending `|h> -> |g h>`, which under the tuple convention reads
/// `t_g[i] = g^{-1} * i`.
pub fn multiplication_permutations(group: &GroupTable) -> Vec<Vec<usize>> {
    let n = group.order();
    (0..n)
        .map(|g| {
            let ginv = group.inverse(g);
            (0..n).map(|i| group.mul(ginv, i)).collect()
        })
        .collect()
}

/// Kendall rank correlation of `t` against the identity permutation:
/// `(concordant - discordant) / total` over all index pairs.
pub fn kendall_from_identity(t: &[usize]) -> Result<f64> {
    validate_permutation(t)?;
    let n = t.len();
    if n < 2 {
        return Err(Error::UnderSampled { needed: 2, got: n });
    }
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            if t[i] < t[j] {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    Ok((concordant - discordant) as f64 / (concordant + discordant) as f64)
}

/// Minimum number of adjacent transpositions needed to realize `t`, i.e. its
/// inversion count.
pub fn adjacent_transposition_distance(t: &[usize]) -> Result<usize> {
    validate_permutation(t)?;
    let n = t.len();
    let mut inv = 0;
    for i in 0..n {
        for j in i + 1..n {
            if t[i] > t[j] {
                inv += 1;
            }
        }
    }
    Ok(inv)
}

/// Uniformly random permutation of `0..d` from the supplied generator.
pub fn random_permutation<R: Rng>(d: usize, rng: &mut R) -> Vec<usize> {
    let mut t: Vec<usize> = (0..d).collect();
    t.shuffle(rng);
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lgt::group::{binary_tetrahedral, cyclic};
    use crate::types::{max_abs_diff, unitarity_error};
    use approx::assert_abs_diff_eq;

    fn all_permutations(d: usize) -> Vec<Vec<usize>> {
        if d == 1 {
            return vec![vec![0]];
        }
        let mut out = Vec::new();
        for p in all_permutations(d - 1) {
            for pos in 0..d {
                let mut q: Vec<usize> = p.clone();
                q.insert(pos, d - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn matrix_moves_source_to_target() {
        let m = permutation_matrix(&[2, 0, 1]).unwrap();
        // t[0] = 2 means |2> -> |0>.
        assert!((m[(0, 2)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(unitarity_error(&m) < 1e-15);
    }

    #[test]
    fn inverse_of_involution_is_itself() {
        let t = vec![1, 0, 2];
        assert_eq!(inverse_permutation(&t).unwrap(), t);
    }

    #[test]
    fn z3_left_multiplication_tuples() {
        let z3 = cyclic(3).unwrap();
        let perms = multiplication_permutations(&z3);
        assert_eq!(perms[0], vec![0, 1, 2]);
        // Multiplication by 1 sends |h> -> |h+1>, so t[i] = i - 1 mod 3.
        assert_eq!(perms[1], vec![2, 0, 1]);
        assert_eq!(perms[2], vec![1, 2, 0]);
    }

    #[test]
    fn multiplication_tuples_compose_as_the_group() {
        let bt = binary_tetrahedral();
        let perms = multiplication_permutations(&bt);
        for g in 0..24 {
            for h in [0usize, 3, 7, 13, 20] {
                let gh = bt.mul(g, h);
                // M_g M_h corresponds to composing tuples as c[i] = t_h[t_g[i]].
                let composed: Vec<usize> = (0..24).map(|i| perms[h][perms[g][i]]).collect();
                assert_eq!(composed, perms[gh], "g={g} h={h}");
            }
        }
    }

    #[test]
    fn bt_inverse_gate_has_two_fixed_points() {
        let bt = binary_tetrahedral();
        let inv_tuple: Vec<usize> = (0..24).map(|g| bt.inverse(g)).collect();
        validate_permutation(&inv_tuple).unwrap();
        // Only +-1 are their own inverse.
        let fixed = inv_tuple.iter().enumerate().filter(|(i, &v)| *i == v).count();
        assert_eq!(fixed, 2);
        // The inverse gate is an involution.
        let m = permutation_matrix(&inv_tuple).unwrap();
        let m2 = m.dot(&m);
        assert!(max_abs_diff(&m2, &crate::types::identity(24)) < 1e-15);
    }

    #[test]
    fn kendall_small_cases() {
        assert_abs_diff_eq!(kendall_from_identity(&[0, 1, 2]).unwrap(), 1.0);
        assert_abs_diff_eq!(kendall_from_identity(&[2, 1, 0]).unwrap(), -1.0);
        assert_abs_diff_eq!(
            kendall_from_identity(&[1, 0, 2]).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn adjacent_distance_small_cases() {
        assert_eq!(adjacent_transposition_distance(&[0, 1, 2]).unwrap(), 0);
        assert_eq!(adjacent_transposition_distance(&[1, 0, 2]).unwrap(), 1);
        assert_eq!(adjacent_transposition_distance(&[3, 2, 1, 0]).unwrap(), 6);
    }

    #[test]
    fn kendall_and_inversions_are_two_views_of_one_count() {
        for d in 2..=5 {
            let n_pairs = (d * (d - 1) / 2) as f64;
            for t in all_permutations(d) {
                let k = kendall_from_identity(&t).unwrap();
                let inv = adjacent_transposition_distance(&t).unwrap() as f64;
                assert_abs_diff_eq!(k, (n_pairs - 2.0 * inv) / n_pairs, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn permutation_matrices_close_under_product() {
        for d in 2..=4 {
            let perms = all_permutations(d);
            let mats: Vec<CMat> = perms.iter().map(|t| permutation_matrix(t).unwrap()).collect();
            for (a, ma) in mats.iter().enumerate().step_by(3) {
                for (b, mb) in mats.iter().enumerate().step_by(2) {
                    let prod = ma.dot(mb);
                    let found = mats.iter().any(|m| max_abs_diff(m, &prod) < 1e-14);
                    assert!(found, "product of perms {a} and {b} left the set (d={d})");
                }
            }
        }
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(validate_permutation(&[0, 0, 1]).is_err());
        assert!(validate_permutation(&[0, 3, 1]).is_err());
    }
}
