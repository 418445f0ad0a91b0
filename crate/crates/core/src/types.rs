//! Dense complex matrices and the handful of primitives everything else builds on.

use ndarray as nd;
use num_complex::Complex64;

pub type C64 = Complex64;
/// Square (or rectangular) dense complex matrix; the universal carrier type.
pub type CMat = nd::Array2<C64>;
/// Dense complex vector; states live here.
pub type CVec = nd::Array1<C64>;

/// Identity matrix of size `n`.
pub fn identity(n: usize) -> CMat {
    CMat::eye(n)
}

/// Matrix product `a b`.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    a.dot(b)
}

/// Conjugate transpose.
pub fn dagger(a: &CMat) -> CMat {
    let mut out = a.t().to_owned();
    out.mapv_inplace(|z| z.conj());
    out
}

/// Kronecker product with the left factor as the slow index.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = CMat::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Frobenius norm.
pub fn frobenius_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entrywise modulus.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise modulus of the difference `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Maximum column sum of moduli (the induced 1-norm).
pub fn one_norm(a: &CMat) -> f64 {
    let (_, cols) = a.dim();
    (0..cols)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest entrywise deviation of `u^dag u` from the identity.
///
/// A matrix is accepted as unitary when this is below `1e-10`.
pub fn unitarity_error(u: &CMat) -> f64 {
    let n = u.nrows();
    let gram = matmul(&dagger(u), u);
    max_abs_diff(&gram, &identity(n))
}

/// Trace.
pub fn trace(a: &CMat) -> C64 {
    a.diag().sum()
}

/// Product of a slice of factors, left to right: `f[0] f[1] ... f[k-1]`.
pub fn product(factors: &[CMat]) -> CMat {
    assert!(!factors.is_empty());
    let mut out = factors[0].clone();
    for f in &factors[1..] {
        out = matmul(&out, f);
    }
    out
}
