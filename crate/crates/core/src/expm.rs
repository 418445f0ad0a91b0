//! Matrix exponential by Pade approximation with scaling and squaring.
//!
//! Degrees {3, 5, 7, 9, 13} are selected from the 1-norm of the input with the
//! standard full-precision thresholds; inputs above the largest threshold are
//! halved `s` times and the result squared back. Diagonal Pade of an
//! anti-Hermitian generator is itself exactly unitary, so propagators built
//! here satisfy the unitarity checks without any re-orthogonalization.

use ndarray as nd;
use num_complex::Complex64;

use crate::error::Error;
use crate::types::{CMat, C64};
use crate::Result;

/// Scalar types the Pade evaluation is generic over.
pub trait PadeScalar: nd::LinalgScalar + PartialEq {
    fn from_f64(x: f64) -> Self;
    fn modulus(self) -> f64;
}

impl PadeScalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl PadeScalar for C64 {
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068;
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn induced_one_norm<T: PadeScalar>(a: &nd::Array2<T>) -> f64 {
    let cols = a.ncols();
    (0..cols)
        .map(|j| a.column(j).iter().map(|z| z.modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solve `a x = b` for the matrix `x` by LU with partial pivoting, in place of
/// dense inversion. `a` is consumed. Inner updates run on contiguous row
/// slices so they vectorize.
fn lu_solve<T: PadeScalar>(mut a: nd::Array2<T>, mut b: nd::Array2<T>) -> Result<nd::Array2<T>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.nrows(),
        });
    }
    let m = b.ncols();
    let af = a.as_slice_mut().expect("fresh matrix is contiguous");
    let bf = b.as_slice_mut().expect("fresh matrix is contiguous");

    for k in 0..n {
        let mut piv = k;
        let mut best = af[k * n + k].modulus();
        for i in k + 1..n {
            let mag = af[i * n + k].modulus();
            if mag > best {
                best = mag;
                piv = i;
            }
        }
        if best == 0.0 {
            return Err(Error::SingularMatrix);
        }
        if piv != k {
            for j in 0..n {
                af.swap(k * n + j, piv * n + j);
            }
            for j in 0..m {
                bf.swap(k * m + j, piv * m + j);
            }
        }
        let inv_pivot = T::one() / af[k * n + k];
        for i in k + 1..n {
            let factor = af[i * n + k] * inv_pivot;
            af[i * n + k] = factor;
            let (upper, lower) = af.split_at_mut(i * n);
            let row_k = &upper[k * n + k + 1..k * n + n];
            let row_i = &mut lower[k + 1..n];
            for (x, &y) in row_i.iter_mut().zip(row_k) {
                *x = *x - factor * y;
            }
        }
    }

    // Forward substitution, rows of b as the working unit.
    for i in 1..n {
        let (upper, lower) = bf.split_at_mut(i * m);
        let row_i = &mut lower[..m];
        for k in 0..i {
            let factor = af[i * n + k];
            if factor == T::zero() {
                continue;
            }
            let row_k = &upper[k * m..(k + 1) * m];
            for (x, &y) in row_i.iter_mut().zip(row_k) {
                *x = *x - factor * y;
            }
        }
    }
    // Back substitution.
    for i in (0..n).rev() {
        let (upper, lower) = bf.split_at_mut((i + 1) * m);
        let row_i = &mut upper[i * m..];
        for k in i + 1..n {
            let factor = af[i * n + k];
            if factor == T::zero() {
                continue;
            }
            let row_k = &lower[(k - i - 1) * m..(k - i) * m];
            for (x, &y) in row_i.iter_mut().zip(row_k) {
                *x = *x - factor * y;
            }
        }
        let inv_diag = T::one() / af[i * n + i];
        for x in row_i.iter_mut() {
            *x = *x * inv_diag;
        }
    }
    Ok(b)
}

fn add_diag<T: PadeScalar>(m: &mut nd::Array2<T>, v: f64) {
    let val = T::from_f64(v);
    for i in 0..m.nrows() {
        m[(i, i)] = m[(i, i)] + val;
    }
}

/// Assemble U (odd part, without the leading factor of A) and V (even part)
/// from precomputed even powers of A.
fn pade_uv<T: PadeScalar>(
    a: &nd::Array2<T>,
    powers: &[&nd::Array2<T>],
    b: &[f64],
) -> (nd::Array2<T>, nd::Array2<T>) {
    let n = a.nrows();
    let mut odd = nd::Array2::<T>::zeros((n, n));
    let mut even = nd::Array2::<T>::zeros((n, n));
    for (idx, p) in powers.iter().enumerate() {
        let k = 2 * (idx + 1);
        odd.scaled_add(T::from_f64(b[k + 1]), *p);
        even.scaled_add(T::from_f64(b[k]), *p);
    }
    add_diag(&mut odd, b[1]);
    add_diag(&mut even, b[0]);
    (a.dot(&odd), even)
}

fn expm_impl<T: PadeScalar>(a: &nd::Array2<T>) -> Result<nd::Array2<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NotSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    let eta = induced_one_norm(a);
    if !eta.is_finite() {
        return Err(Error::OutOfDomain {
            what: "matrix norm",
            value: eta,
        });
    }

    let (u, v, squarings) = if eta <= THETA_9 {
        let a2 = a.dot(a);
        let (u, v) = if eta <= THETA_3 {
            pade_uv(a, &[&a2], &B3)
        } else if eta <= THETA_5 {
            let a4 = a2.dot(&a2);
            pade_uv(a, &[&a2, &a4], &B5)
        } else if eta <= THETA_7 {
            let a4 = a2.dot(&a2);
            let a6 = a4.dot(&a2);
            pade_uv(a, &[&a2, &a4, &a6], &B7)
        } else {
            let a4 = a2.dot(&a2);
            let a6 = a4.dot(&a2);
            let a8 = a6.dot(&a2);
            pade_uv(a, &[&a2, &a4, &a6, &a8], &B9)
        };
        (u, v, 0u32)
    } else {
        let s = ((eta / THETA_13).log2().ceil()).max(0.0) as u32;
        let scale = T::from_f64(0.5f64.powi(s as i32));
        let a = a.mapv(|e| e * scale);
        let a2 = a.dot(&a);
        let a4 = a2.dot(&a2);
        let a6 = a4.dot(&a2);
        let mut w1 = nd::Array2::<T>::zeros((n, n));
        w1.scaled_add(T::from_f64(B13[13]), &a6);
        w1.scaled_add(T::from_f64(B13[11]), &a4);
        w1.scaled_add(T::from_f64(B13[9]), &a2);
        let mut w2 = a6.dot(&w1);
        w2.scaled_add(T::from_f64(B13[7]), &a6);
        w2.scaled_add(T::from_f64(B13[5]), &a4);
        w2.scaled_add(T::from_f64(B13[3]), &a2);
        add_diag(&mut w2, B13[1]);
        let u = a.dot(&w2);
        let mut z1 = nd::Array2::<T>::zeros((n, n));
        z1.scaled_add(T::from_f64(B13[12]), &a6);
        z1.scaled_add(T::from_f64(B13[10]), &a4);
        z1.scaled_add(T::from_f64(B13[8]), &a2);
        let mut v = a6.dot(&z1);
        v.scaled_add(T::from_f64(B13[6]), &a6);
        v.scaled_add(T::from_f64(B13[4]), &a4);
        v.scaled_add(T::from_f64(B13[2]), &a2);
        add_diag(&mut v, B13[0]);
        (u, v, s)
    };

    let num = &v + &u;
    let den = &v - &u;
    let mut r = lu_solve(den, num)?;
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    Ok(r)
}

/// `exp(a)` for a complex square matrix.
pub fn expm(a: &CMat) -> Result<CMat> {
    expm_impl(a)
}

/// `exp(a)` for a real square matrix; used as a fast path for real generators
/// (real-displacement circuits spend most of their time here).
pub fn expm_real(a: &nd::Array2<f64>) -> Result<nd::Array2<f64>> {
    expm_impl(a)
}

/// Promote a real matrix to the complex carrier type.
pub fn to_complex(a: &nd::Array2<f64>) -> CMat {
    a.mapv(|x| C64::new(x, 0.0))
}
