//! Two-level (Givens) rotations embedded in a qudit, and the fixed-topology
//! products of them that parameterize group Fourier transforms on the binary
//! tetrahedral register.

use crate::error::Error;
use crate::types::{identity, CMat, C64};
use crate::Result;

fn check_pair(a: usize, b: usize, dim: usize) -> Result<()> {
    if a == b || a >= dim || b >= dim {
        return Err(Error::BadLevelPair);
    }
    Ok(())
}

fn check_angles(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::WrongAngleCount { expected, got });
    }
    Ok(())
}

/// X gate on levels (a, b): swaps them, identity elsewhere.
pub fn pauli_x_embed(a: usize, b: usize, dim: usize) -> Result<CMat> {
    check_pair(a, b, dim)?;
    let mut m = identity(dim);
    m[(a, a)] = C64::new(0.0, 0.0);
    m[(b, b)] = C64::new(0.0, 0.0);
    m[(a, b)] = C64::new(1.0, 0.0);
    m[(b, a)] = C64::new(1.0, 0.0);
    Ok(m)
}

/// Z rotation on levels (a, b): `diag(e^{-i theta/2}, e^{+i theta/2})` on the
/// pair, identity elsewhere.
pub fn rz_embed(a: usize, b: usize, theta: f64, dim: usize) -> Result<CMat> {
    check_pair(a, b, dim)?;
    let mut m = identity(dim);
    m[(a, a)] = C64::from_polar(1.0, -theta / 2.0);
    m[(b, b)] = C64::from_polar(1.0, theta / 2.0);
    Ok(m)
}

/// X rotation on levels (a, b): `cos(theta/2) 1 - i sin(theta/2) X` on the
/// pair, identity elsewhere.
pub fn rx_embed(a: usize, b: usize, theta: f64, dim: usize) -> Result<CMat> {
    check_pair(a, b, dim)?;
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let mut m = identity(dim);
    m[(a, a)] = C64::new(c, 0.0);
    m[(b, b)] = C64::new(c, 0.0);
    m[(a, b)] = C64::new(0.0, -s);
    m[(b, a)] = C64::new(0.0, -s);
    Ok(m)
}

/// General SU(2) element on levels (a, b) as Rz Rx Rz, consuming 3 angles.
pub fn u2(a: usize, b: usize, thetas: &[f64], dim: usize) -> Result<CMat> {
    check_angles(3, thetas.len())?;
    let m = rz_embed(a, b, thetas[0], dim)?
        .dot(&rx_embed(a, b, thetas[1], dim)?)
        .dot(&rz_embed(a, b, thetas[2], dim)?);
    Ok(m)
}

/// Three-level block `U2^{(a,b)} Rx^{(b,c)} U2^{(a,b)} Rz^{(b,c)}`, consuming
/// 8 angles left to right.
pub fn u3(levels: [usize; 3], thetas: &[f64], dim: usize) -> Result<CMat> {
    check_angles(8, thetas.len())?;
    let [a, b, c] = levels;
    let m = u2(a, b, &thetas[0..3], dim)?
        .dot(&rx_embed(b, c, thetas[3], dim)?)
        .dot(&u2(a, b, &thetas[4..7], dim)?)
        .dot(&rz_embed(b, c, thetas[7], dim)?);
    Ok(m)
}

/// Six-level block `U3^{(a,b,c)} U3^{(d,e,f)} U2^{(a,d)} U2^{(b,e)} U2^{(c,f)}`,
/// consuming 25 angles left to right.
pub fn u6(levels: [usize; 6], thetas: &[f64], dim: usize) -> Result<CMat> {
    check_angles(25, thetas.len())?;
    let [a, b, c, d, e, f] = levels;
    let m = u3([a, b, c], &thetas[0..8], dim)?
        .dot(&u3([d, e, f], &thetas[8..16], dim)?)
        .dot(&u2(a, d, &thetas[16..19], dim)?)
        .dot(&u2(b, e, &thetas[19..22], dim)?)
        .dot(&u2(c, f, &thetas[22..25], dim)?);
    Ok(m)
}

/// First Fourier factor on the 24-level register: twelve disjoint pair
/// rotations `U2^{(2a, 2a+1)}`, consuming 36 angles.
pub fn v1_bt(thetas: &[f64]) -> Result<CMat> {
    check_angles(36, thetas.len())?;
    let mut m = identity(24);
    for a in 0..12 {
        m = m.dot(&u2(2 * a, 2 * a + 1, &thetas[3 * a..3 * a + 3], 24)?);
    }
    Ok(m)
}

/// Level sextets of the four six-level blocks in the ninth Fourier factor.
pub const V9_LEVELS: [[usize; 6]; 4] = [
    [0, 9, 16, 1, 8, 17],
    [2, 14, 20, 3, 15, 21],
    [4, 11, 23, 5, 10, 22],
    [6, 12, 19, 7, 13, 18],
];

/// Ninth Fourier factor on the 24-level register: four six-level blocks on
/// the sextets of [`V9_LEVELS`], consuming 100 angles.
pub fn v9_bt(thetas: &[f64]) -> Result<CMat> {
    check_angles(100, thetas.len())?;
    let mut m = identity(24);
    for (k, levels) in V9_LEVELS.iter().enumerate() {
        m = m.dot(&u6(*levels, &thetas[25 * k..25 * (k + 1)], 24)?);
    }
    Ok(m)
}
