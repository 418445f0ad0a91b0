//! Correlation and two-sample statistics for the parameter-structure study.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::Error;
use crate::Result;

/// Sample Pearson correlation of two equally long series.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::DegenerateData);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pairwise Pearson correlations of the columns of `samples` (rows are
/// observations). Zero-variance columns are undefined: every entry touching
/// one, the diagonal included, is NaN.
pub fn pearson_correlation_matrix(samples: &Array2<f64>) -> Result<Array2<f64>> {
    let (n, p) = samples.dim();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let cols: Vec<Vec<f64>> = (0..p).map(|j| samples.column(j).to_vec()).collect();
    let defined: Vec<bool> = cols
        .iter()
        .map(|c| {
            let m = c.iter().sum::<f64>() / n as f64;
            c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() > 0.0
        })
        .collect();
    let mut rho = Array2::from_elem((p, p), f64::NAN);
    for i in 0..p {
        if !defined[i] {
            continue;
        }
        rho[[i, i]] = 1.0;
        for j in (i + 1)..p {
            if !defined[j] {
                continue;
            }
            let r = pearson(&cols[i], &cols[j])?;
            rho[[i, j]] = r;
            rho[[j, i]] = r;
        }
    }
    Ok(rho)
}

/// Welch's unequal-variance t statistic with its two-sided p-value.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub p: f64,
    /// Welch-Satterthwaite degrees of freedom.
    pub dof: f64,
}

/// Two-sided Welch t-test of the null "equal means".
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: a.len().min(b.len()),
        });
    }
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let ma = a.iter().sum::<f64>() / na;
    let mb = b.iter().sum::<f64>() / nb;
    let va = a.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>() / (na - 1.0);
    let vb = b.iter().map(|v| (v - mb) * (v - mb)).sum::<f64>() / (nb - 1.0);
    let se2 = va / na + vb / nb;
    if se2 <= 0.0 {
        // No spread at all: equal means are exactly indistinguishable,
        // unequal means are exactly distinguishable.
        return Ok(if ma == mb {
            WelchResult {
                t: 0.0,
                p: 1.0,
                dof: na + nb - 2.0,
            }
        } else {
            WelchResult {
                t: (ma - mb).signum() * f64::INFINITY,
                p: 0.0,
                dof: na + nb - 2.0,
            }
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2 * se2
        / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::Invalid(format!("t distribution: {e}")))?;
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Ok(WelchResult { t, p, dof })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn perfect_correlation() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn perfect_anticorrelation() {
        let x = [0.5, -1.0, 2.0, 0.0];
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &y).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_variance_is_degenerate() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::DegenerateData)
        ));
    }

    #[test]
    fn matrix_diagonal_and_symmetry() {
        let samples = array![[1.0, 2.0, 0.3], [2.0, 4.1, -0.2], [3.0, 5.9, 0.8], [4.0, 8.2, 0.1]];
        let rho = pearson_correlation_matrix(&samples).unwrap();
        for i in 0..3 {
            assert!((rho[[i, i]] - 1.0).abs() < 1e-14);
            for j in 0..3 {
                assert!((rho[[i, j]] - rho[[j, i]]).abs() < 1e-14);
                assert!(rho[[i, j]].abs() <= 1.0 + 1e-14);
            }
        }
        assert!(rho[[0, 1]] > 0.99);
    }

    #[test]
    fn constant_column_turns_nan_without_poisoning_others() {
        let samples = array![[1.0, 7.0, 2.0], [2.0, 7.0, 4.0], [3.0, 7.0, 6.0]];
        let rho = pearson_correlation_matrix(&samples).unwrap();
        assert!(rho[[1, 1]].is_nan());
        assert!(rho[[0, 1]].is_nan() && rho[[1, 2]].is_nan());
        assert!((rho[[0, 2]] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_observation_is_insufficient() {
        let samples = array![[1.0, 2.0]];
        assert!(matches!(
            pearson_correlation_matrix(&samples),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn identical_samples_give_t_zero_p_one() {
        let r = welch_t_test(&[0.3, 0.3, 0.3], &[0.3, 0.3, 0.3]).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn well_separated_samples_are_significant() {
        let a = [0.0, 1e-6, -1e-6, 2e-6];
        let b = [1.0, 1.0 + 1e-6, 1.0 - 2e-6, 1.0 + 2e-6];
        let r = welch_t_test(&a, &b).unwrap();
        assert!(r.p < 1e-3, "p = {}", r.p);
        assert!(r.t < 0.0);
    }

    #[test]
    fn swapping_samples_flips_t_and_keeps_p() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.5, 3.5, 4.5];
        let ab = welch_t_test(&a, &b).unwrap();
        let ba = welch_t_test(&b, &a).unwrap();
        assert!((ab.t + ba.t).abs() < 1e-12);
        assert!((ab.p - ba.p).abs() < 1e-12);
        assert!((ab.dof - ba.dof).abs() < 1e-12);
    }

    #[test]
    fn matches_textbook_welch_example() {
        // Two small samples worked through the defining formulas by hand:
        // a: mean 20.6, var 5.3; b: mean 16.4, var 9.3 (n = 5 each).
        let a = [19.0, 22.0, 21.0, 23.0, 18.0];
        let b = [15.0, 16.0, 13.0, 19.0, 19.0];
        let ma = 20.6;
        let mb = 16.4;
        let va = a.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>() / 4.0;
        let vb = b.iter().map(|v| (v - mb) * (v - mb)).sum::<f64>() / 4.0;
        let se2: f64 = va / 5.0 + vb / 5.0;
        let expected_t = (ma - mb) / se2.sqrt();
        let r = welch_t_test(&a, &b).unwrap();
        assert!((r.t - expected_t).abs() < 1e-12);
        assert!(r.p < 0.05 && r.p > 1e-4);
    }

    #[test]
    fn tiny_samples_are_insufficient() {
        assert!(matches!(
            welch_t_test(&[1.0], &[1.0, 2.0]),
            Err(Error::InsufficientData { .. })
        ));
    }
}
