//! Least-squares fit of the infidelity scaling law.
//!
//! Model: log(1 - F) = -c (B/d)^gamma, fitted over (B, d, F) points with a
//! damped Gauss-Newton (Levenberg-Marquardt) iteration on (c, gamma).

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

const FLOOR: f64 = 1e-16;

/// Fitted scaling-law parameters with their covariance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub c: f64,
    pub gamma: f64,
    /// Parameter covariance, ordered (c, gamma); NaN entries when the normal
    /// matrix is singular at the optimum.
    pub covariance: [[f64; 2]; 2],
    pub ssr: f64,
    pub n_points: usize,
}

impl FitResult {
    pub fn c_sigma(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn gamma_sigma(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }
}

fn residuals(xs: &[f64], ys: &[f64], c: f64, gamma: f64) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| (y + c * x.powf(gamma)).powi(2))
        .sum()
}

/// Fit `log(1 - F) = -c (B/d)^gamma` over `(B, d, F)` samples.
pub fn fit_fidelity_curve(points: &[(usize, usize, f64)]) -> Result<FitResult> {
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(b, d, f) in points {
        if d == 0 || b == 0 {
            return Err(Error::NotPositive {
                what: "block count and dimension",
                value: 0.0,
            });
        }
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::OutOfDomain {
                what: "fidelity",
                value: f,
            });
        }
        xs.push(b as f64 / d as f64);
        ys.push((1.0 - f).max(FLOOR).ln());
    }
    let mut distinct: Vec<f64> = xs.clone();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if distinct.len() < 3 {
        return Err(Error::DegenerateData);
    }

    // Starting point from the linearized model ln(-y) = ln c + gamma ln x,
    // skipping points clamped at the floor.
    let (mut c, mut gamma) = {
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        let mut n = 0.0;
        for (&x, &y) in xs.iter().zip(&ys) {
            if -y > 10.0 * FLOOR && y < -1e-12 {
                let lx = x.ln();
                let ly = (-y).ln();
                sx += lx;
                sy += ly;
                sxx += lx * lx;
                sxy += lx * ly;
                n += 1.0;
            }
        }
        let det = n * sxx - sx * sx;
        if n >= 2.0 && det.abs() > 1e-12 {
            let slope = (n * sxy - sx * sy) / det;
            let intercept = (sy - slope * sx) / n;
            (intercept.exp(), slope)
        } else {
            (1.0, 1.0)
        }
    };

    let mut ssr = residuals(&xs, &ys, c, gamma);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        // Normal equations for the damped step.
        let mut jtj = [[0.0; 2]; 2];
        let mut jtr = [0.0; 2];
        for (&x, &y) in xs.iter().zip(&ys) {
            let p = x.powf(gamma);
            let r = y + c * p;
            let jc = p;
            let jg = c * p * x.ln();
            jtj[0][0] += jc * jc;
            jtj[0][1] += jc * jg;
            jtj[1][1] += jg * jg;
            jtr[0] += jc * r;
            jtr[1] += jg * r;
        }
        jtj[1][0] = jtj[0][1];

        let mut accepted = false;
        for _ in 0..60 {
            let a00 = jtj[0][0] * (1.0 + lambda);
            let a11 = jtj[1][1] * (1.0 + lambda);
            let a01 = jtj[0][1];
            let det = a00 * a11 - a01 * a01;
            if det.abs() < 1e-300 {
                break;
            }
            let dc = (-jtr[0] * a11 + jtr[1] * a01) / det;
            let dg = (-jtr[1] * a00 + jtr[0] * a01) / det;
            let c_try = c + dc;
            let g_try = gamma + dg;
            let ssr_try = if c_try > 0.0 {
                residuals(&xs, &ys, c_try, g_try)
            } else {
                f64::INFINITY
            };
            if ssr_try < ssr {
                let delta = ssr - ssr_try;
                c = c_try;
                gamma = g_try;
                ssr = ssr_try;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if delta < 1e-14 * (1.0 + ssr) {
                    lambda = -1.0; // signal outer convergence
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted || lambda < 0.0 {
            break;
        }
    }

    // Covariance sigma^2 (J^T J)^{-1} at the solution.
    let mut jtj = [[0.0; 2]; 2];
    for &x in &xs {
        let p = x.powf(gamma);
        let jc = p;
        let jg = c * p * x.ln();
        jtj[0][0] += jc * jc;
        jtj[0][1] += jc * jg;
        jtj[1][1] += jg * jg;
    }
    jtj[1][0] = jtj[0][1];
    let n = xs.len();
    let sigma2 = if n > 2 { ssr / (n - 2) as f64 } else { 0.0 };
    let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
    let covariance = if det.abs() > 1e-300 {
        [
            [sigma2 * jtj[1][1] / det, -sigma2 * jtj[0][1] / det],
            [-sigma2 * jtj[1][0] / det, sigma2 * jtj[0][0] / det],
        ]
    } else {
        [[f64::NAN; 2]; 2]
    };

    Ok(FitResult {
        c,
        gamma,
        covariance,
        ssr,
        n_points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(c: f64, gamma: f64) -> Vec<(usize, usize, f64)> {
        let mut points = Vec::new();
        for d in [4usize, 5, 6] {
            for b in 1..=8usize {
                let x = b as f64 / d as f64;
                let f = 1.0 - (-c * x.powf(gamma)).exp();
                points.push((b, d, f));
            }
        }
        points
    }

    #[test]
    fn round_trips_reference_constants() {
        let fit = fit_fidelity_curve(&synthetic(6.49, 1.91)).unwrap();
        assert!((fit.c - 6.49).abs() < 1e-6, "c = {}", fit.c);
        assert!((fit.gamma - 1.91).abs() < 1e-6, "gamma = {}", fit.gamma);
        assert!(fit.ssr < 1e-12);
    }

    #[test]
    fn round_trips_shallow_exponent() {
        let fit = fit_fidelity_curve(&synthetic(3.85, 0.5)).unwrap();
        assert!((fit.c - 3.85).abs() < 1e-6);
        assert!((fit.gamma - 0.5).abs() < 1e-6);
    }

    #[test]
    fn tolerates_noise_and_reports_spread() {
        let mut points = synthetic(6.49, 1.91);
        for (i, p) in points.iter_mut().enumerate() {
            // Deterministic +-5% wiggle on the infidelity.
            let eps = 0.05 * ((i as f64 * 2.399963).sin());
            p.2 = 1.0 - (1.0 - p.2) * (1.0 + eps);
        }
        let fit = fit_fidelity_curve(&points).unwrap();
        assert!((fit.c - 6.49).abs() < 0.5);
        assert!((fit.gamma - 1.91).abs() < 0.1);
        assert!(fit.gamma_sigma() > 0.0 && fit.gamma_sigma() < 0.1);
    }

    #[test]
    fn constant_ratio_is_degenerate() {
        let points = vec![(2usize, 4usize, 0.5), (3, 6, 0.6), (4, 8, 0.7)];
        assert!(matches!(
            fit_fidelity_curve(&points),
            Err(Error::DegenerateData)
        ));
    }

    #[test]
    fn too_few_points_is_degenerate() {
        let points = vec![(1usize, 4usize, 0.5), (2, 4, 0.8)];
        assert!(matches!(
            fit_fidelity_curve(&points),
            Err(Error::DegenerateData)
        ));
    }

    #[test]
    fn rejects_out_of_range_fidelity() {
        let points = vec![(1usize, 4usize, 1.5), (2, 4, 0.5), (3, 4, 0.6)];
        assert!(matches!(
            fit_fidelity_curve(&points),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn saturated_fidelities_clamp_instead_of_failing() {
        let mut points = synthetic(6.49, 1.91);
        points.push((40, 4, 1.0));
        let fit = fit_fidelity_curve(&points).unwrap();
        assert!(fit.c > 0.0 && fit.gamma > 0.0);
    }
}
