//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! Gradients come from central finite differences (see
//! [`CostFunction::fd_gradient`]); line-search directional derivatives use a
//! two-point probe along the ray instead of a full gradient, so each Wolfe
//! check costs two evaluations regardless of dimension. Everything is
//! deterministic: no randomness, no time-dependent behavior.

use std::collections::VecDeque;

use crate::error::Error;
use crate::opt::cost::CostFunction;
use crate::opt::{OptimizationConfig, OptimizationResult, StopReason};
use crate::Result;

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_BRACKET: usize = 30;
const MAX_ZOOM: usize = 40;
const ALPHA_MAX: f64 = 1e6;

struct Eval<'a> {
    cost: &'a dyn CostFunction,
    count: usize,
}

impl<'a> Eval<'a> {
    fn phi(&mut self, x: &[f64], d: &[f64], alpha: f64, probe: &mut [f64]) -> f64 {
        for i in 0..x.len() {
            probe[i] = x[i] + alpha * d[i];
        }
        self.count += 1;
        let v = self.cost.value(probe);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }

    /// Directional derivative along `d` at `x + alpha d` by central difference.
    fn dphi(&mut self, x: &[f64], d: &[f64], alpha: f64, step: f64, probe: &mut [f64]) -> f64 {
        let h = step * (1.0 + alpha.abs());
        let fp = self.phi(x, d, alpha + h, probe);
        let fm = self.phi(x, d, alpha - h, probe);
        (fp - fm) / (2.0 * h)
    }
}

struct LineSearchHit {
    alpha: f64,
    phi: f64,
}

/// Strong-Wolfe search (bracket then zoom, bisection refinement). Returns the
/// accepted step, or `None` when no decrease could be found.
#[allow(clippy::too_many_arguments)]
fn wolfe_search(
    ev: &mut Eval,
    x: &[f64],
    d: &[f64],
    phi0: f64,
    dphi0: f64,
    alpha_init: f64,
    fd_step: f64,
    probe: &mut [f64],
) -> Option<LineSearchHit> {
    let armijo = |alpha: f64, phi: f64| phi <= phi0 + C1 * alpha * dphi0;

    let mut alpha_prev = 0.0;
    let mut phi_prev = phi0;
    let mut alpha = alpha_init.clamp(1e-16, ALPHA_MAX);

    let mut bracket: Option<(f64, f64, f64)> = None; // (lo, phi_lo, hi)
    for i in 0..MAX_BRACKET {
        let phi_a = ev.phi(x, d, alpha, probe);
        if !armijo(alpha, phi_a) || (i > 0 && phi_a >= phi_prev) {
            bracket = Some((alpha_prev, phi_prev, alpha));
            break;
        }
        let dphi_a = ev.dphi(x, d, alpha, fd_step, probe);
        if dphi_a.abs() <= -C2 * dphi0 {
            return Some(LineSearchHit { alpha, phi: phi_a });
        }
        if dphi_a >= 0.0 {
            bracket = Some((alpha, phi_a, alpha_prev));
            break;
        }
        alpha_prev = alpha;
        phi_prev = phi_a;
        alpha = (2.0 * alpha).min(ALPHA_MAX);
        if alpha >= ALPHA_MAX {
            // Pathologically flat descent; accept the last good point.
            return armijo(alpha_prev, phi_prev).then_some(LineSearchHit {
                alpha: alpha_prev,
                phi: phi_prev,
            });
        }
    }
    let (mut lo, mut phi_lo, mut hi) = bracket?;

    for _ in 0..MAX_ZOOM {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= 1e-16 * (1.0 + lo.abs()) {
            break;
        }
        let phi_m = ev.phi(x, d, mid, probe);
        if !armijo(mid, phi_m) || phi_m >= phi_lo {
            hi = mid;
        } else {
            let dphi_m = ev.dphi(x, d, mid, fd_step, probe);
            if dphi_m.abs() <= -C2 * dphi0 {
                return Some(LineSearchHit {
                    alpha: mid,
                    phi: phi_m,
                });
            }
            if dphi_m * (hi - lo) >= 0.0 {
                hi = lo;
            }
            lo = mid;
            phi_lo = phi_m;
        }
    }
    // Curvature never satisfied (finite-difference noise floor); settle for
    // plain decrease if we found any.
    (phi_lo < phi0).then_some(LineSearchHit {
        alpha: lo,
        phi: phi_lo,
    })
}

fn two_loop(
    g: &[f64],
    pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, // (s, y, 1/y's)
    d: &mut Vec<f64>,
) {
    let n = g.len();
    d.clear();
    d.extend_from_slice(g);
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, d);
        for i in 0..n {
            d[i] -= a * y[i];
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        for v in d.iter_mut() {
            *v *= gamma;
        }
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, d);
        for i in 0..n {
            d[i] += (a - b) * s[i];
        }
    }
    for v in d.iter_mut() {
        *v = -*v;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimize `cost` from `x0`.
pub fn minimize(
    cost: &dyn CostFunction,
    x0: &[f64],
    config: &OptimizationConfig,
) -> Result<OptimizationResult> {
    let n = cost.dim();
    if x0.len() != n {
        return Err(Error::WrongParameterCount {
            expected: n,
            got: x0.len(),
        });
    }
    let mut ev = Eval { cost, count: 0 };
    let mut x = x0.to_vec();
    let mut probe = vec![0.0; n];
    ev.count += 1;
    let mut f = cost.value(&x);
    if !f.is_finite() {
        return Err(Error::NonFiniteCost);
    }
    let mut g = vec![0.0; n];
    cost.fd_gradient(&x, config.gradient_step, &mut g);
    ev.count += cost.gradient_eval_cost();

    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut d = vec![0.0; n];
    let mut iterations = 0;
    let mut stop = StopReason::MaxIterations;
    let mut trajectory = config.record_trajectory.then(|| vec![f]);

    let hit_target = |f: f64| config.cost_target.is_some_and(|t| f <= t);

    if inf_norm(&g) < config.gradient_tolerance {
        stop = StopReason::GradientNorm;
    } else if hit_target(f) {
        stop = StopReason::CostTarget;
    } else {
        while iterations < config.max_iterations {
            two_loop(&g, &pairs, &mut d);
            let mut dphi0 = dot(&g, &d);
            if dphi0 >= 0.0 {
                // Curvature information went stale; restart from steepest descent.
                pairs.clear();
                d.clear();
                d.extend(g.iter().map(|v| -v));
                dphi0 = -dot(&g, &g);
                if dphi0 >= -1e-30 {
                    stop = StopReason::GradientNorm;
                    break;
                }
            }
            let alpha_init = if pairs.is_empty() {
                (1.0 / inf_norm(&d).max(1e-12)).min(1.0)
            } else {
                1.0
            };
            let Some(hit) = wolfe_search(
                &mut ev,
                &x,
                &d,
                f,
                dphi0,
                alpha_init,
                config.gradient_step,
                &mut probe,
            ) else {
                stop = StopReason::LineSearchStalled;
                break;
            };

            let mut x_new = vec![0.0; n];
            for i in 0..n {
                x_new[i] = x[i] + hit.alpha * d[i];
            }
            let mut g_new = vec![0.0; n];
            cost.fd_gradient(&x_new, config.gradient_step, &mut g_new);
            ev.count += cost.gradient_eval_cost();

            let s: Vec<f64> = (0..n).map(|i| hit.alpha * d[i]).collect();
            let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
            let sy = dot(&s, &y);
            let s_norm = dot(&s, &s).sqrt();
            let y_norm = dot(&y, &y).sqrt();
            if sy > 1e-10 * s_norm * y_norm {
                if pairs.len() == config.history {
                    pairs.pop_front();
                }
                pairs.push_back((s, y, 1.0 / sy));
            }

            let delta = f - hit.phi;
            x = x_new;
            f = hit.phi;
            g = g_new;
            iterations += 1;
            if let Some(t) = trajectory.as_mut() {
                t.push(f);
            }

            if hit_target(f) {
                stop = StopReason::CostTarget;
                break;
            }
            if delta.abs() < config.cost_tolerance {
                stop = StopReason::CostDelta;
                break;
            }
            if inf_norm(&g) < config.gradient_tolerance {
                stop = StopReason::GradientNorm;
                break;
            }
        }
    }

    Ok(OptimizationResult {
        x,
        cost: f,
        iterations,
        evaluations: ev.count,
        stop,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opt::cost::FnCost;

    #[test]
    fn quadratic_bowl_converges_fast() {
        let cost = FnCost::new(5, |x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(i, &v)| (i as f64 + 1.0) * (v - 2.0).powi(2))
                .sum()
        });
        let r = minimize(&cost, &[0.0; 5], &OptimizationConfig::default()).unwrap();
        assert!(r.cost < 1e-12, "cost = {}", r.cost);
        for v in &r.x {
            assert!((v - 2.0).abs() < 1e-6);
        }
        assert!(r.iterations < 50);
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let cost = FnCost::new(2, |x: &[f64]| {
            100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
        });
        let r = minimize(&cost, &[-1.2, 1.0], &OptimizationConfig::default()).unwrap();
        assert!(r.cost < 1e-10, "cost = {}", r.cost);
        assert!((r.x[0] - 1.0).abs() < 1e-4);
        assert!((r.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn repeat_runs_are_bit_identical() {
        let cost = FnCost::new(3, |x: &[f64]| {
            (x[0] - 0.3).powi(2) + (x[1] * x[0] - 1.0).powi(2) + x[2].sin().powi(2) + 1.0
        });
        let a = minimize(&cost, &[0.1, 0.2, 0.3], &OptimizationConfig::default()).unwrap();
        let b = minimize(&cost, &[0.1, 0.2, 0.3], &OptimizationConfig::default()).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.cost, b.cost);
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn cost_target_stops_early() {
        let cost = FnCost::new(2, |x: &[f64]| x[0] * x[0] + x[1] * x[1]);
        let config = OptimizationConfig {
            cost_target: Some(1e-3),
            ..Default::default()
        };
        let r = minimize(&cost, &[3.0, -4.0], &config).unwrap();
        assert_eq!(r.stop, StopReason::CostTarget);
        assert!(r.cost <= 1e-3);
    }

    #[test]
    fn zero_iterations_returns_start() {
        let cost = FnCost::new(1, |x: &[f64]| x[0] * x[0]);
        let config = OptimizationConfig {
            max_iterations: 0,
            ..Default::default()
        };
        let r = minimize(&cost, &[2.0], &config).unwrap();
        assert_eq!(r.x, vec![2.0]);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let cost = FnCost::new(1, |x: &[f64]| (x[0] - 1.0).ln());
        assert!(matches!(
            minimize(&cost, &[0.0], &OptimizationConfig::default()),
            Err(Error::NonFiniteCost)
        ));
    }

    #[test]
    fn narrow_valley_with_flat_tail() {
        // exp-shaped valley: minimum at origin approached through a curved path.
        let cost = FnCost::new(2, |x: &[f64]| {
            (1.0 - (-(x[0].powi(2) + 0.5 * x[1].powi(2))).exp()) + 0.1 * (x[0] - x[1]).powi(2)
        });
        let r = minimize(&cost, &[1.5, -2.0], &OptimizationConfig::default()).unwrap();
        assert!(r.cost < 1e-9, "cost = {}", r.cost);
    }
}
