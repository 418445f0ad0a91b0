//! Chebyshev polynomials of the first kind on `[-1, 1]`.

use crate::types::C64;

/// `T_k(x)` by the three-term recurrence.
///
/// Stable on `[-1, 1]`; outside that interval the recurrence still matches
/// the polynomial but grows exponentially, which is fine for the slight
/// overshoot a floating-point grid endpoint can produce.
pub fn chebyshev_eval(order: usize, x: f64) -> f64 {
    match order {
        0 => 1.0,
        1 => x,
        _ => {
            let mut prev = 1.0;
            let mut cur = x;
            for _ in 2..=order {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `sum_k coeffs[k] T_k(x)` with one pass of the recurrence.
pub fn series_sum(coeffs: &[C64], x: f64) -> C64 {
    let mut total = C64::new(0.0, 0.0);
    let mut prev = 1.0;
    let mut cur = x;
    for (k, &c) in coeffs.iter().enumerate() {
        let t_k = match k {
            0 => 1.0,
            1 => x,
            _ => {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
                cur
            }
        };
        total += c * t_k;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn low_orders_match_closed_forms() {
        assert_abs_diff_eq!(chebyshev_eval(0, 0.7), 1.0, epsilon = 0.0);
        assert_abs_diff_eq!(chebyshev_eval(1, 0.7), 0.7, epsilon = 0.0);
        assert_abs_diff_eq!(chebyshev_eval(2, 0.5), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(chebyshev_eval(3, 0.5), 2.0 * 0.5 * -0.5 - 0.5, epsilon = 1e-15);
    }

    #[test]
    fn recurrence_matches_the_cosine_form() {
        for order in [2usize, 5, 11, 18, 30] {
            for &x in &[-0.95, -0.3, 0.0, 0.3, 0.77, 1.0] {
                let by_trig = (order as f64 * f64::acos(x)).cos();
                assert_abs_diff_eq!(chebyshev_eval(order, x), by_trig, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn endpoints_are_exact() {
        for order in 0..20 {
            assert_abs_diff_eq!(chebyshev_eval(order, 1.0), 1.0, epsilon = 0.0);
            let at_minus = if order % 2 == 0 { 1.0 } else { -1.0 };
            assert_abs_diff_eq!(chebyshev_eval(order, -1.0), at_minus, epsilon = 0.0);
        }
    }

    #[test]
    fn series_sum_matches_a_term_by_term_evaluation() {
        let coeffs: Vec<C64> = (0..7)
            .map(|k| C64::new(0.3 * k as f64 - 1.0, 0.1 * k as f64))
            .collect();
        for &x in &[-1.0, -0.42, 0.0, 0.9, 1.0] {
            let direct: C64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c * chebyshev_eval(k, x))
                .sum();
            let fast = series_sum(&coeffs, x);
            assert_abs_diff_eq!((fast - direct).norm(), 0.0, epsilon = 1e-13);
        }
    }
}
