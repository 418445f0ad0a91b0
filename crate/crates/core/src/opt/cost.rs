//! The objective interface the engine drives.

/// A real objective over a fixed-dimension parameter vector.
///
/// Implementors may override [`fd_gradient`](CostFunction::fd_gradient) with a
/// structure-aware evaluation of the same central differences (the circuit
/// backends do: perturbing one parameter rebuilds one factor, not the whole
/// product); the default recomputes the full objective per probe.
pub trait CostFunction: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Central-difference gradient with per-coordinate step
    /// `rel_step * (1 + |x_i|)`, written into `out`.
    fn fd_gradient(&self, x: &[f64], rel_step: f64, out: &mut [f64]) {
        let mut probe = x.to_vec();
        for i in 0..x.len() {
            let h = rel_step * (1.0 + x[i].abs());
            probe[i] = x[i] + h;
            let fp = self.value(&probe);
            probe[i] = x[i] - h;
            let fm = self.value(&probe);
            probe[i] = x[i];
            out[i] = (fp - fm) / (2.0 * h);
        }
    }

    /// Number of objective evaluations one gradient costs; used for the
    /// evaluation tally in results.
    fn gradient_eval_cost(&self) -> usize {
        2 * self.dim()
    }
}

/// Adapter for plain closures.
pub struct FnCost<F: Fn(&[f64]) -> f64 + Sync> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnCost<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> CostFunction for FnCost<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}
