//! Adam with bias-corrected moment estimates.

use num_traits::Float;

/// First/second moment state and step count for one parameter vector.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    m: Vec<T>,
    v: Vec<T>,
    step: u64,
}

impl<T: Float> Adam<T> {
    /// Default moment settings: β1 = 0.9, β2 = 0.999, ε = 1e-8.
    pub fn new(n_params: usize) -> Self {
        Self {
            beta1: T::from(0.9).unwrap(),
            beta2: T::from(0.999).unwrap(),
            eps: T::from(1e-8).unwrap(),
            m: vec![T::zero(); n_params],
            v: vec![T::zero(); n_params],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update with learning rate `lr`; `params` and `grad` must match
    /// the state length.
    pub fn step(&mut self, params: &mut [T], grad: &[T], lr: T) {
        assert_eq!(params.len(), grad.len());
        assert_eq!(params.len(), self.m.len());
        self.step += 1;
        let t = self.step as i32;
        let bc1 = T::one() - self.beta1.powi(t);
        let bc2 = T::one() - self.beta2.powi(t);
        let one = T::one();
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (one - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (one - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] = params[i] - lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_but_counts_step() {
        let mut adam = Adam::<f64>::new(3);
        let mut p = vec![1.0, -2.0, 0.5];
        adam.step(&mut p, &[0.0; 3], 1e-3);
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn first_step_magnitude_is_learning_rate() {
        // bias-corrected m̂/√v̂ = sign(g) on the first step, up to ε
        let lr = 1e-3;
        for g in [0.5, -3.0, 1e-4] {
            let mut adam = Adam::<f64>::new(1);
            let mut p = vec![0.0];
            adam.step(&mut p, &[g], lr);
            assert!(
                (p[0].abs() - lr).abs() < lr * 1e-3,
                "step magnitude {} for grad {g}",
                p[0].abs()
            );
            assert_eq!(p[0].signum(), -g.signum());
        }
    }

    #[test]
    fn constant_gradient_moves_monotonically() {
        let mut adam = Adam::<f64>::new(1);
        let mut p = vec![1.0];
        let mut last = p[0];
        for _ in 0..10 {
            adam.step(&mut p, &[2.0], 1e-2);
            assert!(p[0] < last);
            last = p[0];
        }
    }
}
