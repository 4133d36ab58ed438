//! Adaptive moment optimizer with cosine-decayed step size.

use crate::math;
use alloc::vec;
use alloc::vec::Vec;

/// Cosine decay from `lr0` at iteration 0 to zero at `total_iters`.
pub fn cosine_lr(lr0: f64, iter: usize, total_iters: usize) -> f64 {
    let t = if total_iters == 0 {
        1.0
    } else {
        (iter.min(total_iters) as f64) / total_iters as f64
    };
    lr0 * 0.5 * (1.0 + math::cos(core::f64::consts::PI * t))
}

/// First/second-moment adaptive update (the Adam rule) over a flat
/// parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(param_count: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// One update with step size `lr`. The caller must ensure `grads` is
    /// finite; moments and parameters are untouched otherwise.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - math::powi(self.beta1, self.t as i32);
        let bc2 = 1.0 - math::powi(self.beta2, self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (math::sqrt(v_hat) + self.epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_endpoints() {
        assert_eq!(cosine_lr(1e-3, 0, 1000), 1e-3);
        assert!(cosine_lr(1e-3, 1000, 1000).abs() < 1e-19);
        assert!(cosine_lr(1e-3, 2000, 1000).abs() < 1e-19);
        let mid = cosine_lr(1e-3, 500, 1000);
        assert!((mid - 5e-4).abs() < 1e-12);
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut adam = Adam::new(4);
        let mut params = [1.0, -2.0, 0.5, 3.0];
        let before = params;
        for _ in 0..5 {
            adam.step(&mut params, &[0.0; 4], 1e-2);
        }
        assert_eq!(params, before);
    }

    /// Hand-simulated moment recursion for a single scalar parameter with a
    /// constant gradient of 1 over three steps.
    #[test]
    fn matches_hand_simulated_recursion() {
        let mut adam = Adam::new(1);
        let mut params = [0.0f64];
        let lr = 0.1;
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        let (mut m, mut v) = (0.0f64, 0.0f64);
        let mut expected = 0.0f64;
        for t in 1..=3 {
            adam.step(&mut params, &[1.0], lr);
            m = b1 * m + (1.0 - b1);
            v = b2 * v + (1.0 - b2);
            let m_hat = m / (1.0 - b1.powi(t));
            let v_hat = v / (1.0 - b2.powi(t));
            expected -= lr * m_hat / (v_hat.sqrt() + eps);
            assert!(
                (params[0] - expected).abs() < 1e-15,
                "step {t}: {} vs {expected}",
                params[0]
            );
        }
    }
}
