//! Adam and the warm-up/cosine learning-rate schedule.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::TensorError;

/// Bias-corrected Adam over a fixed list of parameter buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T: Scalar = f64> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    /// Moments sized after `sizes`, with β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
    pub fn new(sizes: &[usize]) -> Self {
        Self::with_hyper(sizes, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyper(sizes: &[usize], beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            t: 0,
            m: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.m.iter().map(Vec::len).collect()
    }

    /// One in-place update of every buffer in `params` from the matching `grads`.
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[T]], lr: f64) -> Result<()> {
        if !(lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
        }
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(TensorError::ShapeMismatch {
                op: "adam_step",
                lhs: self.sizes(),
                rhs: params.iter().map(|p| p.len()).collect(),
            }
            .into());
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[i].len() || g.len() != self.m[i].len() {
                return Err(TensorError::ShapeMismatch {
                    op: "adam_step",
                    lhs: vec![self.m[i].len()],
                    rhs: vec![p.len(), g.len()],
                }
                .into());
            }
        }
        self.t += 1;
        let t = self.t as i32;
        let (b1, b2) = (T::lit(self.beta1), T::lit(self.beta2));
        let one = T::one();
        let c1 = one - b1.powi(t);
        let c2 = one - b2.powi(t);
        let lr = T::lit(lr);
        let eps = T::lit(self.eps);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for j in 0..p.len() {
                let gj = g[j];
                m[j] = b1 * m[j] + (one - b1) * gj;
                v[j] = b2 * v[j] + (one - b2) * gj * gj;
                let mhat = m[j] / c1;
                let vhat = v[j] / c2;
                p[j] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Linear warm-up from `warm_start_lr` to `peak_lr` over `ramp_iters`, then
/// cosine decay to `final_lr` at `total_iters`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub warm_start_lr: f64,
    pub peak_lr: f64,
    pub final_lr: f64,
    pub ramp_iters: usize,
    pub total_iters: usize,
}

impl LrSchedule {
    /// Anchors 1e-5 -> 1e-4 -> 1e-6 with the ramp at half of `total_iters`.
    pub fn desk(total_iters: usize) -> Self {
        Self {
            warm_start_lr: 1e-5,
            peak_lr: 1e-4,
            final_lr: 1e-6,
            ramp_iters: total_iters / 2,
            total_iters,
        }
    }

    /// The full-length schedule: ramp over 150k iterations.
    pub fn full_scale(total_iters: usize) -> Self {
        Self {
            ramp_iters: 150_000.min(total_iters),
            ..Self::desk(total_iters)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.warm_start_lr, self.peak_lr, self.final_lr]
            .iter()
            .all(|&v| v > 0.0);
        if !positive || self.ramp_iters > self.total_iters {
            return Err(Error::Config(format!("invalid learning-rate schedule {self:?}")));
        }
        Ok(())
    }

    pub fn lr_at(&self, iter: usize) -> Result<f64> {
        if iter > self.total_iters {
            return Err(Error::Config(format!(
                "iteration {iter} beyond schedule length {}",
                self.total_iters
            )));
        }
        if iter < self.ramp_iters {
            let frac = iter as f64 / self.ramp_iters as f64;
            return Ok(self.warm_start_lr + (self.peak_lr - self.warm_start_lr) * frac);
        }
        let decay = self.total_iters - self.ramp_iters;
        if decay == 0 {
            return Ok(self.peak_lr);
        }
        let frac = (iter - self.ramp_iters) as f64 / decay as f64;
        let cos = 0.5 * (1.0 + (std::f64::consts::PI * frac).cos());
        Ok(self.final_lr + (self.peak_lr - self.final_lr) * cos)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut s = AdamState::<f64>::new(&[1]);
        let mut p = [0.0];
        s.step(&mut [&mut p], &[&[1.0]], 0.1).unwrap();
        assert!((p[0] + 0.1).abs() < 1e-7);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut s = AdamState::<f64>::new(&[3]);
        let mut p = [1.0, -2.0, 0.5];
        for _ in 0..50 {
            s.step(&mut [&mut p], &[&[0.0; 3]], 0.01).unwrap();
        }
        assert_eq!(p, [1.0, -2.0, 0.5]);
    }

    #[test]
    fn constant_gradient_saturates_to_lr_sign() {
        let mut s = AdamState::<f64>::new(&[1]);
        let mut p = [0.0];
        let mut last = 0.0;
        for _ in 0..5000 {
            let before = p[0];
            s.step(&mut [&mut p], &[&[-3.0]], 0.01).unwrap();
            last = p[0] - before;
        }
        assert!((last - 0.01).abs() < 1e-6, "{last}");
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut s = AdamState::<f64>::new(&[2]);
        let mut p = [0.0; 3];
        assert!(s.step(&mut [&mut p], &[&[0.0; 3]], 0.1).is_err());
        let mut q = [0.0; 2];
        assert!(s.step(&mut [&mut q], &[&[0.0; 2]], 0.0).is_err());
    }

    #[test]
    fn quadratic_converges() {
        let mut s = AdamState::<f64>::new(&[1]);
        let mut x = [1.0];
        for _ in 0..2000 {
            let g = [2.0 * x[0]];
            s.step(&mut [&mut x], &[&g], 0.01).unwrap();
        }
        assert!(x[0].abs() < 1e-3, "{}", x[0]);
    }

    #[test]
    fn schedule_anchors() {
        let s = LrSchedule::full_scale(300_000);
        assert_eq!(s.lr_at(0).unwrap(), 1e-5);
        assert!((s.lr_at(150_000).unwrap() - 1e-4).abs() < 1e-18);
        assert!((s.lr_at(300_000).unwrap() - 1e-6).abs() < 1e-18);
        assert!(s.lr_at(300_001).is_err());
    }

    #[test]
    fn schedule_is_continuous_and_monotone_per_phase() {
        let s = LrSchedule::desk(1000);
        let left = s.lr_at(s.ramp_iters - 1).unwrap();
        let at = s.lr_at(s.ramp_iters).unwrap();
        assert!((at - left) < 1e-6 && at >= left);
        for i in 1..=s.ramp_iters {
            assert!(s.lr_at(i).unwrap() >= s.lr_at(i - 1).unwrap());
        }
        for i in s.ramp_iters + 1..=s.total_iters {
            assert!(s.lr_at(i).unwrap() <= s.lr_at(i - 1).unwrap());
        }
    }
}
