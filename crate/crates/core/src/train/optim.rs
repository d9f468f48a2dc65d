use crate::scalar::Real;
use crate::tensor::Tensor;

/// AdamW constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

/// First and second moments for every parameter tensor plus the step count.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamW<T> {
    pub config: AdamWConfig,
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Real> AdamW<T> {
    pub fn new<'a>(config: AdamWConfig, params: impl IntoIterator<Item = &'a Tensor<T>>) -> Self {
        let m: Vec<Vec<T>> = params
            .into_iter()
            .map(|t| vec![T::zero(); t.len()])
            .collect();
        Self {
            config,
            step: 0,
            v: m.clone(),
            m,
        }
    }

    /// One update over tensors listed in the same order as at construction.
    pub fn update<'a>(
        &mut self,
        params: impl IntoIterator<Item = &'a mut Tensor<T>>,
        grads: impl IntoIterator<Item = &'a Tensor<T>>,
        lr: T,
    ) {
        self.step += 1;
        for (((w, g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            adamw_step(w.data_mut(), g.data(), m, v, self.step, lr, &self.config);
        }
    }
}

/// Decoupled decay `w -= lr * lambda * w`, then the bias-corrected Adam
/// update at step `t` (1-based).
pub fn adamw_step<T: Real>(
    w: &mut [T],
    g: &[T],
    m: &mut [T],
    v: &mut [T],
    t: u64,
    lr: T,
    config: &AdamWConfig,
) {
    let b1 = T::lit(config.beta1);
    let b2 = T::lit(config.beta2);
    let eps = T::lit(config.eps);
    let decay = lr * T::lit(config.weight_decay);
    let c1 = T::one() - T::lit(config.beta1.powi(t as i32));
    let c2 = T::one() - T::lit(config.beta2.powi(t as i32));
    for i in 0..w.len() {
        w[i] -= decay * w[i];
        m[i] = b1 * m[i] + (T::one() - b1) * g[i];
        v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        w[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// `lr0 * gamma^epoch`.
pub fn lr_at_epoch(epoch: usize, lr0: f64, gamma: f64) -> f64 {
    lr0 * gamma.powi(epoch as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_only_step() {
        let cfg = AdamWConfig {
            weight_decay: 0.01,
            ..Default::default()
        };
        let mut w = vec![2.0f64, -0.5];
        let (mut m, mut v) = (vec![0.0; 2], vec![0.0; 2]);
        adamw_step(&mut w, &[0.0, 0.0], &mut m, &mut v, 1, 0.1, &cfg);
        assert_eq!(w, vec![2.0 * (1.0 - 0.001), -0.5 * (1.0 - 0.001)]);
        assert_eq!((m, v), (vec![0.0; 2], vec![0.0; 2]));
    }

    #[test]
    fn first_step_moves_by_lr() {
        let cfg = AdamWConfig {
            weight_decay: 0.0,
            ..Default::default()
        };
        let mut w = vec![0.0f64];
        let (mut m, mut v) = (vec![0.0], vec![0.0]);
        adamw_step(&mut w, &[1.0], &mut m, &mut v, 1, 0.001, &cfg);
        // m_hat = 1 and v_hat = 1 after bias correction.
        let expected = -0.001 * (1.0 / (1.0 + 1e-8));
        assert!((w[0] - expected).abs() < 1e-18);
        assert!((w[0] + 0.000_999_999_99).abs() < 1e-13);
    }

    #[test]
    fn optimizer_tracks_steps_per_tensor() {
        let mut a = Tensor::from_vec(&[2], vec![1.0f64, 1.0]);
        let mut b = Tensor::from_vec(&[1], vec![-1.0f64]);
        let ga = Tensor::from_vec(&[2], vec![0.5, -0.5]);
        let gb = Tensor::from_vec(&[1], vec![2.0]);
        let mut opt = AdamW::new(AdamWConfig::default(), [&a, &b]);
        opt.update([&mut a, &mut b], [&ga, &gb], 0.01);
        opt.update([&mut a, &mut b], [&ga, &gb], 0.01);
        assert_eq!(opt.step, 2);
        assert!(a.data()[0] < 1.0 && a.data()[1] > 1.0 && b.data()[0] < -1.0);
    }

    #[test]
    fn learning_rate_schedule() {
        assert_eq!(lr_at_epoch(0, 1e-4, 0.995), 1e-4);
        assert!((lr_at_epoch(1, 1e-4, 0.995) - 9.95e-5).abs() < 1e-18);
        let independent = 1e-4 * (400.0 * 0.995f64.ln()).exp();
        assert!((lr_at_epoch(400, 1e-4, 0.995) - independent).abs() < 1e-16);
        assert!((lr_at_epoch(400, 1e-4, 0.995) - 1.3465e-5).abs() < 1e-8);
    }
}
