use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::Tensor;

/// Rank of the low-rank step-size projection for a latent width.
pub fn default_rank(latent: usize) -> usize {
    (latent / 16).max(1)
}

/// One selective SSM: diagonal `A = -exp(a_log)`, per-channel skip weight,
/// the low-rank step-size generator and the `B`/`C` input projections.
#[derive(Clone, Debug, PartialEq)]
pub struct SsmParams<T> {
    pub channel_dim: usize,
    pub state_dim: usize,
    pub rank: usize,
    /// `D x N`
    pub a_log: Tensor<T>,
    /// `D`
    pub skip: Tensor<T>,
    /// `D x R`
    pub dt_proj_in: Tensor<T>,
    /// `R x D`
    pub dt_proj_out: Tensor<T>,
    /// `D`
    pub dt_bias: Tensor<T>,
    /// `D x N`
    pub b_proj: Tensor<T>,
    /// `D x N`
    pub c_proj: Tensor<T>,
}

impl<T: Real> SsmParams<T> {
    pub fn zeros(channel_dim: usize, state_dim: usize, rank: usize) -> Self {
        let (d, n, r) = (channel_dim, state_dim, rank);
        Self {
            channel_dim,
            state_dim,
            rank,
            a_log: Tensor::zeros(&[d, n]),
            skip: Tensor::zeros(&[d]),
            dt_proj_in: Tensor::zeros(&[d, r]),
            dt_proj_out: Tensor::zeros(&[r, d]),
            dt_bias: Tensor::zeros(&[d]),
            b_proj: Tensor::zeros(&[d, n]),
            c_proj: Tensor::zeros(&[d, n]),
        }
    }

    /// Zero projections and unit skip: the scan reduces to `y_t = x_t`.
    pub fn residual_only(channel_dim: usize, state_dim: usize, rank: usize) -> Self {
        let mut p = Self::zeros(channel_dim, state_dim, rank);
        p.skip.fill(T::one());
        p
    }

    /// Every weight (including `a_log` and `skip`) drawn from `N(0, std^2)`,
    /// `dt_bias` zero.
    pub fn init<R: Rng + ?Sized>(
        channel_dim: usize,
        state_dim: usize,
        rank: usize,
        std: f64,
        rng: &mut R,
    ) -> Self {
        let (d, n, r) = (channel_dim, state_dim, rank);
        Self {
            channel_dim,
            state_dim,
            rank,
            a_log: Tensor::normal(&[d, n], std, rng),
            skip: Tensor::normal(&[d], std, rng),
            dt_proj_in: Tensor::normal(&[d, r], std, rng),
            dt_proj_out: Tensor::normal(&[r, d], std, rng),
            dt_bias: Tensor::zeros(&[d]),
            b_proj: Tensor::normal(&[d, n], std, rng),
            c_proj: Tensor::normal(&[d, n], std, rng),
        }
    }

    /// Diagonal of `A = -exp(a_log)`, laid out `D x N`.
    pub fn state_matrix(&self) -> Vec<T> {
        self.a_log.data().iter().map(|&v| -v.exp()).collect()
    }

    pub fn tensors(&self) -> [&Tensor<T>; 7] {
        [
            &self.a_log,
            &self.skip,
            &self.dt_proj_in,
            &self.dt_proj_out,
            &self.dt_bias,
            &self.b_proj,
            &self.c_proj,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor<T>; 7] {
        [
            &mut self.a_log,
            &mut self.skip,
            &mut self.dt_proj_in,
            &mut self.dt_proj_out,
            &mut self.dt_bias,
            &mut self.b_proj,
            &mut self.c_proj,
        ]
    }

    pub const TENSOR_NAMES: [&'static str; 7] = [
        "a_log",
        "skip",
        "dt_proj_in",
        "dt_proj_out",
        "dt_bias",
        "b_proj",
        "c_proj",
    ];

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.channel_dim, self.state_dim, self.rank)
    }

    pub fn validate(&self) -> Result<()> {
        let (d, n, r) = (self.channel_dim, self.state_dim, self.rank);
        let expected: [&[usize]; 7] = [&[d, n], &[d], &[d, r], &[r, d], &[d], &[d, n], &[d, n]];
        for ((t, shape), name) in self.tensors().iter().zip(expected).zip(Self::TENSOR_NAMES) {
            if t.shape() != shape {
                return Err(Error::Contract(format!(
                    "ssm tensor {name} has shape {:?}, expected {shape:?}",
                    t.shape()
                )));
            }
            if !t.is_finite() {
                return Err(Error::Contract(format!("ssm tensor {name} is not finite")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rank_rule() {
        assert_eq!(default_rank(64), 4);
        assert_eq!(default_rank(8), 1);
        assert_eq!(default_rank(1), 1);
    }

    #[test]
    fn parameter_count() {
        let p = SsmParams::<f32>::zeros(64, 16, 4);
        assert_eq!(p.num_params(), 3 * 64 * 16 + 2 * 64 + 2 * 64 * 4);
    }

    #[test]
    fn state_matrix_is_strictly_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = SsmParams::<f64>::init(5, 3, 1, 2.0, &mut rng);
        assert!(p.state_matrix().iter().all(|&a| a < 0.0));
        p.validate().unwrap();
    }
}
