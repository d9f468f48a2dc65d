use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::blocks::GateEncoderParams;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::ssm::SsmParams;
use crate::tensor::Tensor;

use super::ModelConfig;

/// Standard deviation of every initial weight.
pub const INIT_STD: f64 = 0.01;

/// Parameters of one spatial-spectral block. Disabled branches keep their
/// parameters allocated so checkpoints share one layout across ablations.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams<T> {
    /// Four route sets, or one shared set.
    pub pcs: Vec<SsmParams<T>>,
    /// Forward and reversed sets over `P^2` channels, or one shared set.
    pub bss: Vec<SsmParams<T>>,
    pub gate: GateEncoderParams<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    /// `K x D`
    pub embed_w: Tensor<T>,
    /// `D`
    pub embed_b: Tensor<T>,
    pub layers: Vec<LayerParams<T>>,
    /// `D x C`
    pub head_w: Tensor<T>,
    /// `C`
    pub head_b: Tensor<T>,
}

impl<T: Real> ModelParams<T> {
    /// All-zero parameters shaped for `config`.
    pub fn zeros(config: &ModelConfig) -> Self {
        let (d, n, r) = (config.latent, config.state, config.ssm_rank());
        let layers = (0..config.layers)
            .map(|_| LayerParams {
                pcs: (0..config.pcs_sets())
                    .map(|_| SsmParams::zeros(d, n, r))
                    .collect(),
                bss: (0..config.bss_sets())
                    .map(|_| SsmParams::zeros(config.positions(), n, r))
                    .collect(),
                gate: GateEncoderParams::zeros(d),
            })
            .collect();
        Self {
            embed_w: Tensor::zeros(&[config.bands, d]),
            embed_b: Tensor::zeros(&[d]),
            layers,
            head_w: Tensor::zeros(&[d, config.classes]),
            head_b: Tensor::zeros(&[config.classes]),
        }
    }

    /// Every tensor in checkpoint order: embedding, then per layer the route
    /// sets, the spectral sets and the gate encoder, then the head.
    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut out = vec![&self.embed_w, &self.embed_b];
        for layer in &self.layers {
            for p in layer.pcs.iter().chain(&layer.bss) {
                out.extend(p.tensors());
            }
            out.extend(layer.gate.tensors());
        }
        out.push(&self.head_w);
        out.push(&self.head_b);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = vec![&mut self.embed_w, &mut self.embed_b];
        for layer in &mut self.layers {
            for p in layer.pcs.iter_mut().chain(layer.bss.iter_mut()) {
                out.extend(p.tensors_mut());
            }
            out.extend(layer.gate.tensors_mut());
        }
        out.push(&mut self.head_w);
        out.push(&mut self.head_b);
        out
    }

    /// Dotted names matching [`ModelParams::tensors`].
    pub fn tensor_names(&self) -> Vec<String> {
        let mut out = vec!["embed.w".to_string(), "embed.b".to_string()];
        for (l, layer) in self.layers.iter().enumerate() {
            for (group, sets) in [("pcs", &layer.pcs), ("bss", &layer.bss)] {
                for i in 0..sets.len() {
                    for name in SsmParams::<T>::TENSOR_NAMES {
                        out.push(format!("layer{l}.{group}{i}.{name}"));
                    }
                }
            }
            for name in GateEncoderParams::<T>::TENSOR_NAMES {
                out.push(format!("layer{l}.gate.{name}"));
            }
        }
        out.push("head.w".into());
        out.push("head.b".into());
        out
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|t| t.fill(T::zero()));
        z
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        let cast_ssm = |p: &SsmParams<T>| SsmParams {
            channel_dim: p.channel_dim,
            state_dim: p.state_dim,
            rank: p.rank,
            a_log: p.a_log.cast(),
            skip: p.skip.cast(),
            dt_proj_in: p.dt_proj_in.cast(),
            dt_proj_out: p.dt_proj_out.cast(),
            dt_bias: p.dt_bias.cast(),
            b_proj: p.b_proj.cast(),
            c_proj: p.c_proj.cast(),
        };
        ModelParams {
            embed_w: self.embed_w.cast(),
            embed_b: self.embed_b.cast(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    pcs: l.pcs.iter().map(cast_ssm).collect(),
                    bss: l.bss.iter().map(cast_ssm).collect(),
                    gate: GateEncoderParams {
                        dim: l.gate.dim,
                        hidden: l.gate.hidden,
                        w1: l.gate.w1.cast(),
                        b1: l.gate.b1.cast(),
                        w2: l.gate.w2.cast(),
                        b2: l.gate.b2.cast(),
                    },
                })
                .collect(),
            head_w: self.head_w.cast(),
            head_b: self.head_b.cast(),
        }
    }

    /// Checks every tensor against the shapes `config` implies.
    pub fn check_shapes(&self, config: &ModelConfig) -> Result<()> {
        let expected = Self::zeros(config);
        let (got, want) = (self.tensors(), expected.tensors());
        if got.len() != want.len() {
            return Err(Error::Consistency(format!(
                "parameters hold {} tensors, config implies {}",
                got.len(),
                want.len()
            )));
        }
        for ((g, w), name) in got.iter().zip(&want).zip(expected.tensor_names()) {
            if g.shape() != w.shape() {
                return Err(Error::Consistency(format!(
                    "tensor {name} has shape {:?}, config implies {:?}",
                    g.shape(),
                    w.shape()
                )));
            }
        }
        Ok(())
    }
}

/// Seeded initialization: every weight `N(0, 0.01^2)` (the SSM `a_log` and
/// skip included), every bias zero.
pub fn init_params<T: Real>(config: &ModelConfig, seed: u64) -> Result<ModelParams<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d, n, r) = (config.latent, config.state, config.ssm_rank());
    let embed_w = Tensor::normal(&[config.bands, d], INIT_STD, &mut rng);
    let layers = (0..config.layers)
        .map(|_| {
            let pcs = (0..config.pcs_sets())
                .map(|_| SsmParams::init(d, n, r, INIT_STD, &mut rng))
                .collect();
            let bss = (0..config.bss_sets())
                .map(|_| SsmParams::init(config.positions(), n, r, INIT_STD, &mut rng))
                .collect();
            let gate = GateEncoderParams::init(d, INIT_STD, &mut rng);
            LayerParams { pcs, bss, gate }
        })
        .collect();
    let head_w = Tensor::normal(&[d, config.classes], INIT_STD, &mut rng);
    Ok(ModelParams {
        embed_w,
        embed_b: Tensor::zeros(&[d]),
        layers,
        head_w,
        head_b: Tensor::zeros(&[config.classes]),
    })
}

/// Exact number of scalar parameters.
pub fn count_params<T: Real>(params: &ModelParams<T>) -> usize {
    params.tensors().iter().map(|t| t.len()).sum()
}
