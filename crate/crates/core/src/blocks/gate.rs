use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::{affine, affine_backward, Tensor};

use super::FeatureMap;

/// Shared two-layer encoder scoring each position of a feature map.
#[derive(Clone, Debug, PartialEq)]
pub struct GateEncoderParams<T> {
    pub dim: usize,
    pub hidden: usize,
    /// `D x H`
    pub w1: Tensor<T>,
    /// `H`
    pub b1: Tensor<T>,
    /// `H x 1`
    pub w2: Tensor<T>,
    /// `1`
    pub b2: Tensor<T>,
}

impl<T: Real> GateEncoderParams<T> {
    /// Hidden width `max(1, D / 2)`.
    pub fn hidden_for(dim: usize) -> usize {
        (dim / 2).max(1)
    }

    pub fn zeros(dim: usize) -> Self {
        let hidden = Self::hidden_for(dim);
        Self {
            dim,
            hidden,
            w1: Tensor::zeros(&[dim, hidden]),
            b1: Tensor::zeros(&[hidden]),
            w2: Tensor::zeros(&[hidden, 1]),
            b2: Tensor::zeros(&[1]),
        }
    }

    pub fn init<R: Rng + ?Sized>(dim: usize, std: f64, rng: &mut R) -> Self {
        let hidden = Self::hidden_for(dim);
        Self {
            dim,
            hidden,
            w1: Tensor::normal(&[dim, hidden], std, rng),
            b1: Tensor::zeros(&[hidden]),
            w2: Tensor::normal(&[hidden, 1], std, rng),
            b2: Tensor::zeros(&[1]),
        }
    }

    pub fn tensors(&self) -> [&Tensor<T>; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor<T>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub const TENSOR_NAMES: [&'static str; 4] = ["w1", "b1", "w2", "b2"];

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.dim)
    }
}

/// Exact GELU, `x * Phi(x)`.
#[inline]
pub fn gelu<T: Real>(x: T) -> T {
    x * x.normal_cdf()
}

#[inline]
pub fn gelu_grad<T: Real>(x: T) -> T {
    x.normal_cdf() + x * x.normal_pdf()
}

/// Mixture probabilities per position and the pruning threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct GateWeights<T> {
    pub m0: Vec<T>,
    pub m1: Vec<T>,
    pub tau: T,
}

impl<T: Real> GateWeights<T> {
    /// Indicator `1[m > tau]`; a weight equal to `tau` is pruned.
    #[inline]
    pub fn keep(&self, m: T) -> bool {
        m > self.tau
    }
}

fn encode<T: Real>(feat: &FeatureMap<T>, theta: &GateEncoderParams<T>) -> (Vec<T>, Vec<T>) {
    let (pos, h) = (feat.positions(), theta.hidden);
    let mut pre = vec![T::zero(); pos * h];
    affine(
        &feat.values,
        pos,
        feat.dim,
        theta.w1.data(),
        h,
        Some(theta.b1.data()),
        &mut pre,
    );
    let act: Vec<T> = pre.iter().map(|&v| gelu(v)).collect();
    let mut logits = vec![T::zero(); pos];
    affine(
        &act,
        pos,
        h,
        theta.w2.data(),
        1,
        Some(theta.b2.data()),
        &mut logits,
    );
    (pre, logits)
}

/// Per-position logit `w2 . GELU(W1^T f + b1) + b2`.
pub fn gate_encoder<T: Real>(feat: &FeatureMap<T>, theta: &GateEncoderParams<T>) -> Result<Vec<T>> {
    if feat.dim != theta.dim {
        return Err(Error::Contract(format!(
            "gate encoder expects {} channels, got {}",
            theta.dim, feat.dim
        )));
    }
    Ok(encode(feat, theta).1)
}

/// Two-way softmax of the branch logits followed by thresholded mixing.
pub fn gate_combine<T: Real>(
    logits_y: &[T],
    logits_p: &[T],
    y: &FeatureMap<T>,
    p: &FeatureMap<T>,
    tau: T,
) -> Result<(FeatureMap<T>, GateWeights<T>)> {
    if !(tau >= T::zero() && tau < T::lit(0.5)) {
        return Err(Error::Config(format!(
            "gate threshold must lie in [0, 0.5), got {tau}"
        )));
    }
    if y.values.len() != p.values.len()
        || logits_y.len() != y.positions()
        || logits_p.len() != p.positions()
    {
        return Err(Error::Contract("gate inputs disagree in shape".into()));
    }
    let mut weights = GateWeights {
        m0: Vec::with_capacity(logits_y.len()),
        m1: Vec::with_capacity(logits_y.len()),
        tau,
    };
    for (&a, &b) in logits_y.iter().zip(logits_p) {
        // sigmoid of the logit gap is the two-way softmax.
        let m0 = (a - b).sigmoid();
        let m1 = (b - a).sigmoid();
        weights.m0.push(m0);
        weights.m1.push(m1);
    }
    let dim = y.dim;
    let mut f = FeatureMap::zeros(y.size, dim);
    for g in 0..y.positions() {
        let (m0, m1) = (weights.m0[g], weights.m1[g]);
        let w0 = if weights.keep(m0) { m0 } else { T::zero() };
        let w1 = if weights.keep(m1) { m1 } else { T::zero() };
        for ch in 0..dim {
            let i = g * dim + ch;
            f.values[i] = w0 * y.values[i] + w1 * p.values[i];
        }
    }
    Ok((f, weights))
}

#[derive(Clone, Debug)]
pub struct GateTape<T> {
    pub y: FeatureMap<T>,
    pub p: FeatureMap<T>,
    pub pre_y: Vec<T>,
    pub pre_p: Vec<T>,
    pub weights: GateWeights<T>,
}

pub fn mixture_gate<T: Real>(
    y: &FeatureMap<T>,
    p: &FeatureMap<T>,
    theta: &GateEncoderParams<T>,
    tau: T,
) -> Result<(FeatureMap<T>, GateTape<T>)> {
    if y.dim != theta.dim || p.dim != theta.dim {
        return Err(Error::Contract("gate encoder width mismatch".into()));
    }
    let (pre_y, logits_y) = encode(y, theta);
    let (pre_p, logits_p) = encode(p, theta);
    let (f, weights) = gate_combine(&logits_y, &logits_p, y, p, tau)?;
    Ok((
        f,
        GateTape {
            y: y.clone(),
            p: p.clone(),
            pre_y,
            pre_p,
            weights,
        },
    ))
}

/// The pruning indicators are treated as constants.
pub fn mixture_gate_backward<T: Real>(
    tape: &GateTape<T>,
    theta: &GateEncoderParams<T>,
    grad_f: &[T],
    grad_theta: &mut GateEncoderParams<T>,
    grad_y: &mut [T],
    grad_p: &mut [T],
) -> Result<()> {
    let (dim, pos) = (tape.y.dim, tape.y.positions());
    if grad_f.len() != dim * pos || grad_y.len() != dim * pos || grad_p.len() != dim * pos {
        return Err(Error::Contract("gate gradient size mismatch".into()));
    }
    let w = &tape.weights;
    let mut grad_logit_y = vec![T::zero(); pos];
    let mut grad_logit_p = vec![T::zero(); pos];
    for g in 0..pos {
        let (m0, m1) = (w.m0[g], w.m1[g]);
        let (k0, k1) = (w.keep(m0), w.keep(m1));
        let mut dm0 = T::zero();
        let mut dm1 = T::zero();
        for ch in 0..dim {
            let i = g * dim + ch;
            let gf = grad_f[i];
            if k0 {
                grad_y[i] += m0 * gf;
                dm0 += gf * tape.y.values[i];
            }
            if k1 {
                grad_p[i] += m1 * gf;
                dm1 += gf * tape.p.values[i];
            }
        }
        let gl = m0 * m1 * (dm0 - dm1);
        grad_logit_y[g] = gl;
        grad_logit_p[g] = -gl;
    }
    encoder_backward(
        &tape.y,
        &tape.pre_y,
        &grad_logit_y,
        theta,
        grad_theta,
        grad_y,
    );
    encoder_backward(
        &tape.p,
        &tape.pre_p,
        &grad_logit_p,
        theta,
        grad_theta,
        grad_p,
    );
    Ok(())
}

fn encoder_backward<T: Real>(
    feat: &FeatureMap<T>,
    pre: &[T],
    grad_logits: &[T],
    theta: &GateEncoderParams<T>,
    grad_theta: &mut GateEncoderParams<T>,
    grad_feat: &mut [T],
) {
    let (pos, h) = (feat.positions(), theta.hidden);
    let act: Vec<T> = pre.iter().map(|&v| gelu(v)).collect();
    grad_theta.b2.data_mut()[0] += grad_logits.iter().copied().sum::<T>();
    let mut grad_act = vec![T::zero(); pos * h];
    affine_backward(
        &act,
        pos,
        h,
        theta.w2.data(),
        1,
        grad_logits,
        grad_theta.w2.data_mut(),
        Some(&mut grad_act),
    );
    let grad_pre: Vec<T> = grad_act
        .iter()
        .zip(pre)
        .map(|(&g, &z)| g * gelu_grad(z))
        .collect();
    for row in grad_pre.chunks_exact(h) {
        for (b, &g) in grad_theta.b1.data_mut().iter_mut().zip(row) {
            *b += g;
        }
    }
    affine_backward(
        &feat.values,
        pos,
        feat.dim,
        theta.w1.data(),
        h,
        &grad_pre,
        grad_theta.w1.data_mut(),
        Some(grad_feat),
    );
}
