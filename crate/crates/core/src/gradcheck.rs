//! Central finite-difference check of the hand-written model gradients.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::Result;
use crate::model::{model_backward, model_forward, model_logits, ModelConfig, ModelParams};

/// Acceptance threshold on the maximum relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
/// Central-difference step.
pub const GRADCHECK_EPS: f64 = 1e-4;
/// Spread of the random parameters; wide enough that every term of the
/// gradient is well above rounding noise.
pub const GRADCHECK_STD: f64 = 0.5;

#[derive(Clone, Debug, Serialize)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Name and flat index of the worst entry.
    pub worst: String,
    /// Number of scalars compared (parameters plus input values).
    pub checked: usize,
    /// Gate weights at or below the threshold in the unperturbed pass.
    pub pruned: usize,
    /// Smallest distance between a gate weight and the threshold.
    pub gate_margin: f64,
    pub seconds: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < GRADCHECK_TOLERANCE
    }
}

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Every tensor, biases included, drawn from `N(0, std^2)`.
pub fn random_params(config: &ModelConfig, seed: u64, std: f64) -> ModelParams<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::new(0.0, std).expect("positive std");
    let mut params = ModelParams::<f64>::zeros(config);
    for t in params.tensors_mut() {
        t.data_mut()
            .iter_mut()
            .for_each(|v| *v = dist.sample(&mut rng));
    }
    params
}

/// Compares the analytic gradient of `r . logits` (with a random `r`)
/// against central differences for every parameter and input value, in
/// double precision.
pub fn gradcheck(config: &ModelConfig, seed: u64) -> Result<GradCheckReport> {
    config.validate()?;
    let start = Instant::now();
    let params = random_params(config, seed, GRADCHECK_STD);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let patch: Vec<f64> = (0..config.positions() * config.bands)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let weights: Vec<f64> = (0..config.classes)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let objective = |p: &ModelParams<f64>, x: &[f64]| -> Result<f64> {
        let logits = model_logits(x, p, config)?;
        Ok(logits.iter().zip(&weights).map(|(l, w)| l * w).sum())
    };

    let (_, tape) = model_forward(&patch, &params, config)?;
    let mut grads = params.zeros_like();
    let mut grad_patch = vec![0.0; patch.len()];
    model_backward(
        &tape,
        &params,
        config,
        &weights,
        &mut grads,
        Some(&mut grad_patch),
    )?;

    let tau = config.tau;
    let gate_weights: Vec<f64> = tape
        .layers
        .iter()
        .filter_map(|l| l.gate.as_ref())
        .flat_map(|g| g.weights.m0.iter().chain(&g.weights.m1).copied())
        .collect();
    let pruned = gate_weights.iter().filter(|&&m| m <= tau).count();
    let gate_margin = gate_weights
        .iter()
        .map(|m| (m - tau).abs())
        .fold(f64::INFINITY, f64::min);

    let eps = GRADCHECK_EPS;
    let mut max_rel_err = 0.0f64;
    let mut worst = String::new();
    let mut checked = 0;
    let names = params.tensor_names();
    let analytic = grads.tensors();
    for (t, name) in names.iter().enumerate() {
        for k in 0..analytic[t].len() {
            let mut plus = params.clone();
            plus.tensors_mut()[t].data_mut()[k] += eps;
            let mut minus = params.clone();
            minus.tensors_mut()[t].data_mut()[k] -= eps;
            let numeric = (objective(&plus, &patch)? - objective(&minus, &patch)?) / (2.0 * eps);
            let err = relative_error(analytic[t].data()[k], numeric);
            checked += 1;
            if err > max_rel_err {
                max_rel_err = err;
                worst = format!("{name}[{k}]");
            }
        }
    }
    for k in 0..patch.len() {
        let mut plus = patch.clone();
        plus[k] += eps;
        let mut minus = patch.clone();
        minus[k] -= eps;
        let numeric = (objective(&params, &plus)? - objective(&params, &minus)?) / (2.0 * eps);
        let err = relative_error(grad_patch[k], numeric);
        checked += 1;
        if err > max_rel_err {
            max_rel_err = err;
            worst = format!("input[{k}]");
        }
    }
    Ok(GradCheckReport {
        max_rel_err,
        worst,
        checked,
        pruned,
        gate_margin,
        seconds: start.elapsed().as_secs_f64(),
    })
}
