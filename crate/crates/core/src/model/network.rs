use crate::blocks::{
    bss_apply, bss_backward, bss_forward, gate_combine, gate_encoder, generate_cross_routes,
    mixture_gate, mixture_gate_backward, pcs_apply, pcs_backward, pcs_forward, BssTape,
    EmbeddedPatch, FeatureMap, GateTape, PcsTape, RouteSet,
};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::{affine, affine_backward};

use super::{LayerParams, ModelConfig, ModelParams, Readout};

/// What one block recorded: its input and the tapes of the active branches.
#[derive(Clone, Debug)]
pub struct LayerTape<T> {
    pub input: FeatureMap<T>,
    pub pcs: Option<PcsTape<T>>,
    pub bss: Option<BssTape<T>>,
    pub gate: Option<GateTape<T>>,
}

#[derive(Clone, Debug)]
pub struct ModelTape<T> {
    pub patch: Vec<T>,
    pub layers: Vec<LayerTape<T>>,
    /// The `D`-vector fed to the head.
    pub feature: Vec<T>,
    routes: RouteSet,
}

fn check_patch<T: Real>(patch: &[T], config: &ModelConfig) -> Result<()> {
    let expected = config.positions() * config.bands;
    if patch.len() != expected {
        return Err(Error::Config(format!(
            "patch holds {} values, a {p}x{p}x{k} patch needs {expected}",
            patch.len(),
            p = config.patch,
            k = config.bands
        )));
    }
    Ok(())
}

fn check_layout<T: Real>(params: &ModelParams<T>, config: &ModelConfig) -> Result<()> {
    if params.layers.len() != config.layers
        || params.embed_w.shape() != [config.bands, config.latent]
        || params.head_w.shape() != [config.latent, config.classes]
    {
        return Err(Error::Config(
            "parameters do not match the model config".into(),
        ));
    }
    Ok(())
}

fn embed<T: Real>(patch: &[T], params: &ModelParams<T>, config: &ModelConfig) -> EmbeddedPatch<T> {
    let mut e = FeatureMap::zeros(config.patch, config.latent);
    affine(
        patch,
        config.positions(),
        config.bands,
        params.embed_w.data(),
        config.latent,
        Some(params.embed_b.data()),
        &mut e.values,
    );
    e
}

fn sum_maps<T: Real>(mut a: FeatureMap<T>, b: &FeatureMap<T>) -> FeatureMap<T> {
    for (x, &y) in a.values.iter_mut().zip(&b.values) {
        *x += y;
    }
    a
}

fn readout<T: Real>(f: &FeatureMap<T>, config: &ModelConfig) -> Vec<T> {
    match config.readout {
        Readout::Center => f.at(f.positions() / 2).to_vec(),
        Readout::Mean => {
            let mut out = vec![T::zero(); f.dim];
            for g in 0..f.positions() {
                for (o, &v) in out.iter_mut().zip(f.at(g)) {
                    *o += v;
                }
            }
            let n = T::lit(f.positions() as f64);
            out.iter_mut().for_each(|o| *o /= n);
            out
        }
    }
}

fn head<T: Real>(feature: &[T], params: &ModelParams<T>, config: &ModelConfig) -> Vec<T> {
    let mut logits = vec![T::zero(); config.classes];
    affine(
        feature,
        1,
        config.latent,
        params.head_w.data(),
        config.classes,
        Some(params.head_b.data()),
        &mut logits,
    );
    logits
}

fn layer_forward<T: Real>(
    e: FeatureMap<T>,
    layer: &LayerParams<T>,
    routes: &RouteSet,
    config: &ModelConfig,
) -> Result<(FeatureMap<T>, LayerTape<T>)> {
    let (y, pcs) = match config.use_pcs {
        true => {
            let (y, t) = pcs_forward(&e, &layer.pcs, routes)?;
            (Some(y), Some(t))
        }
        false => (None, None),
    };
    let (p, bss) = match config.use_bss {
        true => {
            let (p, t) = bss_forward(&e, &layer.bss)?;
            (Some(p), Some(t))
        }
        false => (None, None),
    };
    let mut gate = None;
    let out = match (y, p) {
        (Some(y), Some(p)) if config.use_smg => {
            let (f, t) = mixture_gate(&y, &p, &layer.gate, T::lit(config.tau))?;
            gate = Some(t);
            f
        }
        (Some(y), Some(p)) => sum_maps(y, &p),
        (Some(y), None) => y,
        (None, Some(p)) => p,
        (None, None) => e.clone(),
    };
    Ok((
        out,
        LayerTape {
            input: e,
            pcs,
            bss,
            gate,
        },
    ))
}

fn layer_apply<T: Real>(
    e: FeatureMap<T>,
    layer: &LayerParams<T>,
    routes: &RouteSet,
    config: &ModelConfig,
) -> Result<FeatureMap<T>> {
    let y = config
        .use_pcs
        .then(|| pcs_apply(&e, &layer.pcs, routes))
        .transpose()?;
    let p = config
        .use_bss
        .then(|| bss_apply(&e, &layer.bss))
        .transpose()?;
    Ok(match (y, p) {
        (Some(y), Some(p)) if config.use_smg => {
            let ly = gate_encoder(&y, &layer.gate)?;
            let lp = gate_encoder(&p, &layer.gate)?;
            gate_combine(&ly, &lp, &y, &p, T::lit(config.tau))?.0
        }
        (Some(y), Some(p)) => sum_maps(y, &p),
        (Some(y), None) => y,
        (None, Some(p)) => p,
        (None, None) => e,
    })
}

/// Logits for one `P x P x K` patch (pixel-major, band fastest) together
/// with the tape needed by [`model_backward`].
pub fn model_forward<T: Real>(
    patch: &[T],
    params: &ModelParams<T>,
    config: &ModelConfig,
) -> Result<(Vec<T>, ModelTape<T>)> {
    check_patch(patch, config)?;
    check_layout(params, config)?;
    let routes = generate_cross_routes(config.patch);
    let mut e = embed(patch, params, config);
    let mut layers = Vec::with_capacity(config.layers);
    for layer in &params.layers {
        let (next, tape) = layer_forward(e, layer, &routes, config)?;
        layers.push(tape);
        e = next;
    }
    let feature = readout(&e, config);
    let logits = head(&feature, params, config);
    Ok((
        logits,
        ModelTape {
            patch: patch.to_vec(),
            layers,
            feature,
            routes,
        },
    ))
}

/// Inference-only forward pass; bit-identical to [`model_forward`].
pub fn model_logits<T: Real>(
    patch: &[T],
    params: &ModelParams<T>,
    config: &ModelConfig,
) -> Result<Vec<T>> {
    check_patch(patch, config)?;
    check_layout(params, config)?;
    let routes = generate_cross_routes(config.patch);
    let mut e = embed(patch, params, config);
    for layer in &params.layers {
        e = layer_apply(e, layer, &routes, config)?;
    }
    Ok(head(&readout(&e, config), params, config))
}

fn layer_backward<T: Real>(
    tape: &LayerTape<T>,
    layer: &LayerParams<T>,
    routes: &RouteSet,
    grad_out: Vec<T>,
    grads: &mut LayerParams<T>,
) -> Result<Vec<T>> {
    let n = grad_out.len();
    let (grad_y, grad_p) = match &tape.gate {
        Some(g) => {
            let mut gy = vec![T::zero(); n];
            let mut gp = vec![T::zero(); n];
            mixture_gate_backward(g, &layer.gate, &grad_out, &mut grads.gate, &mut gy, &mut gp)?;
            (gy, gp)
        }
        None => (grad_out.clone(), grad_out.clone()),
    };
    if tape.pcs.is_none() && tape.bss.is_none() {
        return Ok(grad_out);
    }
    let mut grad_e = vec![T::zero(); n];
    if let Some(t) = &tape.pcs {
        pcs_backward(t, &layer.pcs, routes, &grad_y, &mut grads.pcs, &mut grad_e)?;
    }
    if let Some(t) = &tape.bss {
        bss_backward(t, &layer.bss, &grad_p, &mut grads.bss, &mut grad_e)?;
    }
    Ok(grad_e)
}

/// Accumulates the gradient of `upstream . logits` into `grads`; when
/// `grad_patch` is given the input gradient is accumulated into it as well.
pub fn model_backward<T: Real>(
    tape: &ModelTape<T>,
    params: &ModelParams<T>,
    config: &ModelConfig,
    upstream: &[T],
    grads: &mut ModelParams<T>,
    grad_patch: Option<&mut [T]>,
) -> Result<()> {
    if upstream.len() != config.classes
        || tape.layers.len() != params.layers.len()
        || grads.layers.len() != params.layers.len()
        || tape.feature.len() != config.latent
        || tape.patch.len() != config.positions() * config.bands
    {
        return Err(Error::Contract(
            "model tape does not match the config".into(),
        ));
    }
    let (d, c) = (config.latent, config.classes);
    for (b, &u) in grads.head_b.data_mut().iter_mut().zip(upstream) {
        *b += u;
    }
    let mut grad_feature = vec![T::zero(); d];
    affine_backward(
        &tape.feature,
        1,
        d,
        params.head_w.data(),
        c,
        upstream,
        grads.head_w.data_mut(),
        Some(&mut grad_feature),
    );

    let positions = config.positions();
    let mut grad = vec![T::zero(); positions * d];
    match config.readout {
        Readout::Center => {
            let center = positions / 2;
            grad[center * d..(center + 1) * d].copy_from_slice(&grad_feature);
        }
        Readout::Mean => {
            let n = T::lit(positions as f64);
            for g in 0..positions {
                for (o, &v) in grad[g * d..(g + 1) * d].iter_mut().zip(&grad_feature) {
                    *o = v / n;
                }
            }
        }
    }

    for ((layer_tape, layer), layer_grads) in tape
        .layers
        .iter()
        .zip(&params.layers)
        .zip(grads.layers.iter_mut())
        .rev()
    {
        grad = layer_backward(layer_tape, layer, &tape.routes, grad, layer_grads)?;
    }

    for row in grad.chunks_exact(d) {
        for (b, &g) in grads.embed_b.data_mut().iter_mut().zip(row) {
            *b += g;
        }
    }
    affine_backward(
        &tape.patch,
        positions,
        config.bands,
        params.embed_w.data(),
        d,
        &grad,
        grads.embed_w.data_mut(),
        grad_patch,
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_params;
    use crate::ssm::SsmParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_patch(config: &ModelConfig, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..config.positions() * config.bands)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect()
    }

    #[test]
    fn logits_have_one_entry_per_class() {
        let c = ModelConfig::tiny();
        let p = init_params::<f64>(&c, 0).unwrap();
        let (logits, _) = model_forward(&random_patch(&c, 1), &p, &c).unwrap();
        assert_eq!(logits.len(), 3);
    }

    #[test]
    fn wrong_patch_size_is_a_config_error() {
        let c = ModelConfig::tiny();
        let p = init_params::<f64>(&c, 0).unwrap();
        assert!(matches!(
            model_forward(&[0.0; 5], &p, &c),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn inference_path_matches_taped_path() {
        for readout in [Readout::Center, Readout::Mean] {
            let c = ModelConfig {
                layers: 2,
                readout,
                ..ModelConfig::tiny()
            };
            let p = init_params::<f64>(&c, 4).unwrap();
            let x = random_patch(&c, 5);
            assert_eq!(
                model_forward(&x, &p, &c).unwrap().0,
                model_logits(&x, &p, &c).unwrap()
            );
        }
    }

    /// Zero projections with unit skip make PCS return `4E` and BSS `2E`;
    /// with `w2 = 0` both gate logits equal `b2`, so `m0 = m1 = 1/2` and the
    /// gate returns `(4E + 2E) / 2 = 3E`.
    #[test]
    fn degenerate_path_scales_the_center_embedding() {
        let c = ModelConfig::tiny();
        let mut p = init_params::<f64>(&c, 9).unwrap();
        let (d, n, r) = (c.latent, c.state, c.ssm_rank());
        for layer in &mut p.layers {
            layer
                .pcs
                .iter_mut()
                .for_each(|s| *s = SsmParams::residual_only(d, n, r));
            layer
                .bss
                .iter_mut()
                .for_each(|s| *s = SsmParams::residual_only(c.positions(), n, r));
            layer.gate.w2.fill(0.0);
        }
        let x = random_patch(&c, 2);
        let (logits, _) = model_forward(&x, &p, &c).unwrap();

        let center = &x[4 * c.bands..5 * c.bands];
        let mut e = vec![0.0; d];
        for j in 0..d {
            e[j] = p.embed_b.data()[j]
                + (0..c.bands)
                    .map(|k| center[k] * p.embed_w.data()[k * d + j])
                    .sum::<f64>();
        }
        for k in 0..c.classes {
            let expected = p.head_b.data()[k]
                + (0..d)
                    .map(|j| 3.0 * e[j] * p.head_w.data()[j * c.classes + k])
                    .sum::<f64>();
            assert!(
                (logits[k] - expected).abs() <= 1e-14,
                "{} vs {expected}",
                logits[k]
            );
        }
    }

    #[test]
    fn gate_parameters_are_ignored_without_the_gate() {
        let c = ModelConfig {
            use_smg: false,
            ..ModelConfig::tiny()
        };
        let p = init_params::<f64>(&c, 1).unwrap();
        let mut q = p.clone();
        q.layers[0].gate.w1.fill(3.0);
        q.layers[0].gate.b2.fill(-7.0);
        let x = random_patch(&c, 3);
        assert_eq!(
            model_logits(&x, &p, &c).unwrap(),
            model_logits(&x, &q, &c).unwrap()
        );
    }

    #[test]
    fn embedding_only_model_reads_the_center_pixel() {
        let c = ModelConfig {
            use_pcs: false,
            use_bss: false,
            use_smg: false,
            ..ModelConfig::tiny()
        };
        let p = init_params::<f64>(&c, 1).unwrap();
        let x = random_patch(&c, 3);
        let mut y = x.clone();
        y[0] += 5.0;
        y[c.bands * 8 + 2] -= 1.0;
        assert_eq!(
            model_logits(&x, &p, &c).unwrap(),
            model_logits(&y, &p, &c).unwrap()
        );
    }

    #[test]
    fn every_input_pixel_reaches_the_logits() {
        let c = ModelConfig::tiny();
        let mut p = init_params::<f64>(&c, 6).unwrap();
        for t in p.tensors_mut() {
            t.scale(30.0);
        }
        let x = random_patch(&c, 7);
        let (_, tape) = model_forward(&x, &p, &c).unwrap();
        let mut grads = p.zeros_like();
        let mut gx = vec![0.0; x.len()];
        model_backward(&tape, &p, &c, &[1.0, -0.5, 0.25], &mut grads, Some(&mut gx)).unwrap();
        for pixel in gx.chunks_exact(c.bands) {
            assert!(pixel.iter().any(|&g| g != 0.0));
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let c = ModelConfig::tiny();
        let p = init_params::<f64>(&c, 6).unwrap();
        let (_, tape) = model_forward(&random_patch(&c, 1), &p, &c).unwrap();
        let mut grads = p.zeros_like();
        model_backward(&tape, &p, &c, &[0.0; 3], &mut grads, None).unwrap();
        assert!(grads
            .tensors()
            .iter()
            .all(|t| t.data().iter().all(|&g| g == 0.0)));
    }

    #[test]
    fn head_bias_gradient_is_the_upstream() {
        let c = ModelConfig::tiny();
        let p = init_params::<f64>(&c, 6).unwrap();
        let (_, tape) = model_forward(&random_patch(&c, 1), &p, &c).unwrap();
        let mut grads = p.zeros_like();
        let up = [0.3, -1.25, 2.0];
        model_backward(&tape, &p, &c, &up, &mut grads, None).unwrap();
        assert_eq!(grads.head_b.data(), &up);
    }

    #[test]
    fn mismatched_upstream_is_a_contract_error() {
        let c = ModelConfig::tiny();
        let p = init_params::<f64>(&c, 6).unwrap();
        let (_, tape) = model_forward(&random_patch(&c, 1), &p, &c).unwrap();
        let mut grads = p.zeros_like();
        assert!(matches!(
            model_backward(&tape, &p, &c, &[1.0], &mut grads, None),
            Err(Error::Contract(_))
        ));
    }
}
