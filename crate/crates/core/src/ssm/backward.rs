use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::affine_backward;

use super::{ScanTape, SsmParams};

/// Gradients of `<upstream, y>` with respect to the input sequence and
/// every parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanGrads<T> {
    pub input: Vec<T>,
    pub params: SsmParams<T>,
}

pub fn selective_scan_backward<T: Real>(
    tape: &ScanTape<T>,
    params: &SsmParams<T>,
    upstream: &[T],
) -> Result<ScanGrads<T>> {
    let mut grads = ScanGrads {
        input: vec![T::zero(); tape.input.values.len()],
        params: params.zeros_like(),
    };
    selective_scan_backward_into(tape, params, upstream, &mut grads.params, &mut grads.input)?;
    Ok(grads)
}

/// Reverse pass over the recurrence, accumulating into `grad_params` and
/// `grad_input` (both are added to, not overwritten).
pub fn selective_scan_backward_into<T: Real>(
    tape: &ScanTape<T>,
    params: &SsmParams<T>,
    upstream: &[T],
    grad_params: &mut SsmParams<T>,
    grad_input: &mut [T],
) -> Result<()> {
    let (l, d) = (tape.input.len, tape.input.channels);
    let (n, r) = (params.state_dim, params.rank);
    if d != params.channel_dim
        || n != tape.state_dim
        || tape.states.len() != l * d * n
        || tape.abar.len() != l * d * n
        || tape.selective.low.len() != l * r
    {
        return Err(Error::Contract(
            "scan tape was not produced with these parameters".into(),
        ));
    }
    if upstream.len() != l * d || grad_input.len() != l * d {
        return Err(Error::Contract(format!(
            "gradient buffers must hold {l}x{d} values"
        )));
    }
    if grad_params.channel_dim != d || grad_params.state_dim != n || grad_params.rank != r {
        return Err(Error::Contract("gradient parameter shape mismatch".into()));
    }

    let x = &tape.input.values;
    let sel = &tape.selective;
    let a = &tape.a;
    let skip = params.skip.data();

    let mut g_delta = vec![T::zero(); l * d];
    let mut g_b = vec![T::zero(); l * n];
    let mut g_c = vec![T::zero(); l * n];
    let mut g_a = vec![T::zero(); d * n];
    let mut g_h = vec![T::zero(); d * n];
    let zeros = vec![T::zero(); d * n];

    {
        let g_skip = grad_params.skip.data_mut();
        for t in (0..l).rev() {
            let cells = t * d * n..(t + 1) * d * n;
            let h_t = &tape.states[cells.clone()];
            let h_prev = if t == 0 {
                &zeros[..]
            } else {
                &tape.states[(t - 1) * d * n..t * d * n]
            };
            let abar_t = &tape.abar[cells];
            let b_t = &sel.b[t * n..(t + 1) * n];
            let c_t = &sel.c[t * n..(t + 1) * n];
            for ch in 0..d {
                let i = t * d + ch;
                let (gy, xd, dt) = (upstream[i], x[i], sel.delta[i]);
                g_skip[ch] += gy * xd;
                grad_input[i] += gy * skip[ch];
                let mut gdt = T::zero();
                let mut gx = T::zero();
                for s in 0..n {
                    let k = ch * n + s;
                    g_c[t * n + s] += gy * h_t[k];
                    let g = g_h[k] + gy * c_t[s];
                    let ab = abar_t[k];
                    let g_ab = g * h_prev[k] * ab;
                    gdt += g_ab * a[k] + g * b_t[s] * xd;
                    g_a[k] += g_ab * dt;
                    g_b[t * n + s] += g * dt * xd;
                    gx += g * dt * b_t[s];
                    g_h[k] = g * ab;
                }
                g_delta[i] += gdt;
                grad_input[i] += gx;
            }
        }
    }

    // A = -exp(a_log), so dA/da_log = A.
    for ((ga, &gv), &av) in grad_params.a_log.data_mut().iter_mut().zip(&g_a).zip(a) {
        *ga += gv * av;
    }

    let g_pre: Vec<T> = g_delta
        .iter()
        .zip(&sel.pre)
        .map(|(&g, &z)| g * z.sigmoid())
        .collect();
    {
        let g_bias = grad_params.dt_bias.data_mut();
        for row in g_pre.chunks_exact(d) {
            for (gb, &g) in g_bias.iter_mut().zip(row) {
                *gb += g;
            }
        }
    }
    let mut g_low = vec![T::zero(); l * r];
    affine_backward(
        &sel.low,
        l,
        r,
        params.dt_proj_out.data(),
        d,
        &g_pre,
        grad_params.dt_proj_out.data_mut(),
        Some(&mut g_low),
    );
    affine_backward(
        x,
        l,
        d,
        params.dt_proj_in.data(),
        r,
        &g_low,
        grad_params.dt_proj_in.data_mut(),
        Some(grad_input),
    );
    affine_backward(
        x,
        l,
        d,
        params.b_proj.data(),
        n,
        &g_b,
        grad_params.b_proj.data_mut(),
        Some(grad_input),
    );
    affine_backward(
        x,
        l,
        d,
        params.c_proj.data(),
        n,
        &g_c,
        grad_params.c_proj.data_mut(),
        Some(grad_input),
    );
    Ok(())
}
