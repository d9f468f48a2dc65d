use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::ssm::{
    scan_forward, selective_scan, selective_scan_backward_into, ScanSequence, ScanTape, SsmParams,
};

use super::{check_count, route_params, EmbeddedPatch, FeatureMap};

#[derive(Clone, Debug)]
pub struct BssTape<T> {
    pub scans: Vec<ScanTape<T>>,
}

/// Channel-major view: step `t` is the `P^2` spatial vector of channel `t`,
/// optionally in reversed channel order.
fn spectral_sequence<T: Real>(e: &EmbeddedPatch<T>, reversed: bool) -> Result<ScanSequence<T>> {
    let (pos, dim) = (e.positions(), e.dim);
    let mut values = Vec::with_capacity(pos * dim);
    for t in 0..dim {
        let ch = if reversed { dim - 1 - t } else { t };
        values.extend((0..pos).map(|g| e.values[g * dim + ch]));
    }
    ScanSequence::new(dim, pos, values)
}

/// Adds a channel-major sequence back into a pixel-major map.
fn scatter<T: Real>(acc: &mut [T], seq: &[T], pos: usize, dim: usize, reversed: bool) {
    for t in 0..dim {
        let ch = if reversed { dim - 1 - t } else { t };
        for g in 0..pos {
            acc[g * dim + ch] += seq[t * pos + g];
        }
    }
}

fn check<T: Real>(e: &EmbeddedPatch<T>, params: &[SsmParams<T>]) -> Result<()> {
    check_count(params, 2, "bi-directional spectral scanning")?;
    if params.iter().any(|p| p.channel_dim != e.positions()) {
        return Err(Error::Contract(format!(
            "spectral scans need {} channels (one per pixel)",
            e.positions()
        )));
    }
    Ok(())
}

/// Forward and reversed scans over the latent channels, summed after the
/// reversed output is flipped back.
pub fn bss_forward<T: Real>(
    e: &EmbeddedPatch<T>,
    params: &[SsmParams<T>],
) -> Result<(FeatureMap<T>, BssTape<T>)> {
    check(e, params)?;
    let mut out = FeatureMap::zeros(e.size, e.dim);
    let mut scans = Vec::with_capacity(2);
    for dir in 0..2 {
        let reversed = dir == 1;
        let seq = spectral_sequence(e, reversed)?;
        let (y, tape) = selective_scan(&seq, route_params(params, dir))?;
        scatter(&mut out.values, &y.values, e.positions(), e.dim, reversed);
        scans.push(tape);
    }
    Ok((out, BssTape { scans }))
}

pub fn bss_apply<T: Real>(e: &EmbeddedPatch<T>, params: &[SsmParams<T>]) -> Result<FeatureMap<T>> {
    check(e, params)?;
    let mut out = FeatureMap::zeros(e.size, e.dim);
    for dir in 0..2 {
        let reversed = dir == 1;
        let y = scan_forward(&spectral_sequence(e, reversed)?, route_params(params, dir))?;
        scatter(&mut out.values, &y.values, e.positions(), e.dim, reversed);
    }
    Ok(out)
}

pub fn bss_backward<T: Real>(
    tape: &BssTape<T>,
    params: &[SsmParams<T>],
    grad_out: &[T],
    grad_params: &mut [SsmParams<T>],
    grad_e: &mut [T],
) -> Result<()> {
    if tape.scans.len() != 2 || grad_params.len() != params.len() {
        return Err(Error::Contract("spectral scanning tape mismatch".into()));
    }
    let (dim, pos) = (tape.scans[0].input.len, tape.scans[0].input.channels);
    if grad_out.len() != dim * pos || grad_e.len() != dim * pos {
        return Err(Error::Contract(
            "spectral scanning gradient size mismatch".into(),
        ));
    }
    for (dir, scan) in tape.scans.iter().enumerate() {
        let reversed = dir == 1;
        // Gather the pixel-major gradient into this direction's step order.
        let mut upstream = Vec::with_capacity(dim * pos);
        for t in 0..dim {
            let ch = if reversed { dim - 1 - t } else { t };
            upstream.extend((0..pos).map(|g| grad_out[g * dim + ch]));
        }
        let mut grad_seq = vec![T::zero(); dim * pos];
        let slot = if params.len() == 1 { 0 } else { dir };
        selective_scan_backward_into(
            scan,
            &params[slot],
            &upstream,
            &mut grad_params[slot],
            &mut grad_seq,
        )?;
        scatter(grad_e, &grad_seq, pos, dim, reversed);
    }
    Ok(())
}
