use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::ssm::{
    scan_forward, selective_scan, selective_scan_backward_into, ScanSequence, ScanTape, SsmParams,
};

use super::{check_count, route_params, EmbeddedPatch, FeatureMap, RouteSet};

#[derive(Clone, Debug)]
pub struct PcsTape<T> {
    pub scans: Vec<ScanTape<T>>,
}

fn check<T: Real>(e: &EmbeddedPatch<T>, params: &[SsmParams<T>], routes: &RouteSet) -> Result<()> {
    check_count(params, 4, "patch cross scanning")?;
    if routes.size != e.size {
        return Err(Error::Contract(format!(
            "routes are for {}x{} patches, feature map is {}x{}",
            routes.size, routes.size, e.size, e.size
        )));
    }
    Ok(())
}

/// Scans the flattened patch along each of the four routes, maps every
/// output back to grid order and sums them (route order 0..3).
pub fn pcs_forward<T: Real>(
    e: &EmbeddedPatch<T>,
    params: &[SsmParams<T>],
    routes: &RouteSet,
) -> Result<(FeatureMap<T>, PcsTape<T>)> {
    check(e, params, routes)?;
    let mut outs = Vec::with_capacity(4);
    let mut scans = Vec::with_capacity(4);
    for i in 0..4 {
        let seq = ScanSequence::new(e.positions(), e.dim, routes.permute(i, &e.values, e.dim))?;
        let (out, tape) = selective_scan(&seq, route_params(params, i))?;
        outs.push(routes.unpermute(i, &out.values, e.dim));
        scans.push(tape);
    }
    Ok((
        FeatureMap::new(e.size, e.dim, fuse(outs))?,
        PcsTape { scans },
    ))
}

/// Tape-free variant of [`pcs_forward`].
pub fn pcs_apply<T: Real>(
    e: &EmbeddedPatch<T>,
    params: &[SsmParams<T>],
    routes: &RouteSet,
) -> Result<FeatureMap<T>> {
    check(e, params, routes)?;
    let mut outs = Vec::with_capacity(4);
    for i in 0..4 {
        let seq = ScanSequence::new(e.positions(), e.dim, routes.permute(i, &e.values, e.dim))?;
        let out = scan_forward(&seq, route_params(params, i))?;
        outs.push(routes.unpermute(i, &out.values, e.dim));
    }
    FeatureMap::new(e.size, e.dim, fuse(outs))
}

/// Accumulates gradients for the route parameters and the input map.
pub fn pcs_backward<T: Real>(
    tape: &PcsTape<T>,
    params: &[SsmParams<T>],
    routes: &RouteSet,
    grad_y: &[T],
    grad_params: &mut [SsmParams<T>],
    grad_e: &mut [T],
) -> Result<()> {
    if tape.scans.len() != 4 || grad_params.len() != params.len() {
        return Err(Error::Contract("patch cross scanning tape mismatch".into()));
    }
    let dim = tape.scans[0].input.channels;
    for (i, scan) in tape.scans.iter().enumerate() {
        let upstream = routes.permute(i, grad_y, dim);
        let mut grad_seq = vec![T::zero(); upstream.len()];
        let slot = if params.len() == 1 { 0 } else { i };
        selective_scan_backward_into(
            scan,
            &params[slot],
            &upstream,
            &mut grad_params[slot],
            &mut grad_seq,
        )?;
        for (g, &v) in grad_e.iter_mut().zip(&routes.unpermute(i, &grad_seq, dim)) {
            *g += v;
        }
    }
    Ok(())
}

/// Sums the four route outputs as `(o0 + o1) + (o2 + o3)`; equal inputs
/// then fuse to exactly four times their value.
fn fuse<T: Real>(outs: Vec<Vec<T>>) -> Vec<T> {
    let [o0, o1, o2, o3]: [Vec<T>; 4] = outs
        .try_into()
        .unwrap_or_else(|_| unreachable!("four routes"));
    o0.iter()
        .zip(&o1)
        .zip(o2.iter().zip(&o3))
        .map(|((&a, &b), (&c, &d))| (a + b) + (c + d))
        .collect()
}
