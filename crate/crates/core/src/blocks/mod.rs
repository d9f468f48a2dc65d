//! The spatial-spectral blocks: patch cross scanning (four raster routes
//! over the pixels), bi-directional spectral scanning (forward and reversed
//! scans over the latent channels) and the mixture gate that fuses them.

mod bss;
mod gate;
mod pcs;
mod routes;

pub use bss::{bss_apply, bss_backward, bss_forward, BssTape};
pub use gate::{
    gate_combine, gate_encoder, gelu, gelu_grad, mixture_gate, mixture_gate_backward,
    GateEncoderParams, GateTape, GateWeights,
};
pub use pcs::{pcs_apply, pcs_backward, pcs_forward, PcsTape};
pub use routes::{generate_cross_routes, RouteSet};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `P x P x D` feature map, pixel-major with the channel index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap<T> {
    pub size: usize,
    pub dim: usize,
    pub values: Vec<T>,
}

/// Output of the embedding layer; the common input of both scanners.
pub type EmbeddedPatch<T> = FeatureMap<T>;

impl<T: Real> FeatureMap<T> {
    pub fn new(size: usize, dim: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != size * size * dim {
            return Err(Error::Contract(format!(
                "{} values for a {size}x{size}x{dim} feature map",
                values.len()
            )));
        }
        Ok(Self { size, dim, values })
    }

    pub fn zeros(size: usize, dim: usize) -> Self {
        Self {
            size,
            dim,
            values: vec![T::zero(); size * size * dim],
        }
    }

    pub fn positions(&self) -> usize {
        self.size * self.size
    }

    pub fn at(&self, pos: usize) -> &[T] {
        &self.values[pos * self.dim..(pos + 1) * self.dim]
    }
}

/// Picks the parameter set for route `i`; a single set is shared by all
/// routes.
fn route_params<P>(params: &[P], i: usize) -> &P {
    &params[if params.len() == 1 { 0 } else { i }]
}

fn check_count<P>(params: &[P], routes: usize, what: &str) -> Result<()> {
    if params.len() == 1 || params.len() == routes {
        Ok(())
    } else {
        Err(Error::Contract(format!(
            "{what} takes 1 shared or {routes} parameter sets, got {}",
            params.len()
        )))
    }
}
