//! Selective structured state space kernel.
//!
//! For a sequence `x_t` of `D` channels and a diagonal state of size `N`
//! per channel:
//!
//! ```text
//! delta_t = softplus(x_t W_in W_out + dt_bias)      (D)
//! B_t     = x_t W_b,  C_t = x_t W_c                 (N)
//! Abar    = exp(delta_t[d] * A[d, n]),  A = -exp(a_log)
//! h_t     = Abar * h_{t-1} + (delta_t[d] * B_t[n]) * x_t[d]
//! y_t[d]  = sum_n C_t[n] h_t[d, n] + skip[d] * x_t[d]
//! ```
//!
//! with `h_0 = 0`. [`selective_scan`] records a tape for
//! [`selective_scan_backward`]; [`scan_forward`] and [`chunked_scan`] are
//! tape-free inference paths.

mod backward;
mod chunked;
mod params;
mod scan;

pub use backward::{selective_scan_backward, selective_scan_backward_into, ScanGrads};
pub use chunked::chunked_scan;
pub use params::{default_rank, SsmParams};
pub use scan::{
    discretize, generate_selective_params, scan_forward, selective_scan, ScanSequence, ScanTape,
    SelectiveParams,
};
