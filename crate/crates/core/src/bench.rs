//! Wall-clock scaling of the two scanning blocks with the token count
//! `N = P^2`.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::blocks::{bss_apply, generate_cross_routes, pcs_apply, FeatureMap};
use crate::error::{Error, Result};
use crate::model::INIT_STD;
use crate::ssm::SsmParams;

/// Patch sides timed by default.
pub const BENCH_PATCHES: [usize; 4] = [8, 16, 32, 64];

#[derive(Clone, Debug, Serialize)]
pub struct BenchPoint {
    pub patch: usize,
    pub tokens: usize,
    /// Best of the repeated runs.
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub latent: usize,
    pub state: usize,
    pub points: Vec<BenchPoint>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y = slope * x + intercept` and its `r^2`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Contract(
            "linear fit needs two or more paired points".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Contract("linear fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok((slope, intercept, r2))
}

/// Times one forward pass of both scanning blocks (four routes plus two
/// spectral directions, single precision) for every patch side, keeping the
/// best of `repeats` runs.
pub fn bench_blocks(
    latent: usize,
    state: usize,
    patches: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<BenchReport> {
    if latent == 0 || state == 0 || repeats == 0 {
        return Err(Error::Config(
            "bench needs positive latent, state and repeats".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rank = crate::ssm::default_rank(latent);
    let mut points = Vec::with_capacity(patches.len());
    for &p in patches {
        let tokens = p * p;
        let values = (0..tokens * latent)
            .map(|_| {
                let z: f32 = StandardNormal.sample(&mut rng);
                z
            })
            .collect();
        let e = FeatureMap::new(p, latent, values)?;
        let pcs: Vec<SsmParams<f32>> = (0..4)
            .map(|_| SsmParams::init(latent, state, rank, INIT_STD, &mut rng))
            .collect();
        let bss: Vec<SsmParams<f32>> = (0..2)
            .map(|_| SsmParams::init(tokens, state, rank, INIT_STD, &mut rng))
            .collect();
        let routes = generate_cross_routes(p);
        let mut best = f64::INFINITY;
        for _ in 0..repeats {
            let start = Instant::now();
            let y = pcs_apply(&e, &pcs, &routes)?;
            let pf = bss_apply(&e, &bss)?;
            best = best.min(start.elapsed().as_secs_f64());
            std::hint::black_box((y, pf));
        }
        log::debug!("P={p}: {best:.6} s");
        points.push(BenchPoint {
            patch: p,
            tokens,
            seconds: best,
        });
    }
    let x: Vec<f64> = points.iter().map(|p| p.tokens as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| p.seconds).collect();
    let (slope, intercept, r2) = linear_fit(&x, &y)?;
    Ok(BenchReport {
        latent,
        state,
        points,
        slope,
        intercept,
        r2,
    })
}
