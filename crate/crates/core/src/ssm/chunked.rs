use crate::error::{Error, Result};
use crate::scalar::Real;

use super::scan::{decay, drive, generate_selective_params};
use super::{ScanSequence, SsmParams};

/// Blocked form of the selective scan.
///
/// Each chunk is first scanned from a zero state, producing its decay
/// product `P = prod Abar` and local end state `H`. A carry pass composes
/// the chunk summaries (`carry' = P * carry + H`), and a final pass
/// rebuilds every state as `h_t = local_t + prefix_t * carry`. The first
/// and last passes are independent across chunks.
pub fn chunked_scan<T: Real>(
    seq: &ScanSequence<T>,
    params: &SsmParams<T>,
    chunk: usize,
) -> Result<ScanSequence<T>> {
    if chunk == 0 {
        return Err(Error::Config("chunk size must be at least 1".into()));
    }
    let sel = generate_selective_params(seq, params)?;
    let a = params.state_matrix();
    let (l, d, n) = (seq.len, seq.channels, params.state_dim);
    let cells = d * n;
    let chunks: Vec<(usize, usize)> = (0..l)
        .step_by(chunk)
        .map(|start| (start, (start + chunk).min(l)))
        .collect();

    // Local state advance for one step; returns nothing, updates in place.
    let advance = |t: usize, local: &mut [T], prefix: &mut [T]| {
        let x_t = seq.step(t);
        let b_t = &sel.b[t * n..(t + 1) * n];
        for ch in 0..d {
            let dt = sel.delta[t * d + ch];
            for s in 0..n {
                let k = ch * n + s;
                let ab = decay(dt, a[k]);
                local[k] = ab * local[k] + drive(dt, b_t[s], x_t[ch]);
                prefix[k] *= ab;
            }
        }
    };

    let summaries: Vec<(Vec<T>, Vec<T>)> = chunks
        .iter()
        .map(|&(start, end)| {
            let mut local = vec![T::zero(); cells];
            let mut prefix = vec![T::one(); cells];
            for t in start..end {
                advance(t, &mut local, &mut prefix);
            }
            (prefix, local)
        })
        .collect();

    let mut carries = Vec::with_capacity(chunks.len());
    let mut carry = vec![T::zero(); cells];
    for (prefix, local) in &summaries {
        carries.push(carry.clone());
        for k in 0..cells {
            carry[k] = prefix[k] * carry[k] + local[k];
        }
    }

    let skip = params.skip.data();
    let mut y = vec![T::zero(); l * d];
    for (&(start, end), carry) in chunks.iter().zip(&carries) {
        let mut local = vec![T::zero(); cells];
        let mut prefix = vec![T::one(); cells];
        for t in start..end {
            advance(t, &mut local, &mut prefix);
            let x_t = seq.step(t);
            let c_t = &sel.c[t * n..(t + 1) * n];
            let mut finite = true;
            for ch in 0..d {
                let mut acc = T::zero();
                for s in 0..n {
                    let k = ch * n + s;
                    let h = local[k] + prefix[k] * carry[k];
                    acc += c_t[s] * h;
                }
                let v = acc + skip[ch] * x_t[ch];
                finite &= v.is_finite();
                y[t * d + ch] = v;
            }
            if !finite {
                return Err(Error::Numeric {
                    context: "chunked scan".into(),
                    step: t,
                });
            }
        }
    }
    ScanSequence::new(l, d, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ssm::scan_forward;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn case(l: usize, seed: u64) -> (ScanSequence<f64>, SsmParams<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = SsmParams::init(3, 4, 1, 0.5, &mut rng);
        let x = (0..l * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
        (ScanSequence::new(l, 3, x).unwrap(), p)
    }

    #[test]
    fn degenerate_chunks_match_exactly() {
        let (seq, p) = case(37, 1);
        let reference = scan_forward(&seq, &p).unwrap();
        assert_eq!(chunked_scan(&seq, &p, 37).unwrap(), reference);
        assert_eq!(chunked_scan(&seq, &p, 1).unwrap(), reference);
        assert_eq!(chunked_scan(&seq, &p, 100).unwrap(), reference);
    }

    #[test]
    fn zero_chunk_is_rejected() {
        let (seq, p) = case(3, 2);
        assert!(matches!(chunked_scan(&seq, &p, 0), Err(Error::Config(_))));
    }

    proptest! {
        #[test]
        fn matches_sequential(l in 1usize..300, chunk in 1usize..40, seed: u64) {
            let (seq, p) = case(l, seed);
            let a = scan_forward(&seq, &p).unwrap().values;
            let b = chunked_scan(&seq, &p, chunk).unwrap().values;
            let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            let diff = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            prop_assert!(diff / scale <= 1e-12);
        }
    }
}
