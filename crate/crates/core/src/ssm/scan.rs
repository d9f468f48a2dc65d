use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::affine;

use super::SsmParams;

/// `L x D` sequence, row-major by step.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanSequence<T> {
    pub len: usize,
    pub channels: usize,
    pub values: Vec<T>,
}

impl<T: Real> ScanSequence<T> {
    pub fn new(len: usize, channels: usize, values: Vec<T>) -> Result<Self> {
        if len == 0 {
            return Err(Error::Contract(
                "scan sequences need at least one step".into(),
            ));
        }
        if values.len() != len * channels {
            return Err(Error::Contract(format!(
                "{} values for a {len}x{channels} sequence",
                values.len()
            )));
        }
        Ok(Self {
            len,
            channels,
            values,
        })
    }

    #[inline]
    pub fn step(&self, t: usize) -> &[T] {
        &self.values[t * self.channels..(t + 1) * self.channels]
    }
}

/// Input-dependent step sizes and projections for every step.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectiveParams<T> {
    /// `L x R` output of the first step-size projection.
    pub low: Vec<T>,
    /// `L x D` pre-activation of the step size.
    pub pre: Vec<T>,
    /// `L x D`, strictly positive.
    pub delta: Vec<T>,
    /// `L x N`
    pub b: Vec<T>,
    /// `L x N`
    pub c: Vec<T>,
}

pub fn generate_selective_params<T: Real>(
    seq: &ScanSequence<T>,
    params: &SsmParams<T>,
) -> Result<SelectiveParams<T>> {
    let (l, d, n, r) = (seq.len, seq.channels, params.state_dim, params.rank);
    if d != params.channel_dim {
        return Err(Error::Contract(format!(
            "sequence has {d} channels, parameters expect {}",
            params.channel_dim
        )));
    }
    if let Some(i) = seq.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric {
            context: "selective parameter input".into(),
            step: i / d.max(1),
        });
    }
    let x = &seq.values;
    let mut low = vec![T::zero(); l * r];
    affine(x, l, d, params.dt_proj_in.data(), r, None, &mut low);
    let mut pre = vec![T::zero(); l * d];
    affine(
        &low,
        l,
        r,
        params.dt_proj_out.data(),
        d,
        Some(params.dt_bias.data()),
        &mut pre,
    );
    let delta = pre.iter().map(|&z| z.softplus()).collect();
    let mut b = vec![T::zero(); l * n];
    affine(x, l, d, params.b_proj.data(), n, None, &mut b);
    let mut c = vec![T::zero(); l * n];
    affine(x, l, d, params.c_proj.data(), n, None, &mut c);
    Ok(SelectiveParams {
        low,
        pre,
        delta,
        b,
        c,
    })
}

/// Zero-order-hold decay `exp(delta * a)` for one diagonal entry.
#[inline(always)]
pub(crate) fn decay<T: Real>(delta: T, a: T) -> T {
    (delta * a).exp()
}

/// First-order input drive `(delta * b) * x`.
#[inline(always)]
pub(crate) fn drive<T: Real>(delta: T, b: T, x: T) -> T {
    (delta * b) * x
}

/// Discretizes one channel: `Abar = exp(delta A)` on the diagonal and the
/// first-order `Bbar = delta B`.
pub fn discretize<T: Real>(a: &[T], b: &[T], delta: T) -> (Vec<T>, Vec<T>) {
    let abar = a.iter().map(|&ai| decay(delta, ai)).collect();
    let bbar = b.iter().map(|&bi| delta * bi).collect();
    (abar, bbar)
}

/// Everything the backward pass needs from one forward scan.
#[derive(Clone, Debug)]
pub struct ScanTape<T> {
    pub input: ScanSequence<T>,
    pub selective: SelectiveParams<T>,
    /// `D x N` diagonal of `A`.
    pub a: Vec<T>,
    /// `L x D x N` discretized decays.
    pub abar: Vec<T>,
    /// `L x D x N` hidden states `h_1..h_L`.
    pub states: Vec<T>,
    pub state_dim: usize,
}

struct Recording<'a, T> {
    abar: &'a mut Vec<T>,
    states: &'a mut Vec<T>,
}

fn run<T: Real>(
    seq: &ScanSequence<T>,
    params: &SsmParams<T>,
    sel: &SelectiveParams<T>,
    a: &[T],
    mut rec: Option<Recording<'_, T>>,
) -> Result<ScanSequence<T>> {
    let (l, d, n) = (seq.len, seq.channels, params.state_dim);
    let skip = params.skip.data();
    let mut h = vec![T::zero(); d * n];
    let mut abar_t = vec![T::zero(); d * n];
    let mut y = vec![T::zero(); l * d];
    for t in 0..l {
        let x_t = seq.step(t);
        let delta_t = &sel.delta[t * d..(t + 1) * d];
        let b_t = &sel.b[t * n..(t + 1) * n];
        let c_t = &sel.c[t * n..(t + 1) * n];
        let y_t = &mut y[t * d..(t + 1) * d];
        let mut finite = true;
        for ch in 0..d {
            let (dt, xd) = (delta_t[ch], x_t[ch]);
            let row = ch * n..(ch + 1) * n;
            let mut acc = T::zero();
            for (((hv, ab), &av), (&bv, &cv)) in h[row.clone()]
                .iter_mut()
                .zip(&mut abar_t[row.clone()])
                .zip(&a[row.clone()])
                .zip(b_t.iter().zip(c_t))
            {
                *ab = decay(dt, av);
                *hv = *ab * *hv + drive(dt, bv, xd);
                acc += cv * *hv;
            }
            y_t[ch] = acc + skip[ch] * xd;
            finite &= y_t[ch].is_finite();
        }
        if !finite {
            return Err(Error::Numeric {
                context: "selective scan".into(),
                step: t,
            });
        }
        if let Some(rec) = rec.as_mut() {
            rec.abar.extend_from_slice(&abar_t);
            rec.states.extend_from_slice(&h);
        }
    }
    ScanSequence::new(l, d, y)
}

/// Sequential selective scan with a tape for the backward pass.
pub fn selective_scan<T: Real>(
    seq: &ScanSequence<T>,
    params: &SsmParams<T>,
) -> Result<(ScanSequence<T>, ScanTape<T>)> {
    let sel = generate_selective_params(seq, params)?;
    let a = params.state_matrix();
    let cells = seq.len * seq.channels * params.state_dim;
    let mut abar = Vec::with_capacity(cells);
    let mut states = Vec::with_capacity(cells);
    let out = run(
        seq,
        params,
        &sel,
        &a,
        Some(Recording {
            abar: &mut abar,
            states: &mut states,
        }),
    )?;
    let tape = ScanTape {
        input: seq.clone(),
        selective: sel,
        a,
        abar,
        states,
        state_dim: params.state_dim,
    };
    Ok((out, tape))
}

/// Sequential selective scan without recording.
pub fn scan_forward<T: Real>(
    seq: &ScanSequence<T>,
    params: &SsmParams<T>,
) -> Result<ScanSequence<T>> {
    let sel = generate_selective_params(seq, params)?;
    let a = params.state_matrix();
    run(seq, params, &sel, &a, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_seq(l: usize, d: usize, rng: &mut ChaCha8Rng) -> ScanSequence<f64> {
        let values = (0..l * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        ScanSequence::new(l, d, values).unwrap()
    }

    #[test]
    fn zero_input_gives_ln2_steps_and_zero_projections() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = SsmParams::<f64>::init(3, 2, 1, 0.5, &mut rng);
        let seq = ScanSequence::new(2, 3, vec![0.0; 6]).unwrap();
        let sel = generate_selective_params(&seq, &params).unwrap();
        assert!(sel.delta.iter().all(|&d| d == std::f64::consts::LN_2));
        assert!(sel.b.iter().chain(&sel.c).all(|&v| v == 0.0));
    }

    #[test]
    fn step_size_increases_with_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut params = SsmParams::<f64>::init(4, 3, 2, 0.5, &mut rng);
        let seq = random_seq(6, 4, &mut rng);
        let before = generate_selective_params(&seq, &params).unwrap().delta;
        params.dt_bias.data_mut().iter_mut().for_each(|b| *b += 1.0);
        let after = generate_selective_params(&seq, &params).unwrap().delta;
        assert!(before.iter().zip(&after).all(|(b, a)| a > b));
    }

    #[test]
    fn non_finite_input_is_numeric_error() {
        let params = SsmParams::<f64>::zeros(2, 1, 1);
        let seq = ScanSequence::new(2, 2, vec![0.0, 1.0, f64::NAN, 0.0]).unwrap();
        assert!(matches!(
            selective_scan(&seq, &params),
            Err(Error::Numeric { step: 1, .. })
        ));
    }

    #[test]
    fn discretization_closed_forms() {
        let (abar, bbar) = discretize(&[-1.0f64], &[2.0], std::f64::consts::LN_2);
        assert!((abar[0] - 0.5).abs() < 1e-12);
        assert!((bbar[0] - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        let (_, bbar) = discretize(&[-3.0f64], &[2.0], 0.1);
        assert!((bbar[0] - 0.2).abs() < 1e-15);
        let (abar, bbar) = discretize(&[-3.0f64, -0.5], &[2.0, 1.0], 0.0);
        assert_eq!(abar, vec![1.0, 1.0]);
        assert_eq!(bbar, vec![0.0, 0.0]);
    }

    #[test]
    fn residual_only_scan_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seq = random_seq(9, 5, &mut rng);
        let params = SsmParams::residual_only(5, 4, 1);
        let (y, _) = selective_scan(&seq, &params).unwrap();
        assert_eq!(y.values, seq.values);
    }

    /// Hand recurrence with `Abar = 0.5`, `Bbar = 1`, `C = 1`, skip 1 on
    /// `x = [1, 1]`: `h = [1, 1.5]`, `y = [2, 2.5]`.
    #[test]
    fn scalar_chain_two_steps() {
        let ln2 = std::f64::consts::LN_2;
        // delta = softplus(0) = ln 2 and A = -exp(0) = -1 give Abar = 0.5;
        // B = 1 / ln 2 gives Bbar = 1.
        let mut p = SsmParams::<f64>::zeros(1, 1, 1);
        p.skip.fill(1.0);
        p.b_proj.fill(1.0 / ln2);
        p.c_proj.fill(1.0);
        let seq = ScanSequence::new(2, 1, vec![1.0, 1.0]).unwrap();
        let (y, tape) = selective_scan(&seq, &p).unwrap();
        assert!((tape.abar[0] - 0.5).abs() < 1e-15);
        assert!((tape.states[0] - 1.0).abs() < 1e-15);
        assert!((tape.states[1] - 1.5).abs() < 1e-15);
        assert!((y.values[0] - 2.0).abs() < 1e-15);
        assert!((y.values[1] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn single_step_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = SsmParams::<f64>::init(3, 2, 1, 0.7, &mut rng);
        let seq = random_seq(1, 3, &mut rng);
        let sel = generate_selective_params(&seq, &p).unwrap();
        let (y, _) = selective_scan(&seq, &p).unwrap();
        for d in 0..3 {
            let x = seq.values[d];
            let expected: f64 = (0..2)
                .map(|n| sel.c[n] * (sel.delta[d] * sel.b[n]) * x)
                .sum::<f64>()
                + p.skip.data()[d] * x;
            assert!((y.values[d] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn tape_and_forward_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = SsmParams::<f64>::init(4, 3, 1, 0.5, &mut rng);
        let seq = random_seq(11, 4, &mut rng);
        let (y, tape) = selective_scan(&seq, &p).unwrap();
        assert_eq!(y, scan_forward(&seq, &p).unwrap());
        assert_eq!(tape.states.len(), 11 * 4 * 3);
    }

    proptest! {
        #[test]
        fn decays_lie_in_unit_interval(seed: u64, std in 0.01f64..0.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = SsmParams::<f64>::init(3, 4, 1, std, &mut rng);
            let seq = random_seq(7, 3, &mut rng);
            let (_, tape) = selective_scan(&seq, &p).unwrap();
            prop_assert!(tape.abar.iter().all(|&a| a > 0.0 && a < 1.0));
        }

        #[test]
        fn causal(seed: u64, l in 2usize..12, cut in 0usize..11) {
            let cut = cut % (l - 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = SsmParams::<f64>::init(3, 2, 1, 0.5, &mut rng);
            let seq = random_seq(l, 3, &mut rng);
            let y = scan_forward(&seq, &p).unwrap();
            let mut perturbed = seq.clone();
            for v in &mut perturbed.values[(cut + 1) * 3..] {
                *v += rng.random_range(-1.0..1.0);
            }
            let y2 = scan_forward(&perturbed, &p).unwrap();
            prop_assert_eq!(&y.values[..(cut + 1) * 3], &y2.values[..(cut + 1) * 3]);
        }

        #[test]
        fn linear_in_output_projection(seed: u64, alpha in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = SsmParams::<f64>::init(3, 2, 1, 0.5, &mut rng);
            let seq = random_seq(6, 3, &mut rng);
            let y = scan_forward(&seq, &p).unwrap();
            let mut scaled = p.clone();
            scaled.c_proj.scale(alpha);
            let ys = scan_forward(&seq, &scaled).unwrap();
            for t in 0..6 {
                for d in 0..3 {
                    let i = t * 3 + d;
                    let residual = p.skip.data()[d] * seq.values[i];
                    let base = y.values[i] - residual;
                    let got = ys.values[i] - residual;
                    prop_assert!((got - alpha * base).abs() <= 1e-12 * (1.0 + base.abs()));
                }
            }
        }

        #[test]
        fn power_of_two_scaling_is_exact(seed: u64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = SsmParams::<f64>::init(3, 2, 1, 0.5, &mut rng);
            let seq = random_seq(5, 3, &mut rng);
            let mut no_skip = p.clone();
            no_skip.skip.fill(0.0);
            let y = scan_forward(&seq, &no_skip).unwrap();
            no_skip.c_proj.scale(2.0);
            let y2 = scan_forward(&seq, &no_skip).unwrap();
            for (a, b) in y.values.iter().zip(&y2.values) {
                prop_assert_eq!(2.0 * a, *b);
            }
        }
    }
}
