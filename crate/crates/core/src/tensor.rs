//! Dense row-major tensors and the handful of products the model needs.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::scalar::{cast, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); len],
        }
    }

    pub fn filled(shape: &[usize], value: T) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; len],
        }
    }

    /// Panics if `data.len()` does not match the shape.
    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "tensor data does not match shape {shape:?}"
        );
        Self {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn normal<R: Rng + ?Sized>(shape: &[usize], std: f64, rng: &mut R) -> Self {
        let dist = Normal::new(0.0, std).expect("positive std");
        let len = shape.iter().product();
        let data = (0..len).map(|_| T::lit(dist.sample(rng))).collect();
        Self {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn fill(&mut self, value: T) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn scale(&mut self, alpha: T) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    /// `self += other`, elementwise.
    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| cast(x)).collect(),
        }
    }
}

/// `out[i, j] = bias[j] + sum_k a[i, k] * w[k, j]` for `a: rows x inner`,
/// `w: inner x cols`.
pub(crate) fn affine<T: Real>(
    a: &[T],
    rows: usize,
    inner: usize,
    w: &[T],
    cols: usize,
    bias: Option<&[T]>,
    out: &mut [T],
) {
    debug_assert_eq!(a.len(), rows * inner);
    debug_assert_eq!(w.len(), inner * cols);
    debug_assert_eq!(out.len(), rows * cols);
    for i in 0..rows {
        let row = &mut out[i * cols..(i + 1) * cols];
        match bias {
            Some(b) => row.copy_from_slice(b),
            None => row.iter_mut().for_each(|x| *x = T::zero()),
        }
        for k in 0..inner {
            let aik = a[i * inner + k];
            if aik == T::zero() {
                continue;
            }
            let wk = &w[k * cols..(k + 1) * cols];
            for (o, &wkj) in row.iter_mut().zip(wk) {
                *o += aik * wkj;
            }
        }
    }
}

/// Backward of [`affine`] with respect to its weight and input.
///
/// Accumulates `dw += a^T * g` and, when requested, `da += g * w^T`.
pub(crate) fn affine_backward<T: Real>(
    a: &[T],
    rows: usize,
    inner: usize,
    w: &[T],
    cols: usize,
    g: &[T],
    dw: &mut [T],
    da: Option<&mut [T]>,
) {
    for i in 0..rows {
        let gi = &g[i * cols..(i + 1) * cols];
        for k in 0..inner {
            let aik = a[i * inner + k];
            if aik == T::zero() {
                continue;
            }
            let dwk = &mut dw[k * cols..(k + 1) * cols];
            for (d, &gij) in dwk.iter_mut().zip(gi) {
                *d += aik * gij;
            }
        }
    }
    if let Some(da) = da {
        for i in 0..rows {
            let gi = &g[i * cols..(i + 1) * cols];
            for k in 0..inner {
                let wk = &w[k * cols..(k + 1) * cols];
                let mut acc = T::zero();
                for (&wkj, &gij) in wk.iter().zip(gi) {
                    acc += wkj * gij;
                }
                da[i * inner + k] += acc;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_matches_hand_product() {
        // [1 2; 3 4] * [1 0 1; 0 1 1] + [0.5 0 0]
        let a = [1.0, 2.0, 3.0, 4.0];
        let w = [1.0, 0.0, 1.0, 0.0, 1.0, 1.0];
        let mut out = [0.0f64; 6];
        affine(&a, 2, 2, &w, 3, Some(&[0.5, 0.0, 0.0]), &mut out);
        assert_eq!(out, [1.5, 2.0, 3.0, 3.5, 4.0, 7.0]);
    }

    #[test]
    fn affine_backward_is_transpose() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let w = [1.0, 0.0, 1.0, 0.0, 1.0, 1.0];
        let g = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        let mut dw = [0.0f64; 6];
        let mut da = [0.0f64; 4];
        affine_backward(&a, 2, 2, &w, 3, &g, &mut dw, Some(&mut da));
        assert_eq!(dw, [1.0, 0.0, 3.0, 2.0, 0.0, 4.0]);
        assert_eq!(da, [1.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    #[should_panic]
    fn from_vec_rejects_bad_shape() {
        let _ = Tensor::from_vec(&[2, 2], vec![0.0f32; 3]);
    }
}
