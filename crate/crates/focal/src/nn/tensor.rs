//! Minimal NHWC batch tensor.

use super::scalar::Scalar;

/// Batch of feature maps, laid out `[n][h][w][c]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(n: usize, h: usize, w: usize, c: usize) -> Self {
        Tensor {
            n,
            h,
            w,
            c,
            data: vec![T::ZERO; n * h * w * c],
        }
    }

    pub fn from_data(n: usize, h: usize, w: usize, c: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n * h * w * c, "tensor data length mismatch");
        Tensor { n, h, w, c, data }
    }

    /// Elements per sample.
    pub fn sample_len(&self) -> usize {
        self.h * self.w * self.c
    }

    pub fn sample(&self, idx: usize) -> &[T] {
        let len = self.sample_len();
        &self.data[idx * len..(idx + 1) * len]
    }

    #[inline]
    pub fn at(&self, n: usize, h: usize, w: usize, c: usize) -> T {
        self.data[((n * self.h + h) * self.w + w) * self.c + c]
    }

    #[inline]
    pub fn at_mut(&mut self, n: usize, h: usize, w: usize, c: usize) -> &mut T {
        &mut self.data[((n * self.h + h) * self.w + w) * self.c + c]
    }

    /// Reinterpret as a `[n, h*w*c]` matrix (no copy; layout already matches).
    pub fn flat_rows(&self) -> (&[T], usize, usize) {
        (&self.data, self.n, self.sample_len())
    }
}
