//! 2-D convolution (cross-correlation) with explicit backward pass.
//!
//! Forward lowers each sample to an im2col matrix and multiplies by the
//! kernel matrix. Backward recomputes the im2col patches for the weight
//! gradient and scatters `dY . W'` back through col2im for the input
//! gradient. Samples are processed in parallel; weight-gradient partials are
//! reduced in sample order so results do not depend on thread scheduling.

use super::scalar::{matmul_nn, matmul_nt, matmul_tn_acc, Scalar};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub in_c: usize,
    pub out_c: usize,
    /// Kernel side length.
    pub w: usize,
    pub stride: usize,
    pub padding: usize,
    /// Row-major `[w * w * in_c, out_c]`; row index is (kh, kw, ic).
    pub kernel: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Conv2d<T> {
    pub fn new(in_c: usize, out_c: usize, w: usize, stride: usize, padding: usize) -> Self {
        Conv2d {
            in_c,
            out_c,
            w,
            stride,
            padding,
            kernel: vec![T::ZERO; w * w * in_c * out_c],
            bias: vec![T::ZERO; out_c],
        }
    }

    pub fn out_side(&self, in_side: usize) -> usize {
        (in_side + 2 * self.padding - self.w) / self.stride + 1
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<(usize, usize)> {
        if x.c != self.in_c {
            return Err(Error::shape(format!(
                "conv expects {} input channels, got {}",
                self.in_c, x.c
            )));
        }
        if x.h + 2 * self.padding < self.w || x.w + 2 * self.padding < self.w {
            return Err(Error::shape(format!(
                "conv kernel {} does not fit input {}x{} with padding {}",
                self.w, x.h, x.w, self.padding
            )));
        }
        Ok((self.out_side(x.h), self.out_side(x.w)))
    }

    /// Lower one sample into `[oh * ow, w * w * in_c]`.
    fn im2col(&self, x: &[T], h: usize, w_in: usize, oh: usize, ow: usize, col: &mut [T]) {
        let k = self.w;
        let c = self.in_c;
        let row_len = k * k * c;
        debug_assert_eq!(col.len(), oh * ow * row_len);
        for out_u in 0..oh {
            for out_v in 0..ow {
                let row = (out_u * ow + out_v) * row_len;
                for kh in 0..k {
                    let in_u = (out_u * self.stride + kh) as isize - self.padding as isize;
                    for kw in 0..k {
                        let in_v = (out_v * self.stride + kw) as isize - self.padding as isize;
                        let dst = row + (kh * k + kw) * c;
                        if in_u >= 0 && (in_u as usize) < h && in_v >= 0 && (in_v as usize) < w_in {
                            let src = (in_u as usize * w_in + in_v as usize) * c;
                            col[dst..dst + c].copy_from_slice(&x[src..src + c]);
                        } else {
                            col[dst..dst + c].fill(T::ZERO);
                        }
                    }
                }
            }
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (oh, ow) = self.check_input(x)?;
        let mut out = Tensor::zeros(x.n, oh, ow, self.out_c);
        let row_len = self.w * self.w * self.in_c;
        let out_sample = oh * ow * self.out_c;
        out.data
            .par_chunks_mut(out_sample)
            .enumerate()
            .for_each(|(idx, out_chunk)| {
                let mut col = vec![T::ZERO; oh * ow * row_len];
                self.im2col(x.sample(idx), x.h, x.w, oh, ow, &mut col);
                matmul_nn(&col, &self.kernel, out_chunk, oh * ow, row_len, self.out_c);
                for pos in 0..oh * ow {
                    for oc in 0..self.out_c {
                        out_chunk[pos * self.out_c + oc] += self.bias[oc];
                    }
                }
            });
        Ok(out)
    }

    /// Returns (input gradient, kernel gradient, bias gradient).
    pub fn backward(
        &self,
        x: &Tensor<T>,
        dy: &Tensor<T>,
    ) -> Result<(Tensor<T>, Vec<T>, Vec<T>)> {
        let (oh, ow) = self.check_input(x)?;
        if dy.n != x.n || dy.h != oh || dy.w != ow || dy.c != self.out_c {
            return Err(Error::shape(format!(
                "conv backward: upstream gradient {}x{}x{}x{} does not match output {}x{}x{}x{}",
                dy.n, dy.h, dy.w, dy.c, x.n, oh, ow, self.out_c
            )));
        }
        let row_len = self.w * self.w * self.in_c;
        let in_sample = x.sample_len();

        let mut dx = Tensor::zeros(x.n, x.h, x.w, x.c);
        // Per-sample partials, reduced in index order below.
        let partials: Vec<(Vec<T>, Vec<T>)> = dx
            .data
            .par_chunks_mut(in_sample)
            .enumerate()
            .map(|(idx, dx_chunk)| {
                let dy_s = dy.sample(idx);
                let mut col = vec![T::ZERO; oh * ow * row_len];
                self.im2col(x.sample(idx), x.h, x.w, oh, ow, &mut col);

                // dW += col' . dy
                let mut dw = vec![T::ZERO; row_len * self.out_c];
                matmul_tn_acc(&col, dy_s, &mut dw, row_len, oh * ow, self.out_c);

                // db += column sums of dy
                let mut db = vec![T::ZERO; self.out_c];
                for pos in 0..oh * ow {
                    for oc in 0..self.out_c {
                        db[oc] += dy_s[pos * self.out_c + oc];
                    }
                }

                // dcol = dy . W', then scatter back to the input
                let mut dcol = vec![T::ZERO; oh * ow * row_len];
                matmul_nt(dy_s, &self.kernel, &mut dcol, oh * ow, self.out_c, row_len);
                self.col2im(&dcol, x.h, x.w, oh, ow, dx_chunk);

                (dw, db)
            })
            .collect();

        let mut dkernel = vec![T::ZERO; row_len * self.out_c];
        let mut dbias = vec![T::ZERO; self.out_c];
        for (dw, db) in partials {
            for (acc, v) in dkernel.iter_mut().zip(dw) {
                *acc += v;
            }
            for (acc, v) in dbias.iter_mut().zip(db) {
                *acc += v;
            }
        }
        Ok((dx, dkernel, dbias))
    }

    fn col2im(&self, dcol: &[T], h: usize, w_in: usize, oh: usize, ow: usize, dx: &mut [T]) {
        let k = self.w;
        let c = self.in_c;
        let row_len = k * k * c;
        for out_u in 0..oh {
            for out_v in 0..ow {
                let row = (out_u * ow + out_v) * row_len;
                for kh in 0..k {
                    let in_u = (out_u * self.stride + kh) as isize - self.padding as isize;
                    if in_u < 0 || in_u as usize >= h {
                        continue;
                    }
                    for kw in 0..k {
                        let in_v = (out_v * self.stride + kw) as isize - self.padding as isize;
                        if in_v < 0 || in_v as usize >= w_in {
                            continue;
                        }
                        let src = row + (kh * k + kw) * c;
                        let dst = (in_u as usize * w_in + in_v as usize) * c;
                        for ch in 0..c {
                            dx[dst + ch] += dcol[src + ch];
                        }
                    }
                }
            }
        }
    }
}
