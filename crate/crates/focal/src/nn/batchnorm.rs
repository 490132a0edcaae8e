//! Per-channel batch normalization with running statistics.
//!
//! Train mode normalizes by biased batch statistics (accumulated in f64) and
//! blends them into the running estimates with momentum; infer mode uses the
//! running estimates. Variance is the biased (population) estimator in both
//! places.

use super::scalar::Scalar;
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BatchNorm<T> {
    pub c: usize,
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    /// Fraction of the previous running estimate kept per update.
    pub momentum: f64,
    pub eps: f64,
}

/// Values the backward pass needs from a train-mode forward.
#[derive(Debug)]
pub struct BnCache<T> {
    /// Normalized input, same shape as x.
    pub xhat: Vec<T>,
    /// Per-channel 1 / sqrt(var + eps).
    pub inv_std: Vec<T>,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(c: usize, momentum: f64, eps: f64) -> Self {
        BatchNorm {
            c,
            gamma: vec![T::ONE; c],
            beta: vec![T::ZERO; c],
            running_mean: vec![T::ZERO; c],
            running_var: vec![T::ONE; c],
            momentum,
            eps,
        }
    }

    fn check_channels(&self, x: &Tensor<T>) -> Result<()> {
        if x.c != self.c {
            return Err(Error::shape(format!(
                "batchnorm expects {} channels, got {}",
                self.c, x.c
            )));
        }
        Ok(())
    }

    /// Train-mode forward: returns the normalized output and the cache for
    /// backward. Updates running statistics in place.
    pub fn forward_train(&mut self, x: &Tensor<T>) -> Result<(Tensor<T>, BnCache<T>)> {
        self.check_channels(x)?;
        if x.n < 2 {
            return Err(Error::invalid(
                "batchnorm train mode needs a batch of at least 2",
            ));
        }
        let m = (x.n * x.h * x.w) as f64;
        let c = self.c;

        let mut mean = vec![0.0f64; c];
        let mut var = vec![0.0f64; c];
        for chunk in x.data.chunks_exact(c) {
            for (ch, &v) in chunk.iter().enumerate() {
                mean[ch] += v.to_f64();
            }
        }
        for v in mean.iter_mut() {
            *v /= m;
        }
        for chunk in x.data.chunks_exact(c) {
            for (ch, &v) in chunk.iter().enumerate() {
                let d = v.to_f64() - mean[ch];
                var[ch] += d * d;
            }
        }
        for v in var.iter_mut() {
            *v /= m;
        }

        let inv_std: Vec<T> = var
            .iter()
            .map(|&v| T::from_f64(1.0 / (v + self.eps).sqrt()))
            .collect();
        let mean_t: Vec<T> = mean.iter().map(|&v| T::from_f64(v)).collect();

        let mut xhat = vec![T::ZERO; x.data.len()];
        let mut out = Tensor::zeros(x.n, x.h, x.w, x.c);
        for (idx, chunk) in x.data.chunks_exact(c).enumerate() {
            for (ch, &v) in chunk.iter().enumerate() {
                let xh = (v - mean_t[ch]) * inv_std[ch];
                xhat[idx * c + ch] = xh;
                out.data[idx * c + ch] = self.gamma[ch] * xh + self.beta[ch];
            }
        }

        for ch in 0..c {
            let keep = self.momentum;
            self.running_mean[ch] = T::from_f64(
                keep * self.running_mean[ch].to_f64() + (1.0 - keep) * mean[ch],
            );
            self.running_var[ch] =
                T::from_f64(keep * self.running_var[ch].to_f64() + (1.0 - keep) * var[ch]);
        }

        Ok((out, BnCache { xhat, inv_std }))
    }

    /// Infer-mode forward using running statistics.
    pub fn forward_infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_channels(x)?;
        let c = self.c;
        let scale: Vec<T> = (0..c)
            .map(|ch| {
                self.gamma[ch]
                    * T::from_f64(1.0 / (self.running_var[ch].to_f64() + self.eps).sqrt())
            })
            .collect();
        let mut out = Tensor::zeros(x.n, x.h, x.w, x.c);
        for (o, chunk) in out.data.chunks_exact_mut(c).zip(x.data.chunks_exact(c)) {
            for ch in 0..c {
                o[ch] = scale[ch] * (chunk[ch] - self.running_mean[ch]) + self.beta[ch];
            }
        }
        Ok(out)
    }

    /// Backward through a train-mode forward. Returns (dx, dgamma, dbeta).
    pub fn backward(&self, cache: &BnCache<T>, dy: &Tensor<T>) -> Result<(Tensor<T>, Vec<T>, Vec<T>)> {
        self.check_channels(dy)?;
        let c = self.c;
        let m = (dy.n * dy.h * dy.w) as f64;

        let mut sum_dy = vec![0.0f64; c];
        let mut sum_dy_xhat = vec![0.0f64; c];
        for (idx, chunk) in dy.data.chunks_exact(c).enumerate() {
            for (ch, &g) in chunk.iter().enumerate() {
                sum_dy[ch] += g.to_f64();
                sum_dy_xhat[ch] += g.to_f64() * cache.xhat[idx * c + ch].to_f64();
            }
        }

        let dgamma: Vec<T> = sum_dy_xhat.iter().map(|&v| T::from_f64(v)).collect();
        let dbeta: Vec<T> = sum_dy.iter().map(|&v| T::from_f64(v)).collect();

        let mut dx = Tensor::zeros(dy.n, dy.h, dy.w, dy.c);
        let coef: Vec<T> = (0..c)
            .map(|ch| self.gamma[ch] * cache.inv_std[ch] * T::from_f64(1.0 / m))
            .collect();
        let sum_dy_t: Vec<T> = sum_dy.iter().map(|&v| T::from_f64(v)).collect();
        let sum_dy_xhat_t: Vec<T> = sum_dy_xhat.iter().map(|&v| T::from_f64(v)).collect();
        let m_t = T::from_f64(m);
        for (idx, chunk) in dy.data.chunks_exact(c).enumerate() {
            for (ch, &g) in chunk.iter().enumerate() {
                let xh = cache.xhat[idx * c + ch];
                dx.data[idx * c + ch] =
                    coef[ch] * (m_t * g - sum_dy_t[ch] - xh * sum_dy_xhat_t[ch]);
            }
        }
        Ok((dx, dgamma, dbeta))
    }
}

/// ReLU, elementwise; pairs with [`relu_backward`].
pub fn relu_forward<T: Scalar>(x: &mut Tensor<T>) {
    for v in x.data.iter_mut() {
        *v = v.maximum(T::ZERO);
    }
}

/// Gradient mask taken from the forward output: units that emitted zero pass
/// no gradient.
pub fn relu_backward<T: Scalar>(y: &Tensor<T>, dy: &mut Tensor<T>) {
    for (g, &out) in dy.data.iter_mut().zip(&y.data) {
        if out <= T::ZERO {
            *g = T::ZERO;
        }
    }
}
