//! The fixed five-conv/two-FC classifier and its training step.
//!
//! Layer chain on a 64x64 luma patch (geometry is fixed; only the channel
//! width scales):
//!
//! ```text
//! conv 4x4 s1 z0 -> BN+ReLU   64 -> 61
//! conv 3x3 s2 z0 -> BN+ReLU   61 -> 30
//! conv 4x4 s1 z0 -> BN+ReLU   30 -> 27
//! conv 3x3 s2 z0 -> BN+ReLU   27 -> 13
//! conv 3x3 s2 z1 -> BN+ReLU   13 ->  7
//! flatten -> fc width -> (identity | relu) -> fc K -> softmax
//! ```

use super::batchnorm::{relu_backward, relu_forward, BatchNorm, BnCache};
use super::conv::Conv2d;
use super::dense::Dense;
use super::geometry::{rf_chain, table1_conv_specs};
use super::optim::{optimizer_step, OptState, TrainConfig};
use super::scalar::Scalar;
use super::softmax::{softmax_row, softmax_xent};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PATCH_SIDE: usize = 64;
/// Default channel width; the knob may reduce it down to 16.
pub const DEFAULT_WIDTH: usize = 64;
pub const MIN_WIDTH: usize = 16;

/// Batch-norm defaults.
pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPS: f64 = 1e-5;

/// Input normalization: pixel / 255 - 0.5.
pub const INPUT_SCALE: f32 = 1.0 / 255.0;
pub const INPUT_SHIFT: f32 = -0.5;

#[derive(Debug, Clone)]
pub struct CodingCnn<T> {
    pub width: usize,
    pub k: usize,
    pub fc1_relu: bool,
    pub input_scale: T,
    pub input_shift: T,
    pub convs: Vec<(Conv2d<T>, BatchNorm<T>)>,
    pub fc1: Dense<T>,
    pub fc2: Dense<T>,
}

fn init_uniform<T: Scalar>(rng: &mut ChaCha8Rng, buf: &mut [T], fan_in: usize) {
    let bound = (3.0 / fan_in as f64).sqrt();
    for v in buf.iter_mut() {
        *v = T::from_f64(rng.gen_range(-bound..bound));
    }
}

impl<T: Scalar> CodingCnn<T> {
    /// Fan-in-scaled uniform initialization from a fixed seed.
    pub fn new(width: usize, k: usize, fc1_relu: bool, seed: u64) -> Result<Self> {
        if width < MIN_WIDTH {
            return Err(Error::invalid(format!(
                "channel width must be at least {MIN_WIDTH}, got {width}"
            )));
        }
        if k < 2 {
            return Err(Error::invalid("need at least two output classes"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut convs = Vec::new();
        let mut in_c = 1;
        for spec in table1_conv_specs(width) {
            let mut conv = Conv2d::new(in_c, spec.kernels, spec.kernel_size, spec.stride, spec.padding);
            init_uniform(&mut rng, &mut conv.kernel, spec.kernel_size * spec.kernel_size * in_c);
            convs.push((conv, BatchNorm::new(spec.kernels, BN_MOMENTUM, BN_EPS)));
            in_c = spec.kernels;
        }
        let side = Self::conv_output_side()?;
        let flat = side * side * width;
        let mut fc1 = Dense::new(flat, width);
        init_uniform(&mut rng, &mut fc1.weight, flat);
        let mut fc2 = Dense::new(width, k);
        init_uniform(&mut rng, &mut fc2.weight, width);
        Ok(CodingCnn {
            width,
            k,
            fc1_relu,
            input_scale: T::from_f64(INPUT_SCALE as f64),
            input_shift: T::from_f64(INPUT_SHIFT as f64),
            convs,
            fc1,
            fc2,
        })
    }

    /// Side length of the final conv feature map (7 on 64-pixel input).
    pub fn conv_output_side() -> Result<usize> {
        let geoms = rf_chain(&table1_conv_specs(DEFAULT_WIDTH), PATCH_SIDE)?;
        Ok(geoms.last().unwrap().m)
    }

    fn check_patch_batch(&self, x: &Tensor<T>) -> Result<()> {
        if x.h != PATCH_SIDE || x.w != PATCH_SIDE || x.c != 1 {
            return Err(Error::shape(format!(
                "expected {PATCH_SIDE}x{PATCH_SIDE}x1 patches, got {}x{}x{}",
                x.h, x.w, x.c
            )));
        }
        Ok(())
    }

    fn normalize(&self, x: &Tensor<T>) -> Tensor<T> {
        let mut out = x.clone();
        for v in out.data.iter_mut() {
            *v = *v * self.input_scale + self.input_shift;
        }
        out
    }

    /// Conv-stack output in infer mode (the corner-descriptor tensor).
    pub fn forward_features(&self, raw: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_patch_batch(raw)?;
        let mut act = self.normalize(raw);
        for (conv, bn) in &self.convs {
            let z = conv.forward(&act)?;
            let mut y = bn.forward_infer(&z)?;
            relu_forward(&mut y);
            act = y;
        }
        Ok(act)
    }

    /// Class probabilities for a batch of raw 0..255 luma patches.
    pub fn predict_batch(&self, raw: &Tensor<T>) -> Result<Vec<T>> {
        let feats = self.forward_features(raw)?;
        let (flat, batch, _dim) = feats.flat_rows();
        let mut h = self.fc1.forward(flat, batch)?;
        if self.fc1_relu {
            for v in h.iter_mut() {
                *v = v.maximum(T::ZERO);
            }
        }
        let mut logits = self.fc2.forward(&h, batch)?;
        for row in logits.chunks_exact_mut(self.k) {
            softmax_row(row);
        }
        Ok(logits)
    }

    /// Probabilities for one 64x64 patch, infer mode.
    pub fn forward_full(&self, patch: &[T]) -> Result<Vec<T>> {
        if patch.len() != PATCH_SIDE * PATCH_SIDE {
            return Err(Error::shape(format!(
                "patch must be {PATCH_SIDE}x{PATCH_SIDE}, got {} values",
                patch.len()
            )));
        }
        let x = Tensor::from_data(1, PATCH_SIDE, PATCH_SIDE, 1, patch.to_vec());
        self.predict_batch(&x)
    }
}

/// Gradients for every parameter tensor, in the network's canonical order.
#[derive(Debug)]
pub struct Gradients<T> {
    pub conv_kernel: Vec<Vec<T>>,
    pub conv_bias: Vec<Vec<T>>,
    pub bn_gamma: Vec<Vec<T>>,
    pub bn_beta: Vec<Vec<T>>,
    pub fc1_weight: Vec<T>,
    pub fc1_bias: Vec<T>,
    pub fc2_weight: Vec<T>,
    pub fc2_bias: Vec<T>,
}

impl<T: Scalar> CodingCnn<T> {
    /// Train-mode forward/backward over one batch. Returns the mean loss and
    /// the gradients of the mean loss. Running BN statistics update as a side
    /// effect.
    pub fn train_step(&mut self, raw: &Tensor<T>, labels: &[usize]) -> Result<(f64, Gradients<T>)> {
        self.check_patch_batch(raw)?;
        if labels.len() != raw.n {
            return Err(Error::shape(format!(
                "{} labels for a batch of {}",
                labels.len(),
                raw.n
            )));
        }
        let batch = raw.n;

        // forward, caching per-layer activations
        let x0 = self.normalize(raw);
        let mut conv_inputs: Vec<Tensor<T>> = Vec::with_capacity(self.convs.len());
        let mut bn_caches: Vec<BnCache<T>> = Vec::with_capacity(self.convs.len());
        let mut outputs: Vec<Tensor<T>> = Vec::with_capacity(self.convs.len());
        let mut act = x0;
        for (conv, bn) in self.convs.iter_mut() {
            let z = conv.forward(&act)?;
            conv_inputs.push(act);
            let (mut y, cache) = bn.forward_train(&z)?;
            drop(z);
            relu_forward(&mut y);
            bn_caches.push(cache);
            outputs.push(y.clone());
            act = y;
        }
        let feat_dim = act.sample_len();
        let flat = act.data.clone();
        let mut hidden = self.fc1.forward(&flat, batch)?;
        let hidden_pre = if self.fc1_relu {
            let pre = hidden.clone();
            for v in hidden.iter_mut() {
                *v = v.maximum(T::ZERO);
            }
            Some(pre)
        } else {
            None
        };
        let logits = self.fc2.forward(&hidden, batch)?;

        // loss and logit gradients (mean over the batch)
        let mut loss_sum = 0.0f64;
        let mut dlogits = vec![T::ZERO; batch * self.k];
        let inv_b = T::from_f64(1.0 / batch as f64);
        for (idx, row) in logits.chunks_exact(self.k).enumerate() {
            let (loss, grad) = softmax_xent(row, labels[idx])?;
            loss_sum += loss.to_f64();
            for (dst, g) in dlogits[idx * self.k..(idx + 1) * self.k].iter_mut().zip(grad) {
                *dst = g * inv_b;
            }
        }

        // backward
        let (mut dhidden, fc2_dw, fc2_db) = self.fc2.backward(&hidden, &dlogits, batch)?;
        if let Some(pre) = &hidden_pre {
            for (g, &p) in dhidden.iter_mut().zip(pre) {
                if p <= T::ZERO {
                    *g = T::ZERO;
                }
            }
        }
        let (dflat, fc1_dw, fc1_db) = self.fc1.backward(&flat, &dhidden, batch)?;

        let last = outputs.last().unwrap();
        let mut dact = Tensor::from_data(batch, last.h, last.w, last.c, dflat);
        debug_assert_eq!(dact.sample_len(), feat_dim);

        let n_layers = self.convs.len();
        let mut conv_kernel = vec![Vec::new(); n_layers];
        let mut conv_bias = vec![Vec::new(); n_layers];
        let mut bn_gamma = vec![Vec::new(); n_layers];
        let mut bn_beta = vec![Vec::new(); n_layers];
        for layer in (0..n_layers).rev() {
            let (conv, bn) = &self.convs[layer];
            relu_backward(&outputs[layer], &mut dact);
            let (dz, dgamma, dbeta) = bn.backward(&bn_caches[layer], &dact)?;
            let (dx, dk, db) = conv.backward(&conv_inputs[layer], &dz)?;
            bn_gamma[layer] = dgamma;
            bn_beta[layer] = dbeta;
            conv_kernel[layer] = dk;
            conv_bias[layer] = db;
            dact = dx;
        }

        Ok((
            loss_sum / batch as f64,
            Gradients {
                conv_kernel,
                conv_bias,
                bn_gamma,
                bn_beta,
                fc1_weight: fc1_dw,
                fc1_bias: fc1_db,
                fc2_weight: fc2_dw,
                fc2_bias: fc2_db,
            },
        ))
    }
}

/// Optimizer state for every parameter tensor of a [`CodingCnn<f32>`].
pub struct NetOptimizer {
    cfg: TrainConfig,
    states: Vec<OptState>,
}

impl NetOptimizer {
    pub fn new(net: &CodingCnn<f32>, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut states = Vec::new();
        for (conv, bn) in &net.convs {
            states.push(OptState::new(cfg.optimizer, conv.kernel.len()));
            states.push(OptState::new(cfg.optimizer, conv.bias.len()));
            states.push(OptState::new(cfg.optimizer, bn.gamma.len()));
            states.push(OptState::new(cfg.optimizer, bn.beta.len()));
        }
        states.push(OptState::new(cfg.optimizer, net.fc1.weight.len()));
        states.push(OptState::new(cfg.optimizer, net.fc1.bias.len()));
        states.push(OptState::new(cfg.optimizer, net.fc2.weight.len()));
        states.push(OptState::new(cfg.optimizer, net.fc2.bias.len()));
        Ok(NetOptimizer { cfg, states })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    /// Apply one gradient set at the rate for `epoch`.
    pub fn apply(&mut self, net: &mut CodingCnn<f32>, grads: &Gradients<f32>, epoch: usize) {
        let lr = self.cfg.effective_lr(epoch);
        let cfg = self.cfg.clone();
        let mut si = 0;
        for (layer, (conv, bn)) in net.convs.iter_mut().enumerate() {
            optimizer_step(&mut conv.kernel, &grads.conv_kernel[layer], &mut self.states[si], lr, &cfg);
            optimizer_step(&mut conv.bias, &grads.conv_bias[layer], &mut self.states[si + 1], lr, &cfg);
            optimizer_step(&mut bn.gamma, &grads.bn_gamma[layer], &mut self.states[si + 2], lr, &cfg);
            optimizer_step(&mut bn.beta, &grads.bn_beta[layer], &mut self.states[si + 3], lr, &cfg);
            si += 4;
        }
        optimizer_step(&mut net.fc1.weight, &grads.fc1_weight, &mut self.states[si], lr, &cfg);
        optimizer_step(&mut net.fc1.bias, &grads.fc1_bias, &mut self.states[si + 1], lr, &cfg);
        optimizer_step(&mut net.fc2.weight, &grads.fc2_weight, &mut self.states[si + 2], lr, &cfg);
        optimizer_step(&mut net.fc2.bias, &grads.fc2_bias, &mut self.states[si + 3], lr, &cfg);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patch_batch(seed: u64, n: usize) -> Tensor<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Tensor::zeros(n, PATCH_SIDE, PATCH_SIDE, 1);
        for v in t.data.iter_mut() {
            *v = rng.gen_range(0.0..255.0);
        }
        t
    }

    #[test]
    fn probabilities_sum_to_one() {
        let net = CodingCnn::<f32>::new(16, 4, false, 1).unwrap();
        let x = patch_batch(2, 3);
        let p = net.predict_batch(&x).unwrap();
        for row in p.chunks_exact(4) {
            let s: f32 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn conv_stack_output_is_seven_by_seven() {
        let net = CodingCnn::<f32>::new(64, 4, false, 1).unwrap();
        let x = patch_batch(3, 1);
        let feats = net.forward_features(&x).unwrap();
        assert_eq!((feats.h, feats.w, feats.c), (7, 7, 64));
    }

    #[test]
    fn inference_is_deterministic() {
        let net = CodingCnn::<f32>::new(16, 4, false, 9).unwrap();
        let x = patch_batch(4, 2);
        let a = net.predict_batch(&x).unwrap();
        let b = net.predict_batch(&x).unwrap();
        assert_eq!(a, b);
        // identical patches produce identical outputs
        let mut two = Tensor::zeros(2, PATCH_SIDE, PATCH_SIDE, 1);
        let one = patch_batch(5, 1);
        two.data[..one.data.len()].copy_from_slice(&one.data);
        two.data[one.data.len()..].copy_from_slice(&one.data);
        let p = net.predict_batch(&two).unwrap();
        assert_eq!(p[..4], p[4..]);
    }

    #[test]
    fn invalid_construction_rejected() {
        assert!(CodingCnn::<f32>::new(8, 4, false, 0).is_err());
        assert!(CodingCnn::<f32>::new(16, 1, false, 0).is_err());
    }

    #[test]
    fn wrong_patch_size_rejected() {
        let net = CodingCnn::<f32>::new(16, 4, false, 0).unwrap();
        assert!(net.forward_full(&vec![0.0; 32 * 32]).is_err());
        let bad = Tensor::<f32>::zeros(1, 32, 32, 1);
        assert!(net.predict_batch(&bad).is_err());
    }

    #[test]
    fn train_step_reduces_loss_on_fixed_batch() {
        let mut net = CodingCnn::<f32>::new(16, 4, false, 3).unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 8,
            ..TrainConfig::adam_recipe()
        };
        let mut opt = NetOptimizer::new(&net, cfg).unwrap();
        let x = patch_batch(7, 8);
        let labels = vec![0, 1, 2, 3, 0, 1, 2, 3];
        let (first, g) = net.train_step(&x, &labels).unwrap();
        opt.apply(&mut net, &g, 0);
        let mut last = first;
        for _ in 0..20 {
            let (loss, g) = net.train_step(&x, &labels).unwrap();
            opt.apply(&mut net, &g, 0);
            last = loss;
        }
        assert!(
            last < first * 0.5,
            "loss did not drop: first {first}, last {last}"
        );
    }
}
