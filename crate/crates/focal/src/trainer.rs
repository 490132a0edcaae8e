//! Training orchestration: corpus synthesis, per-class splitting, the epoch
//! loop with validation-loss model selection, and the training log.

use crate::codec::{encode_frame, CodecConfig, Flavor, TextureParams};
use crate::error::{Error, Result};
use crate::nn::{CodingCnn, NetOptimizer, Tensor, TrainConfig, PATCH_SIDE};
use crate::patching::{extract_patches, luma_variance};
use crate::video::Frame;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Which classifier to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    /// Four codec flavors at a fixed quantization step.
    Codec,
    /// Four quality levels; class order matches the descriptor layout
    /// low(40), medium-low(20), medium-high(10), high(5).
    Quality,
}

/// Quality-class quantization steps in descriptor order.
pub const QUALITY_CLASS_DELTAS: [f64; 4] = [40.0, 20.0, 10.0, 5.0];
pub const QUALITY_CLASS_NAMES: [&str; 4] = ["low", "medium-low", "medium-high", "high"];

/// Patch corpus synthesis parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub task: Task,
    pub patches_per_class: usize,
    /// Luma variance threshold for the training filter.
    pub variance_threshold: f64,
    pub frame_rows: usize,
    pub frame_cols: usize,
    pub texture: TextureParams,
    /// Flavors mixed into the quality corpus (flat-matrix flavors keep the
    /// quantization-step classes consistent).
    pub quality_flavors: Vec<Flavor>,
    /// Fixed step for the codec-classification corpus.
    pub codec_delta: f64,
    pub seed: u64,
}

impl CorpusSpec {
    pub fn new(task: Task) -> Self {
        CorpusSpec {
            task,
            patches_per_class: 8192,
            variance_threshold: 1e3,
            frame_rows: 256,
            frame_cols: 256,
            texture: TextureParams::default(),
            quality_flavors: vec![Flavor::A, Flavor::B],
            codec_delta: 20.0,
            seed: 11,
        }
    }

    /// (class name, encoder configs) per class.
    pub fn classes(&self) -> Vec<(String, Vec<CodecConfig>)> {
        match self.task {
            Task::Codec => Flavor::ALL
                .iter()
                .map(|&f| {
                    (
                        f.name().to_string(),
                        vec![CodecConfig {
                            flavor: f,
                            delta: self.codec_delta,
                        }],
                    )
                })
                .collect(),
            Task::Quality => QUALITY_CLASS_DELTAS
                .iter()
                .zip(QUALITY_CLASS_NAMES)
                .map(|(&delta, name)| {
                    (
                        name.to_string(),
                        self.quality_flavors
                            .iter()
                            .map(|&flavor| CodecConfig { flavor, delta })
                            .collect(),
                    )
                })
                .collect(),
        }
    }
}

/// Labeled high-variance patches, raw 0..255 luma.
pub struct PatchCorpus {
    pub patches: Vec<Vec<f32>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl PatchCorpus {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }
}

/// Synthesize the corpus: procedural source frames, encoded per class
/// config, split into grid-aligned patches, variance-filtered and collected
/// until every class reaches its quota.
pub fn build_patch_corpus(spec: &CorpusSpec) -> Result<PatchCorpus> {
    let classes = spec.classes();
    let n_classes = classes.len();
    let target = spec.patches_per_class;
    let mut counts = vec![0usize; n_classes];
    let mut patches: Vec<Vec<f32>> = Vec::with_capacity(n_classes * target);
    let mut labels = Vec::with_capacity(n_classes * target);

    let mut frame_seed = spec.seed;
    let mut guard = 0usize;
    while counts.iter().any(|&c| c < target) {
        guard += 1;
        if guard > 100_000 {
            return Err(Error::invalid(
                "corpus generation failed to reach the per-class quota; \
                 variance threshold likely rejects everything",
            ));
        }
        let src = crate::codec::gen_texture(
            spec.frame_rows,
            spec.frame_cols,
            1,
            frame_seed,
            &spec.texture,
        );
        frame_seed = frame_seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let src_frame: &Frame = &src.frames[0];
        for (label, (_, configs)) in classes.iter().enumerate() {
            if counts[label] >= target {
                continue;
            }
            for &cfg in configs {
                if counts[label] >= target {
                    break;
                }
                let enc = encode_frame(src_frame, cfg).quantize_u8();
                for p in extract_patches(&enc, PATCH_SIDE)? {
                    if counts[label] >= target {
                        break;
                    }
                    if luma_variance(&p.data) > spec.variance_threshold {
                        patches.push(p.data);
                        labels.push(label);
                        counts[label] += 1;
                    }
                }
            }
        }
    }
    Ok(PatchCorpus {
        patches,
        labels,
        class_names: classes.into_iter().map(|(n, _)| n).collect(),
    })
}

/// Per-class 70/20/10 split, exact within one patch per class.
pub fn split_indices(
    labels: &[usize],
    n_classes: usize,
    seed: u64,
) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for class in 0..n_classes {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(class as u64));
        idx.shuffle(&mut rng);
        let n = idx.len();
        let n_val = (n as f64 * 0.2).round() as usize;
        let n_test = (n as f64 * 0.1).round() as usize;
        let n_train = n - n_val - n_test;
        train.extend(&idx[..n_train]);
        val.extend(&idx[n_train..n_train + n_val]);
        test.extend(&idx[n_train + n_val..]);
    }
    (train, val, test)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainLog {
    pub task: String,
    pub class_names: Vec<String>,
    pub epochs: Vec<EpochStats>,
    /// Epoch whose weights were retained (minimum validation loss).
    pub best_epoch: usize,
    pub test_accuracy: f64,
    pub train_patches: usize,
    pub val_patches: usize,
    pub test_patches: usize,
}

impl TrainLog {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "epoch,learning_rate,train_loss,val_loss,val_accuracy")?;
        for e in &self.epochs {
            writeln!(
                out,
                "{},{},{},{},{}",
                e.epoch, e.learning_rate, e.train_loss, e.val_loss, e.val_accuracy
            )?;
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Extra knobs around the core optimizer recipe.
#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub width: usize,
    pub fc1_relu: bool,
    /// Stop early once validation accuracy reaches this level.
    pub early_stop_val_accuracy: Option<f64>,
    /// Report progress per epoch.
    pub verbose: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            width: 16,
            fc1_relu: false,
            early_stop_val_accuracy: None,
            verbose: false,
        }
    }
}

fn batch_tensor(corpus: &PatchCorpus, idx: &[usize]) -> Tensor<f32> {
    let mut t = Tensor::zeros(idx.len(), PATCH_SIDE, PATCH_SIDE, 1);
    let len = PATCH_SIDE * PATCH_SIDE;
    for (slot, &i) in idx.iter().enumerate() {
        t.data[slot * len..(slot + 1) * len].copy_from_slice(&corpus.patches[i]);
    }
    t
}

/// Mean loss and accuracy over an index set, infer mode.
fn evaluate(
    net: &CodingCnn<f32>,
    corpus: &PatchCorpus,
    idx: &[usize],
    batch: usize,
) -> Result<(f64, f64)> {
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    for chunk in idx.chunks(batch) {
        let x = batch_tensor(corpus, chunk);
        let probs = net.predict_batch(&x)?;
        for (slot, &i) in chunk.iter().enumerate() {
            let row = &probs[slot * net.k..(slot + 1) * net.k];
            let label = corpus.labels[i];
            loss_sum += -(row[label].max(1e-30) as f64).ln();
            let arg = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            if arg == label {
                correct += 1;
            }
        }
    }
    Ok((loss_sum / idx.len() as f64, correct as f64 / idx.len() as f64))
}

/// Train a classifier on the corpus: 70/20/10 split, epoch loop with the
/// configured optimizer and schedule, retaining the epoch weights that
/// minimize validation loss, then scoring the held-out test split.
pub fn train(
    corpus: &PatchCorpus,
    cfg: &TrainConfig,
    options: &TrainOptions,
) -> Result<(CodingCnn<f32>, TrainLog)> {
    cfg.validate()?;
    let n_classes = corpus.class_names.len();
    let (train_idx, val_idx, test_idx) = split_indices(&corpus.labels, n_classes, cfg.seed);
    for class in 0..n_classes {
        if !train_idx.iter().any(|&i| corpus.labels[i] == class) {
            return Err(Error::invalid(format!(
                "class '{}' absent from the training data",
                corpus.class_names[class]
            )));
        }
    }

    let mut net = CodingCnn::<f32>::new(options.width, n_classes, options.fc1_relu, cfg.seed)?;
    let mut opt = NetOptimizer::new(&net, cfg.clone())?;

    let mut best: Option<(f64, usize, CodingCnn<f32>)> = None;
    let mut log = TrainLog {
        task: String::new(),
        class_names: corpus.class_names.clone(),
        epochs: Vec::new(),
        best_epoch: 0,
        test_accuracy: 0.0,
        train_patches: train_idx.len(),
        val_patches: val_idx.len(),
        test_patches: test_idx.len(),
    };

    let mut order = train_idx.clone();
    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (epoch as u64).wrapping_mul(0xA24B_AED4));
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            if chunk.len() < 2 {
                continue; // batch-norm needs at least two samples
            }
            let x = batch_tensor(corpus, chunk);
            let labels: Vec<usize> = chunk.iter().map(|&i| corpus.labels[i]).collect();
            let (loss, grads) = net.train_step(&x, &labels)?;
            opt.apply(&mut net, &grads, epoch);
            loss_sum += loss;
            batches += 1;
        }
        let train_loss = loss_sum / batches.max(1) as f64;
        let (val_loss, val_accuracy) = evaluate(&net, corpus, &val_idx, 256)?;
        log.epochs.push(EpochStats {
            epoch,
            learning_rate: cfg.effective_lr(epoch),
            train_loss,
            val_loss,
            val_accuracy,
        });
        if options.verbose {
            eprintln!(
                "epoch {epoch}: lr {:.2e} train loss {train_loss:.4} val loss {val_loss:.4} val acc {val_accuracy:.4}",
                cfg.effective_lr(epoch)
            );
        }
        let is_better = best.as_ref().map(|(l, _, _)| val_loss < *l).unwrap_or(true);
        if is_better {
            best = Some((val_loss, epoch, net.clone()));
        }
        if let Some(stop_at) = options.early_stop_val_accuracy {
            if val_accuracy >= stop_at {
                break;
            }
        }
    }

    let (_, best_epoch, best_net) =
        best.ok_or_else(|| Error::invalid("training ran zero epochs"))?;
    log.best_epoch = best_epoch;
    let (_, test_accuracy) = evaluate(&best_net, corpus, &test_idx, 256)?;
    log.test_accuracy = test_accuracy;
    Ok((best_net, log))
}
