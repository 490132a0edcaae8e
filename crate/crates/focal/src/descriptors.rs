//! Patch descriptors, frame descriptors and frame-level feature tensors.
//!
//! A patch descriptor is the concatenation `f = [f_C, f_Q]` of the two
//! classifier softmax outputs: four codec-class likelihoods followed by four
//! quality-class likelihoods. The layout is fixed: slices `0..4` are the
//! codec map indices, `4..8` the quality map indices. Adding further trained
//! models would lengthen `f` without changing anything downstream.

use crate::error::{Error, Result};
use crate::nn::{CodingCnn, Tensor, PATCH_SIDE};
use crate::patching::{extract_patches, patch_grid, Patch};
use crate::video::Frame;
use sha2::{Digest, Sha256};
use std::path::Path;

/// Inference batch size for patch descriptor extraction.
const INFER_BATCH: usize = 128;

/// The two trained classifiers used as feature extractors.
pub struct ModelPair {
    pub codec: CodingCnn<f32>,
    pub quality: CodingCnn<f32>,
}

impl ModelPair {
    pub fn new(codec: CodingCnn<f32>, quality: CodingCnn<f32>) -> Result<Self> {
        if codec.k != 4 || quality.k != 4 {
            return Err(Error::invalid(format!(
                "descriptor models must have K = 4 classes, got {} and {}",
                codec.k, quality.k
            )));
        }
        Ok(ModelPair { codec, quality })
    }
}

/// Per-patch descriptor with its grid coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchDescriptor {
    pub f_c: [f32; 4],
    pub f_q: [f32; 4],
    pub i: usize,
    pub j: usize,
}

impl PatchDescriptor {
    /// The eight-element concatenated descriptor.
    pub fn concat(&self) -> [f32; 8] {
        let mut f = [0.0; 8];
        f[..4].copy_from_slice(&self.f_c);
        f[4..].copy_from_slice(&self.f_q);
        f
    }
}

/// Frame-level eight-element descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDescriptor {
    pub f: [f32; 8],
    pub frame: usize,
}

/// `p_u x p_v x len` grid of patch descriptors for one frame, row-major with
/// the descriptor axis innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub p_u: usize,
    pub p_v: usize,
    pub len: usize,
    pub data: Vec<f32>,
}

impl FeatureTensor {
    pub fn cell(&self, i: usize, j: usize) -> &[f32] {
        let at = (i * self.p_v + j) * self.len;
        &self.data[at..at + self.len]
    }

    /// The k-th feature map as a flat `p_u x p_v` matrix.
    pub fn feature_map(&self, k: usize) -> Vec<f64> {
        assert!(k < self.len, "feature map {k} out of range");
        self.data
            .chunks_exact(self.len)
            .map(|cell| cell[k] as f64)
            .collect()
    }
}

/// Run both models over a set of patches, preserving order.
pub fn patch_descriptors(patches: &[Patch], models: &ModelPair) -> Result<Vec<PatchDescriptor>> {
    let mut out = Vec::with_capacity(patches.len());
    for chunk in patches.chunks(INFER_BATCH) {
        let n = chunk.len();
        let mut batch = Tensor::<f32>::zeros(n, PATCH_SIDE, PATCH_SIDE, 1);
        for (idx, p) in chunk.iter().enumerate() {
            if p.data.len() != PATCH_SIDE * PATCH_SIDE {
                return Err(Error::shape(format!(
                    "patch ({}, {}) has {} values",
                    p.i,
                    p.j,
                    p.data.len()
                )));
            }
            batch.data[idx * PATCH_SIDE * PATCH_SIDE..(idx + 1) * PATCH_SIDE * PATCH_SIDE]
                .copy_from_slice(&p.data);
        }
        let pc = models.codec.predict_batch(&batch)?;
        let pq = models.quality.predict_batch(&batch)?;
        for (idx, p) in chunk.iter().enumerate() {
            let mut f_c = [0.0f32; 4];
            let mut f_q = [0.0f32; 4];
            f_c.copy_from_slice(&pc[idx * 4..(idx + 1) * 4]);
            f_q.copy_from_slice(&pq[idx * 4..(idx + 1) * 4]);
            out.push(PatchDescriptor {
                f_c,
                f_q,
                i: p.i,
                j: p.j,
            });
        }
    }
    Ok(out)
}

/// Descriptor of a single 64x64 patch.
pub fn patch_descriptor(patch: &Patch, models: &ModelPair) -> Result<PatchDescriptor> {
    Ok(patch_descriptors(std::slice::from_ref(patch), models)?.remove(0))
}

/// Average the patch descriptors of one frame: element-wise mean of f_C and
/// of f_Q, then concatenation.
pub fn frame_descriptor(descriptors: &[PatchDescriptor], frame: usize) -> Result<FrameDescriptor> {
    if descriptors.is_empty() {
        return Err(Error::invalid("frame descriptor needs at least one patch"));
    }
    let mut f = [0.0f64; 8];
    for d in descriptors {
        for k in 0..4 {
            f[k] += d.f_c[k] as f64;
            f[4 + k] += d.f_q[k] as f64;
        }
    }
    let inv = 1.0 / descriptors.len() as f64;
    let mut out = [0.0f32; 8];
    for (o, &v) in out.iter_mut().zip(f.iter()) {
        *o = (v * inv) as f32;
    }
    Ok(FrameDescriptor { f: out, frame })
}

/// Frame descriptors for every frame of a sequence at the given stride.
pub fn video_frame_descriptors(
    frames: &[Frame],
    stride: usize,
    models: &ModelPair,
) -> Result<Vec<FrameDescriptor>> {
    let mut out = Vec::with_capacity(frames.len());
    for (n, frame) in frames.iter().enumerate() {
        let patches = extract_patches(frame, stride)?;
        let descs = patch_descriptors(&patches, models)?;
        out.push(frame_descriptor(&descs, n)?);
    }
    Ok(out)
}

/// Dense descriptor grid for one frame. Cell (i, j) describes the patch
/// whose top-left pixel is (i*stride, j*stride).
pub fn feature_tensor(frame: &Frame, stride: usize, models: &ModelPair) -> Result<FeatureTensor> {
    let grid = patch_grid(frame.rows, frame.cols, stride)?;
    let patches = extract_patches(frame, stride)?;
    let descs = patch_descriptors(&patches, models)?;
    let len = 8;
    let mut data = vec![0.0f32; grid.count() * len];
    for d in &descs {
        let at = (d.i * grid.p_v + d.j) * len;
        data[at..at + 8].copy_from_slice(&d.concat());
    }
    Ok(FeatureTensor {
        p_u: grid.p_u,
        p_v: grid.p_v,
        len,
        data,
    })
}

/// Element-wise mean of feature tensors across a window of frames.
pub fn temporal_average(tensors: &[FeatureTensor]) -> Result<FeatureTensor> {
    let first = tensors
        .first()
        .ok_or_else(|| Error::invalid("temporal average needs at least one tensor"))?;
    for t in tensors {
        if t.p_u != first.p_u || t.p_v != first.p_v || t.len != first.len {
            return Err(Error::shape(
                "temporal average: mismatched descriptor grids".to_string(),
            ));
        }
    }
    let mut acc = vec![0.0f64; first.data.len()];
    for t in tensors {
        for (a, &v) in acc.iter_mut().zip(&t.data) {
            *a += v as f64;
        }
    }
    let inv = 1.0 / tensors.len() as f64;
    Ok(FeatureTensor {
        p_u: first.p_u,
        p_v: first.p_v,
        len: first.len,
        data: acc.into_iter().map(|v| (v * inv) as f32).collect(),
    })
}

pub const CACHE_MAGIC: &[u8; 4] = b"FOCD";

/// Serialize per-frame feature tensors: magic, frame count, P_U, P_V, vector
/// length (u32 LE), then frame-major row-major f32 LE values.
pub fn write_descriptor_cache(tensors: &[FeatureTensor], path: impl AsRef<Path>) -> Result<()> {
    let first = tensors
        .first()
        .ok_or_else(|| Error::invalid("descriptor cache needs at least one frame"))?;
    for t in tensors {
        if t.p_u != first.p_u || t.p_v != first.p_v || t.len != first.len {
            return Err(Error::shape("descriptor cache: mismatched grids".to_string()));
        }
    }
    let mut out = Vec::new();
    out.extend(CACHE_MAGIC);
    out.extend((tensors.len() as u32).to_le_bytes());
    out.extend((first.p_u as u32).to_le_bytes());
    out.extend((first.p_v as u32).to_le_bytes());
    out.extend((first.len as u32).to_le_bytes());
    for t in tensors {
        for &v in &t.data {
            out.extend(v.to_le_bytes());
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_descriptor_cache(path: impl AsRef<Path>) -> Result<Vec<FeatureTensor>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    if bytes.len() < 20 || &bytes[..4] != CACHE_MAGIC {
        return Err(Error::malformed(path, 0, "not a FOCD descriptor cache"));
    }
    let u32_at = |at: usize| u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]);
    let frames = u32_at(4) as usize;
    let p_u = u32_at(8) as usize;
    let p_v = u32_at(12) as usize;
    let len = u32_at(16) as usize;
    let per_frame = p_u * p_v * len;
    let need = 20 + frames * per_frame * 4;
    if bytes.len() < need {
        return Err(Error::malformed(
            path,
            bytes.len() as u64,
            format!("truncated cache: need {need} bytes, have {}", bytes.len()),
        ));
    }
    let mut out = Vec::with_capacity(frames);
    let mut pos = 20;
    for _ in 0..frames {
        let data: Vec<f32> = bytes[pos..pos + per_frame * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        pos += per_frame * 4;
        out.push(FeatureTensor { p_u, p_v, len, data });
    }
    Ok(out)
}

/// Content-addressed cache key: digests of the video bytes and of both
/// weights files, plus the stride and a variant tag.
pub fn descriptor_cache_key(
    video_bytes: &[u8],
    codec_weights: &[u8],
    quality_weights: &[u8],
    stride: usize,
    variant: &str,
) -> String {
    let mut h = Sha256::new();
    h.update(video_bytes);
    h.update(codec_weights);
    h.update(quality_weights);
    h.update(stride.to_le_bytes());
    h.update(variant.as_bytes());
    let digest = h.finalize();
    digest.iter().take(16).map(|b| format!("{b:02x}")).collect()
}
