//! Grid-aligned 64x64 patch extraction and the high-variance training filter.
//!
//! Patches are anchored at multiples of the stride, which must itself be a
//! multiple of the 8-pixel coding block, so every patch sees the same block
//! grid alignment. Partial border patches are dropped.

use crate::error::{Error, Result};
use crate::video::Frame;

pub const PATCH_SIZE: usize = 64;

/// Patch counts along each axis for a frame and stride.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGrid {
    pub stride: usize,
    /// Patch count along U (rows).
    pub p_u: usize,
    /// Patch count along V (cols).
    pub p_v: usize,
}

impl PatchGrid {
    pub fn count(&self) -> usize {
        self.p_u * self.p_v
    }
}

/// One extracted patch with its grid coordinates: the top-left pixel sits at
/// `(i * stride, j * stride)`.
#[derive(Debug, Clone)]
pub struct Patch {
    pub i: usize,
    pub j: usize,
    pub data: Vec<f32>,
}

fn check_stride(stride: usize) -> Result<()> {
    if stride == 0 || stride % 8 != 0 {
        return Err(Error::invalid(format!(
            "patch stride must be a positive multiple of 8, got {stride}"
        )));
    }
    Ok(())
}

/// Grid geometry: `floor((dim - 64) / stride) + 1` along each axis.
pub fn patch_grid(rows: usize, cols: usize, stride: usize) -> Result<PatchGrid> {
    check_stride(stride)?;
    if rows < PATCH_SIZE || cols < PATCH_SIZE {
        return Err(Error::invalid(format!(
            "frame {rows}x{cols} is smaller than a {PATCH_SIZE}x{PATCH_SIZE} patch"
        )));
    }
    Ok(PatchGrid {
        stride,
        p_u: (rows - PATCH_SIZE) / stride + 1,
        p_v: (cols - PATCH_SIZE) / stride + 1,
    })
}

/// Extract every full patch in row-major grid order (i outer, j inner).
pub fn extract_patches(frame: &Frame, stride: usize) -> Result<Vec<Patch>> {
    let grid = patch_grid(frame.rows, frame.cols, stride)?;
    let mut out = Vec::with_capacity(grid.count());
    for i in 0..grid.p_u {
        for j in 0..grid.p_v {
            let u0 = i * stride;
            let v0 = j * stride;
            let mut data = Vec::with_capacity(PATCH_SIZE * PATCH_SIZE);
            for u in 0..PATCH_SIZE {
                let row = (u0 + u) * frame.cols + v0;
                data.extend_from_slice(&frame.data[row..row + PATCH_SIZE]);
            }
            out.push(Patch { i, j, data });
        }
    }
    Ok(out)
}

/// Population variance of raw luma values.
pub fn luma_variance(data: &[f32]) -> f64 {
    let n = data.len() as f64;
    let mean: f64 = data.iter().map(|&x| x as f64).sum::<f64>() / n;
    data.iter()
        .map(|&x| {
            let d = x as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n
}

/// Keep patches whose luma variance strictly exceeds the threshold.
pub fn variance_filter(patches: Vec<Patch>, threshold: f64) -> Vec<Patch> {
    patches
        .into_iter()
        .filter(|p| luma_variance(&p.data) > threshold)
        .collect()
}
