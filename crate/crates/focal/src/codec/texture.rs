//! Procedural luma content standing in for uncompressed source clips.
//!
//! A sequence is built from two Gaussian-filtered noise fields mixed with a
//! smooth oriented gradient. The two fields are cross-faded on a slow phase
//! rotation, giving gentle temporal drift at constant spatial variance.

use crate::video::{Frame, VideoSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TextureParams {
    /// Mean luma level.
    pub base: f64,
    /// Standard deviation of the filtered-noise component in luma units.
    /// The default keeps nearly all 64x64 patches above the 1e3 variance
    /// threshold; small values (e.g. 10) drop them below it.
    pub noise_amp: f64,
    /// Spatial Gaussian filter sigma in pixels.
    pub noise_sigma: f64,
    /// Peak-to-center amplitude of the oriented gradient in luma units.
    pub grad_amp: f64,
    /// Frames per full cross-fade rotation of the two noise fields.
    pub drift_period: f64,
}

impl Default for TextureParams {
    fn default() -> Self {
        TextureParams {
            base: 128.0,
            noise_amp: 55.0,
            noise_sigma: 2.0,
            grad_amp: 35.0,
            drift_period: 240.0,
        }
    }
}

/// Deterministic procedural sequence. Dimensions must be multiples of 8.
pub fn gen_texture(
    rows: usize,
    cols: usize,
    n_frames: usize,
    seed: u64,
    params: &TextureParams,
) -> VideoSequence {
    assert!(
        rows % 8 == 0 && cols % 8 == 0,
        "texture dimensions must be multiples of 8"
    );
    assert!(n_frames >= 1, "need at least one frame");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let field_a = filtered_noise(rows, cols, params.noise_sigma, &mut rng);
    let field_b = filtered_noise(rows, cols, params.noise_sigma, &mut rng);
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);

    let gradient: Vec<f64> = (0..rows * cols)
        .map(|idx| {
            let u = (idx / cols) as f64 / (rows.max(2) - 1) as f64 * 2.0 - 1.0;
            let v = (idx % cols) as f64 / (cols.max(2) - 1) as f64 * 2.0 - 1.0;
            theta.cos() * u + theta.sin() * v
        })
        .collect();

    let frames: Vec<Frame> = (0..n_frames)
        .map(|n| {
            let phase = std::f64::consts::TAU * n as f64 / params.drift_period;
            let (ca, cb) = (phase.cos(), phase.sin());
            let data: Vec<f32> = (0..rows * cols)
                .map(|idx| {
                    let noise = ca * field_a[idx] + cb * field_b[idx];
                    let value = params.base
                        + params.noise_amp * noise
                        + params.grad_amp * gradient[idx];
                    value.clamp(0.0, 255.0) as f32
                })
                .collect();
            Frame { rows, cols, data }
        })
        .collect();

    VideoSequence {
        rows,
        cols,
        fps: (30, 1),
        frames,
    }
}

/// Unit-variance Gaussian noise field filtered by a separable Gaussian with
/// circular wrap-around, then renormalized to exactly unit standard
/// deviation.
fn filtered_noise(rows: usize, cols: usize, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut field: Vec<f64> = (0..rows * cols)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();

    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|x| (-0.5 * (x as f64 / sigma).powi(2)).exp())
        .collect();
    let ksum: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.into_iter().map(|k| k / ksum).collect();

    // rows pass
    let mut tmp = vec![0.0; rows * cols];
    for u in 0..rows {
        for v in 0..cols {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let off = ki as isize - radius;
                let vv = (v as isize + off).rem_euclid(cols as isize) as usize;
                acc += k * field[u * cols + vv];
            }
            tmp[u * cols + v] = acc;
        }
    }
    // cols pass
    for v in 0..cols {
        for u in 0..rows {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let off = ki as isize - radius;
                let uu = (u as isize + off).rem_euclid(rows as isize) as usize;
                acc += k * tmp[uu * cols + v];
            }
            field[u * cols + v] = acc;
        }
    }

    let mean: f64 = field.iter().sum::<f64>() / field.len() as f64;
    let var: f64 = field.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / field.len() as f64;
    let inv_std = 1.0 / var.sqrt();
    for x in field.iter_mut() {
        *x = (*x - mean) * inv_std;
    }
    field
}
