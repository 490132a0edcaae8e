//! Spatial splicing localization: activation maps, VER scoring, fusion,
//! patch classification and heatmap rendering.
//!
//! Each feature map of a frame's descriptor tensor is turned into an
//! activation map (squared deviation from its mean), informative maps are
//! selected by the variance-to-entropy ratio, and the VER-weighted average
//! of the maps is the forgery heatmap.

use crate::descriptors::FeatureTensor;
use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

const VER_EPS: f64 = 1e-9;

/// Non-negative `p_u x p_v` activation matrix from one feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMap {
    pub p_u: usize,
    pub p_v: usize,
    pub data: Vec<f64>,
    /// Index of the source feature map.
    pub source: usize,
}

/// VER-weighted fusion of the activation maps.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedMap {
    pub p_u: usize,
    pub p_v: usize,
    pub data: Vec<f64>,
    /// The per-map VER weights that produced this fusion.
    pub weights: Vec<f64>,
}

/// `H = (F - mean(F))^2` element-wise.
pub fn activation_map(map: &[f64], p_u: usize, p_v: usize, source: usize) -> Result<ActivationMap> {
    if map.is_empty() || map.len() != p_u * p_v {
        return Err(Error::shape(format!(
            "activation map needs a non-empty {p_u}x{p_v} input, got {} values",
            map.len()
        )));
    }
    let mean: f64 = map.iter().sum::<f64>() / map.len() as f64;
    Ok(ActivationMap {
        p_u,
        p_v,
        data: map.iter().map(|&v| (v - mean) * (v - mean)).collect(),
        source,
    })
}

/// All eight activation maps of a feature tensor.
pub fn activation_maps(tensor: &FeatureTensor) -> Result<Vec<ActivationMap>> {
    (0..tensor.len)
        .map(|k| activation_map(&tensor.feature_map(k), tensor.p_u, tensor.p_v, k))
        .collect()
}

fn variance(data: &[f64]) -> f64 {
    let n = data.len() as f64;
    let mean: f64 = data.iter().sum::<f64>() / n;
    data.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Shannon entropy in bits of the map normalized to unit mass; zero-mass
/// maps score zero entropy.
fn normalized_entropy(data: &[f64]) -> f64 {
    let total: f64 = data.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -data
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| {
            let q = v / total;
            q * q.log2()
        })
        .sum::<f64>()
}

/// Variance-to-entropy ratio: high for maps with a strong, localized
/// activation; zero for constant maps.
pub fn ver(map: &ActivationMap) -> f64 {
    let var = variance(&map.data);
    if var == 0.0 {
        return 0.0;
    }
    var / (normalized_entropy(&map.data) + VER_EPS)
}

/// `H-bar = sum_k VER_k H_k / sum_k VER_k`; when every VER is zero the
/// fusion falls back to the unweighted mean.
pub fn fuse(maps: &[ActivationMap]) -> Result<FusedMap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::invalid("fusion needs at least one activation map"))?;
    for m in maps {
        if m.p_u != first.p_u || m.p_v != first.p_v {
            return Err(Error::shape(
                "fusion: activation maps have mismatched shapes".to_string(),
            ));
        }
    }
    let weights: Vec<f64> = maps.iter().map(ver).collect();
    let total: f64 = weights.iter().sum();
    let cells = first.p_u * first.p_v;
    let mut data = vec![0.0; cells];
    if total > 0.0 {
        for (m, &w) in maps.iter().zip(&weights) {
            if w == 0.0 {
                continue;
            }
            for (acc, &v) in data.iter_mut().zip(&m.data) {
                *acc += w * v;
            }
        }
        for v in data.iter_mut() {
            *v /= total;
        }
    } else {
        for m in maps {
            for (acc, &v) in data.iter_mut().zip(&m.data) {
                *acc += v;
            }
        }
        for v in data.iter_mut() {
            *v /= maps.len() as f64;
        }
    }
    Ok(FusedMap {
        p_u: first.p_u,
        p_v: first.p_v,
        data,
        weights,
    })
}

/// Threshold the fused map into a binary forgery mask; scores are the raw
/// cell values, exported for ROC sweeps.
pub fn classify_patches(fused: &FusedMap, threshold: f64) -> Result<Vec<bool>> {
    if threshold < 0.0 {
        return Err(Error::invalid("threshold must be non-negative"));
    }
    Ok(fused.data.iter().map(|&v| v > threshold).collect())
}

/// Grayscale raster of a heatmap painted back onto the frame geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u8>,
}

/// Min-max normalize the fused map to [0, 255] and paint every cell over its
/// 64x64 patch footprint; overlapping footprints (stride < 64) average. An
/// all-equal map renders black.
pub fn render_heatmap(
    fused: &FusedMap,
    rows: usize,
    cols: usize,
    stride: usize,
) -> Result<GrayImage> {
    let grid = crate::patching::patch_grid(rows, cols, stride)?;
    if grid.p_u != fused.p_u || grid.p_v != fused.p_v {
        return Err(Error::shape(format!(
            "heatmap grid {}x{} does not match frame {}x{} at stride {}",
            fused.p_u, fused.p_v, rows, cols, stride
        )));
    }
    let min = fused.data.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = fused.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let normalized: Vec<f64> = if span > 0.0 {
        fused.data.iter().map(|&v| (v - min) / span * 255.0).collect()
    } else {
        vec![0.0; fused.data.len()]
    };

    let mut acc = vec![0.0f64; rows * cols];
    let mut cnt = vec![0u32; rows * cols];
    for i in 0..fused.p_u {
        for j in 0..fused.p_v {
            let value = normalized[i * fused.p_v + j];
            for u in i * stride..i * stride + crate::patching::PATCH_SIZE {
                let row = u * cols;
                for v in j * stride..j * stride + crate::patching::PATCH_SIZE {
                    acc[row + v] += value;
                    cnt[row + v] += 1;
                }
            }
        }
    }
    let data: Vec<u8> = acc
        .iter()
        .zip(&cnt)
        .map(|(&a, &c)| {
            if c == 0 {
                0
            } else {
                (a / c as f64).round().clamp(0.0, 255.0) as u8
            }
        })
        .collect();
    Ok(GrayImage { rows, cols, data })
}

/// Binary PGM (P5).
pub fn write_pgm(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::with_capacity(image.data.len() + 32);
    write!(out, "P5\n{} {}\n255\n", image.cols, image.rows)?;
    out.extend_from_slice(&image.data);
    std::fs::write(path, out)?;
    Ok(())
}

/// Per-cell score CSV: `row,col,score`.
pub fn write_score_csv(fused: &FusedMap, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "row,col,score")?;
    for i in 0..fused.p_u {
        for j in 0..fused.p_v {
            writeln!(out, "{},{},{}", i, j, fused.data[i * fused.p_v + j])?;
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn map_from(data: Vec<f64>, p_u: usize, p_v: usize) -> ActivationMap {
        ActivationMap {
            p_u,
            p_v,
            data,
            source: 0,
        }
    }

    #[test]
    fn constant_feature_map_activates_nowhere() {
        let h = activation_map(&[3.25; 12], 3, 4, 0).unwrap();
        assert!(h.data.iter().all(|&v| v == 0.0));
        // non-representable constants stay at rounding-noise level
        let h = activation_map(&[3.3; 12], 3, 4, 0).unwrap();
        assert!(h.data.iter().all(|&v| v.abs() < 1e-28));
    }

    #[test]
    fn two_cell_activation_arithmetic() {
        let h = activation_map(&[0.0, 1.0], 1, 2, 0).unwrap();
        assert_eq!(h.data, vec![0.25, 0.25]);
    }

    #[test]
    fn activation_mean_equals_feature_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let data: Vec<f64> = (0..30).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let h = activation_map(&data, 5, 6, 0).unwrap();
            let mean_h: f64 = h.data.iter().sum::<f64>() / h.data.len() as f64;
            assert!((mean_h - variance(&data)).abs() < 1e-12);
        }
    }

    #[test]
    fn ver_zero_for_constant_maps() {
        assert_eq!(ver(&map_from(vec![0.0; 16], 4, 4)), 0.0);
        assert_eq!(ver(&map_from(vec![2.5; 16], 4, 4)), 0.0);
    }

    #[test]
    fn ver_prefers_localized_activation() {
        // single spike
        let mut spike = vec![0.0; 16];
        spike[5] = 1.0;
        let spike = map_from(spike, 4, 4);
        // same variance spread over half the cells: 8 cells at a, 8 at 0
        // has var = a^2/4, so a = 2 sqrt(v_spike) matches the spike map
        let v_spike = variance(&spike.data);
        let a = 2.0 * v_spike.sqrt();
        let mut spread = vec![0.0; 16];
        for cell in spread.iter_mut().take(8) {
            *cell = a;
        }
        let spread = map_from(spread, 4, 4);
        assert!((variance(&spread.data) - v_spike).abs() < 1e-12);
        assert!(ver(&spike) > ver(&spread));
    }

    #[test]
    fn ver_scaling_keeps_ordering() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let maps: Vec<ActivationMap> = (0..4)
            .map(|_| map_from((0..12).map(|_| rng.gen_range(0.0..1.0)).collect(), 3, 4))
            .collect();
        let base: Vec<f64> = maps.iter().map(ver).collect();
        let scaled: Vec<f64> = maps
            .iter()
            .map(|m| {
                let mut s = m.clone();
                for v in s.data.iter_mut() {
                    *v *= 7.0;
                }
                ver(&s)
            })
            .collect();
        // entropy unchanged, variance scales by 49: ordering preserved
        let order = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
            idx
        };
        assert_eq!(order(&base), order(&scaled));
        for (b, s) in base.iter().zip(&scaled) {
            assert!((s / b - 49.0).abs() < 1e-6);
        }
    }

    #[test]
    fn fusion_with_equal_weights_is_plain_mean() {
        // two maps that are permutations of each other: same var and entropy
        let a = map_from(vec![1.0, 0.0, 0.0, 0.0], 2, 2);
        let b = map_from(vec![0.0, 0.0, 0.0, 1.0], 2, 2);
        let f = fuse(&[a.clone(), b.clone()]).unwrap();
        for (got, (x, y)) in f.data.iter().zip(a.data.iter().zip(&b.data)) {
            assert!((got - 0.5 * (x + y)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_ver_maps_are_excluded() {
        let idle = map_from(vec![5.0; 4], 2, 2);
        let mut active_data = vec![0.0; 4];
        active_data[2] = 2.0;
        let active = map_from(active_data.clone(), 2, 2);
        let f = fuse(&[idle, active]).unwrap();
        assert_eq!(f.weights[0], 0.0);
        for (got, want) in f.data.iter().zip(&active_data) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn all_zero_ver_falls_back_to_unweighted_mean() {
        let a = map_from(vec![1.0; 4], 2, 2);
        let b = map_from(vec![3.0; 4], 2, 2);
        let f = fuse(&[a, b]).unwrap();
        assert!(f.data.iter().all(|&v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn fusion_matches_hand_computation() {
        // three 2x2 maps with hand-computed VERs
        let maps = [
            map_from(vec![1.0, 0.0, 0.0, 0.0], 2, 2),
            map_from(vec![0.5, 0.5, 0.0, 0.0], 2, 2),
            map_from(vec![0.2, 0.4, 0.6, 0.8], 2, 2),
        ];
        let vers: Vec<f64> = maps
            .iter()
            .map(|m| {
                let var = variance(&m.data);
                let total: f64 = m.data.iter().sum();
                let ent: f64 = -m
                    .data
                    .iter()
                    .filter(|&&v| v > 0.0)
                    .map(|&v| {
                        let q = v / total;
                        q * q.log2()
                    })
                    .sum::<f64>();
                var / (ent + 1e-9)
            })
            .collect();
        let total_w: f64 = vers.iter().sum();
        let f = fuse(&maps).unwrap();
        for cell in 0..4 {
            let manual: f64 = maps
                .iter()
                .zip(&vers)
                .map(|(m, &w)| w * m.data[cell])
                .sum::<f64>()
                / total_w;
            assert!((f.data[cell] - manual).abs() < 1e-9);
        }
        assert_eq!(f.weights, vers);
    }

    #[test]
    fn fusion_is_order_invariant_and_scales_linearly() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let maps: Vec<ActivationMap> = (0..5)
            .map(|k| {
                let mut m = map_from((0..9).map(|_| rng.gen_range(0.0..1.0)).collect(), 3, 3);
                m.source = k;
                m
            })
            .collect();
        let f = fuse(&maps).unwrap();
        let mut shuffled = maps.clone();
        shuffled.reverse();
        let g = fuse(&shuffled).unwrap();
        for (a, b) in f.data.iter().zip(&g.data) {
            assert!((a - b).abs() < 1e-12);
        }
        // common positive scaling scales the fusion linearly
        let scaled: Vec<ActivationMap> = maps
            .iter()
            .map(|m| {
                let mut s = m.clone();
                for v in s.data.iter_mut() {
                    *v *= 3.0;
                }
                s
            })
            .collect();
        let h = fuse(&scaled).unwrap();
        for (a, b) in f.data.iter().zip(&h.data) {
            assert!((b - 3.0 * a).abs() < 1e-9);
        }
    }

    #[test]
    fn classification_thresholds() {
        let fused = FusedMap {
            p_u: 1,
            p_v: 4,
            data: vec![0.1, 0.5, 0.0, 0.9],
            weights: vec![],
        };
        let mask = classify_patches(&fused, 0.4).unwrap();
        assert_eq!(mask, vec![false, true, false, true]);
        // threshold 0 flags every strictly positive cell
        let strictly_positive = FusedMap {
            p_u: 1,
            p_v: 3,
            data: vec![0.2, 0.01, 1.0],
            weights: vec![],
        };
        assert!(classify_patches(&strictly_positive, 0.0)
            .unwrap()
            .iter()
            .all(|&b| b));
        // all-zero map stays empty for any positive threshold
        let zero = FusedMap {
            p_u: 1,
            p_v: 3,
            data: vec![0.0; 3],
            weights: vec![],
        };
        assert!(!classify_patches(&zero, 0.1).unwrap().iter().any(|&b| b));
        assert!(classify_patches(&zero, -1.0).is_err());
    }

    #[test]
    fn heatmap_constant_map_is_black_and_max_is_white() {
        let constant = FusedMap {
            p_u: 2,
            p_v: 2,
            data: vec![3.0; 4],
            weights: vec![],
        };
        let img = render_heatmap(&constant, 128, 128, 64).unwrap();
        assert!(img.data.iter().all(|&b| b == 0));

        let varied = FusedMap {
            p_u: 2,
            p_v: 2,
            data: vec![0.0, 1.0, 2.0, 4.0],
            weights: vec![],
        };
        let img = render_heatmap(&varied, 128, 128, 64).unwrap();
        // cell (1,1) footprint renders 255
        assert_eq!(img.data[127 * 128 + 127], 255);
        assert_eq!(img.data[0], 0);
    }

    #[test]
    fn overlapping_render_matches_box_filter_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (rows, cols, stride) = (96usize, 88usize, 8usize);
        let grid = crate::patching::patch_grid(rows, cols, stride).unwrap();
        let fused = FusedMap {
            p_u: grid.p_u,
            p_v: grid.p_v,
            data: (0..grid.count()).map(|_| rng.gen_range(0.0..1.0)).collect(),
            weights: vec![],
        };
        let img = render_heatmap(&fused, rows, cols, stride).unwrap();

        // oracle: per pixel, average the normalized values of covering cells
        let min = fused.data.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = fused.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for u in (0..rows).step_by(7) {
            for v in (0..cols).step_by(5) {
                let mut acc = 0.0;
                let mut cnt = 0;
                for i in 0..grid.p_u {
                    for j in 0..grid.p_v {
                        let u0 = i * stride;
                        let v0 = j * stride;
                        if u >= u0 && u < u0 + 64 && v >= v0 && v < v0 + 64 {
                            acc += (fused.data[i * grid.p_v + j] - min) / (max - min) * 255.0;
                            cnt += 1;
                        }
                    }
                }
                let want = acc / cnt as f64;
                let got = img.data[u * cols + v] as f64;
                assert!(
                    (got - want).abs() <= 1.0,
                    "pixel ({u},{v}): rendered {got}, oracle {want}"
                );
            }
        }
    }

    #[test]
    fn pgm_and_csv_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let fused = FusedMap {
            p_u: 1,
            p_v: 2,
            data: vec![0.0, 1.0],
            weights: vec![],
        };
        let img = render_heatmap(&fused, 64, 128, 64).unwrap();
        let pgm = dir.path().join("h.pgm");
        write_pgm(&img, &pgm).unwrap();
        let bytes = std::fs::read(&pgm).unwrap();
        assert!(bytes.starts_with(b"P5\n128 64\n255\n"));
        assert_eq!(bytes.len(), 14 + 64 * 128);

        let csv = dir.path().join("s.csv");
        write_score_csv(&fused, &csv).unwrap();
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.contains("0,1,1"));
    }
}
