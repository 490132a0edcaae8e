//! Dataset construction: encoded versions of each source, temporally-spliced
//! clips and spatially-spliced clips with ground truth.
//!
//! Mirrors the evaluation protocol: every source is encoded under every
//! (flavor, delta) combination; splices pair content-identical versions of
//! the same source, so the only inconsistency is in coding traces. Spliced
//! clips may be re-encoded afterwards to simulate the upload transcode.

use crate::codec::{
    encode_sequence, encode_sequence_gop, CodecConfig, Flavor, TextureParams,
};
use crate::error::{Error, Result};
use crate::video::VideoSequence;
use serde::{Deserialize, Serialize};

/// Static rectangular splice window, grid-snapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    /// Top-left corner (row, col).
    pub u0: usize,
    pub v0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl WindowSpec {
    /// Window of the given size centered in the frame, top-left snapped down
    /// to the 8-pixel grid.
    pub fn centered(frame_rows: usize, frame_cols: usize, rows: usize, cols: usize) -> Result<Self> {
        if rows > frame_rows || cols > frame_cols {
            return Err(Error::invalid(format!(
                "window {rows}x{cols} does not fit a {frame_rows}x{frame_cols} frame"
            )));
        }
        let u0 = (frame_rows - rows) / 2 / 8 * 8;
        let v0 = (frame_cols - cols) / 2 / 8 * 8;
        Ok(WindowSpec { u0, v0, rows, cols })
    }

    pub fn pixel_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn fits(&self, frame_rows: usize, frame_cols: usize) -> bool {
        self.u0 + self.rows <= frame_rows && self.v0 + self.cols <= frame_cols
    }

    pub fn is_grid_snapped(&self) -> bool {
        self.u0 % 8 == 0 && self.v0 % 8 == 0
    }

    /// Fraction of a 64x64 patch footprint anchored at
    /// `(i*stride, j*stride)` that lies inside the window.
    pub fn patch_overlap_fraction(&self, i: usize, j: usize, stride: usize) -> f64 {
        let patch = crate::patching::PATCH_SIZE;
        let overlap = |a0: usize, alen: usize, b0: usize, blen: usize| -> usize {
            let lo = a0.max(b0);
            let hi = (a0 + alen).min(b0 + blen);
            hi.saturating_sub(lo)
        };
        let ou = overlap(i * stride, patch, self.u0, self.rows);
        let ov = overlap(j * stride, patch, self.v0, self.cols);
        (ou * ov) as f64 / (patch * patch) as f64
    }
}

/// One encoded version of one source.
#[derive(Debug, Clone)]
pub struct EncodedClip {
    pub source: usize,
    pub version: usize,
    pub flavor: Flavor,
    pub delta: f64,
    pub seq: VideoSequence,
}

/// The encoded-video collection: `sources x (flavors x deltas)` clips.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub clips: Vec<EncodedClip>,
    pub n_sources: usize,
    pub versions_per_source: usize,
}

impl Dataset {
    pub fn source_clips(&self, source: usize) -> Vec<&EncodedClip> {
        self.clips.iter().filter(|c| c.source == source).collect()
    }
}

/// Dataset construction parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n_sources: usize,
    pub frame_rows: usize,
    pub frame_cols: usize,
    pub frames_per_video: usize,
    pub texture: TextureParams,
    pub flavors: Vec<Flavor>,
    pub deltas: Vec<f64>,
    /// Simulated GOP period; every period-th frame is encoded finer.
    pub gop_period: Option<usize>,
    /// Post-forgery re-encode applied to spliced clips.
    pub reencode: Option<CodecConfig>,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            n_sources: 5,
            frame_rows: 720,
            frame_cols: 1280,
            frames_per_video: 200,
            texture: TextureParams::default(),
            flavors: vec![Flavor::A, Flavor::B, Flavor::C],
            deltas: vec![5.0, 10.0, 20.0, 40.0],
            gop_period: Some(30),
            reencode: Some(CodecConfig {
                flavor: Flavor::A,
                delta: 2.0,
            }),
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() || self.flavors.is_empty() {
            return Err(Error::invalid("need at least one flavor and one delta"));
        }
        if self.n_sources == 0 || self.frames_per_video == 0 {
            return Err(Error::invalid("need at least one source and one frame"));
        }
        if self.frame_rows % 8 != 0 || self.frame_cols % 8 != 0 {
            return Err(Error::invalid("frame dimensions must be multiples of 8"));
        }
        Ok(())
    }

    fn source_seed(&self, source: usize) -> u64 {
        self.seed
            .wrapping_add((source as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    pub fn generate_source(&self, source: usize) -> VideoSequence {
        crate::codec::gen_texture(
            self.frame_rows,
            self.frame_cols,
            self.frames_per_video,
            self.source_seed(source),
            &self.texture,
        )
    }
}

/// Encode every source under every (flavor, delta) combination. Frames are
/// quantized to 8-bit values, the storage form of the encoded files.
pub fn build_dataset_d(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut clips = Vec::new();
    for source in 0..spec.n_sources {
        let raw = spec.generate_source(source);
        let mut version = 0;
        for &flavor in &spec.flavors {
            for &delta in &spec.deltas {
                let cfg = CodecConfig::new(flavor, delta)?;
                let seq = encode_sequence_gop(&raw, cfg, spec.gop_period).quantize_u8();
                clips.push(EncodedClip {
                    source,
                    version,
                    flavor,
                    delta,
                    seq,
                });
                version += 1;
            }
        }
    }
    Ok(Dataset {
        clips,
        n_sources: spec.n_sources,
        versions_per_source: spec.flavors.len() * spec.deltas.len(),
    })
}

/// Concatenate two spliceable sequences; the splicing point is the first
/// frame of `y` at index `x.len() + 1`.
pub fn temporal_splice(x: &VideoSequence, y: &VideoSequence) -> Result<VideoSequence> {
    if !x.spliceable_with(y) {
        return Err(Error::shape(format!(
            "sequences are not spliceable: {}x{} vs {}x{}",
            x.rows, x.cols, y.rows, y.cols
        )));
    }
    let mut frames = x.frames.clone();
    frames.extend(y.frames.iter().cloned());
    VideoSequence::new(frames, x.fps)
}

/// Replace the window region of every frame of `x` with the co-located
/// region of `y`.
pub fn spatial_splice(
    x: &VideoSequence,
    y: &VideoSequence,
    window: WindowSpec,
) -> Result<VideoSequence> {
    if !x.spliceable_with(y) || x.len() != y.len() {
        return Err(Error::shape(
            "spatial splice needs content-aligned spliceable sequences".to_string(),
        ));
    }
    if !window.fits(x.rows, x.cols) {
        return Err(Error::invalid(format!(
            "window {}x{} at ({}, {}) exceeds the {}x{} frame",
            window.rows, window.cols, window.u0, window.v0, x.rows, x.cols
        )));
    }
    let mut out = x.clone();
    for (dst, src) in out.frames.iter_mut().zip(&y.frames) {
        for u in window.u0..window.u0 + window.rows {
            let row = u * x.cols;
            dst.data[row + window.v0..row + window.v0 + window.cols]
                .copy_from_slice(&src.data[row + window.v0..row + window.v0 + window.cols]);
        }
    }
    Ok(out)
}

/// A temporally-spliced clip with its ground truth.
#[derive(Debug, Clone)]
pub struct TemporalClip {
    pub seq: VideoSequence,
    /// Def-2 splicing point: first frame of the second shot, 1-based.
    pub truth_index: usize,
    pub source: usize,
    pub version_a: usize,
    pub version_b: usize,
}

/// For every source and every unordered version pair, concatenate the first
/// half of the lower-numbered version with the second half of the other.
pub fn build_temporal_splices(
    dataset: &Dataset,
    reencode: Option<CodecConfig>,
) -> Result<Vec<TemporalClip>> {
    let mut out = Vec::new();
    for source in 0..dataset.n_sources {
        let versions = dataset.source_clips(source);
        for a in 0..versions.len() {
            for b in a + 1..versions.len() {
                let n = versions[a].seq.len();
                let half = n / 2;
                if half == 0 || versions[b].seq.len() != n {
                    return Err(Error::invalid(
                        "temporal splice needs versions of equal, nonzero length".to_string(),
                    ));
                }
                let first = VideoSequence::new(
                    versions[a].seq.frames[..half].to_vec(),
                    versions[a].seq.fps,
                )?;
                let second = VideoSequence::new(
                    versions[b].seq.frames[half..].to_vec(),
                    versions[b].seq.fps,
                )?;
                let mut seq = temporal_splice(&first, &second)?;
                if let Some(cfg) = reencode {
                    seq = encode_sequence(&seq, cfg).quantize_u8();
                }
                out.push(TemporalClip {
                    seq,
                    truth_index: half + 1,
                    source,
                    version_a: versions[a].version,
                    version_b: versions[b].version,
                });
            }
        }
    }
    Ok(out)
}

/// A spatially-spliced clip with its ground-truth window.
#[derive(Debug, Clone)]
pub struct SpatialClip {
    pub seq: VideoSequence,
    pub window: WindowSpec,
    pub source: usize,
    pub version_a: usize,
    pub version_b: usize,
}

/// For every source and every unordered version pair, replace the window of
/// the lower-numbered version with the other, on every frame.
pub fn build_spatial_splices(
    dataset: &Dataset,
    window: WindowSpec,
    reencode: Option<CodecConfig>,
    max_pairs_per_source: Option<usize>,
) -> Result<Vec<SpatialClip>> {
    let mut out = Vec::new();
    for source in 0..dataset.n_sources {
        let versions = dataset.source_clips(source);
        let mut taken = 0usize;
        'pairs: for a in 0..versions.len() {
            for b in a + 1..versions.len() {
                if let Some(cap) = max_pairs_per_source {
                    if taken >= cap {
                        break 'pairs;
                    }
                }
                let mut seq = spatial_splice(&versions[a].seq, &versions[b].seq, window)?;
                if let Some(cfg) = reencode {
                    seq = encode_sequence(&seq, cfg).quantize_u8();
                }
                out.push(SpatialClip {
                    seq,
                    window,
                    source,
                    version_a: versions[a].version,
                    version_b: versions[b].version,
                });
                taken += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::gen_texture;

    fn tiny_spec() -> DatasetSpec {
        DatasetSpec {
            n_sources: 2,
            frame_rows: 16,
            frame_cols: 16,
            frames_per_video: 4,
            texture: TextureParams::default(),
            flavors: vec![Flavor::A, Flavor::B],
            deltas: vec![5.0, 40.0],
            gop_period: None,
            reencode: None,
            seed: 3,
        }
    }

    #[test]
    fn paper_scale_counts() {
        // 5 sources x 3 flavors x 4 deltas = 60 videos, 12 versions each
        let spec = DatasetSpec {
            n_sources: 5,
            frame_rows: 16,
            frame_cols: 16,
            frames_per_video: 2,
            flavors: vec![Flavor::A, Flavor::B, Flavor::C],
            deltas: vec![5.0, 10.0, 20.0, 40.0],
            gop_period: None,
            reencode: None,
            seed: 0,
            texture: TextureParams::default(),
        };
        let d = build_dataset_d(&spec).unwrap();
        assert_eq!(d.clips.len(), 60);
        assert_eq!(d.versions_per_source, 12);
        // C(12,2) = 66 pairs per source, 5 x 66 = 330 spliced videos
        let temp = build_temporal_splices(&d, None).unwrap();
        assert_eq!(temp.len(), 330);
        let window = WindowSpec::centered(16, 16, 8, 8).unwrap();
        let spat = build_spatial_splices(&d, window, None, None).unwrap();
        assert_eq!(spat.len(), 330);
    }

    #[test]
    fn single_config_single_video() {
        let spec = DatasetSpec {
            n_sources: 1,
            flavors: vec![Flavor::A],
            deltas: vec![20.0],
            ..tiny_spec()
        };
        let d = build_dataset_d(&spec).unwrap();
        assert_eq!(d.clips.len(), 1);
        // two versions make exactly one pair
        let spec2 = DatasetSpec {
            n_sources: 1,
            flavors: vec![Flavor::A],
            deltas: vec![5.0, 40.0],
            ..tiny_spec()
        };
        let d2 = build_dataset_d(&spec2).unwrap();
        let temp = build_temporal_splices(&d2, None).unwrap();
        assert_eq!(temp.len(), 1);
    }

    #[test]
    fn truth_index_follows_def2() {
        // 200-frame construction records splicing point 101
        let a = gen_texture(16, 16, 200, 1, &TextureParams::default());
        let clips = vec![
            EncodedClip {
                source: 0,
                version: 0,
                flavor: Flavor::A,
                delta: 5.0,
                seq: a.clone(),
            },
            EncodedClip {
                source: 0,
                version: 1,
                flavor: Flavor::A,
                delta: 40.0,
                seq: a,
            },
        ];
        let d = Dataset {
            clips,
            n_sources: 1,
            versions_per_source: 2,
        };
        let temp = build_temporal_splices(&d, None).unwrap();
        assert_eq!(temp[0].truth_index, 101);
        assert_eq!(temp[0].seq.len(), 200);
    }

    #[test]
    fn splice_rejects_mismatched_dimensions() {
        let a = gen_texture(16, 16, 2, 1, &TextureParams::default());
        let b = gen_texture(16, 24, 2, 1, &TextureParams::default());
        assert!(temporal_splice(&a, &b).is_err());
        let w = WindowSpec::centered(16, 16, 8, 8).unwrap();
        assert!(spatial_splice(&a, &b, w).is_err());
    }

    #[test]
    fn identical_pair_spatial_splice_is_identity() {
        let a = gen_texture(32, 32, 3, 5, &TextureParams::default());
        let w = WindowSpec::centered(32, 32, 16, 16).unwrap();
        let s = spatial_splice(&a, &a, w).unwrap();
        assert_eq!(s, a);
    }

    #[test]
    fn spatial_splice_replaces_exactly_the_window() {
        let a = gen_texture(32, 32, 2, 5, &TextureParams::default());
        let b = gen_texture(32, 32, 2, 6, &TextureParams::default());
        let w = WindowSpec {
            u0: 8,
            v0: 16,
            rows: 8,
            cols: 16,
        };
        let s = spatial_splice(&a, &b, w).unwrap();
        for u in 0..32 {
            for v in 0..32 {
                let inside = u >= 8 && u < 16 && v >= 16 && v < 32;
                let want = if inside { b.frames[0].at(u, v) } else { a.frames[0].at(u, v) };
                assert_eq!(s.frames[0].at(u, v), want);
            }
        }
    }

    #[test]
    fn window_geometry() {
        // CIF window in 720p: snapped and sized 288x352
        let w = WindowSpec::centered(720, 1280, 288, 352).unwrap();
        assert!(w.is_grid_snapped());
        assert_eq!(w.pixel_count(), 101_376);
        assert_eq!((w.u0, w.v0), (216, 464));
        assert!(WindowSpec::centered(100, 100, 288, 352).is_err());
        // out-of-bounds window rejected by splice
        let a = gen_texture(32, 32, 1, 1, &TextureParams::default());
        let oob = WindowSpec {
            u0: 24,
            v0: 24,
            rows: 16,
            cols: 16,
        };
        assert!(spatial_splice(&a, &a, oob).is_err());
    }

    #[test]
    fn patch_overlap_fractions() {
        let w = WindowSpec {
            u0: 64,
            v0: 64,
            rows: 64,
            cols: 64,
        };
        // patch exactly on the window
        assert_eq!(w.patch_overlap_fraction(1, 1, 64), 1.0);
        // disjoint patch
        assert_eq!(w.patch_overlap_fraction(0, 0, 8), 0.0);
        // half-overlapping along one axis
        let f = w.patch_overlap_fraction(4, 8, 8); // rows 32..96 vs 64..128 -> 32/64
        assert!((f - 0.5).abs() < 1e-12);
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = tiny_spec();
        let a = build_dataset_d(&spec).unwrap();
        let b = build_dataset_d(&spec).unwrap();
        assert_eq!(a.clips.len(), b.clips.len());
        for (x, y) in a.clips.iter().zip(&b.clips) {
            assert_eq!(x.seq, y.seq);
        }
        let mut spec2 = spec;
        spec2.seed = 4;
        let c = build_dataset_d(&spec2).unwrap();
        assert_ne!(a.clips[0].seq, c.clips[0].seq);
    }

    #[test]
    fn reencode_pass_changes_spliced_frames() {
        let spec = DatasetSpec {
            n_sources: 1,
            flavors: vec![Flavor::A],
            deltas: vec![5.0, 40.0],
            ..tiny_spec()
        };
        let d = build_dataset_d(&spec).unwrap();
        let plain = build_temporal_splices(&d, None).unwrap();
        let recoded = build_temporal_splices(
            &d,
            Some(CodecConfig {
                flavor: Flavor::A,
                delta: 2.0,
            }),
        )
        .unwrap();
        assert_eq!(plain.len(), recoded.len());
        assert_eq!(plain[0].truth_index, recoded[0].truth_index);
    }
}
