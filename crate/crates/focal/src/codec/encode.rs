//! Synthetic block-based intra codec.
//!
//! Each flavor pairs an 8x8 orthonormal transform with a quantization weight
//! matrix. Encoding a frame transforms each block, quantizes every
//! coefficient to `delta * w(u,v) * round(c / (delta * w(u,v)))`, inverse
//! transforms and clamps to [0, 255]. The block grid is anchored at (0, 0).

use super::transform::{dct8, hadamard8, intdct8, Transform8, BLOCK};
use crate::error::{Error, Result};
use crate::video::{Frame, VideoSequence};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The four synthetic codec flavors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    /// Float DCT, flat quantization matrix.
    A,
    /// Integer-approximated DCT, flat quantization matrix.
    B,
    /// Float DCT, perceptual ramp matrix `1 + (u+v)/4`.
    C,
    /// Hadamard transform, flat quantization matrix.
    D,
}

impl Flavor {
    pub const ALL: [Flavor; 4] = [Flavor::A, Flavor::B, Flavor::C, Flavor::D];

    pub fn transform(self) -> &'static Transform8 {
        match self {
            Flavor::A | Flavor::C => dct8(),
            Flavor::B => intdct8(),
            Flavor::D => hadamard8(),
        }
    }

    /// Per-coefficient quantization weights.
    pub fn quant_weights(self) -> [f64; BLOCK * BLOCK] {
        let mut w = [1.0; BLOCK * BLOCK];
        if self == Flavor::C {
            for u in 0..BLOCK {
                for v in 0..BLOCK {
                    w[u * BLOCK + v] = 1.0 + (u + v) as f64 / 4.0;
                }
            }
        }
        w
    }

    pub fn name(self) -> &'static str {
        match self {
            Flavor::A => "A",
            Flavor::B => "B",
            Flavor::C => "C",
            Flavor::D => "D",
        }
    }
}

impl std::str::FromStr for Flavor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Flavor::A),
            "B" | "b" => Ok(Flavor::B),
            "C" | "c" => Ok(Flavor::C),
            "D" | "d" => Ok(Flavor::D),
            other => Err(Error::invalid(format!("unknown codec flavor '{other}'"))),
        }
    }
}

/// Flavor plus quantization step. The block size is fixed at 8.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    pub flavor: Flavor,
    pub delta: f64,
}

impl CodecConfig {
    pub fn new(flavor: Flavor, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::invalid(format!(
                "quantization step must be positive, got {delta}"
            )));
        }
        Ok(CodecConfig { flavor, delta })
    }
}

/// Encode one frame. The frame must already be padded to multiples of 8.
pub fn encode_frame(frame: &Frame, config: CodecConfig) -> Frame {
    assert!(
        frame.rows % BLOCK == 0 && frame.cols % BLOCK == 0,
        "encode_frame requires dimensions padded to multiples of {BLOCK}"
    );
    let t = config.flavor.transform();
    let weights = config.flavor.quant_weights();
    let mut steps = [0.0; BLOCK * BLOCK];
    for (s, w) in steps.iter_mut().zip(weights.iter()) {
        *s = config.delta * w;
    }

    let mut out = Frame::zeros(frame.rows, frame.cols);
    for bu in (0..frame.rows).step_by(BLOCK) {
        for bv in (0..frame.cols).step_by(BLOCK) {
            let mut block = [0.0f64; BLOCK * BLOCK];
            for u in 0..BLOCK {
                for v in 0..BLOCK {
                    block[u * BLOCK + v] = frame.at(bu + u, bv + v) as f64;
                }
            }
            let mut coef = t.forward(&block);
            for (c, s) in coef.iter_mut().zip(steps.iter()) {
                *c = (*c / s).round() * s;
            }
            let recon = t.inverse(&coef);
            for u in 0..BLOCK {
                for v in 0..BLOCK {
                    *out.at_mut(bu + u, bv + v) = recon[u * BLOCK + v].clamp(0.0, 255.0) as f32;
                }
            }
        }
    }
    out
}

/// Encode every frame of a sequence with the same configuration.
pub fn encode_sequence(seq: &VideoSequence, config: CodecConfig) -> VideoSequence {
    let frames: Vec<Frame> = seq
        .frames
        .par_iter()
        .map(|f| encode_frame(f, config))
        .collect();
    VideoSequence {
        rows: seq.rows,
        cols: seq.cols,
        fps: seq.fps,
        frames,
    }
}

/// Encode with a simulated GOP: every `period`-th frame (1-based, so frames
/// `period, 2*period, ...`) is encoded at half the quantization step,
/// reproducing the periodic coding-statistics shift of intra-coded frames.
pub fn encode_sequence_gop(
    seq: &VideoSequence,
    config: CodecConfig,
    period: Option<usize>,
) -> VideoSequence {
    let frames: Vec<Frame> = seq
        .frames
        .par_iter()
        .enumerate()
        .map(|(idx, f)| {
            let cfg = match period {
                Some(p) if p > 0 && (idx + 1) % p == 0 => CodecConfig {
                    flavor: config.flavor,
                    delta: config.delta / 2.0,
                },
                _ => config,
            };
            encode_frame(f, cfg)
        })
        .collect();
    VideoSequence {
        rows: seq.rows,
        cols: seq.cols,
        fps: seq.fps,
        frames,
    }
}

/// Quality-parameter family for the `q -> delta` mappings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QualityFamily {
    H264Like,
    MpegLike,
}

/// Map a codec quality parameter to its quantization step.
///
/// H.264-like: `delta = (5/8) * 2^(q/6)`. MPEG-like: piecewise linear over
/// four branches covering q in [1, 31].
pub fn delta_from_q(family: QualityFamily, q: u32) -> Result<f64> {
    match family {
        QualityFamily::H264Like => {
            if q < 1 {
                return Err(Error::invalid("h264-like quality parameter must be >= 1"));
            }
            Ok(5.0 / 8.0 * (q as f64 / 6.0).exp2())
        }
        QualityFamily::MpegLike => match q {
            1..=4 => Ok(8.0),
            5..=8 => Ok(2.0 * q as f64),
            9..=24 => Ok(q as f64 + 8.0),
            25..=31 => Ok(2.0 * q as f64 - 16.0),
            _ => Err(Error::invalid(format!(
                "mpeg-like quality parameter must be in [1, 31], got {q}"
            ))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::texture::{gen_texture, TextureParams};
    use crate::video::psnr;

    fn test_frame(seed: u64) -> Frame {
        let params = TextureParams::default();
        gen_texture(64, 64, 1, seed, &params).frames[0].clone()
    }

    #[test]
    fn delta_from_q_pinned_values() {
        assert_eq!(delta_from_q(QualityFamily::MpegLike, 4).unwrap(), 8.0);
        assert_eq!(delta_from_q(QualityFamily::H264Like, 6).unwrap(), 1.25);
        assert_eq!(delta_from_q(QualityFamily::MpegLike, 16).unwrap(), 24.0);
        assert_eq!(delta_from_q(QualityFamily::MpegLike, 8).unwrap(), 16.0);
        assert_eq!(delta_from_q(QualityFamily::MpegLike, 25).unwrap(), 34.0);
        assert!(delta_from_q(QualityFamily::MpegLike, 0).is_err());
        assert!(delta_from_q(QualityFamily::MpegLike, 32).is_err());
        assert!(delta_from_q(QualityFamily::H264Like, 0).is_err());
    }

    #[test]
    fn flavor_a_reconstruction_error_bounded_in_transform_domain() {
        // Moderate amplitude keeps source and reconstruction inside [0, 255];
        // the uniform-quantizer bound only holds when the clamp is inactive.
        let params = TextureParams {
            noise_amp: 25.0,
            grad_amp: 15.0,
            ..TextureParams::default()
        };
        let frame = gen_texture(64, 64, 1, 3, &params).frames[0].clone();
        let delta = 20.0;
        let enc = encode_frame(&frame, CodecConfig::new(Flavor::A, delta).unwrap());
        let t = dct8();
        for bu in (0..64).step_by(8) {
            for bv in (0..64).step_by(8) {
                let mut orig = [0.0f64; 64];
                let mut rec = [0.0f64; 64];
                for u in 0..8 {
                    for v in 0..8 {
                        orig[u * 8 + v] = frame.at(bu + u, bv + v) as f64;
                        rec[u * 8 + v] = enc.at(bu + u, bv + v) as f64;
                    }
                }
                let co = t.forward(&orig);
                let cr = t.forward(&rec);
                for i in 0..64 {
                    // f32 storage of the reconstruction adds a little noise
                    assert!(
                        (co[i] - cr[i]).abs() <= delta / 2.0 + 1e-3,
                        "coef {i}: {} vs {}",
                        co[i],
                        cr[i]
                    );
                }
            }
        }
    }

    #[test]
    fn flavor_a_coefficients_are_multiples_of_delta() {
        let frame = test_frame(4);
        let delta = 10.0;
        let enc = encode_frame(&frame, CodecConfig::new(Flavor::A, delta).unwrap());
        let t = dct8();
        let mut block = [0.0f64; 64];
        for u in 0..8 {
            for v in 0..8 {
                block[u * 8 + v] = enc.at(u, v) as f64;
            }
        }
        let coef = t.forward(&block);
        for &c in &coef {
            let frac = (c / delta - (c / delta).round()).abs();
            // f32 pixel storage perturbs the lattice slightly
            assert!(frac < 1e-4, "coefficient {c} not on the delta lattice");
        }
    }

    #[test]
    fn reencode_with_same_delta_is_stable() {
        // Mid-gray texture keeps the clamp inactive.
        let params = TextureParams {
            noise_amp: 20.0,
            grad_amp: 10.0,
            ..TextureParams::default()
        };
        let frame = gen_texture(64, 64, 1, 9, &params).frames[0].clone();
        let cfg = CodecConfig::new(Flavor::A, 12.0).unwrap();
        let once = encode_frame(&frame, cfg);
        let twice = encode_frame(&once, cfg);
        let t = dct8();
        for bu in (0..64).step_by(8) {
            for bv in (0..64).step_by(8) {
                let mut a = [0.0f64; 64];
                let mut b = [0.0f64; 64];
                for u in 0..8 {
                    for v in 0..8 {
                        a[u * 8 + v] = once.at(bu + u, bv + v) as f64;
                        b[u * 8 + v] = twice.at(bu + u, bv + v) as f64;
                    }
                }
                let ca = t.forward(&a);
                let cb = t.forward(&b);
                for i in 0..64 {
                    assert!((ca[i] - cb[i]).abs() < cfg.delta / 2.0);
                }
            }
        }
    }

    #[test]
    fn psnr_nonincreasing_in_delta() {
        for seed in [1, 2, 3] {
            let frame = test_frame(seed);
            let mut last = f64::INFINITY;
            for delta in [5.0, 10.0, 20.0, 40.0] {
                let enc = encode_frame(&frame, CodecConfig::new(Flavor::A, delta).unwrap());
                let p = psnr(&frame, &enc).unwrap();
                assert!(
                    p <= last + 1e-9,
                    "psnr increased from {last} to {p} at delta {delta}"
                );
                last = p;
            }
        }
    }

    /// Mean squared luma step across block boundaries, minus the in-block
    /// baseline, as a crude blockiness measure.
    fn boundary_energy(frame: &Frame) -> f64 {
        let mut boundary = 0.0;
        let mut nb = 0usize;
        let mut inner = 0.0;
        let mut ni = 0usize;
        for u in 0..frame.rows {
            for v in 1..frame.cols {
                let d = (frame.at(u, v) - frame.at(u, v - 1)) as f64;
                if v % 8 == 0 {
                    boundary += d * d;
                    nb += 1;
                } else {
                    inner += d * d;
                    ni += 1;
                }
            }
        }
        boundary / nb as f64 - inner / ni as f64
    }

    #[test]
    fn coarser_quantization_raises_block_boundary_energy() {
        for seed in [5, 6] {
            let frame = test_frame(seed);
            let low = encode_frame(&frame, CodecConfig::new(Flavor::A, 5.0).unwrap());
            let high = encode_frame(&frame, CodecConfig::new(Flavor::A, 40.0).unwrap());
            assert!(
                boundary_energy(&high) > boundary_energy(&low),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn gop_period_recodes_every_pth_frame_finer() {
        let params = TextureParams::default();
        let seq = gen_texture(32, 32, 6, 11, &params);
        let cfg = CodecConfig::new(Flavor::A, 40.0).unwrap();
        let plain = encode_sequence(&seq, cfg);
        let gop = encode_sequence_gop(&seq, cfg, Some(3));
        // Frames 3 and 6 (1-based) differ from the flat encode.
        for (idx, (a, b)) in plain.frames.iter().zip(&gop.frames).enumerate() {
            let same = a.data == b.data;
            if (idx + 1) % 3 == 0 {
                assert!(!same, "frame {idx} should be recoded finer");
            } else {
                assert!(same, "frame {idx} should be untouched");
            }
        }
    }

    #[test]
    fn rejects_nonpositive_delta() {
        assert!(CodecConfig::new(Flavor::A, 0.0).is_err());
        assert!(CodecConfig::new(Flavor::A, -3.0).is_err());
    }
}
