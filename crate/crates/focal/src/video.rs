//! Video sequences of luma frames.
//!
//! A frame is a `rows x cols` matrix of luma samples in 8-bit range but stored
//! as real values: decoded output of the block codec is kept unrounded, so
//! quantization traces survive exactly. `rows` is the U dimension and `cols`
//! the V dimension of a `U x V` frame.

use crate::error::{Error, Result};

/// Single luma frame, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl Frame {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "frame data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Frame { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Frame {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> f32 {
        self.data[u * self.cols + v]
    }

    #[inline]
    pub fn at_mut(&mut self, u: usize, v: usize) -> &mut f32 {
        &mut self.data[u * self.cols + v]
    }

    /// Round to the nearest integer and clamp to [0, 255], the 8-bit storage
    /// form used for file output and dataset materialization.
    pub fn quantize_u8(&self) -> Frame {
        Frame {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|&x| x.round().clamp(0.0, 255.0))
                .collect(),
        }
    }

    /// Edge-replicate to the next multiples of `block` in both dimensions.
    pub fn pad_to_multiple(&self, block: usize) -> Frame {
        let rows = self.rows.div_ceil(block) * block;
        let cols = self.cols.div_ceil(block) * block;
        if rows == self.rows && cols == self.cols {
            return self.clone();
        }
        let mut data = vec![0.0; rows * cols];
        for u in 0..rows {
            let su = u.min(self.rows - 1);
            for v in 0..cols {
                let sv = v.min(self.cols - 1);
                data[u * cols + v] = self.at(su, sv);
            }
        }
        Frame { rows, cols, data }
    }
}

/// Ordered luma frames with shared dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoSequence {
    pub rows: usize,
    pub cols: usize,
    /// Frame rate as (numerator, denominator).
    pub fps: (u32, u32),
    pub frames: Vec<Frame>,
}

impl VideoSequence {
    pub fn new(frames: Vec<Frame>, fps: (u32, u32)) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::invalid("video sequence needs at least one frame"))?;
        let (rows, cols) = (first.rows, first.cols);
        for (n, f) in frames.iter().enumerate() {
            if f.rows != rows || f.cols != cols {
                return Err(Error::shape(format!(
                    "frame {n} is {}x{}, expected {}x{}",
                    f.rows, f.cols, rows, cols
                )));
            }
        }
        Ok(VideoSequence {
            rows,
            cols,
            fps,
            frames,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Dimensions match, so the two sequences can be spliced.
    pub fn spliceable_with(&self, other: &VideoSequence) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn quantize_u8(&self) -> VideoSequence {
        VideoSequence {
            rows: self.rows,
            cols: self.cols,
            fps: self.fps,
            frames: self.frames.iter().map(Frame::quantize_u8).collect(),
        }
    }

    pub fn pad_to_multiple(&self, block: usize) -> VideoSequence {
        let frames: Vec<Frame> = self
            .frames
            .iter()
            .map(|f| f.pad_to_multiple(block))
            .collect();
        VideoSequence {
            rows: frames[0].rows,
            cols: frames[0].cols,
            fps: self.fps,
            frames,
        }
    }
}

/// Peak signal-to-noise ratio in dB against a 255 peak. Infinite for
/// identical frames.
pub fn psnr(a: &Frame, b: &Frame) -> Result<f64> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::shape("psnr: frame dimensions differ".to_string()));
    }
    let mse: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| {
            let d = (x - y) as f64;
            d * d
        })
        .sum::<f64>()
        / (a.rows * a.cols) as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_shape_checked() {
        assert!(Frame::new(8, 8, vec![0.0; 64]).is_ok());
        assert!(Frame::new(8, 8, vec![0.0; 63]).is_err());
    }

    #[test]
    fn sequence_rejects_mixed_dims() {
        let a = Frame::zeros(8, 8);
        let b = Frame::zeros(8, 16);
        assert!(VideoSequence::new(vec![a.clone(), b], (30, 1)).is_err());
        assert!(VideoSequence::new(vec![a], (30, 1)).is_ok());
        assert!(VideoSequence::new(vec![], (30, 1)).is_err());
    }

    #[test]
    fn padding_replicates_edges() {
        let f = Frame::new(3, 5, (0..15).map(|x| x as f32).collect()).unwrap();
        let p = f.pad_to_multiple(8);
        assert_eq!((p.rows, p.cols), (8, 8));
        assert_eq!(p.at(0, 0), f.at(0, 0));
        assert_eq!(p.at(7, 7), f.at(2, 4));
        assert_eq!(p.at(2, 6), f.at(2, 4));
    }

    #[test]
    fn quantize_rounds_and_clamps() {
        let f = Frame::new(1, 4, vec![-3.0, 12.4, 12.6, 300.0]).unwrap();
        assert_eq!(f.quantize_u8().data, vec![0.0, 12.0, 13.0, 255.0]);
    }

    #[test]
    fn psnr_identical_is_infinite_and_noise_is_finite() {
        let a = Frame::zeros(8, 8);
        assert!(psnr(&a, &a).unwrap().is_infinite());
        let mut b = a.clone();
        b.data[0] = 10.0;
        let p = psnr(&a, &b).unwrap();
        assert!(p.is_finite() && p > 0.0);
    }
}
