//! YUV4MPEG2 ingestion and export, luma plane only.
//!
//! The reader accepts 4:2:0 and 4:4:4 planar files, extracts the Y plane and
//! discards chroma. The writer emits C420jpeg with neutral chroma.

use crate::error::{Error, Result};
use crate::video::{Frame, VideoSequence};
use std::fs;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ChromaMode {
    C420,
    C444,
}

impl ChromaMode {
    fn plane_bytes(self, rows: usize, cols: usize) -> usize {
        match self {
            // 4:2:0 chroma planes are quarter size; odd dims round up as per
            // the (cols+1)/2 convention, though block-padded video is even.
            ChromaMode::C420 => 2 * (rows.div_ceil(2) * cols.div_ceil(2)),
            ChromaMode::C444 => 2 * rows * cols,
        }
    }
}

/// Load the luma plane of every frame of a YUV4MPEG2 file.
pub fn load_y4m(path: impl AsRef<Path>) -> Result<VideoSequence> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    parse_y4m(&bytes, path)
}

fn parse_y4m(bytes: &[u8], path: &Path) -> Result<VideoSequence> {
    let header_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::malformed(path, 0, "missing stream-header newline"))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| Error::malformed(path, 0, "stream header is not UTF-8"))?;

    let mut tokens = header.split(' ');
    if tokens.next() != Some("YUV4MPEG2") {
        return Err(Error::malformed(path, 0, "missing YUV4MPEG2 magic"));
    }

    let mut cols = None;
    let mut rows = None;
    let mut fps = (30u32, 1u32);
    let mut chroma = ChromaMode::C420;
    for tok in tokens {
        if tok.is_empty() {
            continue;
        }
        let (tag, val) = tok.split_at(1);
        match tag {
            "W" => {
                cols = Some(val.parse::<usize>().map_err(|_| {
                    Error::malformed(path, 0, format!("bad width token '{tok}'"))
                })?)
            }
            "H" => {
                rows = Some(val.parse::<usize>().map_err(|_| {
                    Error::malformed(path, 0, format!("bad height token '{tok}'"))
                })?)
            }
            "F" => {
                let (n, d) = val
                    .split_once(':')
                    .ok_or_else(|| Error::malformed(path, 0, format!("bad rate token '{tok}'")))?;
                fps = (
                    n.parse()
                        .map_err(|_| Error::malformed(path, 0, format!("bad rate token '{tok}'")))?,
                    d.parse()
                        .map_err(|_| Error::malformed(path, 0, format!("bad rate token '{tok}'")))?,
                );
            }
            "C" => {
                chroma = match val {
                    "420" | "420jpeg" | "420mpeg2" | "420paldv" => ChromaMode::C420,
                    "444" => ChromaMode::C444,
                    other => {
                        return Err(Error::malformed(
                            path,
                            0,
                            format!("unsupported chroma mode C{other}; need 4:2:0 or 4:4:4"),
                        ))
                    }
                }
            }
            // Interlacing and aspect tags do not affect luma extraction.
            _ => {}
        }
    }
    let cols = cols.ok_or_else(|| Error::malformed(path, 0, "header lacks W tag"))?;
    let rows = rows.ok_or_else(|| Error::malformed(path, 0, "header lacks H tag"))?;
    if rows == 0 || cols == 0 {
        return Err(Error::malformed(path, 0, "zero frame dimension"));
    }

    let luma_bytes = rows * cols;
    let chroma_bytes = chroma.plane_bytes(rows, cols);
    let mut frames = Vec::new();
    let mut pos = header_end + 1;
    while pos < bytes.len() {
        let frame_index = frames.len();
        let line_end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| {
                Error::malformed(
                    path,
                    pos as u64,
                    format!("frame {frame_index}: unterminated FRAME marker"),
                )
            })?;
        let marker = &bytes[pos..pos + line_end];
        if !marker.starts_with(b"FRAME") {
            return Err(Error::malformed(
                path,
                pos as u64,
                format!("frame {frame_index}: expected FRAME marker"),
            ));
        }
        pos += line_end + 1;
        if pos + luma_bytes + chroma_bytes > bytes.len() {
            return Err(Error::malformed(
                path,
                pos as u64,
                format!(
                    "truncated payload for frame {frame_index}: need {} bytes, {} remain",
                    luma_bytes + chroma_bytes,
                    bytes.len() - pos
                ),
            ));
        }
        let data: Vec<f32> = bytes[pos..pos + luma_bytes]
            .iter()
            .map(|&b| b as f32)
            .collect();
        frames.push(Frame { rows, cols, data });
        pos += luma_bytes + chroma_bytes;
    }
    if frames.is_empty() {
        return Err(Error::malformed(path, pos as u64, "file contains no frames"));
    }
    VideoSequence::new(frames, fps)
}

/// Write a sequence as YUV4MPEG2 C420jpeg. Luma is rounded and clamped to
/// 8 bits; chroma planes are neutral gray.
pub fn write_y4m(seq: &VideoSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(seq.len() * seq.rows * seq.cols * 3 / 2 + 64);
    write!(
        out,
        "YUV4MPEG2 W{} H{} F{}:{} Ip A1:1 C420jpeg\n",
        seq.cols, seq.rows, seq.fps.0, seq.fps.1
    )?;
    let chroma_len = ChromaMode::C420.plane_bytes(seq.rows, seq.cols);
    for frame in &seq.frames {
        out.extend_from_slice(b"FRAME\n");
        out.extend(
            frame
                .data
                .iter()
                .map(|&x| x.round().clamp(0.0, 255.0) as u8),
        );
        out.extend(std::iter::repeat(128u8).take(chroma_len));
    }
    fs::write(path, out)?;
    Ok(())
}
