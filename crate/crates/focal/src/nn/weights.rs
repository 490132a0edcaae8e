//! Binary weights file ("FOCW").
//!
//! Layout, all integers little-endian u32, all values little-endian IEEE-754
//! f32 in row-major order:
//!
//! ```text
//! "FOCW" | version | K | block count
//! per block: name length | UTF-8 name | rank | dims... | values...
//! ```
//!
//! Batch-norm running statistics are ordinary named blocks, so a file clones
//! a trained model exactly.

use super::network::CodingCnn;
use crate::error::{Error, Result};
use std::path::Path;

pub const WEIGHTS_MAGIC: &[u8; 4] = b"FOCW";
pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Debug, Clone)]
struct Block {
    name: String,
    dims: Vec<u32>,
    values: Vec<f32>,
}

fn push_block(out: &mut Vec<u8>, name: &str, dims: &[u32], values: &[f32]) {
    let expect: usize = dims.iter().map(|&d| d as usize).product();
    debug_assert_eq!(expect, values.len(), "block {name} shape mismatch");
    out.extend((name.len() as u32).to_le_bytes());
    out.extend(name.as_bytes());
    out.extend((dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend(d.to_le_bytes());
    }
    for &v in values {
        out.extend(v.to_le_bytes());
    }
}

fn model_blocks(net: &CodingCnn<f32>) -> Vec<(String, Vec<u32>, Vec<f32>)> {
    let mut blocks = Vec::new();
    blocks.push(("input.scale".into(), vec![1], vec![net.input_scale]));
    blocks.push(("input.shift".into(), vec![1], vec![net.input_shift]));
    for (idx, (conv, bn)) in net.convs.iter().enumerate() {
        let p = format!("conv{}", idx + 1);
        blocks.push((
            format!("{p}.kernel"),
            vec![
                conv.w as u32,
                conv.w as u32,
                conv.in_c as u32,
                conv.out_c as u32,
            ],
            conv.kernel.clone(),
        ));
        blocks.push((format!("{p}.bias"), vec![conv.out_c as u32], conv.bias.clone()));
        blocks.push((format!("{p}.bn.gamma"), vec![bn.c as u32], bn.gamma.clone()));
        blocks.push((format!("{p}.bn.beta"), vec![bn.c as u32], bn.beta.clone()));
        blocks.push((
            format!("{p}.bn.running_mean"),
            vec![bn.c as u32],
            bn.running_mean.clone(),
        ));
        blocks.push((
            format!("{p}.bn.running_var"),
            vec![bn.c as u32],
            bn.running_var.clone(),
        ));
    }
    blocks.push((
        "fc1.weight".into(),
        vec![net.fc1.in_dim as u32, net.fc1.out_dim as u32],
        net.fc1.weight.clone(),
    ));
    blocks.push(("fc1.bias".into(), vec![net.fc1.out_dim as u32], net.fc1.bias.clone()));
    blocks.push((
        "fc1.relu".into(),
        vec![1],
        vec![if net.fc1_relu { 1.0 } else { 0.0 }],
    ));
    blocks.push((
        "fc2.weight".into(),
        vec![net.fc2.in_dim as u32, net.fc2.out_dim as u32],
        net.fc2.weight.clone(),
    ));
    blocks.push(("fc2.bias".into(), vec![net.fc2.out_dim as u32], net.fc2.bias.clone()));
    blocks
}

/// Serialize a model to the FOCW byte layout.
pub fn weights_to_bytes(net: &CodingCnn<f32>) -> Vec<u8> {
    let blocks = model_blocks(net);
    let mut out = Vec::new();
    out.extend(WEIGHTS_MAGIC);
    out.extend(WEIGHTS_VERSION.to_le_bytes());
    out.extend((net.k as u32).to_le_bytes());
    out.extend((blocks.len() as u32).to_le_bytes());
    for (name, dims, values) in &blocks {
        push_block(&mut out, name, dims, values);
    }
    out
}

pub fn save_weights(net: &CodingCnn<f32>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, weights_to_bytes(net))?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::malformed(
                self.path,
                self.pos as u64,
                format!("truncated while reading {what}"),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

fn parse_blocks(bytes: &[u8], path: &Path) -> Result<(u32, Vec<Block>)> {
    let mut r = Reader { bytes, pos: 0, path };
    if r.take(4, "magic")? != WEIGHTS_MAGIC {
        return Err(Error::malformed(path, 0, "not a FOCW weights file"));
    }
    let version = r.u32("version")?;
    if version != WEIGHTS_VERSION {
        return Err(Error::malformed(
            path,
            4,
            format!("unsupported weights version {version}"),
        ));
    }
    let k = r.u32("class count")?;
    let n_blocks = r.u32("block count")?;
    let mut blocks = Vec::with_capacity(n_blocks as usize);
    for b in 0..n_blocks {
        let name_len = r.u32("block name length")? as usize;
        let name_at = r.pos;
        let name = std::str::from_utf8(r.take(name_len, "block name")?)
            .map_err(|_| Error::malformed(path, name_at as u64, format!("block {b}: name is not UTF-8")))?
            .to_string();
        let rank = r.u32("block rank")? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(r.u32("block dimension")?);
        }
        let count: usize = dims.iter().map(|&d| d as usize).product();
        let raw = r.take(count * 4, &format!("values of block '{name}'"))?;
        let values: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        blocks.push(Block { name, dims, values });
    }
    Ok((k, blocks))
}

fn find<'a>(blocks: &'a [Block], name: &str, path: &Path) -> Result<&'a Block> {
    blocks
        .iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::malformed(path, 0, format!("missing block '{name}'")))
}

/// Deserialize, validating shape consistency against the fixed architecture.
pub fn load_weights(path: impl AsRef<Path>) -> Result<CodingCnn<f32>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    weights_from_bytes(&bytes, path)
}

pub fn weights_from_bytes(bytes: &[u8], path: &Path) -> Result<CodingCnn<f32>> {
    let (k, blocks) = parse_blocks(bytes, path)?;
    if k < 2 {
        return Err(Error::malformed(path, 8, format!("bad class count {k}")));
    }
    let c1 = find(&blocks, "conv1.kernel", path)?;
    if c1.dims.len() != 4 {
        return Err(Error::malformed(path, 0, "conv1.kernel must be rank 4"));
    }
    let width = c1.dims[3] as usize;
    let fc1_relu = find(&blocks, "fc1.relu", path)?.values[0] != 0.0;

    let mut net = CodingCnn::<f32>::new(width, k as usize, fc1_relu, 0)
        .map_err(|e| Error::malformed(path, 0, format!("invalid architecture: {e}")))?;
    net.input_scale = find(&blocks, "input.scale", path)?.values[0];
    net.input_shift = find(&blocks, "input.shift", path)?.values[0];

    let fill = |name: &str, dst: &mut Vec<f32>| -> Result<()> {
        let b = find(&blocks, name, path)?;
        if b.values.len() != dst.len() {
            return Err(Error::malformed(
                path,
                0,
                format!(
                    "block '{name}' has {} values, architecture expects {}",
                    b.values.len(),
                    dst.len()
                ),
            ));
        }
        dst.copy_from_slice(&b.values);
        Ok(())
    };
    for idx in 0..5 {
        let p = format!("conv{}", idx + 1);
        // split borrows: fill into temporaries then move
        let mut kernel = net.convs[idx].0.kernel.clone();
        fill(&format!("{p}.kernel"), &mut kernel)?;
        net.convs[idx].0.kernel = kernel;
        let mut bias = net.convs[idx].0.bias.clone();
        fill(&format!("{p}.bias"), &mut bias)?;
        net.convs[idx].0.bias = bias;
        let mut gamma = net.convs[idx].1.gamma.clone();
        fill(&format!("{p}.bn.gamma"), &mut gamma)?;
        net.convs[idx].1.gamma = gamma;
        let mut beta = net.convs[idx].1.beta.clone();
        fill(&format!("{p}.bn.beta"), &mut beta)?;
        net.convs[idx].1.beta = beta;
        let mut rm = net.convs[idx].1.running_mean.clone();
        fill(&format!("{p}.bn.running_mean"), &mut rm)?;
        net.convs[idx].1.running_mean = rm;
        let mut rv = net.convs[idx].1.running_var.clone();
        fill(&format!("{p}.bn.running_var"), &mut rv)?;
        for (i, &v) in rv.iter().enumerate() {
            if !(v > 0.0) {
                return Err(Error::malformed(
                    path,
                    0,
                    format!("{p}.bn.running_var[{i}] = {v} is not positive"),
                ));
            }
        }
        net.convs[idx].1.running_var = rv;
    }
    let mut w = net.fc1.weight.clone();
    fill("fc1.weight", &mut w)?;
    net.fc1.weight = w;
    let mut b = net.fc1.bias.clone();
    fill("fc1.bias", &mut b)?;
    net.fc1.bias = b;
    let mut w = net.fc2.weight.clone();
    fill("fc2.weight", &mut w)?;
    net.fc2.weight = w;
    let mut b = net.fc2.bias.clone();
    fill("fc2.bias", &mut b)?;
    net.fc2.bias = b;
    Ok(net)
}
