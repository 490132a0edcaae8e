//! Receptive-field arithmetic for the convolutional chain.
//!
//! Each layer maps the geometry tuple (m, j, r, c) of its input to that of
//! its output:
//!
//! ```text
//! m_out = floor((m_in + 2z - w) / s) + 1      feature count
//! j_out = j_in * s                            jump factor
//! r_out = r_in + (w - 1) * j_in               receptive-field size
//! c_out = c_in + ((w - 1)/2 - z) * j_in       first-feature center
//! ```
//!
//! seeded with (input_side, 1, 1, 0.5). This is what anchors the network's
//! features to the corners of the 8x8 coding-block grid.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerKind {
    Conv,
    FullyConnected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    BatchNormRelu,
    Identity,
    Softmax,
}

/// One row of the architecture table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    /// Kernel count for conv layers, unit count for fully-connected ones.
    pub kernels: usize,
    /// Kernel side length w (conv only).
    pub kernel_size: usize,
    /// Stride s (conv only).
    pub stride: usize,
    /// Padding z (conv only).
    pub padding: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn conv(kernels: usize, kernel_size: usize, stride: usize, padding: usize) -> Self {
        LayerSpec {
            kind: LayerKind::Conv,
            kernels,
            kernel_size,
            stride,
            padding,
            activation: Activation::BatchNormRelu,
        }
    }

    pub fn fully_connected(units: usize, activation: Activation) -> Self {
        LayerSpec {
            kind: LayerKind::FullyConnected,
            kernels: units,
            kernel_size: 0,
            stride: 0,
            padding: 0,
            activation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernels < 1 {
            return Err(Error::invalid("layer needs at least one kernel"));
        }
        if self.kind == LayerKind::Conv && (self.kernel_size < 1 || self.stride < 1) {
            return Err(Error::invalid(
                "conv layer needs kernel size >= 1 and stride >= 1",
            ));
        }
        Ok(())
    }
}

/// Receptive-field tuple of one layer's output feature map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerGeom {
    /// Output feature-map side length.
    pub m: usize,
    /// Jump factor in pixels.
    pub j: usize,
    /// Receptive-field size in pixels.
    pub r: usize,
    /// Center of the first feature's receptive field in pixels.
    pub c: f64,
}

/// Input-layer seed tuple: (input_side, 1, 1, 0.5).
pub fn input_geom(input_side: usize) -> LayerGeom {
    LayerGeom {
        m: input_side,
        j: 1,
        r: 1,
        c: 0.5,
    }
}

/// Run the four recurrences over a conv chain, returning one tuple per layer.
pub fn rf_chain(specs: &[LayerSpec], input_side: usize) -> Result<Vec<LayerGeom>> {
    let mut geom = input_geom(input_side);
    let mut out = Vec::with_capacity(specs.len());
    for (idx, spec) in specs.iter().enumerate() {
        spec.validate()?;
        if spec.kind != LayerKind::Conv {
            return Err(Error::invalid(format!(
                "rf_chain: layer {idx} is not a spatial (conv) layer"
            )));
        }
        let extended = geom.m + 2 * spec.padding;
        if extended < spec.kernel_size {
            return Err(Error::invalid(format!(
                "layer {idx}: kernel {} does not fit input side {} with padding {}",
                spec.kernel_size, geom.m, spec.padding
            )));
        }
        let m = (extended - spec.kernel_size) / spec.stride + 1;
        if m < 1 {
            return Err(Error::invalid(format!(
                "layer {idx}: chain collapses to zero features"
            )));
        }
        geom = LayerGeom {
            m,
            j: geom.j * spec.stride,
            r: geom.r + (spec.kernel_size - 1) * geom.j,
            c: geom.c + ((spec.kernel_size as f64 - 1.0) / 2.0 - spec.padding as f64) * geom.j as f64,
        };
        out.push(geom);
    }
    Ok(out)
}

/// The five convolutional rows of the fixed architecture, at a given channel
/// width. Geometry (w, s, z) never scales; only kernel counts do.
pub fn table1_conv_specs(width: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::conv(width, 4, 1, 0),
        LayerSpec::conv(width, 3, 2, 0),
        LayerSpec::conv(width, 4, 1, 0),
        LayerSpec::conv(width, 3, 2, 0),
        LayerSpec::conv(width, 3, 2, 1),
    ]
}

/// The full architecture: five conv rows, FC-1 (identity by default), FC-2
/// with softmax over `k` classes.
pub fn table1_specs(width: usize, k: usize, fc1_relu: bool) -> Vec<LayerSpec> {
    let mut specs = table1_conv_specs(width);
    specs.push(LayerSpec::fully_connected(
        width,
        if fc1_relu {
            Activation::BatchNormRelu
        } else {
            Activation::Identity
        },
    ));
    specs.push(LayerSpec::fully_connected(k, Activation::Softmax));
    specs
}

/// Expected geometry of the published architecture on 64-pixel input,
/// including the input layer: the six tuples this build must reproduce.
pub const TABLE1_EXPECTED_GEOMETRY: [(usize, usize, usize, f64); 6] = [
    (64, 1, 1, 0.5),
    (61, 1, 4, 2.0),
    (30, 2, 6, 3.0),
    (27, 2, 12, 6.0),
    (13, 4, 16, 8.0),
    (7, 8, 24, 8.0),
];
