//! 8x8 block transforms used by the synthetic codec flavors.
//!
//! All three bases are orthonormal, so the inverse of `C = T X T'` is
//! `X = T' C T`. Computation is in f64; pixel buffers are converted at the
//! block boundary.

use std::sync::OnceLock;

pub const BLOCK: usize = 8;
const N: usize = BLOCK;

/// Row-major 8x8 transform matrix together with its label.
#[derive(Debug, Clone)]
pub struct Transform8 {
    pub rows: [[f64; N]; N],
}

impl Transform8 {
    /// C = T X T'
    pub fn forward(&self, block: &[f64; N * N]) -> [f64; N * N] {
        let tx = mul_t_x(&self.rows, block);
        mul_x_tt(&tx, &self.rows)
    }

    /// X = T' C T
    pub fn inverse(&self, coef: &[f64; N * N]) -> [f64; N * N] {
        let tx = mul_tt_x(&self.rows, coef);
        mul_x_t(&tx, &self.rows)
    }
}

fn mul_t_x(t: &[[f64; N]; N], x: &[f64; N * N]) -> [f64; N * N] {
    let mut out = [0.0; N * N];
    for i in 0..N {
        for j in 0..N {
            let mut acc = 0.0;
            for k in 0..N {
                acc += t[i][k] * x[k * N + j];
            }
            out[i * N + j] = acc;
        }
    }
    out
}

fn mul_tt_x(t: &[[f64; N]; N], x: &[f64; N * N]) -> [f64; N * N] {
    let mut out = [0.0; N * N];
    for i in 0..N {
        for j in 0..N {
            let mut acc = 0.0;
            for k in 0..N {
                acc += t[k][i] * x[k * N + j];
            }
            out[i * N + j] = acc;
        }
    }
    out
}

fn mul_x_tt(x: &[f64; N * N], t: &[[f64; N]; N]) -> [f64; N * N] {
    let mut out = [0.0; N * N];
    for i in 0..N {
        for j in 0..N {
            let mut acc = 0.0;
            for k in 0..N {
                acc += x[i * N + k] * t[j][k];
            }
            out[i * N + j] = acc;
        }
    }
    out
}

fn mul_x_t(x: &[f64; N * N], t: &[[f64; N]; N]) -> [f64; N * N] {
    let mut out = [0.0; N * N];
    for i in 0..N {
        for j in 0..N {
            let mut acc = 0.0;
            for k in 0..N {
                acc += x[i * N + k] * t[k][j];
            }
            out[i * N + j] = acc;
        }
    }
    out
}

fn dct_rows() -> [[f64; N]; N] {
    let mut rows = [[0.0; N]; N];
    for (u, row) in rows.iter_mut().enumerate() {
        let a = if u == 0 {
            (1.0 / N as f64).sqrt()
        } else {
            (2.0 / N as f64).sqrt()
        };
        for (i, cell) in row.iter_mut().enumerate() {
            *cell = a * ((2 * i + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0).cos();
        }
    }
    rows
}

/// Orthonormal 2-D DCT-II basis.
pub fn dct8() -> &'static Transform8 {
    static T: OnceLock<Transform8> = OnceLock::new();
    T.get_or_init(|| Transform8 { rows: dct_rows() })
}

/// Integer-approximated DCT: each DCT row is rounded to quarter precision
/// (`round(4 m) / 4`) and the result re-orthonormalized by Gram-Schmidt in
/// row order. The basis stays exactly orthonormal but its directions differ
/// from the exact DCT by several degrees, giving the flavor a distinct
/// quantization lattice.
pub fn intdct8() -> &'static Transform8 {
    static T: OnceLock<Transform8> = OnceLock::new();
    T.get_or_init(|| {
        let exact = dct_rows();
        let mut rows = [[0.0; N]; N];
        for u in 0..N {
            for i in 0..N {
                rows[u][i] = (4.0 * exact[u][i]).round();
            }
        }
        for u in 0..N {
            for prev in 0..u {
                let dot: f64 = (0..N).map(|i| rows[u][i] * rows[prev][i]).sum();
                for i in 0..N {
                    rows[u][i] -= dot * rows[prev][i];
                }
            }
            let norm: f64 = (0..N).map(|i| rows[u][i] * rows[u][i]).sum::<f64>().sqrt();
            assert!(norm > 1e-9, "rounded DCT rows became linearly dependent");
            for i in 0..N {
                rows[u][i] /= norm;
            }
        }
        Transform8 { rows }
    })
}

/// Orthonormal Walsh-Hadamard basis in natural (Sylvester) order.
pub fn hadamard8() -> &'static Transform8 {
    static T: OnceLock<Transform8> = OnceLock::new();
    T.get_or_init(|| {
        let mut rows = [[0.0; N]; N];
        let scale = 1.0 / (N as f64).sqrt();
        for u in 0..N {
            for i in 0..N {
                let sign = (u & i).count_ones() % 2;
                rows[u][i] = if sign == 0 { scale } else { -scale };
            }
        }
        Transform8 { rows }
    })
}
