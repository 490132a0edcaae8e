//! Fully-connected layer.

use super::scalar::{matmul_nn, matmul_nt, matmul_tn_acc, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Dense<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `[in_dim, out_dim]`.
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(in_dim: usize, out_dim: usize) -> Self {
        Dense {
            in_dim,
            out_dim,
            weight: vec![T::ZERO; in_dim * out_dim],
            bias: vec![T::ZERO; out_dim],
        }
    }

    fn check(&self, x: &[T], batch: usize) -> Result<()> {
        if x.len() != batch * self.in_dim {
            return Err(Error::shape(format!(
                "dense expects {} x {} input, got {} values",
                batch,
                self.in_dim,
                x.len()
            )));
        }
        Ok(())
    }

    /// `y[batch, out] = x[batch, in] . W + b`
    pub fn forward(&self, x: &[T], batch: usize) -> Result<Vec<T>> {
        self.check(x, batch)?;
        let mut y = vec![T::ZERO; batch * self.out_dim];
        matmul_nn(x, &self.weight, &mut y, batch, self.in_dim, self.out_dim);
        for row in y.chunks_exact_mut(self.out_dim) {
            for (v, &b) in row.iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(y)
    }

    /// Returns (dx, dweight, dbias).
    pub fn backward(&self, x: &[T], dy: &[T], batch: usize) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
        self.check(x, batch)?;
        if dy.len() != batch * self.out_dim {
            return Err(Error::shape(format!(
                "dense backward: upstream gradient has {} values, expected {}",
                dy.len(),
                batch * self.out_dim
            )));
        }
        let mut dw = vec![T::ZERO; self.in_dim * self.out_dim];
        matmul_tn_acc(x, dy, &mut dw, self.in_dim, batch, self.out_dim);
        let mut db = vec![T::ZERO; self.out_dim];
        for row in dy.chunks_exact(self.out_dim) {
            for (acc, &g) in db.iter_mut().zip(row) {
                *acc += g;
            }
        }
        let mut dx = vec![T::ZERO; batch * self.in_dim];
        matmul_nt(dy, &self.weight, &mut dx, batch, self.out_dim, self.in_dim);
        Ok((dx, dw, db))
    }
}
