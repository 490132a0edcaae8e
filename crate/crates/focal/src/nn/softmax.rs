//! Softmax activation and categorical cross-entropy.

use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Numerically-stable softmax of one logit row, in place.
pub fn softmax_row<T: Scalar>(row: &mut [T]) {
    let max = row
        .iter()
        .copied()
        .fold(T::from_f64(f64::NEG_INFINITY), |a, b| a.maximum(b));
    let mut sum = T::ZERO;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Cross-entropy loss of one sample and its gradient with respect to the
/// logits: `loss = -log p[label]`, `grad = p - onehot(label)`.
pub fn softmax_xent<T: Scalar>(logits: &[T], label: usize) -> Result<(T, Vec<T>)> {
    if logits.len() < 2 {
        return Err(Error::invalid("softmax needs at least two classes"));
    }
    if label >= logits.len() {
        return Err(Error::invalid(format!(
            "label {label} out of range for {} classes",
            logits.len()
        )));
    }
    let mut p = logits.to_vec();
    softmax_row(&mut p);
    // clamp away from zero so the log stays finite
    let loss = -(p[label].maximum(T::from_f64(1e-30))).ln();
    let mut grad = p;
    grad[label] -= T::ONE;
    Ok((loss, grad))
}
