//! Softmax output and the two-term cross-entropy loss.
//!
//! Per sample, with softmax outputs `y` and one-hot target `t`:
//!
//! ```text
//! E_n = -sum_k ( t_k ln y_k + (1 - t_k) ln(1 - y_k) )
//! ```
//!
//! A mini-batch loss is the mean of `E_n` over the batch.

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Probabilities are clamped into `[CLAMP, 1 - CLAMP]` before logs.
pub const CLAMP: f64 = 1e-12;

/// Row-wise softmax of a `[rows x k]` buffer, max-subtracted.
pub(crate) fn softmax_rows<T: Scalar>(logits: &[T], k: usize, out: &mut [T]) {
    for (u, y) in logits.chunks_exact(k).zip(out.chunks_exact_mut(k)) {
        let m = u.iter().copied().fold(u[0], T::max);
        let mut z = T::ZERO;
        for (yi, ui) in y.iter_mut().zip(u) {
            *yi = (*ui - m).exp();
            z += *yi;
        }
        for yi in y.iter_mut() {
            *yi = *yi / z;
        }
    }
}

pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Tensor<T> {
    let k = logits.len();
    let mut out = vec![T::ZERO; k];
    if k > 0 {
        softmax_rows(logits.data(), k, &mut out);
    }
    Tensor::new(logits.shape().to_vec(), out).expect("softmax output is finite")
}

// Done in binary64: in binary32, 1 - CLAMP rounds to 1.
fn clamp(y: f64) -> f64 {
    y.clamp(CLAMP, 1.0 - CLAMP)
}

/// Loss of one sample. Fails on mismatched lengths or probabilities
/// outside `[0, 1]`.
pub fn cross_entropy<T: Scalar>(y: &[T], t: &[T]) -> Result<f64> {
    if y.len() != t.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: t.len(),
        });
    }
    if y.iter().any(|v| !(*v >= T::ZERO && *v <= T::ONE)) {
        return Err(Error::Config("probability outside [0, 1]".into()));
    }
    Ok(sample_loss(y, t))
}

pub(crate) fn sample_loss<T: Scalar>(y: &[T], t: &[T]) -> f64 {
    y.iter()
        .zip(t)
        .map(|(&y, &t)| {
            let y = clamp(y.to_f64());
            let t = t.to_f64();
            -(t * y.ln() + (1.0 - t) * (1.0 - y).ln())
        })
        .sum()
}

/// Mean loss over a `[batch x k]` buffer pair.
pub(crate) fn batch_loss<T: Scalar>(y: &[T], t: &[T], k: usize) -> f64 {
    let batch = y.len() / k;
    let total: f64 = y
        .chunks_exact(k)
        .zip(t.chunks_exact(k))
        .map(|(y, t)| sample_loss(y, t))
        .sum();
    total / batch as f64
}

/// Gradient of the mean batch loss with respect to the softmax inputs.
pub(crate) fn loss_grad<T: Scalar>(y: &[T], t: &[T], k: usize, out: &mut [T]) {
    let batch = (y.len() / k) as f64;
    let mut g = vec![0.0; k];
    for ((yr, tr), dr) in y
        .chunks_exact(k)
        .zip(t.chunks_exact(k))
        .zip(out.chunks_exact_mut(k))
    {
        // dE/dy_k, evaluated at the clamped probabilities
        for i in 0..k {
            let yc = clamp(yr[i].to_f64());
            let t = tr[i].to_f64();
            g[i] = -t / yc + (1.0 - t) / (1.0 - yc);
        }
        let dot: f64 = (0..k).map(|i| g[i] * yr[i].to_f64()).sum();
        for j in 0..k {
            dr[j] = T::from_f64(yr[j].to_f64() * (g[j] - dot) / batch);
        }
    }
}
