//! Binary cross-entropy over probability predictions.

use crate::error::{CoreError, Result};
use crate::scalar::{s, Scalar};

/// Probabilities are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` before the log
/// so a saturated prediction cannot produce an infinite loss.
pub const BCE_CLAMP: f64 = 1e-7;

#[inline]
fn clamp_prob<T: Scalar>(p: T) -> T {
    let lo = s::<T>(BCE_CLAMP);
    let hi = T::one() - lo;
    if p < lo {
        lo
    } else if p > hi {
        hi
    } else {
        p
    }
}

/// Mean of `-[t ln p + (1-t) ln(1-p)]` over the batch.
/// Targets may be soft but must stay in `[0, 1]`.
pub fn bce_forward<T: Scalar>(pred: &[T], target: &[T]) -> Result<T> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(CoreError::input(format!(
            "bce: got {} predictions and {} targets",
            pred.len(),
            target.len()
        )));
    }
    let mut acc = T::zero();
    for (&p, &t) in pred.iter().zip(target) {
        if t < T::zero() || t > T::one() {
            return Err(CoreError::input(format!("bce: target {t} outside [0,1]")));
        }
        let p = clamp_prob(p);
        acc = acc - (t * p.ln() + (T::one() - t) * (T::one() - p).ln());
    }
    let loss = acc / s::<T>(pred.len() as f64);
    if !loss.is_finite() {
        return Err(CoreError::numeric("bce produced a non-finite loss"));
    }
    Ok(loss)
}

/// Per-element gradient `(p - t) / (p (1 - p))`, divided by the batch size
/// to pair with the mean in [`bce_forward`].
pub fn bce_backward<T: Scalar>(pred: &[T], target: &[T]) -> Vec<T> {
    let inv_n = T::one() / s::<T>(pred.len() as f64);
    pred.iter()
        .zip(target)
        .map(|(&p, &t)| {
            let p = clamp_prob(p);
            (p - t) / (p * (T::one() - p)) * inv_n
        })
        .collect()
}
