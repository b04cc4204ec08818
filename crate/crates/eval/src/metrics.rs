//! Overlap metrics on binary masks.
//!
//! Empty-mask conventions: when prediction and target are both empty the
//! frame is a perfect match (dsc 1); when exactly one is empty, dsc is 0.
//! Rates with an empty denominator (sensitivity without positives,
//! specificity without negatives) are vacuously 1.

use crate::error::{EvalError, EvalResult};
use vtu_core::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

pub(crate) fn check_same_size(a: &Mask, b: &Mask) -> EvalResult<()> {
    if a.width != b.width || a.height != b.height {
        return Err(EvalError::SizeMismatch {
            left_w: a.width,
            left_h: a.height,
            right_w: b.width,
            right_h: b.height,
        });
    }
    Ok(())
}

pub fn confusion(pred: &Mask, target: &Mask) -> EvalResult<Confusion> {
    check_same_size(pred, target)?;
    let mut c = Confusion::default();
    for (&p, &t) in pred.data.iter().zip(&target.data) {
        match (p, t) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, true) => c.false_neg += 1,
            (false, false) => c.true_neg += 1,
        }
    }
    Ok(c)
}

impl Confusion {
    /// Dice similarity coefficient, 1.0 when both masks are empty.
    pub fn dsc(&self) -> f64 {
        let denom = 2 * self.true_pos + self.false_pos + self.false_neg;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.true_pos as f64 / denom as f64
        }
    }

    /// Recall over target foreground; 1.0 when the target has no foreground.
    pub fn sensitivity(&self) -> f64 {
        let denom = self.true_pos + self.false_neg;
        if denom == 0 {
            1.0
        } else {
            self.true_pos as f64 / denom as f64
        }
    }

    /// Recall over target background; 1.0 when the target has no background.
    pub fn specificity(&self) -> f64 {
        let denom = self.true_neg + self.false_pos;
        if denom == 0 {
            1.0
        } else {
            self.true_neg as f64 / denom as f64
        }
    }
}

/// Dice coefficient straight from two masks.
pub fn dsc(pred: &Mask, target: &Mask) -> EvalResult<f64> {
    Ok(confusion(pred, target)?.dsc())
}
