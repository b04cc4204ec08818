//! Training objective: binary cross-entropy, Dice, and a distance-weighted
//! boundary surrogate, mixed per head and averaged over the two heads.

use crate::error::{ModelError, ModelResult};
use vtu_core::edt::squared_edt;
use vtu_core::{CoreResult, Scalar, Tape, Tensor, VarId};

pub const BCE_EPS: f64 = 1e-7;
pub const DICE_SMOOTH: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub bce: f64,
    pub dice: f64,
    pub hd: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            bce: 1.0 / 3.0,
            dice: 1.0 / 3.0,
            hd: 1.0 / 3.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> ModelResult<()> {
        let parts = [self.bce, self.dice, self.hd];
        if parts.iter().any(|&w| w < 0.0) {
            return Err(ModelError::BadConfig {
                detail: "loss weights must be nonnegative".into(),
            });
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ModelError::BadConfig {
                detail: format!("loss weights sum to {sum}, expected 1"),
            });
        }
        Ok(())
    }
}

/// Mean of `-[y ln p + (1 - y) ln(1 - p)]` with `p` clamped away from 0/1.
pub fn bce_loss<T: Scalar>(tape: &mut Tape<T>, pred: VarId, target: VarId) -> CoreResult<VarId> {
    let p = tape.clamp(pred, BCE_EPS, 1.0 - BCE_EPS);
    let ln_p = tape.ln(p);
    let pos = tape.mul(target, ln_p)?;
    let one_minus_p = tape.affine(p, -1.0, 1.0);
    let ln_q = tape.ln(one_minus_p);
    let one_minus_y = tape.affine(target, -1.0, 1.0);
    let neg = tape.mul(one_minus_y, ln_q)?;
    let sum = tape.add(pos, neg)?;
    let mean = tape.mean_all(sum)?;
    Ok(tape.affine(mean, -1.0, 0.0))
}

/// `1 - (2 * sum(p * y) + smooth) / (sum(p) + sum(y) + smooth)`.
pub fn dice_loss<T: Scalar>(
    tape: &mut Tape<T>,
    pred: VarId,
    target: VarId,
    smooth: f64,
) -> CoreResult<VarId> {
    let py = tape.mul(pred, target)?;
    let inter = tape.sum_all(py)?;
    let num = tape.affine(inter, 2.0, smooth);
    let sp = tape.sum_all(pred)?;
    let sy = tape.sum_all(target)?;
    let d = tape.add(sp, sy)?;
    let den = tape.affine(d, 1.0, smooth);
    let ratio = tape.div(num, den)?;
    Ok(tape.affine(ratio, -1.0, 1.0))
}

/// Per-pixel weights for the boundary surrogate: squared distance to the
/// target's foreground plus squared distance to the complement of the
/// thresholded prediction. Computed outside the graph and held constant.
pub fn hd_weight_map<T: Scalar>(
    pred: &Tensor<T>,
    target: &Tensor<T>,
    thresh: f64,
) -> Tensor<T> {
    let shape = pred.shape();
    let (h, w) = (shape[0], shape[1]);
    let target_fg: Vec<bool> = target.data().iter().map(|v| v.to_f64() > 0.5).collect();
    let pred_bg: Vec<bool> = pred.data().iter().map(|v| v.to_f64() <= thresh).collect();
    let dt_target = squared_edt(&target_fg, h, w);
    let dt_pred_bg = squared_edt(&pred_bg, h, w);
    Tensor::from_fn(shape, |i| T::from_f64(dt_target[i] + dt_pred_bg[i]))
}

/// Mean of `(p - y)^2 * weight`, with the weight map a frozen constant.
pub fn hausdorff_dt_loss<T: Scalar>(
    tape: &mut Tape<T>,
    pred: VarId,
    target: VarId,
    weights: VarId,
) -> CoreResult<VarId> {
    let diff = tape.sub(pred, target)?;
    let sq = tape.mul(diff, diff)?;
    let weighted = tape.mul(sq, weights)?;
    tape.mean_all(weighted)
}

/// Boundary surrogate with weights taken from the current prediction values.
pub fn hausdorff_dt_loss_auto<T: Scalar>(
    tape: &mut Tape<T>,
    pred: VarId,
    target: VarId,
) -> CoreResult<VarId> {
    let w = hd_weight_map(tape.value(pred), tape.value(target), 0.5);
    let w = tape.constant(w);
    hausdorff_dt_loss(tape, pred, target, w)
}

/// Weighted mixture of the three terms for one head.
pub fn head_loss<T: Scalar>(
    tape: &mut Tape<T>,
    pred: VarId,
    target: VarId,
    weights: &LossWeights,
) -> CoreResult<VarId> {
    let b = bce_loss(tape, pred, target)?;
    let d = dice_loss(tape, pred, target, DICE_SMOOTH)?;
    let h = hausdorff_dt_loss_auto(tape, pred, target)?;
    let wb = tape.affine(b, weights.bce, 0.0);
    let wd = tape.affine(d, weights.dice, 0.0);
    let wh = tape.affine(h, weights.hd, 0.0);
    let s = tape.add(wb, wd)?;
    tape.add(s, wh)
}

/// Average of the two head mixtures.
pub fn mixture_loss<T: Scalar>(
    tape: &mut Tape<T>,
    preds: (VarId, VarId),
    targets: (VarId, VarId),
    weights: &LossWeights,
) -> CoreResult<VarId> {
    let a = head_loss(tape, preds.0, targets.0, weights)?;
    let b = head_loss(tape, preds.1, targets.1, weights)?;
    let s = tape.add(a, b)?;
    Ok(tape.affine(s, 0.5, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_of<T: Scalar>(tape: &Tape<T>, id: VarId) -> f64 {
        tape.value(id).data()[0].to_f64()
    }

    #[test]
    fn bce_closed_forms() {
        let mut tape: Tape<f64> = Tape::new();
        let y = tape.constant(Tensor::new(vec![2, 2], vec![1.0, 0.0, 1.0, 0.0]).unwrap());
        let perfect = tape.constant(Tensor::new(vec![2, 2], vec![1.0, 0.0, 1.0, 0.0]).unwrap());
        let loss = bce_loss(&mut tape, perfect, y).unwrap();
        assert!(scalar_of(&tape, loss) < 1e-6);

        let half = tape.constant(Tensor::full(&[2, 2], 0.5f64));
        let loss = bce_loss(&mut tape, half, y).unwrap();
        assert!((scalar_of(&tape, loss) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn dice_closed_forms() {
        let mut tape: Tape<f64> = Tape::new();
        let ones = tape.constant(Tensor::full(&[4, 4], 1.0f64));
        let zeros = tape.constant(Tensor::zeros(&[4, 4]));
        let loss = dice_loss(&mut tape, ones, ones, DICE_SMOOTH).unwrap();
        assert_eq!(scalar_of(&tape, loss), 0.0, "16 pixels: 33/33 exactly");
        let loss = dice_loss(&mut tape, ones, zeros, DICE_SMOOTH).unwrap();
        assert!((scalar_of(&tape, loss) - (1.0 - 1.0 / 17.0)).abs() < 1e-12);
    }

    #[test]
    fn boundary_surrogate_is_zero_on_binary_match() {
        let mut tape: Tape<f64> = Tape::new();
        let t = Tensor::from_fn(&[6, 6], |i| if i % 5 == 0 { 1.0 } else { 0.0 });
        let y = tape.constant(t.clone());
        let p = tape.constant(t);
        let loss = hausdorff_dt_loss_auto(&mut tape, p, y).unwrap();
        assert_eq!(scalar_of(&tape, loss), 0.0);
    }

    #[test]
    fn lone_wrong_pixel_is_weighted_by_squared_distance() {
        // Target occupies column 0; a false positive at (row 2, col 4) sits
        // at squared distance 16 from the target. The predicted foreground
        // there is one step from the nearest predicted-background pixel, so
        // the complement term adds 1: weight 17, and only that pixel errs.
        let mut tape: Tape<f64> = Tape::new();
        let target = Tensor::from_fn(&[5, 5], |i| if i % 5 == 0 { 1.0 } else { 0.0 });
        let mut pred_vals = target.clone();
        pred_vals.data_mut()[2 * 5 + 4] = 1.0;
        let y = tape.constant(target.clone());
        let p = tape.constant(pred_vals.clone());
        let w = hd_weight_map(&pred_vals, &target, 0.5);
        assert_eq!(w.data()[2 * 5 + 4], 17.0);
        let loss = hausdorff_dt_loss_auto(&mut tape, p, y).unwrap();
        assert!((scalar_of(&tape, loss) - 17.0 / 25.0).abs() < 1e-12);
    }

    #[test]
    fn empty_target_keeps_losses_finite() {
        let mut tape: Tape<f64> = Tape::new();
        let y = tape.constant(Tensor::zeros(&[4, 4]));
        let p = tape.constant(Tensor::full(&[4, 4], 0.3f64));
        let w = LossWeights::default();
        let loss = head_loss(&mut tape, p, y, &w).unwrap();
        let v = scalar_of(&tape, loss);
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn mixture_is_mean_of_heads() {
        let mut tape: Tape<f64> = Tape::new();
        let yb = tape.constant(Tensor::from_fn(&[4, 4], |i| f64::from(i % 2 == 0)));
        let yp = tape.constant(Tensor::from_fn(&[4, 4], |i| f64::from(i % 3 == 0)));
        let pb = tape.constant(Tensor::full(&[4, 4], 0.7f64));
        let pp = tape.constant(Tensor::full(&[4, 4], 0.2f64));
        let w = LossWeights::default();
        let hb = head_loss(&mut tape, pb, yb, &w).unwrap();
        let hp = head_loss(&mut tape, pp, yp, &w).unwrap();
        let mix = mixture_loss(&mut tape, (pb, pp), (yb, yp), &w).unwrap();
        let expect = 0.5 * (scalar_of(&tape, hb) + scalar_of(&tape, hp));
        assert!((scalar_of(&tape, mix) - expect).abs() < 1e-12);
    }

    #[test]
    fn weight_validation() {
        assert!(LossWeights::default().validate().is_ok());
        assert!(LossWeights { bce: 0.5, dice: 0.5, hd: 0.1 }.validate().is_err());
        assert!(LossWeights { bce: -0.5, dice: 1.0, hd: 0.5 }.validate().is_err());
    }
}
