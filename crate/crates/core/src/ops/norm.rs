use crate::error::{CoreError, CoreResult};
use crate::scalar::Scalar;
use crate::tape::{Tape, VarId};
use crate::tensor::Tensor;

impl<T: Scalar> Tape<T> {
    /// Standardize each vector along the last axis to zero mean and unit
    /// variance (biased estimate), with `eps` inside the square root.
    pub fn normalize_last(&mut self, x: VarId, eps: f64) -> CoreResult<VarId> {
        let shape = self.shape(x).to_vec();
        let d = *shape.last().ok_or(CoreError::EmptyInput)?;
        let lanes = self.value(x).numel() / d;
        let eps = T::from_f64(eps);
        let xv = self.value(x).data();
        let mut data = vec![T::zero(); xv.len()];
        let mut inv_std = vec![T::zero(); lanes];
        let dn = T::from_f64(d as f64);
        for l in 0..lanes {
            let lane = &xv[l * d..(l + 1) * d];
            let mean = lane.iter().copied().sum::<T>() / dn;
            let var = lane
                .iter()
                .map(|&v| (v - mean) * (v - mean))
                .sum::<T>()
                / dn;
            let inv = T::one() / (var + eps).sqrt();
            inv_std[l] = inv;
            for (o, &v) in data[l * d..(l + 1) * d].iter_mut().zip(lane) {
                *o = (v - mean) * inv;
            }
        }
        let value = Tensor::new(shape, data).expect("same length");
        Ok(self.record(
            value,
            vec![x],
            Box::new(move |grad, out, inputs, _needs| {
                // dx = inv_std * (g - mean(g) - xhat * mean(g * xhat)) per lane.
                let xhat = out.data();
                let mut gx = Tensor::zeros(inputs[0].shape());
                for l in 0..lanes {
                    let r = l * d..(l + 1) * d;
                    let g = &grad[r.clone()];
                    let h = &xhat[r.clone()];
                    let g_mean = g.iter().copied().sum::<T>() / dn;
                    let gh_mean = g.iter().zip(h).map(|(&a, &b)| a * b).sum::<T>() / dn;
                    for ((o, &gi), &hi) in gx.data_mut()[r].iter_mut().zip(g).zip(h) {
                        *o = inv_std[l] * (gi - g_mean - hi * gh_mean);
                    }
                }
                vec![Some(gx)]
            }),
        ))
    }

    /// Layer norm over the last axis with per-feature `gain` and `bias`
    /// (shape `[D]`).
    pub fn layer_norm(
        &mut self,
        x: VarId,
        gain: VarId,
        bias: VarId,
        eps: f64,
    ) -> CoreResult<VarId> {
        let normed = self.normalize_last(x, eps)?;
        let scaled = self.mul(normed, gain)?;
        self.add(scaled, bias)
    }

    /// Group norm for a `[C,H,W]` map: channels are split into `groups`
    /// contiguous groups, each standardized over its channels and pixels,
    /// then scaled and shifted per channel (`gain`, `bias` shape `[C]`).
    pub fn group_norm(
        &mut self,
        x: VarId,
        gain: VarId,
        bias: VarId,
        groups: usize,
        eps: f64,
    ) -> CoreResult<VarId> {
        let shape = self.shape(x).to_vec();
        if shape.len() != 3 {
            return Err(CoreError::RankMismatch {
                expected: 3,
                shape,
            });
        }
        let (c, h, w) = (shape[0], shape[1], shape[2]);
        if groups == 0 {
            return Err(CoreError::NonPositive { what: "groups" });
        }
        if c % groups != 0 {
            return Err(CoreError::BadGroupCount {
                channels: c,
                groups,
            });
        }
        let grouped = self.reshape(x, &[groups, (c / groups) * h * w])?;
        let normed = self.normalize_last(grouped, eps)?;
        let restored = self.reshape(normed, &[c, h, w])?;
        let gain_c = self.reshape(gain, &[c, 1, 1])?;
        let bias_c = self.reshape(bias, &[c, 1, 1])?;
        let scaled = self.mul(restored, gain_c)?;
        self.add(scaled, bias_c)
    }
}
