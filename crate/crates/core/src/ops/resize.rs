use crate::error::{CoreError, CoreResult};
use crate::scalar::Scalar;
use crate::tape::{Tape, VarId};
use crate::tensor::Tensor;

/// Source taps and weight for one output coordinate under half-pixel-centered
/// bilinear scaling: `src = (dst + 0.5) / factor - 0.5`, clamped to the image.
fn taps(out: usize, len: usize, factor: usize) -> Vec<(usize, usize, f64)> {
    (0..out)
        .map(|d| {
            let src = (d as f64 + 0.5) / factor as f64 - 0.5;
            let src = src.clamp(0.0, (len - 1) as f64);
            let lo = src.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            (lo, hi, src - lo as f64)
        })
        .collect()
}

impl<T: Scalar> Tape<T> {
    /// Bilinear upsampling of `[C,H,W]` by an integer factor. Interpolation
    /// weights sum to one, so constant maps stay constant.
    pub fn upsample_bilinear(&mut self, x: VarId, factor: usize) -> CoreResult<VarId> {
        if factor == 0 {
            return Err(CoreError::NonPositive { what: "factor" });
        }
        let shape = self.shape(x).to_vec();
        if shape.len() != 3 {
            return Err(CoreError::RankMismatch {
                expected: 3,
                shape,
            });
        }
        let (c, h, w) = (shape[0], shape[1], shape[2]);
        let (h_out, w_out) = (h * factor, w * factor);
        let ty = taps(h_out, h, factor);
        let tx = taps(w_out, w, factor);
        let xv = self.value(x).data();
        let mut data = vec![T::zero(); c * h_out * w_out];
        for ci in 0..c {
            let plane = ci * h * w;
            for (oy, &(y0, y1, wy)) in ty.iter().enumerate() {
                let row = (ci * h_out + oy) * w_out;
                for (ox, &(x0, x1, wx)) in tx.iter().enumerate() {
                    let p00 = xv[plane + y0 * w + x0].to_f64();
                    let p01 = xv[plane + y0 * w + x1].to_f64();
                    let p10 = xv[plane + y1 * w + x0].to_f64();
                    let p11 = xv[plane + y1 * w + x1].to_f64();
                    let top = p00 * (1.0 - wx) + p01 * wx;
                    let bot = p10 * (1.0 - wx) + p11 * wx;
                    data[row + ox] = T::from_f64(top * (1.0 - wy) + bot * wy);
                }
            }
        }
        let value = Tensor::new(vec![c, h_out, w_out], data).expect("upsample length");
        Ok(self.record(
            value,
            vec![x],
            Box::new(move |grad, _out, inputs, _needs| {
                let mut gx = Tensor::zeros(inputs[0].shape());
                for ci in 0..c {
                    let plane = ci * h * w;
                    for (oy, &(y0, y1, wy)) in ty.iter().enumerate() {
                        let row = (ci * h_out + oy) * w_out;
                        for (ox, &(x0, x1, wx)) in tx.iter().enumerate() {
                            let g = grad[row + ox].to_f64();
                            let gm = gx.data_mut();
                            let add = |gm: &mut [T], idx: usize, v: f64| {
                                gm[idx] += T::from_f64(v);
                            };
                            add(gm, plane + y0 * w + x0, g * (1.0 - wx) * (1.0 - wy));
                            add(gm, plane + y0 * w + x1, g * wx * (1.0 - wy));
                            add(gm, plane + y1 * w + x0, g * (1.0 - wx) * wy);
                            add(gm, plane + y1 * w + x1, g * wx * wy);
                        }
                    }
                }
                vec![Some(gx)]
            }),
        ))
    }
}
