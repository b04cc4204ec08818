use crate::error::{CoreError, CoreResult};
use crate::scalar::Scalar;
use crate::tape::{Tape, VarId};
use crate::tensor::Tensor;

fn pool_geometry(
    shape: &[usize],
    k: usize,
    stride: usize,
) -> CoreResult<(usize, usize, usize, usize, usize)> {
    if shape.len() != 3 {
        return Err(CoreError::RankMismatch {
            expected: 3,
            shape: shape.to_vec(),
        });
    }
    if stride == 0 {
        return Err(CoreError::NonPositive { what: "stride" });
    }
    if k == 0 {
        return Err(CoreError::NonPositive { what: "kernel size" });
    }
    let (c, h, w) = (shape[0], shape[1], shape[2]);
    if h < k || w < k {
        return Err(CoreError::EmptyConvOutput {
            h,
            w,
            k,
            stride,
            padding: 0,
        });
    }
    Ok((c, h, w, (h - k) / stride + 1, (w - k) / stride + 1))
}

impl<T: Scalar> Tape<T> {
    /// Max over `k x k` windows, no padding. Ties resolve to the first element
    /// in scan order, so backward routing is deterministic.
    pub fn max_pool2d(&mut self, x: VarId, k: usize, stride: usize) -> CoreResult<VarId> {
        let (c, h, w, h_out, w_out) = pool_geometry(self.shape(x), k, stride)?;
        let xv = self.value(x).data();
        let mut data = vec![T::zero(); c * h_out * w_out];
        let mut argmax = vec![0usize; c * h_out * w_out];
        for ci in 0..c {
            for oy in 0..h_out {
                for ox in 0..w_out {
                    let mut best_idx = (ci * h + oy * stride) * w + ox * stride;
                    let mut best = xv[best_idx];
                    for dy in 0..k {
                        for dx in 0..k {
                            let idx = (ci * h + oy * stride + dy) * w + ox * stride + dx;
                            if xv[idx] > best {
                                best = xv[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    let o = (ci * h_out + oy) * w_out + ox;
                    data[o] = best;
                    argmax[o] = best_idx;
                }
            }
        }
        let value = Tensor::new(vec![c, h_out, w_out], data).expect("pool output length");
        Ok(self.record(
            value,
            vec![x],
            Box::new(move |grad, _out, inputs, _needs| {
                let mut gx = Tensor::zeros(inputs[0].shape());
                for (o, &src) in argmax.iter().enumerate() {
                    gx.data_mut()[src] += grad[o];
                }
                vec![Some(gx)]
            }),
        ))
    }

    /// Mean over `k x k` windows, no padding.
    pub fn avg_pool2d(&mut self, x: VarId, k: usize, stride: usize) -> CoreResult<VarId> {
        let (c, h, w, h_out, w_out) = pool_geometry(self.shape(x), k, stride)?;
        let xv = self.value(x).data();
        let inv = T::from_f64(1.0 / (k * k) as f64);
        let mut data = vec![T::zero(); c * h_out * w_out];
        for ci in 0..c {
            for oy in 0..h_out {
                for ox in 0..w_out {
                    let mut acc = T::zero();
                    for dy in 0..k {
                        for dx in 0..k {
                            acc += xv[(ci * h + oy * stride + dy) * w + ox * stride + dx];
                        }
                    }
                    data[(ci * h_out + oy) * w_out + ox] = acc * inv;
                }
            }
        }
        let value = Tensor::new(vec![c, h_out, w_out], data).expect("pool output length");
        Ok(self.record(
            value,
            vec![x],
            Box::new(move |grad, _out, inputs, _needs| {
                let mut gx = Tensor::zeros(inputs[0].shape());
                for ci in 0..c {
                    for oy in 0..h_out {
                        for ox in 0..w_out {
                            let g = grad[(ci * h_out + oy) * w_out + ox] * inv;
                            for dy in 0..k {
                                for dx in 0..k {
                                    gx.data_mut()
                                        [(ci * h + oy * stride + dy) * w + ox * stride + dx] += g;
                                }
                            }
                        }
                    }
                }
                vec![Some(gx)]
            }),
        ))
    }
}
