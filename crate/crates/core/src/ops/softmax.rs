use crate::error::{CoreError, CoreResult};
use crate::scalar::Scalar;
use crate::tape::{Tape, VarId};
use crate::tensor::Tensor;

impl<T: Scalar> Tape<T> {
    /// Softmax along `axis`, max-subtracted for stability. Every lane of the
    /// output sums to 1.
    pub fn softmax(&mut self, x: VarId, axis: usize) -> CoreResult<VarId> {
        let shape = self.shape(x).to_vec();
        if axis >= shape.len() {
            return Err(CoreError::AxisOutOfRange {
                axis,
                rank: shape.len(),
            });
        }
        let extent = shape[axis];
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let xv = self.value(x).data();
        let mut data = vec![T::zero(); xv.len()];
        for o in 0..outer {
            for i in 0..inner {
                let idx = |e: usize| (o * extent + e) * inner + i;
                let mut m = xv[idx(0)];
                for e in 1..extent {
                    m = m.max_val(xv[idx(e)]);
                }
                let mut denom = T::zero();
                for e in 0..extent {
                    let v = (xv[idx(e)] - m).exp();
                    data[idx(e)] = v;
                    denom += v;
                }
                for e in 0..extent {
                    data[idx(e)] = data[idx(e)] / denom;
                }
            }
        }
        let value = Tensor::new(shape, data).expect("same length");
        Ok(self.record(
            value,
            vec![x],
            Box::new(move |grad, out, inputs, _needs| {
                // dx_e = y_e * (g_e - sum_j g_j y_j), per lane.
                let y = out.data();
                let mut gx = Tensor::zeros(inputs[0].shape());
                for o in 0..outer {
                    for i in 0..inner {
                        let idx = |e: usize| (o * extent + e) * inner + i;
                        let mut dot = T::zero();
                        for e in 0..extent {
                            dot += grad[idx(e)] * y[idx(e)];
                        }
                        for e in 0..extent {
                            gx.data_mut()[idx(e)] = y[idx(e)] * (grad[idx(e)] - dot);
                        }
                    }
                }
                vec![Some(gx)]
            }),
        ))
    }
}
