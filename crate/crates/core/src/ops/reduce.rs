use crate::error::{CoreError, CoreResult};
use crate::scalar::Scalar;
use crate::tape::{Tape, VarId};
use crate::tensor::Tensor;

impl<T: Scalar> Tape<T> {
    /// Sum of all elements, as a `[1]` scalar.
    pub fn sum_all(&mut self, x: VarId) -> CoreResult<VarId> {
        let total: T = self.value(x).data().iter().copied().sum();
        Ok(self.record(
            Tensor::scalar(total),
            vec![x],
            Box::new(|grad, _out, inputs, _needs| {
                vec![Some(Tensor::full(inputs[0].shape(), grad[0]))]
            }),
        ))
    }

    /// Mean of all elements, as a `[1]` scalar.
    pub fn mean_all(&mut self, x: VarId) -> CoreResult<VarId> {
        let n = self.value(x).numel();
        if n == 0 {
            return Err(CoreError::EmptyInput);
        }
        let s = self.sum_all(x)?;
        Ok(self.affine(s, 1.0 / n as f64, 0.0))
    }

    /// Sum along `axis`. The axis collapses to extent 1 when `keepdim`,
    /// otherwise it is removed from the shape.
    pub fn reduce_sum(&mut self, x: VarId, axis: usize, keepdim: bool) -> CoreResult<VarId> {
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
        let mut data = vec![T::zero(); outer * inner];
        for o in 0..outer {
            for e in 0..extent {
                let base = (o * extent + e) * inner;
                let dst = o * inner;
                for i in 0..inner {
                    data[dst + i] += xv[base + i];
                }
            }
        }
        let mut out_shape = shape.clone();
        if keepdim {
            out_shape[axis] = 1;
        } else {
            out_shape.remove(axis);
        }
        if out_shape.is_empty() {
            out_shape.push(1);
        }
        let value = Tensor::new(out_shape, data).expect("reduced length");
        Ok(self.record(
            value,
            vec![x],
            Box::new(move |grad, _out, inputs, _needs| {
                let mut gx = Tensor::zeros(inputs[0].shape());
                for o in 0..outer {
                    for e in 0..extent {
                        let base = (o * extent + e) * inner;
                        let src = o * inner;
                        for i in 0..inner {
                            gx.data_mut()[base + i] = grad[src + i];
                        }
                    }
                }
                vec![Some(gx)]
            }),
        ))
    }

    /// Mean along `axis`; see [`reduce_sum`] for the shape rule.
    pub fn reduce_mean(&mut self, x: VarId, axis: usize, keepdim: bool) -> CoreResult<VarId> {
        let extent = {
            let shape = self.shape(x);
            if axis >= shape.len() {
                return Err(CoreError::AxisOutOfRange {
                    axis,
                    rank: shape.len(),
                });
            }
            shape[axis]
        };
        let s = self.reduce_sum(x, axis, keepdim)?;
        Ok(self.affine(s, 1.0 / extent as f64, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_sums_match_hand_results() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(
            Tensor::new(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap(),
            true,
        );
        let rows = tape.reduce_sum(x, 1, false).unwrap();
        assert_eq!(tape.shape(rows), &[2]);
        assert_eq!(tape.value(rows).data(), &[6.0, 15.0]);

        let cols = tape.reduce_sum(x, 0, true).unwrap();
        assert_eq!(tape.shape(cols), &[1, 3]);
        assert_eq!(tape.value(cols).data(), &[5.0, 7.0, 9.0]);
    }

    #[test]
    fn full_reduction_of_vector_yields_scalar_shape() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap(), true);
        let s = tape.reduce_sum(x, 0, false).unwrap();
        assert_eq!(tape.shape(s), &[1]);
        assert_eq!(tape.value(s).data(), &[6.0]);
    }

    #[test]
    fn mean_gradient_is_uniform() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::new(vec![4], vec![1.0, 2.0, 3.0, 4.0]).unwrap(), true);
        let m = tape.mean_all(x).unwrap();
        assert_eq!(tape.value(m).data(), &[2.5]);
        tape.backward(m).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[0.25; 4]);
    }

    #[test]
    fn reduce_mean_axis_gradient_spreads_by_extent() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::ones(&[2, 4]), true);
        let m = tape.reduce_mean(x, 1, false).unwrap();
        let loss = tape.sum_all(m).unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[0.25; 8]);
    }
}
