use crate::error::{CoreError, CoreResult};
use crate::scalar::Scalar;
use crate::shape::numel;
use crate::tape::{Tape, VarId};
use crate::tensor::Tensor;

impl<T: Scalar> Tape<T> {
    /// Same elements, new shape with identical element count.
    pub fn reshape(&mut self, x: VarId, shape: &[usize]) -> CoreResult<VarId> {
        let value = self.value(x).reshaped(shape)?;
        let from = self.shape(x).to_vec();
        Ok(self.record(
            value,
            vec![x],
            Box::new(move |grad, _out, _inputs, _needs| {
                vec![Some(
                    Tensor::new(from.clone(), grad.to_vec()).expect("same numel"),
                )]
            }),
        ))
    }

    /// Window `[start, start+len)` along `axis`, other axes untouched.
    pub fn slice(&mut self, x: VarId, axis: usize, start: usize, len: usize) -> CoreResult<VarId> {
        let shape = self.shape(x).to_vec();
        if axis >= shape.len() {
            return Err(CoreError::AxisOutOfRange {
                axis,
                rank: shape.len(),
            });
        }
        if start + len > shape[axis] || len == 0 {
            return Err(CoreError::SliceOutOfRange {
                axis,
                start,
                len,
                extent: shape[axis],
            });
        }
        let outer: usize = shape[..axis].iter().product();
        let extent = shape[axis];
        let inner: usize = shape[axis + 1..].iter().product();
        let xv = self.value(x).data();
        let mut data = vec![T::zero(); outer * len * inner];
        for o in 0..outer {
            let src = (o * extent + start) * inner;
            let dst = o * len * inner;
            data[dst..dst + len * inner].copy_from_slice(&xv[src..src + len * inner]);
        }
        let mut out_shape = shape.clone();
        out_shape[axis] = len;
        let value = Tensor::new(out_shape, data).expect("slice length");
        Ok(self.record(
            value,
            vec![x],
            Box::new(move |grad, _out, inputs, _needs| {
                let mut gx = Tensor::zeros(inputs[0].shape());
                for o in 0..outer {
                    let dst = (o * extent + start) * inner;
                    let src = o * len * inner;
                    gx.data_mut()[dst..dst + len * inner]
                        .copy_from_slice(&grad[src..src + len * inner]);
                }
                vec![Some(gx)]
            }),
        ))
    }

    /// Concatenate along `axis`; all other extents must agree.
    pub fn concat(&mut self, axis: usize, parts: &[VarId]) -> CoreResult<VarId> {
        let first = *parts.first().ok_or(CoreError::EmptyInput)?;
        let base = self.shape(first).to_vec();
        if axis >= base.len() {
            return Err(CoreError::AxisOutOfRange {
                axis,
                rank: base.len(),
            });
        }
        let mut axis_total = 0usize;
        for &p in parts {
            let s = self.shape(p);
            let off_axis_ok = s.len() == base.len()
                && s.iter()
                    .zip(&base)
                    .enumerate()
                    .all(|(i, (a, b))| i == axis || a == b);
            if !off_axis_ok {
                return Err(CoreError::ConcatMismatch {
                    axis,
                    left: base,
                    right: s.to_vec(),
                });
            }
            axis_total += s[axis];
        }
        let mut out_shape = base.clone();
        out_shape[axis] = axis_total;
        let outer: usize = base[..axis].iter().product();
        let inner: usize = base[axis + 1..].iter().product();
        let part_extents: Vec<usize> = parts.iter().map(|&p| self.shape(p)[axis]).collect();

        let mut data = vec![T::zero(); numel(&out_shape)];
        let mut offset = 0usize;
        for (pi, &p) in parts.iter().enumerate() {
            let pv = self.value(p).data();
            let e = part_extents[pi];
            for o in 0..outer {
                let src = o * e * inner;
                let dst = (o * axis_total + offset) * inner;
                data[dst..dst + e * inner].copy_from_slice(&pv[src..src + e * inner]);
            }
            offset += e;
        }
        let value = Tensor::new(out_shape, data).expect("concat length");
        Ok(self.record(
            value,
            parts.to_vec(),
            Box::new(move |grad, _out, inputs, needs| {
                let mut grads = Vec::with_capacity(inputs.len());
                let mut offset = 0usize;
                for (pi, input) in inputs.iter().enumerate() {
                    let e = part_extents[pi];
                    if needs[pi] {
                        let mut g = Tensor::zeros(input.shape());
                        for o in 0..outer {
                            let src = (o * axis_total + offset) * inner;
                            let dst = o * e * inner;
                            g.data_mut()[dst..dst + e * inner]
                                .copy_from_slice(&grad[src..src + e * inner]);
                        }
                        grads.push(Some(g));
                    } else {
                        grads.push(None);
                    }
                    offset += e;
                }
                grads
            }),
        ))
    }
}
