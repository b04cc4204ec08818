//! Differentiable operations, implemented as methods on [`Tape`].
//!
//! Each op computes its forward value eagerly and records a closure with the
//! local backward rule. Binary elementwise ops broadcast trailing axes and
//! accumulate gradients directly into the un-broadcast operand shapes.

mod activation;
mod conv;
mod elementwise;
mod matmul;
mod norm;
mod pool;
mod reduce;
mod resize;
mod shape_ops;
mod softmax;

use crate::error::CoreResult;
use crate::scalar::Scalar;
use crate::shape::{broadcast_shapes, for_each_broadcast_pair, numel};
use crate::tape::{Tape, VarId};
use crate::tensor::Tensor;

impl<T: Scalar> Tape<T> {
    /// Shared skeleton for broadcasting binary elementwise ops.
    ///
    /// `fwd(a, b)` produces the output element; `da(a, b)` and `db(a, b)` give
    /// the partial derivatives at that element.
    fn binary_elementwise(
        &mut self,
        a: VarId,
        b: VarId,
        fwd: impl Fn(T, T) -> T + 'static,
        da: impl Fn(T, T) -> T + 'static,
        db: impl Fn(T, T) -> T + 'static,
    ) -> CoreResult<VarId> {
        let out_shape = broadcast_shapes(self.shape(a), self.shape(b))?;
        let (av, bv) = (self.value(a), self.value(b));
        let mut data = vec![T::zero(); numel(&out_shape)];
        for_each_broadcast_pair(av.shape(), bv.shape(), &out_shape, |ia, ib, io| {
            data[io] = fwd(av.data()[ia], bv.data()[ib]);
        });
        let value = Tensor::new(out_shape, data).expect("shape computed from data");
        let out_shape = value.shape().to_vec();
        Ok(self.record(
            value,
            vec![a, b],
            Box::new(move |grad, _out, inputs, needs| {
                let (av, bv) = (inputs[0], inputs[1]);
                let mut ga = needs[0].then(|| Tensor::zeros(av.shape()));
                let mut gb = needs[1].then(|| Tensor::zeros(bv.shape()));
                for_each_broadcast_pair(av.shape(), bv.shape(), &out_shape, |ia, ib, io| {
                    let (x, y) = (av.data()[ia], bv.data()[ib]);
                    if let Some(ga) = ga.as_mut() {
                        ga.data_mut()[ia] += grad[io] * da(x, y);
                    }
                    if let Some(gb) = gb.as_mut() {
                        gb.data_mut()[ib] += grad[io] * db(x, y);
                    }
                });
                vec![ga, gb]
            }),
        ))
    }

    /// Shared skeleton for elementwise unary ops. `dydx(x, y)` sees both the
    /// input and the forward output so rules like sigmoid can reuse `y`.
    fn unary_elementwise(
        &mut self,
        x: VarId,
        fwd: impl Fn(T) -> T + 'static,
        dydx: impl Fn(T, T) -> T + 'static,
    ) -> VarId {
        let value = self.value(x).map(&fwd);
        self.record(
            value,
            vec![x],
            Box::new(move |grad, out, inputs, _needs| {
                let x = inputs[0];
                let mut gx = Tensor::zeros(x.shape());
                for i in 0..grad.len() {
                    gx.data_mut()[i] = grad[i] * dydx(x.data()[i], out.data()[i]);
                }
                vec![Some(gx)]
            }),
        )
    }
}
