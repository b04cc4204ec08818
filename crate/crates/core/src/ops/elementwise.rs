use crate::error::CoreResult;
use crate::scalar::Scalar;
use crate::tape::{Tape, VarId};

impl<T: Scalar> Tape<T> {
    /// Elementwise `a + b` with trailing-axis broadcasting.
    pub fn add(&mut self, a: VarId, b: VarId) -> CoreResult<VarId> {
        self.binary_elementwise(a, b, |x, y| x + y, |_, _| T::one(), |_, _| T::one())
    }

    /// Elementwise `a - b` with trailing-axis broadcasting.
    pub fn sub(&mut self, a: VarId, b: VarId) -> CoreResult<VarId> {
        self.binary_elementwise(a, b, |x, y| x - y, |_, _| T::one(), |_, _| -T::one())
    }

    /// Elementwise `a * b` with trailing-axis broadcasting.
    pub fn mul(&mut self, a: VarId, b: VarId) -> CoreResult<VarId> {
        self.binary_elementwise(a, b, |x, y| x * y, |_, y| y, |x, _| x)
    }

    /// Elementwise `a / b` with trailing-axis broadcasting.
    pub fn div(&mut self, a: VarId, b: VarId) -> CoreResult<VarId> {
        self.binary_elementwise(
            a,
            b,
            |x, y| x / y,
            |_, y| T::one() / y,
            |x, y| -x / (y * y),
        )
    }

    /// `mul * x + add` with compile-time scalars; covers negate, scale, shift.
    pub fn affine(&mut self, x: VarId, mul: f64, add: f64) -> VarId {
        let m = T::from_f64(mul);
        let c = T::from_f64(add);
        self.unary_elementwise(x, move |v| m * v + c, move |_, _| m)
    }

    /// Clamp into `[lo, hi]`. Gradient passes through inside the closed
    /// interval and is zero outside.
    pub fn clamp(&mut self, x: VarId, lo: f64, hi: f64) -> VarId {
        let lo = T::from_f64(lo);
        let hi = T::from_f64(hi);
        self.unary_elementwise(
            x,
            move |v| v.max_val(lo).min_val(hi),
            move |v, _| {
                if v >= lo && v <= hi {
                    T::one()
                } else {
                    T::zero()
                }
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    #[test]
    fn add_broadcasts_rows() {
        let mut tape = Tape::<f64>::new();
        let a = tape.leaf(
            Tensor::new(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap(),
            true,
        );
        let b = tape.leaf(Tensor::new(vec![3], vec![10.0, 20.0, 30.0]).unwrap(), true);
        let s = tape.add(a, b).unwrap();
        assert_eq!(
            tape.value(s).data(),
            &[11.0, 22.0, 33.0, 14.0, 25.0, 36.0]
        );
        let loss = tape.sum_all(s).unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(a).unwrap().data(), &[1.0; 6]);
        // b is used by both rows, so its gradient is the row count.
        assert_eq!(tape.grad(b).unwrap().data(), &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn div_gradients_match_quotient_rule() {
        let mut tape = Tape::<f64>::new();
        let a = tape.leaf(Tensor::new(vec![2], vec![1.0, 9.0]).unwrap(), true);
        let b = tape.leaf(Tensor::new(vec![2], vec![2.0, 3.0]).unwrap(), true);
        let q = tape.div(a, b).unwrap();
        let loss = tape.sum_all(q).unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(a).unwrap().data(), &[0.5, 1.0 / 3.0]);
        assert_eq!(tape.grad(b).unwrap().data(), &[-0.25, -1.0]);
    }

    #[test]
    fn clamp_blocks_gradient_outside_interval() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(
            Tensor::new(vec![4], vec![-1.0, 0.2, 0.8, 2.0]).unwrap(),
            true,
        );
        let c = tape.clamp(x, 0.0, 1.0);
        assert_eq!(tape.value(c).data(), &[0.0, 0.2, 0.8, 1.0]);
        let loss = tape.sum_all(c).unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn broadcast_against_per_channel_bias_shape() {
        // [C,H,W] + [C,1,1] is the decoder-head bias pattern.
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::ones(&[2, 2, 2]), true);
        let b = tape.leaf(Tensor::new(vec![2, 1, 1], vec![10.0, 20.0]).unwrap(), true);
        let y = tape.add(x, b).unwrap();
        assert_eq!(
            tape.value(y).data(),
            &[11.0, 11.0, 11.0, 11.0, 21.0, 21.0, 21.0, 21.0]
        );
        let loss = tape.sum_all(y).unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(b).unwrap().data(), &[4.0, 4.0]);
    }
}
