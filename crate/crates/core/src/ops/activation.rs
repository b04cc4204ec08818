use crate::scalar::Scalar;
use crate::tape::{Tape, VarId};

impl<T: Scalar> Tape<T> {
    /// Rectified linear unit. At exactly zero the gradient is zero and the
    /// output is a positive zero, so adding a relu output never flips signs.
    pub fn relu(&mut self, x: VarId) -> VarId {
        self.unary_elementwise(
            x,
            |v| if v > T::zero() { v } else { T::zero() },
            |v, _| if v > T::zero() { T::one() } else { T::zero() },
        )
    }

    /// Logistic sigmoid, computed in the numerically safe branch per sign.
    pub fn sigmoid(&mut self, x: VarId) -> VarId {
        self.unary_elementwise(x, sigmoid_scalar, |_, y| y * (T::one() - y))
    }

    /// Gaussian error linear unit (tanh approximation).
    pub fn gelu(&mut self, x: VarId) -> VarId {
        let c = T::from_f64((2.0 / std::f64::consts::PI).sqrt());
        let a = T::from_f64(0.044715);
        let half = T::from_f64(0.5);
        let three = T::from_f64(3.0);
        self.unary_elementwise(
            x,
            move |v| {
                let t = (c * (v + a * v * v * v)).tanh();
                half * v * (T::one() + t)
            },
            move |v, _| {
                let u = c * (v + a * v * v * v);
                let t = u.tanh();
                let du = c * (T::one() + three * a * v * v);
                half * (T::one() + t) + half * v * (T::one() - t * t) * du
            },
        )
    }

    /// Elementwise natural exponential.
    pub fn exp(&mut self, x: VarId) -> VarId {
        self.unary_elementwise(x, |v| v.exp(), |_, y| y)
    }

    /// Elementwise natural logarithm. Inputs must be positive; clamp first
    /// when feeding probabilities.
    pub fn ln(&mut self, x: VarId) -> VarId {
        self.unary_elementwise(x, |v| v.ln(), |v, _| T::one() / v)
    }
}

fn sigmoid_scalar<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}
