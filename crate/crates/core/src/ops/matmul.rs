use crate::error::{CoreError, CoreResult};
use crate::scalar::Scalar;
use crate::tape::{Tape, VarId};
use crate::tensor::Tensor;

/// `c = a @ b` for row-major buffers, dims `[m,k] x [k,n]`.
pub(crate) fn gemm_rowmajor<T: Scalar>(
    m: usize,
    k: usize,
    n: usize,
    a: &[T],
    b: &[T],
    c: &mut [T],
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.fill(T::zero());
        return;
    }
    unsafe {
        T::gemm(
            m,
            k,
            n,
            T::one(),
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            T::zero(),
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `c = a @ b^T` where `b` is row-major `[n,k]`.
pub(crate) fn gemm_bt<T: Scalar>(m: usize, k: usize, n: usize, a: &[T], b: &[T], c: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.fill(T::zero());
        return;
    }
    unsafe {
        T::gemm(
            m,
            k,
            n,
            T::one(),
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            1,
            k as isize,
            T::zero(),
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `c = a^T @ b` where `a` is row-major `[k,m]`.
pub(crate) fn gemm_at<T: Scalar>(m: usize, k: usize, n: usize, a: &[T], b: &[T], c: &mut [T]) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.fill(T::zero());
        return;
    }
    unsafe {
        T::gemm(
            m,
            k,
            n,
            T::one(),
            a.as_ptr(),
            1,
            m as isize,
            b.as_ptr(),
            n as isize,
            1,
            T::zero(),
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl<T: Scalar> Tape<T> {
    /// Matrix product of two rank-2 operands, `[m,k] @ [k,n] -> [m,n]`.
    pub fn matmul(&mut self, a: VarId, b: VarId) -> CoreResult<VarId> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sa.len() != 2 {
            return Err(CoreError::RankMismatch {
                expected: 2,
                shape: sa,
            });
        }
        if sb.len() != 2 {
            return Err(CoreError::RankMismatch {
                expected: 2,
                shape: sb,
            });
        }
        if sa[1] != sb[0] {
            return Err(CoreError::MatmulMismatch {
                left: sa,
                right: sb,
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut data = vec![T::zero(); m * n];
        gemm_rowmajor(m, k, n, self.value(a).data(), self.value(b).data(), &mut data);
        let value = Tensor::new(vec![m, n], data).expect("gemm output length");
        Ok(self.record(
            value,
            vec![a, b],
            Box::new(move |grad, _out, inputs, needs| {
                let (av, bv) = (inputs[0], inputs[1]);
                let ga = needs[0].then(|| {
                    let mut g = vec![T::zero(); m * k];
                    gemm_bt(m, n, k, grad, bv.data(), &mut g);
                    Tensor::new(vec![m, k], g).expect("grad length")
                });
                let gb = needs[1].then(|| {
                    let mut g = vec![T::zero(); k * n];
                    gemm_at(k, m, n, av.data(), grad, &mut g);
                    Tensor::new(vec![k, n], g).expect("grad length")
                });
                vec![ga, gb]
            }),
        ))
    }

    /// Transpose of a rank-2 operand.
    pub fn transpose2d(&mut self, x: VarId) -> CoreResult<VarId> {
        let shape = self.shape(x).to_vec();
        if shape.len() != 2 {
            return Err(CoreError::RankMismatch {
                expected: 2,
                shape,
            });
        }
        let (r, c) = (shape[0], shape[1]);
        let xv = self.value(x).data();
        let mut data = vec![T::zero(); r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = xv[i * c + j];
            }
        }
        let value = Tensor::new(vec![c, r], data).expect("transposed length");
        Ok(self.record(
            value,
            vec![x],
            Box::new(move |grad, _out, _inputs, _needs| {
                let mut g = vec![T::zero(); r * c];
                for j in 0..c {
                    for i in 0..r {
                        g[i * c + j] = grad[j * r + i];
                    }
                }
                vec![Some(Tensor::new(vec![r, c], g).expect("grad length"))]
            }),
        ))
    }
}
