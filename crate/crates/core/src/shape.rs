//! Shape arithmetic shared by the tensor ops: row-major strides, trailing-axis
//! broadcasting and gradient reduction back to an operand shape.

use crate::error::{CoreError, CoreResult};
use crate::scalar::Scalar;

pub fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

pub fn strides_row_major(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![0usize; shape.len()];
    let mut acc = 1usize;
    for i in (0..shape.len()).rev() {
        strides[i] = acc;
        acc *= shape[i];
    }
    strides
}

/// Broadcast result of two shapes under numpy-style trailing alignment.
///
/// Axes are matched from the right; each pair must be equal or contain a 1.
pub fn broadcast_shapes(left: &[usize], right: &[usize]) -> CoreResult<Vec<usize>> {
    let rank = left.len().max(right.len());
    let mut out = vec![0usize; rank];
    for i in 0..rank {
        let l = padded_dim(left, i, rank);
        let r = padded_dim(right, i, rank);
        out[i] = if l == r || r == 1 {
            l
        } else if l == 1 {
            r
        } else {
            return Err(CoreError::BroadcastMismatch {
                left: left.to_vec(),
                right: right.to_vec(),
            });
        };
    }
    Ok(out)
}

/// Extent on output axis `axis` once `shape` is left-padded with 1s to `rank`.
fn padded_dim(shape: &[usize], axis: usize, rank: usize) -> usize {
    let pad = rank - shape.len();
    if axis < pad {
        1
    } else {
        shape[axis - pad]
    }
}

/// Strides for reading `shape` as if broadcast to `out_shape` (0 on expanded axes).
fn broadcast_strides(shape: &[usize], out_shape: &[usize]) -> Vec<usize> {
    let strides = strides_row_major(shape);
    let pad = out_shape.len() - shape.len();
    let mut out = vec![0usize; out_shape.len()];
    for i in 0..out_shape.len() {
        if i < pad {
            out[i] = 0;
        } else {
            let s = shape[i - pad];
            out[i] = if s == 1 { 0 } else { strides[i - pad] };
        }
    }
    out
}

/// Walk every flat index of `out_shape`, handing the matching flat indices into
/// the two (possibly broadcast) operands to `f` as `(ia, ib, iout)`.
pub fn for_each_broadcast_pair<F: FnMut(usize, usize, usize)>(
    a_shape: &[usize],
    b_shape: &[usize],
    out_shape: &[usize],
    mut f: F,
) {
    let total = numel(out_shape);
    if total == 0 {
        return;
    }
    let sa = broadcast_strides(a_shape, out_shape);
    let sb = broadcast_strides(b_shape, out_shape);
    let rank = out_shape.len();
    let mut coords = vec![0usize; rank];
    let mut ia = 0usize;
    let mut ib = 0usize;
    for io in 0..total {
        f(ia, ib, io);
        // Odometer increment from the last axis, adjusting both input offsets.
        for ax in (0..rank).rev() {
            coords[ax] += 1;
            ia += sa[ax];
            ib += sb[ax];
            if coords[ax] < out_shape[ax] {
                break;
            }
            ia -= sa[ax] * out_shape[ax];
            ib -= sb[ax] * out_shape[ax];
            coords[ax] = 0;
        }
    }
}

/// Sum a gradient of `grad_shape` down to `target_shape` by collapsing the axes
/// that were expanded during broadcasting.
pub fn reduce_grad_to_shape<T: Scalar>(
    grad: &[T],
    grad_shape: &[usize],
    target_shape: &[usize],
) -> Vec<T> {
    if grad_shape == target_shape {
        return grad.to_vec();
    }
    let mut out = vec![T::zero(); numel(target_shape)];
    let st = broadcast_strides(target_shape, grad_shape);
    let rank = grad_shape.len();
    let mut coords = vec![0usize; rank];
    let mut it = 0usize;
    for g in grad {
        out[it] += *g;
        for ax in (0..rank).rev() {
            coords[ax] += 1;
            it += st[ax];
            if coords[ax] < grad_shape[ax] {
                break;
            }
            it -= st[ax] * grad_shape[ax];
            coords[ax] = 0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadcast_rules() {
        assert_eq!(broadcast_shapes(&[3, 4], &[3, 4]).unwrap(), vec![3, 4]);
        assert_eq!(broadcast_shapes(&[3, 1], &[1, 4]).unwrap(), vec![3, 4]);
        assert_eq!(broadcast_shapes(&[4], &[2, 3, 4]).unwrap(), vec![2, 3, 4]);
        assert_eq!(broadcast_shapes(&[1], &[5]).unwrap(), vec![5]);
        assert!(broadcast_shapes(&[2, 3], &[3, 2]).is_err());
    }

    #[test]
    fn pair_walk_matches_naive_expansion() {
        let a = [10.0, 20.0, 30.0]; // shape [3, 1]
        let b = [1.0, 2.0, 3.0, 4.0]; // shape [1, 4]
        let out_shape = [3usize, 4usize];
        let mut got = vec![0.0; 12];
        for_each_broadcast_pair(&[3, 1], &[1, 4], &out_shape, |ia, ib, io| {
            got[io] = a[ia] + b[ib];
        });
        let want: Vec<f64> = (0..3)
            .flat_map(|r| (0..4).map(move |c| a[r] + b[c]))
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn grad_reduction_sums_expanded_axes() {
        // grad [2, 3] reduced to [1, 3] sums rows; to [3] likewise.
        let grad = [1.0, 2.0, 3.0, 10.0, 20.0, 30.0];
        assert_eq!(
            reduce_grad_to_shape(&grad, &[2, 3], &[1, 3]),
            vec![11.0, 22.0, 33.0]
        );
        assert_eq!(
            reduce_grad_to_shape(&grad, &[2, 3], &[3]),
            vec![11.0, 22.0, 33.0]
        );
        assert_eq!(reduce_grad_to_shape(&grad, &[2, 3], &[1]), vec![66.0]);
    }
}
