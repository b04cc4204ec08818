//! 2d convolution and its transposed counterpart, both lowered onto gemm via
//! im2col / col2im. Convolution here is cross-correlation (no kernel flip),
//! the usual deep-learning convention.

use super::matmul::{gemm_at, gemm_bt, gemm_rowmajor};
use crate::error::{CoreError, CoreResult};
use crate::scalar::Scalar;
use crate::tape::{Tape, VarId};
use crate::tensor::Tensor;

/// Unfold an image `[c, h_im, w_im]` into a `[c*k*k, h_win*w_win]` matrix.
/// Window `(oy, ox)` reads pixel `(oy*stride + di - padding, ...)`; reads
/// outside the image contribute zero.
#[allow(clippy::too_many_arguments)]
fn im2col<T: Scalar>(
    x: &[T],
    c: usize,
    h_im: usize,
    w_im: usize,
    k: usize,
    stride: usize,
    padding: usize,
    h_win: usize,
    w_win: usize,
) -> Vec<T> {
    let l = h_win * w_win;
    let mut cols = vec![T::zero(); c * k * k * l];
    for ci in 0..c {
        for di in 0..k {
            for dj in 0..k {
                let row = (ci * k + di) * k + dj;
                let dst_base = row * l;
                for oy in 0..h_win {
                    let iy = (oy * stride + di) as isize - padding as isize;
                    if iy < 0 || iy >= h_im as isize {
                        continue;
                    }
                    let src_row = (ci * h_im + iy as usize) * w_im;
                    let dst_row = dst_base + oy * w_win;
                    for ox in 0..w_win {
                        let ix = (ox * stride + dj) as isize - padding as isize;
                        if ix >= 0 && ix < w_im as isize {
                            cols[dst_row + ox] = x[src_row + ix as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatter-add the column matrix back onto an image.
#[allow(clippy::too_many_arguments)]
fn col2im<T: Scalar>(
    cols: &[T],
    c: usize,
    h_im: usize,
    w_im: usize,
    k: usize,
    stride: usize,
    padding: usize,
    h_win: usize,
    w_win: usize,
) -> Vec<T> {
    let l = h_win * w_win;
    let mut im = vec![T::zero(); c * h_im * w_im];
    for ci in 0..c {
        for di in 0..k {
            for dj in 0..k {
                let row = (ci * k + di) * k + dj;
                let src_base = row * l;
                for oy in 0..h_win {
                    let iy = (oy * stride + di) as isize - padding as isize;
                    if iy < 0 || iy >= h_im as isize {
                        continue;
                    }
                    let dst_row = (ci * h_im + iy as usize) * w_im;
                    let src_row = src_base + oy * w_win;
                    for ox in 0..w_win {
                        let ix = (ox * stride + dj) as isize - padding as isize;
                        if ix >= 0 && ix < w_im as isize {
                            im[dst_row + ix as usize] += cols[src_row + ox];
                        }
                    }
                }
            }
        }
    }
    im
}

fn check_conv_geometry(k: usize, stride: usize) -> CoreResult<()> {
    if stride == 0 {
        return Err(CoreError::NonPositive { what: "stride" });
    }
    if k == 0 {
        return Err(CoreError::NonPositive { what: "kernel size" });
    }
    Ok(())
}

impl<T: Scalar> Tape<T> {
    /// Square convolution of `[C,H,W]` with kernel `[O,C,k,k]` (k odd),
    /// zero padding. Output extent is `(H + 2p - k) / stride + 1`.
    pub fn conv2d(
        &mut self,
        x: VarId,
        kernel: VarId,
        stride: usize,
        padding: usize,
    ) -> CoreResult<VarId> {
        let xs = self.shape(x).to_vec();
        let ks = self.shape(kernel).to_vec();
        if xs.len() != 3 {
            return Err(CoreError::RankMismatch {
                expected: 3,
                shape: xs,
            });
        }
        if ks.len() != 4 || ks[2] != ks[3] {
            return Err(CoreError::RankMismatch {
                expected: 4,
                shape: ks,
            });
        }
        check_conv_geometry(ks[2], stride)?;
        if ks[2] % 2 == 0 {
            return Err(CoreError::EvenKernel { k: ks[2] });
        }
        if xs[0] != ks[1] {
            return Err(CoreError::ChannelMismatch {
                input: xs[0],
                kernel: ks[1],
            });
        }
        let (c, h, w) = (xs[0], xs[1], xs[2]);
        let (o, k) = (ks[0], ks[2]);
        if h + 2 * padding < k || w + 2 * padding < k {
            return Err(CoreError::EmptyConvOutput {
                h,
                w,
                k,
                stride,
                padding,
            });
        }
        let h_out = (h + 2 * padding - k) / stride + 1;
        let w_out = (w + 2 * padding - k) / stride + 1;
        let l = h_out * w_out;
        let ckk = c * k * k;

        let cols = im2col(
            self.value(x).data(),
            c,
            h,
            w,
            k,
            stride,
            padding,
            h_out,
            w_out,
        );
        let mut data = vec![T::zero(); o * l];
        gemm_rowmajor(o, ckk, l, self.value(kernel).data(), &cols, &mut data);
        let value = Tensor::new(vec![o, h_out, w_out], data).expect("conv output length");
        Ok(self.record(
            value,
            vec![x, kernel],
            Box::new(move |grad, _out, inputs, needs| {
                let (xv, kv) = (inputs[0], inputs[1]);
                // The unfolded input is recomputed rather than kept alive in
                // the closure; it is the largest buffer in the whole op.
                let cols = im2col(xv.data(), c, h, w, k, stride, padding, h_out, w_out);
                let gx = needs[0].then(|| {
                    let mut dcol = vec![T::zero(); ckk * l];
                    gemm_at(ckk, o, l, kv.data(), grad, &mut dcol);
                    let im = col2im(&dcol, c, h, w, k, stride, padding, h_out, w_out);
                    Tensor::new(vec![c, h, w], im).expect("grad length")
                });
                let gk = needs[1].then(|| {
                    let mut dw = vec![T::zero(); o * ckk];
                    gemm_bt(o, l, ckk, grad, &cols, &mut dw);
                    Tensor::new(vec![o, c, k, k], dw).expect("grad length")
                });
                vec![gx, gk]
            }),
        ))
    }

    /// Transposed convolution of `[C,H,W]` with kernel `[C,O,k,k]`: the exact
    /// adjoint of [`Tape::conv2d`] with the same stride and padding, so
    /// `<conv2d(x,K), y> == <x, conv_transpose2d(y,K)>`. Output extent is
    /// `(H - 1) * stride + k - 2 * padding`.
    pub fn conv_transpose2d(
        &mut self,
        x: VarId,
        kernel: VarId,
        stride: usize,
        padding: usize,
    ) -> CoreResult<VarId> {
        let xs = self.shape(x).to_vec();
        let ks = self.shape(kernel).to_vec();
        if xs.len() != 3 {
            return Err(CoreError::RankMismatch {
                expected: 3,
                shape: xs,
            });
        }
        if ks.len() != 4 || ks[2] != ks[3] {
            return Err(CoreError::RankMismatch {
                expected: 4,
                shape: ks,
            });
        }
        check_conv_geometry(ks[2], stride)?;
        if xs[0] != ks[0] {
            return Err(CoreError::ChannelMismatch {
                input: xs[0],
                kernel: ks[0],
            });
        }
        let (ci, h, w) = (xs[0], xs[1], xs[2]);
        let (co, k) = (ks[1], ks[2]);
        let h_full = (h - 1) * stride + k;
        let w_full = (w - 1) * stride + k;
        if h_full <= 2 * padding || w_full <= 2 * padding {
            return Err(CoreError::EmptyConvOutput {
                h,
                w,
                k,
                stride,
                padding,
            });
        }
        let (h_out, w_out) = (h_full - 2 * padding, w_full - 2 * padding);
        let l = h * w;
        let ckk = co * k * k;

        let mut cols = vec![T::zero(); ckk * l];
        gemm_at(ckk, ci, l, self.value(kernel).data(), self.value(x).data(), &mut cols);
        let data = col2im(&cols, co, h_out, w_out, k, stride, padding, h, w);
        let value = Tensor::new(vec![co, h_out, w_out], data).expect("deconv output length");
        Ok(self.record(
            value,
            vec![x, kernel],
            Box::new(move |grad, _out, inputs, needs| {
                let (xv, kv) = (inputs[0], inputs[1]);
                let gcols = im2col(grad, co, h_out, w_out, k, stride, padding, h, w);
                let gx = needs[0].then(|| {
                    let mut g = vec![T::zero(); ci * l];
                    gemm_rowmajor(ci, ckk, l, kv.data(), &gcols, &mut g);
                    Tensor::new(vec![ci, h, w], g).expect("grad length")
                });
                let gk = needs[1].then(|| {
                    let mut g = vec![T::zero(); ci * ckk];
                    gemm_bt(ci, l, ckk, xv.data(), &gcols, &mut g);
                    Tensor::new(vec![ci, co, k, k], g).expect("grad length")
                });
                vec![gx, gk]
            }),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_kernel_counts_window_coverage() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::ones(&[1, 3, 3]), false);
        let k = tape.leaf(Tensor::ones(&[1, 1, 3, 3]), false);
        let y = tape.conv2d(x, k, 1, 1).unwrap();
        assert_eq!(tape.shape(y), &[1, 3, 3]);
        assert_eq!(
            tape.value(y).data(),
            &[4.0, 6.0, 4.0, 6.0, 9.0, 6.0, 4.0, 6.0, 4.0]
        );
    }

    #[test]
    fn stride_two_halves_spatial_extent() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::ones(&[2, 8, 8]), false);
        let k = tape.leaf(Tensor::zeros(&[4, 2, 3, 3]), false);
        let y = tape.conv2d(x, k, 2, 1).unwrap();
        assert_eq!(tape.shape(y), &[4, 4, 4]);
    }

    #[test]
    fn one_by_one_kernel_mixes_channels_only() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(
            Tensor::new(vec![2, 1, 2], vec![1.0, 2.0, 10.0, 20.0]).unwrap(),
            false,
        );
        // Single output channel = ch0 + 3 * ch1.
        let k = tape.leaf(Tensor::new(vec![1, 2, 1, 1], vec![1.0, 3.0]).unwrap(), false);
        let y = tape.conv2d(x, k, 1, 0).unwrap();
        assert_eq!(tape.value(y).data(), &[31.0, 62.0]);
    }

    #[test]
    fn even_kernel_is_rejected_for_forward_conv() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::zeros(&[1, 4, 4]), false);
        let k = tape.leaf(Tensor::zeros(&[1, 1, 2, 2]), false);
        assert_eq!(
            tape.conv2d(x, k, 1, 0).unwrap_err(),
            CoreError::EvenKernel { k: 2 }
        );
    }

    #[test]
    fn channel_mismatch_is_reported() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::zeros(&[3, 4, 4]), false);
        let k = tape.leaf(Tensor::zeros(&[1, 2, 3, 3]), false);
        assert_eq!(
            tape.conv2d(x, k, 1, 1).unwrap_err(),
            CoreError::ChannelMismatch {
                input: 3,
                kernel: 2
            }
        );
    }

    #[test]
    fn transpose_of_single_pixel_paints_kernel() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::ones(&[1, 1, 1]), false);
        let k = tape.leaf(Tensor::ones(&[1, 1, 2, 2]), false);
        let y = tape.conv_transpose2d(x, k, 2, 0).unwrap();
        assert_eq!(tape.shape(y), &[1, 2, 2]);
        assert_eq!(tape.value(y).data(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn transpose_stride_two_tiles_without_overlap() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::new(vec![1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap(), false);
        let k = tape.leaf(Tensor::ones(&[1, 1, 2, 2]), false);
        let y = tape.conv_transpose2d(x, k, 2, 0).unwrap();
        assert_eq!(tape.shape(y), &[1, 4, 4]);
        let d = tape.value(y).data();
        assert_eq!(&d[0..4], &[1.0, 1.0, 2.0, 2.0]);
        assert_eq!(&d[12..16], &[3.0, 3.0, 4.0, 4.0]);
    }
}
