//! Boundary-distance metrics. Boundaries are 4-connected: a foreground pixel
//! belongs to the boundary when any 4-neighbor is background, with everything
//! outside the image counting as background. Distances are exact Euclidean
//! (squared integer distances from the two-pass transform, square-rooted).

use crate::error::{EvalError, EvalResult};
use crate::metrics::check_same_size;
use vtu_core::edt::squared_edt;
use vtu_core::Mask;

/// Boundary pixels of a mask. Empty masks have empty boundaries; nonempty
/// masks always have at least one boundary pixel.
pub fn boundary(mask: &Mask) -> Mask {
    let (w, h) = (mask.width, mask.height);
    Mask::from_fn(w, h, |x, y| {
        if !mask.get(x, y) {
            return false;
        }
        x == 0
            || y == 0
            || x == w - 1
            || y == h - 1
            || !mask.get(x - 1, y)
            || !mask.get(x + 1, y)
            || !mask.get(x, y - 1)
            || !mask.get(x, y + 1)
    })
}

/// Symmetric surface distance list: for every boundary pixel of `a` its
/// distance to the boundary of `b`, then the same with roles swapped.
/// Errors when either mask is empty.
pub fn surface_distances(a: &Mask, b: &Mask) -> EvalResult<Vec<f64>> {
    check_same_size(a, b)?;
    if a.is_empty_mask() || b.is_empty_mask() {
        return Err(EvalError::EmptyMask);
    }
    let ba = boundary(a);
    let bb = boundary(b);
    let (w, h) = (a.width, a.height);
    let to_a = squared_edt(&ba.data, h, w);
    let to_b = squared_edt(&bb.data, h, w);
    let mut out = Vec::with_capacity(ba.count() + bb.count());
    for (i, &on) in ba.data.iter().enumerate() {
        if on {
            out.push(to_b[i].sqrt());
        }
    }
    for (i, &on) in bb.data.iter().enumerate() {
        if on {
            out.push(to_a[i].sqrt());
        }
    }
    Ok(out)
}

/// Percentile by inclusive linear interpolation on a sorted ascending slice:
/// rank `q * (n - 1)` split into floor index and fraction.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty slice");
    assert!((0.0..=1.0).contains(&q), "quantile must be in [0,1]");
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

/// 95th percentile of the symmetric surface distances.
pub fn hd95(a: &Mask, b: &Mask) -> EvalResult<f64> {
    let mut d = surface_distances(a, b)?;
    d.sort_by(|x, y| x.partial_cmp(y).expect("distances are finite"));
    Ok(percentile(&d, 0.95))
}

/// Mean of the symmetric surface distances.
pub fn asd(a: &Mask, b: &Mask) -> EvalResult<f64> {
    let d = surface_distances(a, b)?;
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_of_filled_rect_is_its_frame() {
        let m = Mask::from_fn(6, 5, |x, y| (1..5).contains(&x) && (1..4).contains(&y));
        let b = boundary(&m);
        // 4x3 rectangle: interior is the middle 2x1 strip.
        assert_eq!(b.count(), 4 * 3 - 2);
        assert!(!b.get(2, 2));
        assert!(b.get(1, 1));
        assert!(b.get(4, 3));
    }

    #[test]
    fn mask_touching_border_has_boundary_there() {
        let m = Mask::from_fn(4, 4, |_, _| true);
        let b = boundary(&m);
        // Everything except the 2x2 interior.
        assert_eq!(b.count(), 12);
        assert!(b.get(0, 0));
        assert!(!b.get(1, 1));
    }

    #[test]
    fn identical_masks_have_zero_distances() {
        let m = Mask::from_fn(8, 8, |x, y| x >= 2 && x < 6 && y >= 3 && y < 7);
        assert_eq!(hd95(&m, &m).unwrap(), 0.0);
        assert_eq!(asd(&m, &m).unwrap(), 0.0);
    }

    #[test]
    fn translated_squares_have_unit_distance() {
        // Two 2x2 squares shifted by one pixel horizontally: every boundary
        // pixel of one is exactly 1 away from the other's boundary? Not all:
        // the shared column is 0 away. Use single pixels for sharp numbers.
        let a = Mask::from_fn(7, 7, |x, y| x == 2 && y == 3);
        let b = Mask::from_fn(7, 7, |x, y| x == 5 && y == 3);
        let d = surface_distances(&a, &b).unwrap();
        assert_eq!(d, vec![3.0, 3.0]);
        assert_eq!(hd95(&a, &b).unwrap(), 3.0);
        assert_eq!(asd(&a, &b).unwrap(), 3.0);
    }

    #[test]
    fn empty_mask_is_an_error() {
        let m = Mask::from_fn(4, 4, |x, _| x == 1);
        let e = Mask::empty(4, 4);
        assert!(matches!(surface_distances(&m, &e), Err(EvalError::EmptyMask)));
        assert!(matches!(surface_distances(&e, &m), Err(EvalError::EmptyMask)));
    }

    #[test]
    fn percentile_interpolates_inclusively() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(percentile(&xs, 0.0), 0.0);
        assert_eq!(percentile(&xs, 1.0), 3.0);
        assert_eq!(percentile(&xs, 0.5), 1.5);
        // rank = 0.95 * 3 = 2.85 -> 2 + 0.85.
        assert!((percentile(&xs, 0.95) - 2.85).abs() < 1e-12);
        assert_eq!(percentile(&[5.0], 0.95), 5.0);
    }
}
