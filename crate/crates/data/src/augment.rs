//! Shared-geometry augmentation for snippets: one rotation and flip draw is
//! applied identically to every frame and both target masks.

use crate::snippet::Snippet;
use rand::Rng;
use vtu_core::rng::rng_for;
use vtu_core::video::MaskPair;
use vtu_core::{FrameStack, Mask, Tensor};

pub const MAX_ROTATION_DEG: f64 = 10.0;

/// The random transform chosen for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentDraw {
    pub angle_deg: f64,
    pub flip: bool,
}

impl AugmentDraw {
    pub const IDENTITY: AugmentDraw = AugmentDraw { angle_deg: 0.0, flip: false };
}

/// Sample a rotation within the limit and a fair flip decision.
pub fn draw_augment(seed: u64) -> AugmentDraw {
    let mut rng = rng_for(seed, &["augment"]);
    AugmentDraw {
        angle_deg: rng.random_range(-MAX_ROTATION_DEG..MAX_ROTATION_DEG),
        flip: rng.random_bool(0.5),
    }
}

/// For an output pixel, the source coordinates under the inverse transform:
/// rotate back about the image center, then mirror when flipping.
fn source_coords(x: usize, y: usize, w: usize, h: usize, draw: &AugmentDraw) -> (f64, f64) {
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let theta = -draw.angle_deg.to_radians();
    let (s, c) = theta.sin_cos();
    let (dx, dy) = (x as f64 - cx, y as f64 - cy);
    let mut sx = c * dx - s * dy + cx;
    let sy = s * dx + c * dy + cy;
    if draw.flip {
        sx = w as f64 - 1.0 - sx;
    }
    (sx, sy)
}

/// Bilinear resampling with zero fill outside the frame.
pub fn transform_frame(frame: &Tensor<f32>, draw: &AugmentDraw) -> Tensor<f32> {
    let shape = frame.shape();
    let (h, w) = (shape[0], shape[1]);
    let at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            frame.data()[y as usize * w + x as usize] as f64
        }
    };
    Tensor::from_fn(shape, |i| {
        let (x, y) = (i % w, i / w);
        let (sx, sy) = source_coords(x, y, w, h, draw);
        let (x0, y0) = (sx.floor(), sy.floor());
        let (fx, fy) = (sx - x0, sy - y0);
        let (xi, yi) = (x0 as isize, y0 as isize);
        let v = at(xi, yi) * (1.0 - fx) * (1.0 - fy)
            + at(xi + 1, yi) * fx * (1.0 - fy)
            + at(xi, yi + 1) * (1.0 - fx) * fy
            + at(xi + 1, yi + 1) * fx * fy;
        v as f32
    })
}

/// Nearest-neighbor resampling; pixels sourced outside the mask are background.
pub fn transform_mask(mask: &Mask, draw: &AugmentDraw) -> Mask {
    let (w, h) = (mask.width, mask.height);
    Mask::from_fn(w, h, |x, y| {
        let (sx, sy) = source_coords(x, y, w, h, draw);
        let (xi, yi) = (sx.round() as isize, sy.round() as isize);
        if xi < 0 || yi < 0 || xi >= w as isize || yi >= h as isize {
            false
        } else {
            mask.get(xi as usize, yi as usize)
        }
    })
}

/// Apply one draw to every frame of the window and to both target masks.
pub fn augment_with(snippet: &Snippet, draw: &AugmentDraw) -> Snippet {
    Snippet {
        stack: FrameStack {
            frames: snippet
                .stack
                .frames
                .iter()
                .map(|f| transform_frame(f, draw))
                .collect(),
            center: snippet.stack.center,
        },
        target: MaskPair {
            bolus: transform_mask(&snippet.target.bolus, draw),
            pharynx: transform_mask(&snippet.target.pharynx, draw),
        },
        center_index: snippet.center_index,
    }
}

/// Seeded convenience wrapper over [`draw_augment`] and [`augment_with`].
pub fn augment(snippet: &Snippet, seed: u64) -> Snippet {
    augment_with(snippet, &draw_augment(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(w: usize, h: usize, cx: f64, cy: f64, r: f64) -> Mask {
        Mask::from_fn(w, h, |x, y| {
            (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r
        })
    }

    fn sample_snippet() -> Snippet {
        let frames: Vec<Tensor<f32>> = (0..3)
            .map(|k| {
                Tensor::from_fn(&[16, 16], |i| ((i * 31 + k * 7) % 97) as f32 / 96.0)
            })
            .collect();
        Snippet {
            stack: FrameStack { frames, center: 1 },
            target: MaskPair {
                bolus: disk(16, 16, 8.0, 6.0, 3.2),
                pharynx: disk(16, 16, 7.0, 9.0, 4.1),
            },
            center_index: 0,
        }
    }

    #[test]
    fn flip_is_an_exact_involution() {
        let snippet = sample_snippet();
        let draw = AugmentDraw { angle_deg: 0.0, flip: true };
        let once = augment_with(&snippet, &draw);
        let twice = augment_with(&once, &draw);
        assert_eq!(twice.target, snippet.target);
        for (a, b) in twice.stack.frames.iter().zip(&snippet.stack.frames) {
            let bits = |t: &Tensor<f32>| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
        assert_ne!(once.target, snippet.target, "the flip itself must move pixels");
    }

    #[test]
    fn identity_draw_changes_nothing() {
        let snippet = sample_snippet();
        let out = augment_with(&snippet, &AugmentDraw::IDENTITY);
        assert_eq!(out.target, snippet.target);
        for (a, b) in out.stack.frames.iter().zip(&snippet.stack.frames) {
            assert_eq!(
                a.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn rotated_mask_matches_analytically_rotated_shape() {
        // Rotating a rasterized disk must land where rasterizing the rotated
        // disk lands, up to nearest-neighbor aliasing at the rim; the disk is
        // large enough that rim aliasing is second order against its area.
        let (w, h) = (128, 128);
        let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
        for (case, angle) in [(0usize, 7.5f64), (1, -9.0), (2, 4.0)] {
            let (dx, dy, r) = (44.5 + 2.0 * case as f64, 60.25, 22.0 + case as f64);
            let mask = disk(w, h, dx, dy, r);
            let rotated = transform_mask(&mask, &AugmentDraw { angle_deg: angle, flip: false });

            let theta = angle.to_radians();
            let (s, c) = theta.sin_cos();
            let expect_x = c * (dx - cx) - s * (dy - cy) + cx;
            let expect_y = s * (dx - cx) + c * (dy - cy) + cy;
            let expected = disk(w, h, expect_x, expect_y, r);
            let score = vtu_eval::dsc(&rotated, &expected).unwrap();
            assert!(score >= 0.98, "case {case}: overlap {score} below 0.98");
        }
    }

    #[test]
    fn masks_stay_binary_and_frames_stay_in_range() {
        let snippet = sample_snippet();
        for seed in 0..10u64 {
            let out = augment(&snippet, seed);
            for f in &out.stack.frames {
                assert!(f.data().iter().all(|v| (0.0..=1.0).contains(v)));
            }
            assert_eq!(out.target.bolus.width, 16);
            assert_eq!(out.stack.len(), snippet.stack.len());
        }
    }

    #[test]
    fn draws_are_seed_deterministic() {
        assert_eq!(draw_augment(5), draw_augment(5));
        let distinct = (0..20u64).map(draw_augment).filter(|d| d.flip).count();
        assert!(distinct > 3 && distinct < 17, "flip should be roughly fair");
    }
}
