//! Center-aligned temporal windows over a sequence, with edge frames
//! replicated so every frame of the clip yields a training sample.

use crate::error::{DataError, DataResult};
use vtu_core::video::MaskPair;
use vtu_core::{FrameStack, Tensor};

/// One training sample: a window of frames and the center frame's targets.
#[derive(Debug, Clone)]
pub struct Snippet {
    pub stack: FrameStack,
    pub target: MaskPair,
    /// Index of the center frame in the source sequence.
    pub center_index: usize,
}

fn check_len(t: usize) -> DataResult<()> {
    if t == 0 || t % 2 == 0 {
        return Err(DataError::BadSnippetLength { len: t });
    }
    Ok(())
}

/// Build the window centered on `center`, replicating the first and last
/// frames where the window runs past either end of the sequence.
pub fn snippet_at(
    frames: &[Tensor<f32>],
    masks: &[MaskPair],
    t: usize,
    center: usize,
) -> DataResult<Snippet> {
    check_len(t)?;
    if frames.len() != masks.len() || center >= frames.len() {
        return Err(DataError::BadSpec {
            detail: format!(
                "center {center} with {} frames and {} mask pairs",
                frames.len(),
                masks.len()
            ),
        });
    }
    let last = frames.len() as isize - 1;
    let half = (t / 2) as isize;
    let window: Vec<Tensor<f32>> = (-half..=half)
        .map(|o| {
            let idx = (center as isize + o).clamp(0, last) as usize;
            frames[idx].clone()
        })
        .collect();
    Ok(Snippet {
        stack: FrameStack { frames: window, center: t / 2 },
        target: masks[center].clone(),
        center_index: center,
    })
}

/// One snippet per `stride`-th frame of the sequence.
pub fn extract_snippets(
    frames: &[Tensor<f32>],
    masks: &[MaskPair],
    t: usize,
    stride: usize,
) -> DataResult<Vec<Snippet>> {
    check_len(t)?;
    if stride == 0 {
        return Err(DataError::BadSpec { detail: "stride must be positive".into() });
    }
    (0..frames.len())
        .step_by(stride)
        .map(|center| snippet_at(frames, masks, t, center))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use vtu_core::Mask;

    fn fixture(len: usize) -> (Vec<Tensor<f32>>, Vec<MaskPair>) {
        let frames: Vec<Tensor<f32>> = (0..len).map(|k| Tensor::full(&[4, 4], k as f32)).collect();
        let masks: Vec<MaskPair> = (0..len)
            .map(|k| MaskPair {
                bolus: Mask::from_fn(4, 4, |x, _| x == k % 4),
                pharynx: Mask::from_fn(4, 4, |_, y| y == k % 4),
            })
            .collect();
        (frames, masks)
    }

    fn first_value(s: &Snippet, i: usize) -> f32 {
        s.stack.frames[i].data()[0]
    }

    #[test]
    fn single_frame_windows_are_the_frames_themselves() {
        let (frames, masks) = fixture(6);
        let snippets = extract_snippets(&frames, &masks, 1, 1).unwrap();
        assert_eq!(snippets.len(), 6);
        for (k, s) in snippets.iter().enumerate() {
            assert_eq!(s.stack.len(), 1);
            assert_eq!(first_value(s, 0), k as f32);
            assert_eq!(s.target, masks[k]);
        }
    }

    #[test]
    fn replication_keeps_one_window_per_frame() {
        let (frames, masks) = fixture(20);
        let snippets = extract_snippets(&frames, &masks, 5, 1).unwrap();
        assert_eq!(snippets.len(), 20);
    }

    #[test]
    fn leading_window_replicates_the_first_frame() {
        let (frames, masks) = fixture(20);
        let s = snippet_at(&frames, &masks, 5, 0).unwrap();
        let values: Vec<f32> = (0..5).map(|i| first_value(&s, i)).collect();
        assert_eq!(values, vec![0.0, 0.0, 0.0, 1.0, 2.0]);
        assert_eq!(s.stack.center, 2);

        let e = snippet_at(&frames, &masks, 5, 19).unwrap();
        let values: Vec<f32> = (0..5).map(|i| first_value(&e, i)).collect();
        assert_eq!(values, vec![17.0, 18.0, 19.0, 19.0, 19.0]);
    }

    #[test]
    fn target_tracks_the_center_frame() {
        let (frames, masks) = fixture(9);
        for center in 0..9 {
            let s = snippet_at(&frames, &masks, 3, center).unwrap();
            assert_eq!(s.target, masks[center]);
            assert_eq!(first_value(&s, s.stack.center), center as f32);
            assert_eq!(s.center_index, center);
        }
    }

    #[test]
    fn even_or_zero_lengths_are_rejected() {
        let (frames, masks) = fixture(4);
        assert!(extract_snippets(&frames, &masks, 2, 1).is_err());
        assert!(extract_snippets(&frames, &masks, 0, 1).is_err());
        assert!(extract_snippets(&frames, &masks, 3, 0).is_err());
    }

    #[test]
    fn stride_subsamples_centers() {
        let (frames, masks) = fixture(10);
        let snippets = extract_snippets(&frames, &masks, 3, 4).unwrap();
        let centers: Vec<usize> = snippets.iter().map(|s| s.center_index).collect();
        assert_eq!(centers, vec![0, 4, 8]);
    }
}
