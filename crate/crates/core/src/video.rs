use crate::mask::Mask;
use crate::tensor::Tensor;

/// A temporal window of grayscale frames (each `[H,W]`) around a center frame
/// whose segmentation is being predicted.
#[derive(Debug, Clone)]
pub struct FrameStack {
    pub frames: Vec<Tensor<f32>>,
    /// Index into `frames` of the frame the targets belong to.
    pub center: usize,
}

impl FrameStack {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn center_frame(&self) -> &Tensor<f32> {
        &self.frames[self.center]
    }

    /// Refit to `target_len` frames keeping the center aligned: longer stacks
    /// are cropped symmetrically, shorter ones padded by edge replication.
    pub fn with_len(&self, target_len: usize) -> FrameStack {
        assert!(target_len > 0, "target length must be positive");
        let cur = self.frames.len() as isize;
        let center = self.center as isize;
        let half = target_len as isize / 2;
        let frames: Vec<Tensor<f32>> = (0..target_len as isize)
            .map(|o| {
                let idx = (center - half + o).clamp(0, cur - 1);
                self.frames[idx as usize].clone()
            })
            .collect();
        FrameStack {
            frames,
            center: target_len / 2,
        }
    }
}

/// Ground-truth (or predicted, after thresholding) masks for one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskPair {
    pub bolus: Mask,
    pub pharynx: Mask,
}
