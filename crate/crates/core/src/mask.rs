use crate::tensor::Tensor;

/// Binary image, row-major, `data[y * width + x]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&m| m).count()
    }

    pub fn is_empty_mask(&self) -> bool {
        !self.data.iter().any(|&m| m)
    }

    pub fn foreground_fraction(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.count() as f64 / self.data.len() as f64
        }
    }

    /// 0/1 float image of shape `[height, width]`.
    pub fn to_tensor(&self) -> Tensor<f32> {
        Tensor::new(
            vec![self.height, self.width],
            self.data
                .iter()
                .map(|&m| if m { 1.0 } else { 0.0 })
                .collect(),
        )
        .expect("mask length matches shape")
    }

    /// Threshold a probability map (shape `[H,W]`) at `thresh`, strictly above.
    pub fn from_probabilities(probs: &Tensor<f32>, thresh: f32) -> Self {
        assert_eq!(probs.rank(), 2, "probability map must be [H,W]");
        Self {
            width: probs.shape()[1],
            height: probs.shape()[0],
            data: probs.data().iter().map(|&p| p > thresh).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_tensor() {
        let m = Mask::from_fn(4, 3, |x, y| x == y);
        let t = m.to_tensor();
        assert_eq!(t.shape(), &[3, 4]);
        let back = Mask::from_probabilities(&t, 0.5);
        assert_eq!(back, m);
    }

    #[test]
    fn fraction_counts_foreground() {
        let m = Mask::from_fn(2, 2, |x, _| x == 0);
        assert_eq!(m.count(), 2);
        assert_eq!(m.foreground_fraction(), 0.5);
        assert!(!m.is_empty_mask());
        assert!(Mask::empty(3, 3).is_empty_mask());
    }
}
