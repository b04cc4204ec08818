use crate::error::{CoreError, CoreResult};
use crate::scalar::Scalar;
use crate::shape::{numel, strides_row_major};

/// Dense row-major tensor. Rank and extents live in `shape`; a scalar is
/// conventionally shape `[1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tensor<T: Scalar> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> CoreResult<Self> {
        let expected = numel(&shape);
        if expected != data.len() {
            return Err(CoreError::ShapeDataMismatch {
                shape,
                expected,
                got: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            data: vec![T::zero(); numel(shape)],
            shape: shape.to_vec(),
        }
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        Self {
            data: vec![value; numel(shape)],
            shape: shape.to_vec(),
        }
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::full(shape, T::one())
    }

    pub fn scalar(value: T) -> Self {
        Self {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> T) -> Self {
        Self {
            data: (0..numel(shape)).map(|i| f(i)).collect(),
            shape: shape.to_vec(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Element at multi-index `idx` (must match rank; debug-checked bounds).
    pub fn at(&self, idx: &[usize]) -> T {
        debug_assert_eq!(idx.len(), self.shape.len());
        let strides = strides_row_major(&self.shape);
        let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.data[flat]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::from_f64(v.to_f64())).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Same data, new shape. Fails when the element count would change.
    pub fn reshaped(&self, shape: &[usize]) -> CoreResult<Self> {
        if numel(shape) != self.data.len() {
            return Err(CoreError::ReshapeNumel {
                from: self.shape.clone(),
                to: shape.to_vec(),
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            data: self.data.clone(),
        })
    }
}
