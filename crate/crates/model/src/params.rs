//! Named, insertion-ordered parameter storage.
//!
//! Iteration order is the registration order, which fixes the layout of
//! checkpoints and the order optimizer state is kept in. Each tensor is
//! initialized from a stream derived from the base seed and the parameter
//! name alone, so a parameter receives the same initial values regardless of
//! what else exists in the set.

use crate::error::{ModelError, ModelResult};
use std::collections::HashMap;
use vtu_core::rng::{normal, rng_for};
use vtu_core::{Scalar, Tape, Tensor, VarId};

#[derive(Debug, Clone, Default)]
pub struct ParamSet<T: Scalar> {
    entries: Vec<(String, Tensor<T>)>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor<T>) -> ModelResult<()> {
        if self.index.contains_key(name) {
            return Err(ModelError::DuplicateParam { name: name.into() });
        }
        self.index.insert(name.to_string(), self.entries.len());
        self.entries.push((name.to_string(), tensor));
        Ok(())
    }

    /// Register a tensor drawn elementwise from N(mean, std^2) using a
    /// stream tied to (seed, name).
    pub fn insert_normal(
        &mut self,
        name: &str,
        shape: &[usize],
        mean: f64,
        std: f64,
        seed: u64,
    ) -> ModelResult<()> {
        let mut rng = rng_for(seed, &["init", name]);
        let n = shape.iter().product();
        let data: Vec<T> = (0..n)
            .map(|_| T::from_f64(normal(&mut rng, mean, std)))
            .collect();
        self.insert(name, Tensor::new(shape.to_vec(), data)?)
    }

    pub fn insert_full(&mut self, name: &str, shape: &[usize], value: f64) -> ModelResult<()> {
        self.insert(name, Tensor::full(shape, T::from_f64(value)))
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.index.get(name).map(|&i| &self.entries[i].1)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.index.get(name).map(|&i| &mut self.entries[i].1)
    }

    /// Replace an existing tensor; the new value must keep the shape.
    pub fn set(&mut self, name: &str, tensor: Tensor<T>) -> ModelResult<()> {
        match self.index.get(name) {
            None => Err(ModelError::UnknownParam { name: name.into() }),
            Some(&i) => {
                if self.entries[i].1.shape() != tensor.shape() {
                    return Err(ModelError::BadConfig {
                        detail: format!(
                            "parameter {name:?} has shape {:?}, replacement has {:?}",
                            self.entries[i].1.shape(),
                            tensor.shape()
                        ),
                    });
                }
                self.entries[i].1 = tensor;
                Ok(())
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor<T>)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_elements(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.numel()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> ParamSet<U> {
        ParamSet {
            entries: self
                .entries
                .iter()
                .map(|(n, t)| (n.clone(), t.cast::<U>()))
                .collect(),
            index: self.index.clone(),
        }
    }

    /// Put every parameter on the tape as a differentiable leaf.
    pub fn bind(&self, tape: &mut Tape<T>) -> BoundParams {
        let ids = self
            .entries
            .iter()
            .map(|(_, t)| tape.leaf(t.clone(), true))
            .collect();
        BoundParams {
            ids,
            index: self.index.clone(),
        }
    }

    /// Put every parameter on the tape as a frozen constant; gradients do
    /// not flow into them. Used for inference.
    pub fn bind_frozen(&self, tape: &mut Tape<T>) -> BoundParams {
        let ids = self
            .entries
            .iter()
            .map(|(_, t)| tape.constant(t.clone()))
            .collect();
        BoundParams {
            ids,
            index: self.index.clone(),
        }
    }

    /// Put parameters on the tape, taking overridden names from variables
    /// that already live there (so gradients can be probed against a chosen
    /// subset) and freezing everything else as constants.
    pub fn bind_probe(
        &self,
        tape: &mut Tape<T>,
        overrides: &HashMap<String, VarId>,
    ) -> BoundParams {
        let mut ids = Vec::with_capacity(self.entries.len());
        for (name, tensor) in &self.entries {
            let id = match overrides.get(name) {
                Some(&v) => v,
                None => tape.constant(tensor.clone()),
            };
            ids.push(id);
        }
        BoundParams {
            ids,
            index: self.index.clone(),
        }
    }
}

/// Parameter names resolved to tape variables for one forward pass.
#[derive(Debug, Clone)]
pub struct BoundParams {
    ids: Vec<VarId>,
    index: HashMap<String, usize>,
}

impl BoundParams {
    /// Look up a parameter variable. Missing names are a programming error
    /// in the network builder, so this panics rather than propagating.
    pub fn get(&self, name: &str) -> VarId {
        match self.index.get(name) {
            Some(&i) => self.ids[i],
            None => panic!("parameter {name:?} is not registered"),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, VarId)> {
        let mut pairs: Vec<(&str, usize)> =
            self.index.iter().map(|(n, &i)| (n.as_str(), i)).collect();
        pairs.sort_by_key(|&(_, i)| i);
        pairs.into_iter().map(|(n, i)| (n, self.ids[i]))
    }
}
