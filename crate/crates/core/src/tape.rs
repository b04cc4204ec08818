//! Reverse-mode autodiff on a linear tape.
//!
//! Every operation appends a node holding its forward value, the ids of its
//! inputs and a closure encoding the local backward rule. Because nodes are
//! appended in execution order, walking the tape backwards is already a valid
//! topological order for gradient propagation.

use crate::error::{CoreError, CoreResult};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Handle to a value recorded on a [`Tape`]. Only meaningful on the tape that
/// produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Backward rule of one op: maps (gradient at output, output value, input
/// values, which inputs want gradient) to a contribution per input. Slots for
/// inputs that want no gradient may be `None`.
pub(crate) type BackwardFn<T> =
    Box<dyn Fn(&[T], &Tensor<T>, &[&Tensor<T>], &[bool]) -> Vec<Option<Tensor<T>>>>;

struct Node<T: Scalar> {
    value: Tensor<T>,
    grad: Option<Tensor<T>>,
    requires_grad: bool,
    inputs: Vec<VarId>,
    backward: Option<BackwardFn<T>>,
}

pub struct Tape<T: Scalar> {
    nodes: Vec<Node<T>>,
    swept: bool,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            swept: false,
        }
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Register an input value. Gradient is accumulated for it only when
    /// `requires_grad` is set.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> VarId {
        self.push(Node {
            value,
            grad: None,
            requires_grad,
            inputs: Vec::new(),
            backward: None,
        })
    }

    /// Register a value that never receives gradient (targets, fixed weights).
    pub fn constant(&mut self, value: Tensor<T>) -> VarId {
        self.leaf(value, false)
    }

    pub(crate) fn record(
        &mut self,
        value: Tensor<T>,
        inputs: Vec<VarId>,
        backward: BackwardFn<T>,
    ) -> VarId {
        let requires_grad = inputs.iter().any(|id| self.nodes[id.0].requires_grad);
        self.push(Node {
            value,
            grad: None,
            requires_grad,
            inputs,
            backward: requires_grad.then_some(backward),
        })
    }

    fn push(&mut self, node: Node<T>) -> VarId {
        self.nodes.push(node);
        VarId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: VarId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    pub fn shape(&self, id: VarId) -> &[usize] {
        self.nodes[id.0].value.shape()
    }

    /// Accumulated gradient for `id`, if any reached it during [`backward`].
    pub fn grad(&self, id: VarId) -> Option<&Tensor<T>> {
        self.nodes[id.0].grad.as_ref()
    }

    /// Gradient for `id`, densified to zeros when nothing reached it.
    pub fn grad_or_zeros(&self, id: VarId) -> Tensor<T> {
        let node = &self.nodes[id.0];
        node.grad
            .clone()
            .unwrap_or_else(|| Tensor::zeros(node.value.shape()))
    }

    /// Propagate gradients from the scalar `root` to every tracked input.
    ///
    /// Consumes the tape's freshness: a second call without rebuilding the
    /// forward pass is rejected, since op closures have been dropped.
    pub fn backward(&mut self, root: VarId) -> CoreResult<()> {
        if self.swept {
            return Err(CoreError::TapeConsumed);
        }
        if self.nodes[root.0].value.numel() != 1 {
            return Err(CoreError::BackwardNonScalar {
                shape: self.nodes[root.0].value.shape().to_vec(),
            });
        }
        self.swept = true;
        let root_shape = self.nodes[root.0].value.shape().to_vec();
        self.nodes[root.0].grad = Some(Tensor::ones(&root_shape));

        for i in (0..=root.0).rev() {
            if !self.nodes[i].requires_grad || self.nodes[i].grad.is_none() {
                continue;
            }
            let Some(backward) = self.nodes[i].backward.take() else {
                continue; // leaf
            };
            let grad_out = self.nodes[i].grad.take().expect("checked above");
            let output = std::mem::take(&mut self.nodes[i].value);
            let input_ids = std::mem::take(&mut self.nodes[i].inputs);

            let contribs = {
                let input_vals: Vec<&Tensor<T>> =
                    input_ids.iter().map(|id| &self.nodes[id.0].value).collect();
                let needs: Vec<bool> = input_ids
                    .iter()
                    .map(|id| self.nodes[id.0].requires_grad)
                    .collect();
                backward(grad_out.data(), &output, &input_vals, &needs)
            };
            assert_eq!(
                contribs.len(),
                input_ids.len(),
                "backward rule returned {} gradients for {} inputs",
                contribs.len(),
                input_ids.len()
            );

            self.nodes[i].value = output;
            self.nodes[i].grad = Some(grad_out);
            self.nodes[i].inputs = input_ids.clone();

            for (id, contrib) in input_ids.iter().zip(contribs) {
                let target = &mut self.nodes[id.0];
                if !target.requires_grad {
                    continue;
                }
                let contrib = contrib.unwrap_or_else(|| {
                    panic!("backward rule skipped an input that wants gradient")
                });
                assert_eq!(
                    contrib.shape(),
                    target.value.shape(),
                    "gradient shape {:?} does not match input shape {:?}",
                    contrib.shape(),
                    target.value.shape()
                );
                match &mut target.grad {
                    Some(acc) => {
                        for (a, c) in acc.data_mut().iter_mut().zip(contrib.data()) {
                            *a += *c;
                        }
                    }
                    None => target.grad = Some(contrib),
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_of_products_matches_hand_gradient() {
        // loss = sum(a * b) with a=[1,2], b=[3,4] -> d/da = b, d/db = a.
        let mut tape = Tape::<f64>::new();
        let a = tape.leaf(Tensor::new(vec![2], vec![1.0, 2.0]).unwrap(), true);
        let b = tape.leaf(Tensor::new(vec![2], vec![3.0, 4.0]).unwrap(), true);
        let prod = tape.mul(a, b).unwrap();
        let loss = tape.sum_all(prod).unwrap();
        assert_eq!(tape.value(loss).data(), &[11.0]);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(a).unwrap().data(), &[3.0, 4.0]);
        assert_eq!(tape.grad(b).unwrap().data(), &[1.0, 2.0]);
    }

    #[test]
    fn fan_out_accumulates() {
        // loss = sum(x * x + x) -> grad = 2x + 1.
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::new(vec![3], vec![1.0, -2.0, 0.5]).unwrap(), true);
        let sq = tape.mul(x, x).unwrap();
        let s = tape.add(sq, x).unwrap();
        let loss = tape.sum_all(s).unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[3.0, -3.0, 2.0]);
    }

    #[test]
    fn second_backward_is_rejected() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::scalar(2.0), true);
        let y = tape.mul(x, x).unwrap();
        tape.backward(y).unwrap();
        assert_eq!(tape.backward(y), Err(CoreError::TapeConsumed));
    }

    #[test]
    fn backward_from_non_scalar_is_rejected() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::zeros(&[2, 2]), true);
        let y = tape.relu(x);
        let err = tape.backward(y).unwrap_err();
        assert_eq!(
            err,
            CoreError::BackwardNonScalar {
                shape: vec![2, 2]
            }
        );
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::scalar(3.0), true);
        let c = tape.constant(Tensor::scalar(4.0));
        let y = tape.mul(x, c).unwrap();
        tape.backward(y).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[4.0]);
        assert!(tape.grad(c).is_none());
    }
}
