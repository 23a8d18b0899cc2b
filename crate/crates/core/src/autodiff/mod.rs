//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Every operation evaluates eagerly and appends a node holding its value, the
//! op tag, and parent handles. Parents always precede children, so walking the
//! tape backwards from the loss is a reverse topological order and visits each
//! node exactly once.

mod conv;
mod ops;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub use ops::sigmoid;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddRowBias(Var, Var),
    AddIdentity(Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    RowSoftmax { x: Var, scale: f64 },
    MaxPoolRows { x: Var, argmax: Vec<usize> },
    ConcatLast(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceLast { x: Var, start: usize },
    SelectRow { x: Var, row: usize },
    Reshape(Var),
    Sum(Var),
    Mean(Var),
    Conv2d { x: Var, w: Var, b: Var },
    AvgPool { x: Var, factor: usize },
    Upsample { x: Var, factor: usize },
    EmbedRows { table: Var, ids: Vec<usize> },
    TileRows(Var),
    BceWithLogits { logits: Var, target: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct Node {
    pub(crate) value: Tensor,
    pub(crate) grad: Option<Tensor>,
    pub(crate) op: Op,
    pub(crate) requires_grad: bool,
}

impl Node {
    pub fn value(&self) -> &Tensor {
        &self.value
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }
}

#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A trainable input: gradients are accumulated for it.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push_raw(value, Op::Leaf, true)
    }

    /// A constant input: no gradient flows into it.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_raw(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn node(&self, v: Var) -> &Node {
        &self.nodes[v.0]
    }

    /// Accumulated gradient of `v`, or `None` if no backward pass reached it.
    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.nodes[v.0].grad.as_ref()
    }

    /// Gradient of `v`, zeros if none has been accumulated.
    pub fn grad_or_zeros(&self, v: Var) -> Tensor {
        self.grad(v)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(self.shape(v)))
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    fn push_raw(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, value: Tensor, op: Op, parents: &[Var]) -> Var {
        let requires_grad = parents.iter().any(|p| self.nodes[p.0].requires_grad);
        self.push_raw(value, op, requires_grad)
    }

    /// Reverse-mode pass from a scalar `loss`.
    ///
    /// Gradients are added to whatever is already stored, so calling this twice
    /// without [`Tape::zero_grad`] accumulates both passes.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let numel = self.nodes[loss.0].value.numel();
        if numel != 1 {
            return Err(Error::Contract(alloc::format!(
                "backward requires a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            if !self.nodes[i].requires_grad {
                continue;
            }
            self.propagate(i, &g, &mut adj);
            let node = &mut self.nodes[i];
            match &mut node.grad {
                Some(existing) => {
                    for (e, v) in existing.data_mut().iter_mut().zip(&g) {
                        *e += v;
                    }
                }
                None => {
                    let shape = node.value.shape().to_vec();
                    node.grad = Some(Tensor::new(shape, g).expect("gradient shape"));
                }
            }
        }
        Ok(())
    }

    /// Returns the adjoint buffer of `parent` for accumulation, or `None` if
    /// the parent does not need a gradient.
    fn adj_mut<'a>(&self, adj: &'a mut [Option<Vec<f64>>], parent: Var) -> Option<&'a mut [f64]> {
        let node = &self.nodes[parent.0];
        if !node.requires_grad {
            return None;
        }
        let slot = &mut adj[parent.0];
        Some(slot.get_or_insert_with(|| vec![0.0; node.value.numel()]))
    }
}
