//! Ordered, named parameter tensors.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Parameters in a fixed registration order with unique names.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: BTreeMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) -> Result<()> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::Config(alloc::format!(
                "duplicate parameter name `{name}`"
            )));
        }
        self.index.insert(name.clone(), self.names.len());
        self.names.push(name);
        self.tensors.push(t);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.position(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.position(name).map(move |i| &mut self.tensors[i])
    }

    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    /// Replaces every tensor from `other`, requiring identical names and
    /// shapes. Nothing is modified if any check fails.
    pub fn load_from(&mut self, other: &ParamStore) -> Result<()> {
        for (name, t) in self.iter() {
            let src = other.get(name).ok_or_else(|| Error::TensorShape {
                name: name.to_string(),
                expected: t.shape().to_vec(),
                found: Vec::new(),
            })?;
            if src.shape() != t.shape() {
                return Err(Error::TensorShape {
                    name: name.to_string(),
                    expected: t.shape().to_vec(),
                    found: src.shape().to_vec(),
                });
            }
        }
        if let Some(extra) = other.names.iter().find(|n| self.position(n).is_none()) {
            return Err(Error::Config(alloc::format!(
                "unexpected parameter `{extra}`"
            )));
        }
        for (i, name) in self.names.iter().enumerate() {
            self.tensors[i] = other.get(name).expect("checked above").clone();
        }
        Ok(())
    }

    /// Places every parameter on `tape`. Names for which `frozen` returns
    /// true become constants and receive no gradient.
    pub fn bind(&self, tape: &mut Tape, frozen: impl Fn(&str) -> bool) -> Bound {
        let vars = self
            .iter()
            .map(|(name, t)| {
                if frozen(name) {
                    tape.constant(t.clone())
                } else {
                    tape.leaf(t.clone())
                }
            })
            .collect();
        Bound {
            vars,
            index: self.index.clone(),
        }
    }

    /// Names already-placed vars, given in store order.
    pub fn bind_vars(&self, vars: &[Var]) -> Result<Bound> {
        if vars.len() != self.len() {
            return Err(Error::Contract(alloc::format!(
                "{} vars for {} parameters",
                vars.len(),
                self.len()
            )));
        }
        Ok(Bound {
            vars: vars.to_vec(),
            index: self.index.clone(),
        })
    }
}

/// Tape handles for a bound [`ParamStore`], in store order.
#[derive(Debug, Clone)]
pub struct Bound {
    vars: Vec<Var>,
    index: BTreeMap<String, usize>,
}

impl Bound {
    /// Panics on unknown names: the model layout and the store are built from
    /// the same configuration, so a miss is a programming error.
    pub fn var(&self, name: &str) -> Var {
        match self.index.get(name) {
            Some(&i) => self.vars[i],
            None => panic!("parameter `{name}` is not bound"),
        }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    /// Gradients in store order; zeros where no gradient reached.
    pub fn grads(&self, tape: &Tape) -> Vec<Tensor> {
        self.vars.iter().map(|&v| tape.grad_or_zeros(v)).collect()
    }
}
